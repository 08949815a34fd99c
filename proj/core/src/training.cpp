#include "microweather/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include <spdlog/spdlog.h>

#include "microweather/errors.hpp"
#include "microweather/hash.hpp"
#include "microweather/model.hpp"

namespace mw {

using nn::Matrix;
using nn::Var;

void TrainConfig::validate() const {
  auto bad = [](const std::string& m) { throw InvalidConfig(m); };
  if (!(lr0 > 0.0) || !std::isfinite(lr0)) bad("lr0 must be positive");
  if (weight_decay < 0.0) bad("weight_decay must be non-negative");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) bad("Adam betas must lie in [0, 1)");
  if (!(adam_eps > 0.0)) bad("adam_eps must be positive");
  if (timestamps_per_step == 0) bad("timestamps_per_step must be positive");
  if (targets_per_timestamp == 0) bad("targets_per_timestamp must be positive");
  if (eval_every == 0) bad("eval_every must be positive");
}

std::size_t TrainConfig::total_steps(std::size_t time_steps) const noexcept {
  if (steps) return steps;
  const std::size_t per_epoch = (time_steps + timestamps_per_step - 1) / timestamps_per_step;
  return epochs * per_epoch;
}

Var loss(const Var& predictions, const Matrix& observations, const Matrix& valid) {
  try {
    return nn::weighted_mse(predictions, observations, valid);
  } catch (const std::domain_error&) {
    throw EmptyBatch("batch has no valid observation channel");
  }
}

double loss_value(const Matrix& predictions, const Matrix& observations, const Matrix& valid) {
  nn::Graph g(false);
  return loss(g.constant(predictions), observations, valid).value()(0, 0);
}

double cosine_lr(double lr0, std::size_t step, std::size_t total) noexcept {
  if (total == 0) return lr0;
  const double x = static_cast<double>(std::min(step, total)) / static_cast<double>(total);
  return lr0 * 0.5 * (1.0 + std::cos(std::numbers::pi * x));
}

void adam_step(nn::ParameterStore& params, const nn::Gradients& grads, AdamState& state, const TrainConfig& cfg,
               std::size_t total_steps) {
  for (const auto& [name, g] : grads) {
    if (!g.all_finite()) {
      throw NumericalError("non-finite gradient for '" + name + "' at step " + std::to_string(state.step));
    }
  }
  const double lr = cosine_lr(cfg.lr0, state.step, total_steps);
  const double t = static_cast<double>(state.step + 1);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (auto& [name, p] : params) {
    auto it = grads.find(name);
    if (it == grads.end()) continue;
    const Matrix& g = it->second;
    auto [mi, fresh_m] = state.m.try_emplace(name, p.rows(), p.cols());
    auto [vi, fresh_v] = state.v.try_emplace(name, p.rows(), p.cols());
    (void)fresh_m;
    (void)fresh_v;
    double* m = mi->second.data();
    double* v = vi->second.data();
    double* w = p.data();
    const double* gd = g.data();
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * gd[k];
      v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * gd[k] * gd[k];
      const double mh = m[k] / c1;
      const double vh = v[k] / c2;
      w[k] -= lr * (mh / (std::sqrt(vh) + cfg.adam_eps) + cfg.weight_decay * w[k]);
    }
  }
  ++state.step;
}

void TrainReport::write_csv(std::ostream& out) const {
  out << "step,loss,val_loss,lr\n";
  for (const auto& r : records) {
    out << r.step << ',';
    if (std::isfinite(r.loss)) out << r.loss;
    out << ',';
    if (r.val_loss) out << *r.val_loss;
    out << ',' << r.lr << '\n';
  }
}

namespace {

struct Sets {
  StationSet backbone;
  StationSet train;
  StationSet val;
};

Sets make_sets(const Dataset& d, const ModelConfig& c, Role target_role) {
  Sets s;
  auto bb = d.indices(Role::Backbone);
  auto tr = d.indices(Role::Train);
  auto va = d.indices(target_role);
  if (bb.empty()) throw PartitionError("training needs backbone stations");
  if (tr.empty()) throw PartitionError("training needs train stations");
  if (va.empty()) throw PartitionError(std::string("no ") + std::string(role_name(target_role)) + " stations");
  s.backbone = make_station_set(d, std::move(bb), c);
  s.train = make_station_set(d, std::move(tr), c);
  s.val = make_station_set(d, std::move(va), c);
  return s;
}

// Normalized targets and weights for `rows` of `set` at t.
void targets_at(const Dataset& d, const StationSet& set, const std::vector<std::size_t>& rows, std::size_t t,
                const ChannelStats& stats, bool observed_only, Matrix& y, Matrix& w) {
  y = Matrix(rows.size(), kChannels);
  w = Matrix(rows.size(), kChannels);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& s = d.stations[set.indices[rows[r]]].series;
    for (std::size_t c = 0; c < kChannels; ++c) {
      const bool ok = observed_only ? s.flags[t].observed(c) : s.flags[t].usable(c);
      if (!ok) continue;
      y(r, c) = stats.normalize(c, s.values[t][c]);
      w(r, c) = 1.0;
    }
  }
}

std::vector<std::size_t> rows_with_data(const Dataset& d, const StationSet& set, std::size_t t, bool observed_only) {
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < set.size(); ++r) {
    const auto& f = d.stations[set.indices[r]].series.flags[t];
    bool any = false;
    for (std::size_t c = 0; c < kChannels; ++c) any = any || (observed_only ? f.observed(c) : f.usable(c));
    if (any) rows.push_back(r);
  }
  return rows;
}

std::vector<std::size_t> evenly_spaced(std::size_t n, std::size_t count) {
  std::vector<std::size_t> out;
  if (count == 0 || count >= n) {
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = i;
    return out;
  }
  for (std::size_t k = 0; k < count; ++k) out.push_back((2 * k + 1) * n / (2 * count));
  return out;
}

struct BatchItem {
  std::size_t t;
  std::vector<std::size_t> rows;
};

// Pooled loss over a batch; returns an empty Var if no item has a backbone.
Var batch_loss(nn::Graph& g, const ModelState& s, const Dataset& d, const Sets& sets,
               const std::vector<BatchItem>& batch) {
  const StaticEncoding bb = encode_static(g, s, sets.backbone.statics);
  const StaticEncoding tg = encode_static(g, s, sets.train.statics);
  std::vector<Var> preds;
  std::vector<Matrix> ys;
  std::vector<Matrix> ws;
  for (const auto& item : batch) {
    Var p = predict_stations(g, s, d, sets.backbone, bb, sets.train, tg, item.rows, item.t);
    if (!p) continue;
    Matrix y;
    Matrix w;
    targets_at(d, sets.train, item.rows, item.t, s.normalization.station, false, y, w);
    preds.push_back(p);
    ys.push_back(std::move(y));
    ws.push_back(std::move(w));
  }
  if (preds.empty()) return {};
  std::size_t n = 0;
  for (const auto& y : ys) n += y.rows();
  Matrix y(n, kChannels);
  Matrix w(n, kChannels);
  std::size_t r0 = 0;
  for (std::size_t k = 0; k < ys.size(); ++k) {
    std::copy(ys[k].values().begin(), ys[k].values().end(), y.row(r0));
    std::copy(ws[k].values().begin(), ws[k].values().end(), w.row(r0));
    r0 += ys[k].rows();
  }
  return loss(nn::concat_rows(preds), y, w);
}

std::vector<BatchItem> sample_batch(const Dataset& d, const StationSet& train, const TrainConfig& cfg,
                                    std::mt19937_64& rng) {
  const std::size_t T = d.times().count;
  std::uniform_int_distribution<std::size_t> pick_t(0, T - 1);
  std::vector<BatchItem> batch;
  for (std::size_t k = 0; k < cfg.timestamps_per_step; ++k) {
    BatchItem item;
    item.t = pick_t(rng);
    item.rows = rows_with_data(d, train, item.t, false);
    if (item.rows.size() > cfg.targets_per_timestamp) {
      // partial Fisher-Yates, then restore row order
      for (std::size_t i = 0; i < cfg.targets_per_timestamp; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, item.rows.size() - 1);
        std::swap(item.rows[i], item.rows[pick(rng)]);
      }
      item.rows.resize(cfg.targets_per_timestamp);
      std::sort(item.rows.begin(), item.rows.end());
    }
    if (!item.rows.empty()) batch.push_back(std::move(item));
  }
  return batch;
}

ValidationScore score_sets(const Dataset& d, const ModelState& s, const Sets& sets, const std::vector<std::size_t>& ts) {
  nn::Graph g(false);
  const StaticEncoding bb = encode_static(g, s, sets.backbone.statics);
  const StaticEncoding tg = encode_static(g, s, sets.val.statics);
  double sq = 0.0;
  double n = 0.0;
  double abs_t = 0.0;
  double n_t = 0.0;
  const auto& st = s.normalization.station;
  for (std::size_t t : ts) {
    auto rows = rows_with_data(d, sets.val, t, true);
    if (rows.empty()) continue;
    Var p = predict_stations(g, s, d, sets.backbone, bb, sets.val, tg, rows, t);
    if (!p) continue;
    Matrix y;
    Matrix w;
    targets_at(d, sets.val, rows, t, st, true, y, w);
    const Matrix& pv = p.value();
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (std::size_t c = 0; c < kChannels; ++c) {
        if (w(r, c) == 0.0) continue;
        const double e = pv(r, c) - y(r, c);
        sq += e * e;
        n += 1.0;
        if (c == 0) {
          abs_t += std::abs(e) * st.std[0];
          n_t += 1.0;
        }
      }
    }
  }
  if (n == 0.0) throw EmptyBatch("validation set has no observed channel");
  return {sq / n, n_t > 0.0 ? abs_t / n_t : 0.0};
}

double check_gradient(const Dataset& d, const ModelState& s, const Sets& sets, std::uint64_t seed, double eps) {
  std::mt19937_64 rng(mix64(seed ^ 0x67726164ULL));
  const std::size_t T = d.times().count;
  std::vector<BatchItem> batch;
  for (std::size_t attempt = 0; attempt < T && batch.empty(); ++attempt) {
    const std::size_t t = (attempt * 7919 + (rng() % T)) % T;
    auto rows = rows_with_data(d, sets.train, t, false);
    if (rows.empty()) continue;
    if (rows.size() > 2) rows.resize(2);
    batch.push_back({t, rows});
  }
  if (batch.empty()) throw EmptyBatch("no timestamp with train observations");

  nn::Graph g;
  Var l = batch_loss(g, s, d, sets, batch);
  if (!l) throw EmptyBatch("no backbone observations for the gradient check batch");
  g.backward(l);
  const auto grads = g.parameter_gradients();

  std::normal_distribution<double> normal;
  nn::Gradients dir;
  double analytic = 0.0;
  for (const auto& [name, p] : s.parameters) {
    Matrix m(p.rows(), p.cols());
    for (double& x : m.values()) x = normal(rng);
    const Matrix& gm = grads.at(name);
    for (std::size_t k = 0; k < m.size(); ++k) analytic += gm.data()[k] * m.data()[k];
    dir.emplace(name, std::move(m));
  }
  auto shifted = [&](double h) {
    ModelState t = s;
    for (auto& [name, p] : t.parameters) nn::axpy(h, dir.at(name), p);
    nn::Graph g2(false);
    return batch_loss(g2, t, d, sets, batch).value()(0, 0);
  };
  const double numeric = (shifted(eps) - shifted(-eps)) / (2.0 * eps);
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-12});
}

}  // namespace

ValidationScore validation_score(const Dataset& d, const ModelState& s, Role role, std::size_t max_timestamps) {
  const Sets sets = make_sets(d, s.config, role);
  return score_sets(d, s, sets, evenly_spaced(d.times().count, max_timestamps));
}

double gradient_check(const Dataset& d, const ModelState& s, std::uint64_t seed, double eps) {
  const Sets sets = make_sets(d, s.config, Role::Val);
  return check_gradient(d, s, sets, seed, eps);
}

TrainResult train(const Dataset& d, const ModelConfig& mc, const TrainConfig& cfg, const TrainProgress& progress) {
  cfg.validate();
  mc.validate();
  if (d.times().count == 0) throw TimeAxisError("dataset has no timestamps");
  const Sets sets = make_sets(d, mc, Role::Val);
  ModelState state = init_model_state(mc, compute_normalization(d));

  TrainResult result;
  TrainReport& rep = result.report;
  if (cfg.preflight) {
    rep.preflight_rel_error = check_gradient(d, state, sets, cfg.seed, 1e-6);
    if (rep.preflight_rel_error > 1e-2) {
      throw NumericalError("gradient check failed: relative error " + std::to_string(rep.preflight_rel_error));
    }
    if (rep.preflight_rel_error > 1e-4) spdlog::warn("gradient check relative error {:.3g}", rep.preflight_rel_error);
  }

  const auto val_ts = evenly_spaced(d.times().count, cfg.val_timestamps);
  const std::size_t total = cfg.total_steps(d.times().count);
  std::mt19937_64 rng(mix64(cfg.seed ^ 0x747261696eULL));
  AdamState adam;

  ModelState best = state;
  best.parameters.round_to_float32();
  ValidationScore best_score = score_sets(d, best, sets, val_ts);
  rep.records.push_back({0, std::numeric_limits<double>::quiet_NaN(), best_score.loss, cosine_lr(cfg.lr0, 0, total)});
  rep.selected_step = 0;

  for (std::size_t step = 1; step <= total; ++step) {
    const double lr = cosine_lr(cfg.lr0, adam.step, total);
    const auto batch = sample_batch(d, sets.train, cfg, rng);
    double lval = std::numeric_limits<double>::quiet_NaN();
    if (!batch.empty()) {
      nn::Graph g;
      Var l = batch_loss(g, state, d, sets, batch);
      if (l) {
        lval = l.value()(0, 0);
        if (!std::isfinite(lval)) {
          rep.diverged = true;
          rep.diagnostics = "non-finite loss at step " + std::to_string(step);
          break;
        }
        g.backward(l);
        try {
          adam_step(state.parameters, g.parameter_gradients(), adam, cfg, total);
        } catch (const NumericalError& e) {
          rep.diverged = true;
          rep.diagnostics = e.what();
          break;
        }
      }
    }
    if (!state.parameters.all_finite()) {
      rep.diverged = true;
      rep.diagnostics = "non-finite parameters after step " + std::to_string(step);
      break;
    }
    TrainRecord rec{step, lval, std::nullopt, lr};
    if (step % cfg.eval_every == 0 || step == total) {
      ModelState snap = state;
      snap.parameters.round_to_float32();
      const ValidationScore sc = score_sets(d, snap, sets, val_ts);
      rec.val_loss = sc.loss;
      if (sc.loss < best_score.loss) {
        best_score = sc;
        best = std::move(snap);
        rep.selected_step = step;
      }
    }
    rep.records.push_back(rec);
    if (progress) progress(step, total, lval);
  }
  if (rep.diverged) spdlog::error("training diverged: {}", rep.diagnostics);
  rep.selected_val_loss = best_score.loss;
  rep.selected_val_mae_temperature = best_score.mae_temperature;
  result.state = std::move(best);
  return result;
}

}  // namespace mw
