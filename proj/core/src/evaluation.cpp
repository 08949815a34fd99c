#include "microweather/evaluation.hpp"

#include <array>

#include "microweather/baselines.hpp"
#include "microweather/errors.hpp"

namespace mw {

namespace {

EvalRecord blank_record(const Station& s, Timestamp ts, std::size_t t) {
  EvalRecord r;
  r.station_id = s.id;
  r.timestamp = ts;
  r.observed = s.series.values[t];
  for (std::size_t c = 0; c < kChannels; ++c) r.valid[c] = s.series.flags[t].observed(c);
  return r;
}

}  // namespace

std::vector<EvalRecord> model_records(const Dataset& d, const ModelState& s, Role role, const ForwardOptions& options) {
  const auto targets_idx = d.indices(role);
  if (targets_idx.empty()) throw PartitionError(std::string("no ") + std::string(role_name(role)) + " stations");
  const StationSet backbone = make_station_set(d, d.indices(Role::Backbone), s.config);
  const StationSet targets = make_station_set(d, targets_idx, s.config);
  nn::Graph g(false);
  const StaticEncoding bb = encode_static(g, s, backbone.statics);
  const StaticEncoding tg = encode_static(g, s, targets.statics);
  std::vector<EvalRecord> out;
  for (std::size_t t = 0; t < d.times().count; ++t) {
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < targets.size(); ++r) {
      if (d.stations[targets.indices[r]].series.flags[t].any_observed()) rows.push_back(r);
    }
    if (rows.empty()) continue;
    nn::Var p = predict_stations(g, s, d, backbone, bb, targets, tg, rows, t, options);
    if (!p) continue;
    const auto pred = denormalize_predictions(p.value(), s.normalization.station);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      EvalRecord r = blank_record(d.stations[targets.indices[rows[k]]], d.times().at(t), t);
      r.predicted = pred[k];
      out.push_back(std::move(r));
    }
  }
  return out;
}

std::vector<EvalRecord> era5_records(const Dataset& d, Role role) {
  std::vector<EvalRecord> out;
  for (std::size_t i : d.indices(role)) {
    const auto& st = d.stations[i];
    const auto stencil = bilinear_stencil(d.coarse, st.lat, st.lon);
    for (std::size_t t = 0; t < d.times().count; ++t) {
      if (!st.series.flags[t].any_observed()) continue;
      EvalRecord r = blank_record(st, d.times().at(t), t);
      r.predicted = sample_coarse(d.coarse, stencil, t);
      out.push_back(std::move(r));
    }
  }
  return out;
}

std::vector<EvalRecord> rbf_records(const Dataset& d, Role role) {
  const auto bb = d.indices(Role::Backbone);
  const auto tg = d.indices(role);
  std::vector<GeoPoint> queries;
  for (std::size_t i : tg) queries.push_back({d.stations[i].lat, d.stations[i].lon});
  std::vector<EvalRecord> out;
  for (std::size_t t = 0; t < d.times().count; ++t) {
    std::vector<std::size_t> rows;
    for (std::size_t k = 0; k < tg.size(); ++k) {
      if (d.stations[tg[k]].series.flags[t].any_observed()) rows.push_back(k);
    }
    if (rows.empty()) continue;
    std::vector<GeoPoint> q;
    for (std::size_t k : rows) q.push_back(queries[k]);
    std::array<std::vector<double>, kChannels> pred;
    std::array<bool, kChannels> ok{};
    for (std::size_t c = 0; c < kChannels; ++c) {
      std::vector<GeoPoint> sites;
      std::vector<double> values;
      for (std::size_t i : bb) {
        const auto& s = d.stations[i].series;
        if (!s.flags[t].observed(c)) continue;
        sites.push_back({d.stations[i].lat, d.stations[i].lon});
        values.push_back(s.values[t][c]);
      }
      if (sites.size() < 2) continue;
      pred[c] = rbf_interpolate(sites, values, q);
      ok[c] = true;
    }
    for (std::size_t k = 0; k < rows.size(); ++k) {
      EvalRecord r = blank_record(d.stations[tg[rows[k]]], d.times().at(t), t);
      for (std::size_t c = 0; c < kChannels; ++c) {
        if (ok[c]) {
          r.predicted[c] = pred[c][k];
        } else {
          r.valid[c] = false;
        }
      }
      out.push_back(std::move(r));
    }
  }
  return out;
}

std::vector<MetricTable> ablation_report(const Dataset& d, std::span<const AblationVariant> variants, Role role) {
  std::vector<ModelState> states;
  for (const auto& v : variants) states.push_back(load_checkpoint(v.checkpoint));
  std::vector<MetricTable> out;
  out.push_back(metric_table(kEra5ModelName, era5_records(d, role)));
  out.push_back(metric_table(kRbfModelName, rbf_records(d, role)));
  for (std::size_t k = 0; k < variants.size(); ++k) {
    out.push_back(metric_table(variants[k].name, model_records(d, states[k], role, variants[k].options)));
  }
  return out;
}

}  // namespace mw
