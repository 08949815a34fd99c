#include "microweather/attention.hpp"

#include <cmath>
#include <stdexcept>

#include "microweather/errors.hpp"

namespace mw {

using nn::Matrix;
using nn::Var;

void add_attention_layer(nn::ParameterStore& s, const std::string& pre, const ModelConfig& c,
                         std::size_t total_layers, std::mt19937_64& rng) {
  const std::size_t d = c.d_latent;
  const std::size_t f = c.ffn_width();
  // Residual branches start small so a deep stack without normalization stays well-conditioned.
  const double branch = 1.0 / std::sqrt(2.0 * static_cast<double>(std::max<std::size_t>(total_layers, 1)));
  s.add(pre + ".wq", nn::glorot(d, d, rng));
  s.add(pre + ".wk", nn::glorot(d, d, rng));
  s.add(pre + ".wv", nn::glorot(d, d, rng));
  s.add(pre + ".wo", nn::glorot(d, d, rng, branch));
  s.add(pre + ".bo", Matrix(1, d));
  s.add(pre + ".w1", nn::glorot(d, f, rng, std::sqrt(2.0)));
  s.add(pre + ".b1", Matrix(1, f));
  s.add(pre + ".w2", nn::glorot(f, d, rng, branch));
  s.add(pre + ".b2", Matrix(1, d));
  if (c.pre_norm) {
    s.add(pre + ".ln1.g", Matrix(1, d, 1.0));
    s.add(pre + ".ln1.b", Matrix(1, d));
    s.add(pre + ".ln2.g", Matrix(1, d, 1.0));
    s.add(pre + ".ln2.b", Matrix(1, d));
  }
}

Var attention_block(nn::Graph& g, const nn::ParameterStore& s, const std::string& pre, const ModelConfig& c,
                    const Var& x, const Var& context, const MaskBuffer& mask, std::vector<Matrix>* weights) {
  auto P = [&](const std::string& name) { return g.param(s, pre + name); };
  const bool self_attn = x.node() == context.node();
  Var xq = x;
  Var kv = context;
  if (c.pre_norm) {
    xq = nn::layer_norm(x, P(".ln1.g"), P(".ln1.b"));
    kv = self_attn ? xq : context;
  }
  Var q = nn::matmul(xq, P(".wq"));
  Var k = nn::matmul(kv, P(".wk"));
  Var v = nn::matmul(kv, P(".wv"));
  const std::size_t dh = c.d_head();
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Var> heads;
  heads.reserve(c.n_heads);
  for (std::size_t h = 0; h < c.n_heads; ++h) {
    Var scores = nn::scale(nn::matmul_bt(nn::slice_cols(q, h * dh, dh), nn::slice_cols(k, h * dh, dh)), inv_sqrt);
    Var attn;
    try {
      attn = nn::masked_softmax(scores, mask);
    } catch (const std::domain_error& e) {
      throw MaskRowEmpty(pre + ": " + e.what());
    }
    if (weights) weights->push_back(attn.value());
    heads.push_back(nn::matmul(attn, nn::slice_cols(v, h * dh, dh)));
  }
  Var h1 = nn::add(x, nn::linear(nn::concat_cols(heads), P(".wo"), P(".bo")));
  Var ffn_in = c.pre_norm ? nn::layer_norm(h1, P(".ln2.g"), P(".ln2.b")) : h1;
  Var ffn = nn::linear(nn::relu(nn::linear(ffn_in, P(".w1"), P(".b1"))), P(".w2"), P(".b2"));
  return nn::add(h1, ffn);
}

Var self_attention_stack(nn::Graph& g, const nn::ParameterStore& s, const ModelConfig& c, const Var& tokens,
                         const MaskBuffer& mask, ForwardTrace* trace) {
  Var x = tokens;
  for (std::size_t l = 0; l < c.n_layers_self; ++l) {
    std::vector<Matrix>* w = nullptr;
    if (trace) w = &trace->self_attention.emplace_back();
    x = attention_block(g, s, "self." + std::to_string(l), c, x, x, mask, w);
  }
  return x;
}

Var cross_attention_stack(nn::Graph& g, const nn::ParameterStore& s, const ModelConfig& c, const Var& targets,
                          const Var& context, const MaskBuffer& mask, ForwardTrace* trace) {
  Var a = targets;
  for (std::size_t l = 0; l < c.n_layers_cross; ++l) {
    std::vector<Matrix>* w = nullptr;
    if (trace) w = &trace->cross_attention.emplace_back();
    a = attention_block(g, s, "cross." + std::to_string(l), c, a, context, mask, w);
  }
  return a;
}

Var prediction_head(nn::Graph& g, const nn::ParameterStore& s, const Var& latents) {
  return nn::linear(latents, g.param(s, "head.w"), g.param(s, "head.b"));
}

std::vector<WeatherVector> denormalize_predictions(const Matrix& z, const ChannelStats& stats) {
  std::vector<WeatherVector> out(z.rows());
  for (std::size_t i = 0; i < z.rows(); ++i) {
    for (std::size_t ch = 0; ch < kChannels; ++ch) out[i][ch] = stats.denormalize(ch, z(i, ch));
  }
  return out;
}

}  // namespace mw
