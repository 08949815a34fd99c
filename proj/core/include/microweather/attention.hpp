#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "microweather/nn/graph.hpp"
#include "microweather/types.hpp"

namespace mw {

/// Attention weights recorded during a forward pass: [layer][head] -> rows x keys.
struct ForwardTrace {
  std::vector<std::vector<nn::Matrix>> self_attention;
  std::vector<std::vector<nn::Matrix>> cross_attention;
};

/// Row-major 0/1 mask shared with the graph for the backward pass.
using MaskBuffer = std::shared_ptr<const std::vector<unsigned char>>;

void add_attention_layer(nn::ParameterStore& store, const std::string& prefix, const ModelConfig& config,
                         std::size_t total_layers, std::mt19937_64& rng);

/// One residual block: x + MHA(x -> queries, ctx -> keys/values) W_o + b_o, then a residual
/// 2-layer ReLU feed-forward. Scores are Q K^T / sqrt(d_head) with disallowed pairs removed before
/// the softmax. With pre_norm, both sublayers read a LayerNorm of their input.
nn::Var attention_block(nn::Graph& g, const nn::ParameterStore& store, const std::string& prefix,
                        const ModelConfig& config, const nn::Var& x, const nn::Var& context, const MaskBuffer& mask,
                        std::vector<nn::Matrix>* weights);

/// n_layers_self blocks of masked self-attention over backbone tokens. Throws MaskRowEmpty.
nn::Var self_attention_stack(nn::Graph& g, const nn::ParameterStore& store, const ModelConfig& config,
                             const nn::Var& tokens, const MaskBuffer& mask, ForwardTrace* trace);

/// n_layers_cross blocks where targets query the fixed context. Throws MaskRowEmpty.
nn::Var cross_attention_stack(nn::Graph& g, const nn::ParameterStore& store, const ModelConfig& config,
                              const nn::Var& targets, const nn::Var& context, const MaskBuffer& mask,
                              ForwardTrace* trace);

/// Linear map to the 4 normalized channels.
nn::Var prediction_head(nn::Graph& g, const nn::ParameterStore& store, const nn::Var& latents);

/// Denormalizes head output rows to physical units.
std::vector<WeatherVector> denormalize_predictions(const nn::Matrix& normalized, const ChannelStats& stats);

}  // namespace mw
