#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>

#include "microweather/nn/matrix.hpp"

namespace mw::nn {

/// Named tensors, iterated in name order.
class ParameterStore {
 public:
  using Map = std::map<std::string, Matrix>;

  /// Adds a new tensor; throws std::invalid_argument on duplicate names.
  Matrix& add(const std::string& name, Matrix value);
  [[nodiscard]] const Matrix& at(const std::string& name) const;
  [[nodiscard]] Matrix& at(const std::string& name);
  [[nodiscard]] bool contains(const std::string& name) const { return tensors_.contains(name); }
  [[nodiscard]] std::size_t tensor_count() const noexcept { return tensors_.size(); }
  [[nodiscard]] std::size_t scalar_count() const noexcept;
  [[nodiscard]] bool all_finite() const noexcept;

  /// Rounds every entry to the nearest float32 value (checkpoint precision).
  void round_to_float32() noexcept;

  [[nodiscard]] Map::const_iterator begin() const noexcept { return tensors_.begin(); }
  [[nodiscard]] Map::const_iterator end() const noexcept { return tensors_.end(); }
  [[nodiscard]] Map::iterator begin() noexcept { return tensors_.begin(); }
  [[nodiscard]] Map::iterator end() noexcept { return tensors_.end(); }

  friend bool operator==(const ParameterStore&, const ParameterStore&) = default;

 private:
  Map tensors_;
};

using Gradients = std::map<std::string, Matrix>;

/// Glorot-uniform weight matrix [fan_in x fan_out] scaled by `gain`.
Matrix glorot(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng, double gain = 1.0);
/// Uniform(-bound, bound) matrix.
Matrix uniform(std::size_t rows, std::size_t cols, double bound, std::mt19937_64& rng);

}  // namespace mw::nn
