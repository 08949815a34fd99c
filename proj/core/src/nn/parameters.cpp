#include "microweather/nn/parameters.hpp"

#include <cmath>
#include <stdexcept>

namespace mw::nn {

Matrix& ParameterStore::add(const std::string& name, Matrix value) {
  auto [it, inserted] = tensors_.emplace(name, std::move(value));
  if (!inserted) throw std::invalid_argument("duplicate parameter '" + name + "'");
  return it->second;
}

const Matrix& ParameterStore::at(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
  return it->second;
}

Matrix& ParameterStore::at(const std::string& name) {
  return const_cast<Matrix&>(static_cast<const ParameterStore&>(*this).at(name));
}

std::size_t ParameterStore::scalar_count() const noexcept {
  std::size_t n = 0;
  for (const auto& [_, m] : tensors_) n += m.size();
  return n;
}

bool ParameterStore::all_finite() const noexcept {
  for (const auto& [_, m] : tensors_) {
    if (!m.all_finite()) return false;
  }
  return true;
}

void ParameterStore::round_to_float32() noexcept {
  for (auto& [_, m] : tensors_) {
    for (double& x : m.values()) x = static_cast<double>(static_cast<float>(x));
  }
}

Matrix uniform(std::size_t rows, std::size_t cols, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix m(rows, cols);
  for (double& x : m.values()) x = dist(rng);
  return m;
}

Matrix glorot(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng, double gain) {
  const double bound = gain * std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  return uniform(fan_in, fan_out, bound, rng);
}

}  // namespace mw::nn
