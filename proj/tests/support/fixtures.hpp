#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "microweather/dataset.hpp"
#include "microweather/model.hpp"
#include "microweather/synthetic.hpp"
#include "microweather/training.hpp"

namespace fixture {

/// Fresh empty directory under the system temp dir; removed by the destructor.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
};

/// 3 stations on a 2x2 grid with 4 hourly timestamps. `nan_temperature` blanks the temperature of
/// station B at the second hour; `outside` moves station C off the grid.
void write_minimal_text(const std::filesystem::path& dir, bool nan_temperature = false, bool outside = false);
mw::DatasetPaths minimal_paths(const std::filesystem::path& dir);

/// d_latent 12, 3 heads, 2 + 2 layers, embedding surface of width 4.
mw::ModelConfig tiny_model_config(std::uint64_t seed = 1);

/// Directly assembled forward inputs: `n_backbone` stations and `n_targets` targets inside a 1x1
/// degree grid with random weather, coarse samples and embeddings.
struct TinyProblem {
  mw::ModelState state;
  mw::ForwardInputs inputs;
  mw::nn::Matrix observed;  // n_targets x 4, normalized
  mw::nn::Matrix valid;
};
TinyProblem make_tiny_problem(std::uint64_t seed, std::size_t n_backbone = 4, std::size_t n_targets = 2,
                              const mw::ModelConfig* config = nullptr);

/// A world small enough for unit-level training tests (seconds).
mw::SyntheticWorldSpec small_world(std::uint64_t seed = 3);
/// Model sized for small_world.
mw::ModelConfig small_model_config(const mw::Dataset& d, mw::SurfaceMode mode = mw::SurfaceMode::Embedding);

/// Configuration used for the trained-model acceptance checks.
mw::ModelConfig ablation_model_config(std::size_t surface_dim, mw::SurfaceMode mode, const mw::Connectivity& conn);
mw::TrainConfig ablation_train_config();

std::string read_file(const std::filesystem::path& p);

}  // namespace fixture

namespace fixture {

struct GroupGradient {
  std::string name;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
  int redraws = 0;            // directions discarded because they crossed a ReLU kink
  bool kink_crossed = false;  // true if every draw crossed one (result then not meaningful)
};

/// Directional derivative of the tiny-problem loss along a random unit direction inside each
/// parameter tensor: analytic (backprop) vs float64 central difference with step eps.
/// rel_error = |a - n| / max(|a|, |n|), or 0 when both are below abs_floor.
/// Directions whose +-eps segment changes the sign of any ReLU input are redrawn (up to 50 times).
std::vector<GroupGradient> group_gradient_check(const TinyProblem& p, std::uint64_t seed, double eps,
                                                double abs_floor = 1e-10);

}  // namespace fixture
