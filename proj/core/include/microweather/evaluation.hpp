#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "microweather/checkpoint.hpp"
#include "microweather/dataset.hpp"
#include "microweather/metrics.hpp"
#include "microweather/model.hpp"

namespace mw {

inline constexpr const char* kEra5ModelName = "era5_bilinear";
inline constexpr const char* kRbfModelName = "station_rbf";

/// One record per (station of `role`, hour) with at least one observed channel; only observed
/// channels are marked valid. Hours without any observed backbone station are skipped.
std::vector<EvalRecord> model_records(const Dataset& dataset, const ModelState& state, Role role = Role::Test,
                                      const ForwardOptions& options = {});

/// Coarse-only baseline.
std::vector<EvalRecord> era5_records(const Dataset& dataset, Role role = Role::Test);

/// Linear RBF over the backbone observations of each hour, per channel. A channel with fewer than
/// two observing backbone stations is marked invalid for that hour.
std::vector<EvalRecord> rbf_records(const Dataset& dataset, Role role = Role::Test);

struct AblationVariant {
  std::string name;
  std::filesystem::path checkpoint;
  ForwardOptions options;
};

/// Baseline tables first, then one table per variant. Throws MissingCheckpoint naming the path.
std::vector<MetricTable> ablation_report(const Dataset& dataset, std::span<const AblationVariant> variants,
                                         Role role = Role::Test);

}  // namespace mw
