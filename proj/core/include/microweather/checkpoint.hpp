#pragma once

#include <cstdint>
#include <filesystem>

#include "microweather/nn/parameters.hpp"
#include "microweather/types.hpp"

namespace mw {

inline constexpr std::uint32_t kModelFormatVersion = 1;

/// Learnable parameters plus the configuration and normalization needed to run them.
struct ModelState {
  ModelConfig config;
  nn::ParameterStore parameters;
  Normalization normalization;
  std::uint32_t version = kModelFormatVersion;

  /// Throws NumericalError on non-finite parameters or non-positive normalization std.
  void validate() const;
  friend bool operator==(const ModelState&, const ModelState&) = default;
};

/// Container: "MWX1", u32 JSON length, JSON (version, config, normalization, tensor count), then
/// per tensor u16 name length, name, u32 rows, u32 cols, float32 data; then CRC32 of all prior bytes.
/// Parameters are stored as float32, so round-trips are exact for float32-representable states.
void save_checkpoint(const ModelState& state, const std::filesystem::path& path);

/// Throws MissingCheckpoint, IoError, VersionError, CorruptChecksum.
ModelState load_checkpoint(const std::filesystem::path& path);

/// Also throws ConfigMismatch when the stored architecture differs from `expected`.
ModelState load_checkpoint(const std::filesystem::path& path, const ModelConfig& expected);

/// True when the two configs describe the same parameter layout.
bool same_architecture(const ModelConfig& a, const ModelConfig& b) noexcept;

}  // namespace mw
