#include "microweather/checkpoint.hpp"

#include <cmath>
#include <cstring>

#include <nlohmann/json.hpp>

#include "binary_io.hpp"
#include "json_codec.hpp"
#include "microweather/hash.hpp"

namespace mw {

namespace fs = std::filesystem;

namespace {
constexpr char kMagic[4] = {'M', 'W', 'X', '1'};
}

void ModelState::validate() const {
  if (!parameters.all_finite()) throw NumericalError("model parameters contain non-finite values");
  for (const auto* s : {&normalization.station, &normalization.coarse}) {
    for (std::size_t c = 0; c < kChannels; ++c) {
      if (!(s->std[c] > 0.0) || !std::isfinite(s->mean[c])) {
        throw NumericalError("normalization statistics must be finite with std > 0");
      }
    }
  }
}

bool same_architecture(const ModelConfig& a, const ModelConfig& b) noexcept {
  return a.d_latent == b.d_latent && a.n_heads == b.n_heads && a.n_layers_self == b.n_layers_self &&
         a.n_layers_cross == b.n_layers_cross && a.location_encoding_degree == b.location_encoding_degree &&
         a.location_hidden == b.location_hidden && a.location_dim == b.location_dim && a.mlp_hidden == b.mlp_hidden &&
         a.ffn_width() == b.ffn_width() && a.surface_mode == b.surface_mode &&
         (a.surface_mode != SurfaceMode::Embedding || a.surface_dim == b.surface_dim) &&
         (a.surface_mode != SurfaceMode::ChipEncoder || (a.chips == b.chips && a.chip_channels == b.chip_channels)) &&
         a.pre_norm == b.pre_norm;
}

void save_checkpoint(const ModelState& state, const fs::path& path) {
  const nlohmann::json meta = {{"version", state.version},
                               {"config", to_json(state.config)},
                               {"normalization", to_json(state.normalization)},
                               {"tensors", state.parameters.tensor_count()}};
  const std::string text = meta.dump();
  detail::ByteWriter w;
  w.put_bytes(kMagic, 4);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(text.size()));
  w.put_bytes(text.data(), text.size());
  for (const auto& [name, m] : state.parameters) {
    w.put<std::uint16_t>(static_cast<std::uint16_t>(name.size()));
    w.put_bytes(name.data(), name.size());
    w.put<std::uint32_t>(static_cast<std::uint32_t>(m.rows()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(m.cols()));
    for (double x : m.values()) w.put<float>(static_cast<float>(x));
  }
  const std::uint32_t crc = crc32(w.bytes());
  w.put<std::uint32_t>(crc);
  detail::write_file_bytes(path, w.bytes());
}

ModelState load_checkpoint(const fs::path& path) {
  if (!fs::exists(path)) throw MissingCheckpoint("checkpoint not found: " + path.string());
  const auto bytes = detail::read_file_bytes(path);
  if (bytes.size() < 12) throw CorruptChecksum(path.string() + ": truncated checkpoint");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw CorruptChecksum(path.string() + ": bad magic bytes");
  std::uint32_t stored = 0;
  std::memcpy(&stored, bytes.data() + bytes.size() - 4, 4);
  if (crc32(std::span(bytes.data(), bytes.size() - 4)) != stored) {
    throw CorruptChecksum(path.string() + ": checksum mismatch (truncated or corrupted)");
  }
  detail::ByteReader r(bytes.data() + 4, bytes.size() - 8);
  const auto len = r.get<std::uint32_t>();
  std::string text(len, '\0');
  r.get_bytes(text.data(), len);
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw CorruptChecksum(path.string() + ": unreadable header: " + e.what());
  }
  ModelState s;
  s.version = meta.value("version", 0U);
  if (s.version != kModelFormatVersion) {
    throw VersionError(path.string() + ": checkpoint format version " + std::to_string(s.version) + ", expected " +
                       std::to_string(kModelFormatVersion));
  }
  s.config = model_config_from_json(meta.at("config"));
  s.normalization = normalization_from_json(meta.at("normalization"));
  const auto count = meta.at("tensors").get<std::size_t>();
  for (std::size_t k = 0; k < count; ++k) {
    const auto nlen = r.get<std::uint16_t>();
    std::string name(nlen, '\0');
    r.get_bytes(name.data(), nlen);
    const auto rows = r.get<std::uint32_t>();
    const auto cols = r.get<std::uint32_t>();
    nn::Matrix m(rows, cols);
    for (double& x : m.values()) x = static_cast<double>(r.get<float>());
    s.parameters.add(name, std::move(m));
  }
  if (r.remaining() != 0) throw CorruptChecksum(path.string() + ": trailing bytes");
  return s;
}

ModelState load_checkpoint(const fs::path& path, const ModelConfig& expected) {
  ModelState s = load_checkpoint(path);
  if (!same_architecture(s.config, expected)) {
    throw ConfigMismatch(path.string() + ": checkpoint architecture (d_latent " + std::to_string(s.config.d_latent) +
                         ", heads " + std::to_string(s.config.n_heads) + ") does not match the requested config (d_latent " +
                         std::to_string(expected.d_latent) + ", heads " + std::to_string(expected.n_heads) + ")");
  }
  return s;
}

}  // namespace mw
