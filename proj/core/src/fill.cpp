#include "microweather/fill.hpp"

#include <string>
#include <vector>

#include "microweather/errors.hpp"

namespace mw {

bool fill_channel(std::span<double> values, std::span<SlotState> states) {
  const std::size_t n = values.size();
  std::vector<std::size_t> anchors;
  for (std::size_t t = 0; t < n; ++t) {
    if (states[t] == SlotState::Observed) anchors.push_back(t);
  }
  if (anchors.empty()) return false;
  for (std::size_t t = 0; t < anchors.front(); ++t) {
    values[t] = values[anchors.front()];
    states[t] = SlotState::Filled;
  }
  for (std::size_t a = 0; a + 1 < anchors.size(); ++a) {
    const std::size_t t0 = anchors[a];
    const std::size_t t1 = anchors[a + 1];
    const double v0 = values[t0];
    const double v1 = values[t1];
    for (std::size_t t = t0 + 1; t < t1; ++t) {
      const double frac = static_cast<double>(t - t0) / static_cast<double>(t1 - t0);
      values[t] = v0 + (v1 - v0) * frac;
      states[t] = SlotState::Filled;
    }
  }
  for (std::size_t t = anchors.back() + 1; t < n; ++t) {
    values[t] = values[anchors.back()];
    states[t] = SlotState::Filled;
  }
  return true;
}

namespace {

std::size_t fill_all(Series& s, bool strict) {
  const std::size_t n = s.size();
  std::vector<double> v(n);
  std::vector<SlotState> st(n);
  std::size_t unfilled = 0;
  for (std::size_t c = 0; c < kChannels; ++c) {
    for (std::size_t t = 0; t < n; ++t) {
      v[t] = s.values[t][c];
      st[t] = s.flags[t].state[c];
    }
    if (!fill_channel(v, st)) {
      if (strict) {
        throw FillError("channel " + std::string(channel_name(static_cast<Channel>(c))) + " has no valid value");
      }
      ++unfilled;
      continue;
    }
    for (std::size_t t = 0; t < n; ++t) {
      s.values[t][c] = v[t];
      s.flags[t].state[c] = st[t];
    }
  }
  return unfilled;
}

}  // namespace

Series fill_missing(const Series& series) {
  Series out = series;
  fill_all(out, true);
  return out;
}

std::size_t fill_missing_lenient(Series& series) { return fill_all(series, false); }

}  // namespace mw
