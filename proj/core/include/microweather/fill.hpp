#pragma once

#include <span>

#include "microweather/types.hpp"

namespace mw {

/// Fills one channel in place. Anchors are the Observed slots; every other slot becomes Filled by
/// linear interpolation in time between the neighbouring anchors, or by the nearest anchor at the
/// edges. Returns false (leaving the channel untouched) when there is no anchor.
bool fill_channel(std::span<double> values, std::span<SlotState> states);

/// Fills every channel of a series. Throws FillError naming the first channel with no observed value.
Series fill_missing(const Series& series);

/// Like fill_missing, but channels with no observed value stay Missing. Returns the number of such
/// channels.
std::size_t fill_missing_lenient(Series& series);

}  // namespace mw
