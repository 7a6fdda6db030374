#pragma once

#include "panoflow/flow_field.hpp"
#include "panoflow/image.hpp"

#include <array>
#include <vector>

namespace panoflow {

/// The 55-entry Middlebury color wheel (RY 15, YG 6, GC 4, CB 11, BM 13, MR 6),
/// RGB in [0, 1].
const std::vector<std::array<float, 3>>& color_wheel();

/// Saturation for a flow magnitude: m / t up to the threshold t, then t / m so
/// large flows fade back toward white instead of clipping. Continuous at m == t.
double flow_saturation(double magnitude, double threshold);

/// Color-wheel encoding with the saturation falloff above. Hue follows
/// atan2(-v, -u) around the wheel at a uniform rate, zero flow is white and
/// invalid pixels are black. Throws ContractError unless threshold > 0.
Image visualize_flow(const FlowField& flow, double threshold);

}
