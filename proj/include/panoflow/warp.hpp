#pragma once

#include "panoflow/flow_field.hpp"
#include "panoflow/image.hpp"

namespace panoflow {

/// out(x, y) = bilinear sample of image at (x + u, y + v).
///
/// With wrap_horizontal the column coordinate is taken modulo W; otherwise a
/// sample leaving [0, W-1] invalidates the output pixel. Leaving [0, H-1]
/// vertically always invalidates it, as do invalid flow vectors and invalid
/// source taps.
Image backward_warp(const Image& image, const FlowField& flow, bool wrap_horizontal);

}
