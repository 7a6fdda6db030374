#include "panoflow/warp.hpp"

#include "panoflow/error.hpp"
#include "panoflow/parallel.hpp"
#include "panoflow/sampling.hpp"

namespace panoflow {

Image backward_warp(const Image& image, const FlowField& flow, bool wrap_horizontal)
{
    require(image.width() == flow.width() && image.height() == flow.height(),
            "backward_warp: image and flow dimensions differ");

    const int w = image.width();
    const int h = image.height();
    const int channels = image.channels();
    const auto horizontal = wrap_horizontal ? EdgeMode::Wrap : EdgeMode::Invalid;

    Image out(w, h, channels);
    parallel_rows(h, [&](int y) {
        for(int x = 0; x < w; ++x)
        {
            if(!flow.valid(x, y))
            {
                out.set_valid(x, y, false);
                continue;
            }

            auto taps = bilinear_taps(double(x) + double(flow.u(x, y)), double(y) + double(flow.v(x, y)),
                                      w, h, horizontal, EdgeMode::Invalid);
            bool ok = taps.has_value();
            if(ok) taps->for_each([&](int ix, int iy, double) { ok = ok && image.valid(ix, iy); });
            if(!ok)
            {
                out.set_valid(x, y, false);
                continue;
            }

            for(int c = 0; c < channels; ++c)
                out.at(x, y, c) = float(taps->blend([&](int ix, int iy) { return double(image.at(ix, iy, c)); }));
        }
    });
    return out;
}

}
