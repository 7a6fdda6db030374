#include "panoflow/visualize.hpp"

#include "panoflow/error.hpp"
#include "panoflow/parallel.hpp"

#include <cmath>
#include <numbers>

namespace panoflow {

const std::vector<std::array<float, 3>>& color_wheel()
{
    static const auto wheel = [] {
        constexpr int RY = 15, YG = 6, GC = 4, CB = 11, BM = 13, MR = 6;
        std::vector<std::array<float, 3>> colors;
        auto ramp = [](int i, int n) { return float(i) / float(n); };
        for(int i = 0; i < RY; ++i) colors.push_back({1.0f, ramp(i, RY), 0.0f});
        for(int i = 0; i < YG; ++i) colors.push_back({1.0f - ramp(i, YG), 1.0f, 0.0f});
        for(int i = 0; i < GC; ++i) colors.push_back({0.0f, 1.0f, ramp(i, GC)});
        for(int i = 0; i < CB; ++i) colors.push_back({0.0f, 1.0f - ramp(i, CB), 1.0f});
        for(int i = 0; i < BM; ++i) colors.push_back({ramp(i, BM), 0.0f, 1.0f});
        for(int i = 0; i < MR; ++i) colors.push_back({1.0f, 0.0f, 1.0f - ramp(i, MR)});
        return colors;
    }();
    return wheel;
}

double flow_saturation(double magnitude, double threshold)
{
    if(magnitude <= threshold) return magnitude / threshold;
    return threshold / magnitude;
}

Image visualize_flow(const FlowField& flow, double threshold)
{
    require(std::isfinite(threshold) && threshold > 0.0, "visualize_flow: threshold must be positive");

    const auto& wheel = color_wheel();
    const int ncols = int(wheel.size());

    Image out(flow.width(), flow.height(), 3, 1.0f);
    parallel_rows(flow.height(), [&](int y) {
        for(int x = 0; x < flow.width(); ++x)
        {
            auto px = out.pixel(x, y);
            const double u = flow.u(x, y);
            const double v = flow.v(x, y);
            if(!flow.valid(x, y) || !std::isfinite(u) || !std::isfinite(v))
            {
                px[0] = px[1] = px[2] = 0.0f;
                continue;
            }

            const double magnitude = std::hypot(u, v);
            if(magnitude == 0.0) continue;

            const double angle = std::atan2(-v, -u) / std::numbers::pi;
            double position = (angle + 1.0) / 2.0 * double(ncols);
            if(position >= double(ncols)) position -= double(ncols);
            const int k0 = int(position);
            const int k1 = (k0 + 1) % ncols;
            const double f = position - double(k0);
            const double s = flow_saturation(magnitude, threshold);

            for(int c = 0; c < 3; ++c)
            {
                const double hue = (1.0 - f) * wheel[std::size_t(k0)][std::size_t(c)]
                                   + f * wheel[std::size_t(k1)][std::size_t(c)];
                px[std::size_t(c)] = float(1.0 - s * (1.0 - hue));
            }
        }
    });
    return out;
}

}
