#pragma once

#include <algorithm>
#include <cmath>
#include <optional>

namespace panoflow {

/// What a coordinate outside [0, n-1] does along one axis.
enum class EdgeMode { Invalid, Clamp, Wrap };

/// Two neighbouring sample indices along one axis and the weight of the second.
struct AxisTaps {
    int i0 = 0;
    int i1 = 0;
    double frac = 0.0;
};

/// Coordinates this close to an integer are treated as that integer, so that
/// analytically integral positions reproduce samples exactly.
inline constexpr double snap_tolerance = 1e-9;

inline std::optional<AxisTaps> resolve_axis(double x, int n, EdgeMode mode)
{
    if(!std::isfinite(x) || n <= 0) return std::nullopt;

    const double nearest = std::nearbyint(x);
    if(std::abs(x - nearest) < snap_tolerance) x = nearest;

    if(mode == EdgeMode::Wrap)
    {
        x = std::fmod(x, double(n));
        if(x < 0.0) x += double(n);
        if(x >= double(n)) x -= double(n);
        const int i0 = std::min(int(std::floor(x)), n - 1);
        return AxisTaps{i0, (i0 + 1) % n, x - double(i0)};
    }

    const double last = double(n - 1);
    if(mode == EdgeMode::Clamp)
        x = std::clamp(x, 0.0, last);
    else if(x < 0.0 || x > last)
        return std::nullopt;

    const int i0 = int(std::floor(x));
    if(i0 >= n - 1) return AxisTaps{n - 1, n - 1, 0.0};
    return AxisTaps{i0, i0 + 1, x - double(i0)};
}

struct BilinearTaps {
    AxisTaps x;
    AxisTaps y;

    /// Calls fn(ix, iy, weight) for every tap with nonzero weight.
    template<typename Fn>
    void for_each(Fn&& fn) const
    {
        const double wx[2] = {1.0 - x.frac, x.frac};
        const double wy[2] = {1.0 - y.frac, y.frac};
        const int ix[2] = {x.i0, x.i1};
        const int iy[2] = {y.i0, y.i1};
        for(int j = 0; j < 2; ++j)
            for(int i = 0; i < 2; ++i)
            {
                const double w = wx[i] * wy[j];
                if(w != 0.0) fn(ix[i], iy[j], w);
            }
    }

    /// Standard separable blend: rows first, then columns.
    template<typename Fetch>
    double blend(Fetch&& fetch) const
    {
        const double top = x.frac == 0.0 ? fetch(x.i0, y.i0)
                                         : (1.0 - x.frac) * fetch(x.i0, y.i0) + x.frac * fetch(x.i1, y.i0);
        if(y.frac == 0.0) return top;
        const double bottom = x.frac == 0.0 ? fetch(x.i0, y.i1)
                                            : (1.0 - x.frac) * fetch(x.i0, y.i1) + x.frac * fetch(x.i1, y.i1);
        return (1.0 - y.frac) * top + y.frac * bottom;
    }
};

inline std::optional<BilinearTaps> bilinear_taps(double x, double y, int width, int height,
                                                 EdgeMode horizontal, EdgeMode vertical)
{
    auto tx = resolve_axis(x, width, horizontal);
    if(!tx) return std::nullopt;
    auto ty = resolve_axis(y, height, vertical);
    if(!ty) return std::nullopt;
    return BilinearTaps{*tx, *ty};
}

}
