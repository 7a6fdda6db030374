#include "panoflow/distortion.hpp"

#include "panoflow/error.hpp"
#include "panoflow/parallel.hpp"
#include "panoflow/random.hpp"
#include "panoflow/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>

namespace panoflow {

const char* to_string(DistortionVariant variant) noexcept
{
    return variant == DistortionVariant::PaperLiteral ? "paper-literal" : "standard-radial";
}

DistortionVariant parse_distortion_variant(const std::string& name)
{
    if(name == "paper-literal") return DistortionVariant::PaperLiteral;
    if(name == "standard-radial") return DistortionVariant::StandardRadial;
    throw UsageError("unknown distortion variant '" + name + "' (expected paper-literal or standard-radial)");
}

double RadialCoefficients::polynomial(double r) const noexcept
{
    const double r2 = r * r;
    const double r4 = r2 * r2;
    return r + k2 * r2 + k4 * r4 + k6 * r4 * r2;
}

double RadialCoefficients::derivative(double r) const noexcept
{
    const double r2 = r * r;
    return 1.0 + 2.0 * k2 * r + 4.0 * k4 * r2 * r + 6.0 * k6 * r2 * r2 * r;
}

DistortionParams centered_params(int width, int height, RadialCoefficients coefficients, DistortionVariant variant)
{
    return {{double(width - 1) / 2.0, double(height - 1) / 2.0}, coefficients, variant};
}

nlohmann::json to_json(const DistortionParams& params)
{
    return {{"center", {params.center.x, params.center.y}},
            {"k2", params.coefficients.k2},
            {"k4", params.coefficients.k4},
            {"k6", params.coefficients.k6},
            {"variant", to_string(params.variant)}};
}

DistortionParams distortion_params_from_json(const nlohmann::json& j)
{
    require(j.is_object(), "distortion parameters must be a JSON object");
    DistortionParams params;
    for(const auto& [key, value] : j.items())
    {
        if(key == "center")
        {
            require(value.is_array() && value.size() == 2, "distortion 'center' must be [x, y]");
            params.center = {value[0].get<double>(), value[1].get<double>()};
        }
        else if(key == "k2") params.coefficients.k2 = value.get<double>();
        else if(key == "k4") params.coefficients.k4 = value.get<double>();
        else if(key == "k6") params.coefficients.k6 = value.get<double>();
        else if(key == "variant") params.variant = parse_distortion_variant(value.get<std::string>());
        else throw ContractError("unknown distortion parameter '" + key + "'");
    }
    return params;
}

// DistortionModel

namespace {

constexpr int profile_samples = 4096;
constexpr int literal_directions = 256;

double corner_distance(Point2 from, int width, int height)
{
    const double xs[2] = {0.0, double(width - 1)};
    const double ys[2] = {0.0, double(height - 1)};
    double best = 0.0;
    for(double x : xs)
        for(double y : ys) best = std::max(best, std::hypot(x - from.x, y - from.y));
    return best;
}

// Distance along direction (cos a, sin a) from the origin to the far side of
// the image rectangle [0, W-1] x [0, H-1].
double ray_exit(double angle, int width, int height)
{
    const double c = std::cos(angle), s = std::sin(angle);
    double t = std::numeric_limits<double>::infinity();
    if(c > 1e-12) t = std::min(t, double(width - 1) / c);
    if(s > 1e-12) t = std::min(t, double(height - 1) / s);
    return t;
}

// Smallest r in [lo, hi] with f(r) == target for f increasing on [lo, hi].
template<typename F>
double solve_increasing(F&& f, double target, double lo, double hi)
{
    double r = std::clamp(target, lo, hi);
    for(int iter = 0; iter < 200; ++iter)
    {
        const double value = f(r) - target;
        if(value == 0.0) return r;
        if(value > 0.0) hi = r; else lo = r;
        if(hi - lo <= 1e-13 * std::max(1.0, hi)) break;

        // Secant-style step from the bracket, bisection when it stalls.
        const double flo = f(lo) - target, fhi = f(hi) - target;
        double next = (flo != fhi) ? lo - flo * (hi - lo) / (fhi - flo) : 0.5 * (lo + hi);
        if(!(next > lo && next < hi) || iter % 4 == 3) next = 0.5 * (lo + hi);
        r = next;
    }
    return 0.5 * (lo + hi);
}

// First bracket [a, b] within [lo, hi] where f crosses target, scanning in steps.
template<typename F>
std::optional<std::pair<double, double>> find_bracket(F&& f, double target, double lo, double hi, int steps)
{
    double prev = lo;
    if(f(prev) >= target) return std::pair{prev, prev};
    for(int i = 1; i <= steps; ++i)
    {
        const double r = lo + (hi - lo) * double(i) / double(steps);
        if(f(r) >= target) return std::pair{prev, r};
        prev = r;
    }
    return std::nullopt;
}

}

DistortionModel::DistortionModel(const DistortionParams& params, int width, int height)
    : m_params(params), m_width(width), m_height(height)
{
    require(width > 0 && height > 0, "DistortionModel: image dimensions must be positive");
    const auto& k = params.coefficients;
    require(std::isfinite(k.k2) && std::isfinite(k.k4) && std::isfinite(k.k6)
                && std::isfinite(params.center.x) && std::isfinite(params.center.y),
            "DistortionModel: parameters must be finite");

    if(params.variant == DistortionVariant::StandardRadial)
    {
        m_max_radius = corner_distance(params.center, width, height);
        double prev = 0.0;
        for(int i = 1; i <= profile_samples; ++i)
        {
            const double r = m_max_radius * double(i) / double(profile_samples);
            const double value = k.polynomial(r);
            if(!(value > prev))
                throw NumericError("DistortionModel: radial map is not strictly increasing over the image (r = "
                                   + std::to_string(r) + ")");
            prev = value;
        }
        return;
    }

    // The literal form scales about the origin, so injectivity is checked along
    // rays from the origin across the image.
    m_max_radius = corner_distance({0.0, 0.0}, width, height);
    for(int a = 0; a <= literal_directions; ++a)
    {
        const double angle = (std::numbers::pi / 2.0) * double(a) / double(literal_directions);
        const double reach = ray_exit(angle, width, height);
        const Point2 dir{std::cos(angle), std::sin(angle)};
        double prev = 0.0;
        for(int i = 1; i <= profile_samples / 4; ++i)
        {
            const double rho = reach * double(i) / double(profile_samples / 4);
            const auto q = forward({rho * dir.x, rho * dir.y});
            const double value = std::hypot(q.x, q.y);
            if(!(value > prev))
                throw NumericError("DistortionModel: the literal map is not injective over the image (it sends "
                                   "both the origin and the center to 0)");
            prev = value;
        }
    }
}

bool DistortionModel::is_identity() const noexcept
{
    return m_params.variant == DistortionVariant::StandardRadial && m_params.coefficients.is_zero();
}

Point2 DistortionModel::forward(Point2 p) const
{
    const auto& c = m_params.center;
    const auto& k = m_params.coefficients;
    const double dx = p.x - c.x, dy = p.y - c.y;
    const double r = std::hypot(dx, dy);

    if(m_params.variant == DistortionVariant::PaperLiteral)
    {
        const double scale = k.polynomial(r);
        return {scale * (c.x + (p.x - c.x)), scale * (c.y + (p.y - c.y))};
    }

    if(is_identity() || r == 0.0) return p;
    const double r2 = r * r;
    const double scale = 1.0 + k.k2 * r + k.k4 * r2 * r + k.k6 * r2 * r2 * r;
    return {c.x + dx * scale, c.y + dy * scale};
}

double DistortionModel::radial_profile(double r) const
{
    return m_params.coefficients.polynomial(r);
}

Point2 DistortionModel::inverse(Point2 q) const
{
    if(m_params.variant == DistortionVariant::StandardRadial)
    {
        if(is_identity()) return q;
        const auto& c = m_params.center;
        const double dx = q.x - c.x, dy = q.y - c.y;
        const double s = std::hypot(dx, dy);
        if(s == 0.0) return c;

        auto profile = [this](double r) { return radial_profile(r); };
        double r;
        if(s <= profile(m_max_radius))
            r = solve_increasing(profile, s, 0.0, m_max_radius);
        else
        {
            auto bracket = find_bracket(profile, s, m_max_radius, 4.0 * m_max_radius, 4096);
            if(!bracket) throw NumericError("inverse distortion: no radius in [0, 4 r_max] maps to the target");
            r = solve_increasing(profile, s, bracket->first, bracket->second);
        }
        const double scale = r / s;
        return {c.x + dx * scale, c.y + dy * scale};
    }

    const double s = std::hypot(q.x, q.y);
    if(s == 0.0) return {0.0, 0.0};
    const Point2 dir{q.x / s, q.y / s};
    auto along = [&](double rho) {
        const auto p = forward({rho * dir.x, rho * dir.y});
        return std::hypot(p.x, p.y);
    };
    auto bracket = find_bracket(along, s, 0.0, 4.0 * m_max_radius, 4096);
    if(!bracket) throw NumericError("inverse distortion: no radius in [0, 4 r_max] maps to the target");
    const double rho = solve_increasing(along, s, bracket->first, bracket->second);
    return {rho * dir.x, rho * dir.y};
}

// DistortionGrid

DistortionGrid::DistortionGrid(const DistortionModel& model) : m_model(model)
{
    const int w = model.width(), h = model.height();
    m_forward.resize(std::size_t(w) * std::size_t(h));
    m_inverse.resize(m_forward.size());
    parallel_rows(h, [&](int y) {
        for(int x = 0; x < w; ++x)
        {
            const Point2 p{double(x), double(y)};
            m_forward[index(x, y)] = model.forward(p);
            m_inverse[index(x, y)] = model.inverse(p);
        }
    });
}

// Resampling

Image distort_image(const Image& image, const DistortionGrid& grid, float fill)
{
    const auto& model = grid.model();
    require(image.width() == model.width() && image.height() == model.height(),
            "distort_image: image size differs from the distortion model's domain");
    if(model.is_identity()) return image;

    const int w = image.width(), h = image.height();
    Image out(w, h, image.channels(), fill);
    parallel_rows(h, [&](int y) {
        for(int x = 0; x < w; ++x)
        {
            const auto src = grid.forward_at(x, y);
            auto taps = bilinear_taps(src.x, src.y, w, h, EdgeMode::Invalid, EdgeMode::Invalid);
            bool ok = taps.has_value();
            if(ok) taps->for_each([&](int ix, int iy, double) { ok = ok && image.valid(ix, iy); });
            if(!ok)
            {
                out.set_valid(x, y, false);
                continue;
            }
            for(int c = 0; c < image.channels(); ++c)
                out.at(x, y, c) = float(taps->blend([&](int ix, int iy) { return double(image.at(ix, iy, c)); }));
        }
    });
    return out;
}

Image distort_image(const Image& image, const DistortionModel& model, float fill)
{
    if(model.is_identity())
    {
        require(image.width() == model.width() && image.height() == model.height(),
                "distort_image: image size differs from the distortion model's domain");
        return image;
    }
    return distort_image(image, DistortionGrid(model), fill);
}

FlowField distort_flow(const FlowField& flow, const DistortionGrid& grid)
{
    const auto& model = grid.model();
    require(flow.representation() == FlowRepresentation::Classical,
            "distort_flow: Wrapped360 flow must be unwrapped to Classical first");
    require(flow.width() == model.width() && flow.height() == model.height(),
            "distort_flow: flow size differs from the distortion model's domain");
    if(model.is_identity()) return flow;

    const int w = flow.width(), h = flow.height();
    const double lo_x = -0.5, hi_x = double(w) - 0.5;
    const double lo_y = -0.5, hi_y = double(h) - 0.5;

    // Endpoint correction on the source grid.
    FlowField corrected(w, h);
    parallel_rows(h, [&](int y) {
        for(int x = 0; x < w; ++x)
        {
            if(!flow.valid(x, y))
            {
                corrected.set_valid(x, y, false);
                continue;
            }
            const Point2 start = grid.inverse_at(x, y);
            const Point2 end = model.inverse({double(x) + double(flow.u(x, y)), double(y) + double(flow.v(x, y))});
            corrected.set(x, y, float(end.x - start.x), float(end.y - start.y));
            const bool inside = end.x >= lo_x && end.x <= hi_x && end.y >= lo_y && end.y <= hi_y;
            corrected.set_valid(x, y, inside);
        }
    });

    // Resample the corrected field with the image mapping.
    FlowField out(w, h);
    parallel_rows(h, [&](int y) {
        for(int x = 0; x < w; ++x)
        {
            const auto src = grid.forward_at(x, y);
            auto taps = bilinear_taps(src.x, src.y, w, h, EdgeMode::Invalid, EdgeMode::Invalid);
            bool ok = taps.has_value();
            if(ok) taps->for_each([&](int ix, int iy, double) { ok = ok && corrected.valid(ix, iy); });
            if(!ok)
            {
                out.set_valid(x, y, false);
                continue;
            }
            out.set(x, y, float(taps->blend([&](int ix, int iy) { return double(corrected.u(ix, iy)); })),
                    float(taps->blend([&](int ix, int iy) { return double(corrected.v(ix, iy)); })));
        }
    });
    return out;
}

FlowField distort_flow(const FlowField& flow, const DistortionModel& model)
{
    if(model.is_identity())
    {
        require(flow.representation() == FlowRepresentation::Classical,
                "distort_flow: Wrapped360 flow must be unwrapped to Classical first");
        require(flow.width() == model.width() && flow.height() == model.height(),
                "distort_flow: flow size differs from the distortion model's domain");
        return flow;
    }
    return distort_flow(flow, DistortionGrid(model));
}

// DistortionSampler

DistortionSampler::DistortionSampler(std::uint64_t seed, double max_scale, RadialCoefficients base)
    : m_state(seed), m_max_scale(max_scale), m_base(base)
{
    require(max_scale >= 0.0 && std::isfinite(max_scale), "DistortionSampler: max_scale must be finite and >= 0");
}

DistortionParams DistortionSampler::sample(int width, int height)
{
    const double unit = unit_double(splitmix64(m_state));
    m_last_scale = unit * m_max_scale;
    RadialCoefficients k{m_base.k2 * m_last_scale, m_base.k4 * m_last_scale, m_base.k6 * m_last_scale};
    return centered_params(width, height, k);
}

}
