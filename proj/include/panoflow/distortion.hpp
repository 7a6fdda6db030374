#pragma once

#include "panoflow/flow_field.hpp"
#include "panoflow/image.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

namespace panoflow {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

/// PaperLiteral evaluates x_d = P(r) * (x_c + (x_u - x_c)), which reduces to a
/// scaling about the origin. StandardRadial scales the offset from the center:
/// x_d = x_c + (x_u - x_c) * P(r) / r.
enum class DistortionVariant { PaperLiteral, StandardRadial };

const char* to_string(DistortionVariant variant) noexcept;
DistortionVariant parse_distortion_variant(const std::string& name);

/// P(x) = x + k2 x^2 + k4 x^4 + k6 x^6.
struct RadialCoefficients {
    double k2 = 0.0;
    double k4 = 0.0;
    double k6 = 0.0;

    double polynomial(double r) const noexcept;
    double derivative(double r) const noexcept;
    bool is_zero() const noexcept { return k2 == 0.0 && k4 == 0.0 && k6 == 0.0; }
};

/// Coefficients that work across resolutions: k2 = 1e-5, k4 = 1e-14, k6 = 1e-15.
inline constexpr RadialCoefficients default_radial_coefficients{1e-5, 1e-14, 1e-15};

struct DistortionParams {
    Point2 center;
    RadialCoefficients coefficients;
    DistortionVariant variant = DistortionVariant::StandardRadial;
};

/// Parameters with the center at the middle of a width x height image.
DistortionParams centered_params(int width, int height, RadialCoefficients coefficients = default_radial_coefficients,
                                 DistortionVariant variant = DistortionVariant::StandardRadial);

nlohmann::json to_json(const DistortionParams& params);
/// Accepts {center: [x, y], k2, k4, k6, variant}; unknown keys are a ContractError.
DistortionParams distortion_params_from_json(const nlohmann::json& j);

/// A validated coordinate map F (undistorted -> distorted) over one image
/// domain, with its numeric inverse.
///
/// Construction samples the radial profile over the image and rejects any
/// coefficient set that is not strictly increasing there (NumericError).
class DistortionModel {
public:
    DistortionModel(const DistortionParams& params, int width, int height);

    const DistortionParams& params() const noexcept { return m_params; }
    int width() const noexcept { return m_width; }
    int height() const noexcept { return m_height; }
    double max_radius() const noexcept { return m_max_radius; }
    bool is_identity() const noexcept;

    Point2 forward(Point2 p) const;

    /// p with |forward(p) - q| < 1e-6 px, by a bracketed root find on the
    /// radius (the angle about the scaling center is preserved). Throws
    /// NumericError when no root exists in [0, 4 * max_radius].
    Point2 inverse(Point2 q) const;

private:
    double radial_profile(double r) const;

    DistortionParams m_params;
    int m_width;
    int m_height;
    double m_max_radius = 0.0;
};

/// Per-pixel cache of a model's forward and inverse maps on its own grid.
/// Immutable after construction and safe to share between threads.
class DistortionGrid {
public:
    explicit DistortionGrid(const DistortionModel& model);

    const DistortionModel& model() const noexcept { return m_model; }
    Point2 forward_at(int x, int y) const noexcept { return m_forward[index(x, y)]; }
    Point2 inverse_at(int x, int y) const noexcept { return m_inverse[index(x, y)]; }

private:
    std::size_t index(int x, int y) const noexcept { return std::size_t(y) * std::size_t(m_model.width()) + std::size_t(x); }

    DistortionModel m_model;
    std::vector<Point2> m_forward;
    std::vector<Point2> m_inverse;
};

/// Resamples an image through the model: out(q) = bilinear in(F(q)). Content at
/// p therefore appears at F'(p). Pixels whose source leaves the image are set
/// to `fill` and marked invalid.
Image distort_image(const Image& image, const DistortionGrid& grid, float fill = 0.0f);
Image distort_image(const Image& image, const DistortionModel& model, float fill = 0.0f);

/// Flow distortion for a Classical flow field:
///   1. for every grid point p with flow w: start F'(p), end F'(p + w);
///      the corrected vector is end - start;
///   2. the corrected field is resampled like distort_image.
/// A pixel is invalid when its resample source leaves the image, when any tap
/// it uses is invalid, or when a corrected end point leaves the image.
/// Wrapped360 input is a ContractError (unwrap to Classical first).
FlowField distort_flow(const FlowField& flow, const DistortionGrid& grid);
FlowField distort_flow(const FlowField& flow, const DistortionModel& model);

/// Per-sample augmentation: the default coefficients scaled by a factor drawn
/// uniformly from [0, max_scale].
class DistortionSampler {
public:
    explicit DistortionSampler(std::uint64_t seed, double max_scale = 1.5,
                               RadialCoefficients base = default_radial_coefficients);

    DistortionParams sample(int width, int height);
    double last_scale() const noexcept { return m_last_scale; }

private:
    std::uint64_t m_state;
    double m_max_scale;
    RadialCoefficients m_base;
    double m_last_scale = 0.0;
};

}
