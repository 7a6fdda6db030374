#pragma once

#include "panoflow/flow_field.hpp"
#include "panoflow/image.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace panoflow {

/// C x H x W feature tensor (channel-major) at `downsample` times below the
/// image resolution.
struct FeatureMap {
    int channels = 0;
    int height = 0;
    int width = 0;
    int downsample = 1;
    std::vector<float> values;

    FeatureMap() = default;
    FeatureMap(int channels, int height, int width, int downsample);

    float& at(int c, int y, int x) noexcept { return values[offset(c, y, x)]; }
    float at(int c, int y, int x) const noexcept { return values[offset(c, y, x)]; }

    bool same_shape(const FeatureMap& other) const noexcept
    {
        return channels == other.channels && height == other.height && width == other.width
               && downsample == other.downsample;
    }

    bool operator==(const FeatureMap& other) const = default;

private:
    std::size_t offset(int c, int y, int x) const noexcept
    {
        return (std::size_t(c) * std::size_t(height) + std::size_t(y)) * std::size_t(width) + std::size_t(x);
    }
};

/// Multi-resolution features, finest level first.
using FeatureStack = std::vector<FeatureMap>;

/// Features of the attended frame, the target frame and optionally context
/// features of the attended frame, level by level.
struct FeaturePair {
    FeatureStack source;
    FeatureStack target;
    std::optional<FeatureStack> context;

    /// Throws ContractError unless source, target (and context) agree level by level.
    void validate() const;
};

struct BackendCapabilities {
    bool has_encode_decode_split = false;
    bool horizontally_circular = false;
};

/// Input to a full estimate. `pair_id` keys precomputed results; `halves_swapped`
/// tells keyed backends that both frames were rolled by W/2.
struct EstimateRequest {
    const Image& first;
    const Image& second;
    std::string pair_id;
    bool halves_swapped = false;
};

/// A Classical flow field plus a per-pixel confidence flag. The flow carries a
/// vector wherever it is valid; `confident` marks vectors the estimator could
/// actually verify (for the builtin matcher: a match inside the search range
/// with acceptable cost).
struct FlowEstimate {
    FlowField flow;
    Mask confident;
};

/// Flow estimator. Backends with the encode/decode split satisfy
/// estimate(I1, I2) == decode({encode(I1), encode(I2), encode_context(I1)}).
/// All methods are deterministic and safe to call concurrently.
class EstimatorBackend {
public:
    virtual ~EstimatorBackend() = default;

    virtual BackendCapabilities capabilities() const = 0;
    virtual FlowEstimate estimate(const EstimateRequest& request) const = 0;

    /// The default implementations throw ContractError.
    virtual FeatureStack encode(const Image& image) const;
    virtual std::optional<FeatureStack> encode_context(const Image& image) const;
    virtual FlowEstimate decode(const FeaturePair& pair) const;
};

struct BuiltinParams {
    int levels = 4;              ///< pyramid levels; image width must divide by 2^levels
    int radius = 4;              ///< per-level search radius, in pixels of that level
    int coarse_radius = 4;       ///< search radius at the coarsest level
    int iterations = 1;          ///< matching passes per level
    int aggregation_radius = 2;  ///< cost window is (2a+1)^2, a <= 16
    int max_horizontal_displacement = 0; ///< |u| cap in full-resolution pixels; 0 = none
    double confidence_bits = 6.0;  ///< confident when the per-level best window-mean Hamming cost, averaged over levels, is <= this
    bool circular = false;       ///< circular horizontal padding in the encoder
};

/// Classical coarse-to-fine census matcher.
///
/// encode: grayscale Gaussian pyramid (5-tap binomial, vertical replicate
/// padding, horizontal padding circular or replicate per `circular`); each level
/// carries the 48-bit census transform over a 7x7 window, bit = neighbour >
/// center, packed as three 16-bit integer channels. Level 0 is the unblurred
/// image. decode: from the coarsest level down, each pixel searches integer
/// displacements within the radius around its current estimate and keeps the
/// one with the lowest window-aggregated Hamming cost. Targets must lie inside
/// the image (no horizontal wrap). Ties go to smaller |u|, then smaller |v|,
/// then smaller (u, v). Estimates are 3x3 median filtered and doubled on the
/// way to the next finer level. There is no context encoder.
class BuiltinBackend final : public EstimatorBackend {
public:
    explicit BuiltinBackend(BuiltinParams params = {});

    const BuiltinParams& params() const noexcept { return m_params; }

    BackendCapabilities capabilities() const override;
    FlowEstimate estimate(const EstimateRequest& request) const override;
    FeatureStack encode(const Image& image) const override;
    std::optional<FeatureStack> encode_context(const Image& image) const override;
    FlowEstimate decode(const FeaturePair& pair) const override;

    /// Maximum displacement the pyramid can reach (before the |u| cap).
    int reach() const noexcept;

private:
    BuiltinParams m_params;
};

inline constexpr int census_radius = 3;
inline constexpr int census_bits = 48;
inline constexpr int census_channels = 3;

/// Packs the census channels of one pixel back into a 48-bit code.
std::uint64_t census_code(const FeatureMap& features, int y, int x);

/// Precomputed flows stored as `<flow_dir>/<pair_id>.flo`; swapped-half
/// requests read `<pair_id>_swapped.flo`. No encode/decode split, so only the
/// image-level CFE modes apply.
class FileBackend final : public EstimatorBackend {
public:
    explicit FileBackend(std::filesystem::path flow_dir);

    BackendCapabilities capabilities() const override;
    FlowEstimate estimate(const EstimateRequest& request) const override;

    std::filesystem::path path_for(const std::string& pair_id, bool halves_swapped) const;

private:
    std::filesystem::path m_dir;
};

/// Loads `<flow_dir>/<pair_id>.flo`. LookupError if missing; read_flo errors
/// pass through unchanged.
FlowField file_backend_estimate(const std::string& pair_id, const std::filesystem::path& flow_dir);

}
