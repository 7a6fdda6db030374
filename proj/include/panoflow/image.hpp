#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace panoflow {

using Mask = std::vector<std::uint8_t>;

/// Interleaved float image with samples nominally in [0, 1] and a per-pixel
/// validity mask. Pixel (x, y) has its center at integer coordinates.
///
/// Equirectangular panoramas are Images with width == 2 * height; column x maps
/// to longitude (x + 0.5) / W * 360 - 180 and row y to latitude 90 - (y + 0.5) / H * 180.
/// Operations that need the panoramic parameterization check the aspect ratio
/// via require_equirect().
class Image {
public:
    Image() = default;
    Image(int width, int height, int channels, float fill = 0.0f);

    int width() const noexcept { return m_width; }
    int height() const noexcept { return m_height; }
    int channels() const noexcept { return m_channels; }
    std::size_t pixel_count() const noexcept { return std::size_t(m_width) * std::size_t(m_height); }
    bool empty() const noexcept { return m_width == 0 || m_height == 0; }

    float& at(int x, int y, int c = 0) noexcept { return m_data[index(x, y) * std::size_t(m_channels) + std::size_t(c)]; }
    float at(int x, int y, int c = 0) const noexcept { return m_data[index(x, y) * std::size_t(m_channels) + std::size_t(c)]; }

    std::span<float> pixel(int x, int y) noexcept { return {&at(x, y), std::size_t(m_channels)}; }
    std::span<const float> pixel(int x, int y) const noexcept { return {&m_data[index(x, y) * std::size_t(m_channels)], std::size_t(m_channels)}; }

    bool valid(int x, int y) const noexcept { return m_valid[index(x, y)] != 0; }
    void set_valid(int x, int y, bool v) noexcept { m_valid[index(x, y)] = v ? 1 : 0; }

    std::vector<float>& data() noexcept { return m_data; }
    const std::vector<float>& data() const noexcept { return m_data; }
    Mask& valid_mask() noexcept { return m_valid; }
    const Mask& valid_mask() const noexcept { return m_valid; }

    bool same_shape(const Image& other) const noexcept
    {
        return m_width == other.m_width && m_height == other.m_height && m_channels == other.m_channels;
    }

    bool operator==(const Image& other) const = default;

private:
    std::size_t index(int x, int y) const noexcept { return std::size_t(y) * std::size_t(m_width) + std::size_t(x); }

    int m_width = 0;
    int m_height = 0;
    int m_channels = 0;
    std::vector<float> m_data;
    Mask m_valid;
};

/// Throws ContractError unless the image is a 2:1 equirectangular panorama.
void require_equirect(const Image& image, const char* what);

/// Luma (BT.601 weights) for 3-channel images, a copy for single-channel ones.
Image to_grayscale(const Image& image);

/// out(x, y) = in((x - shift) mod W, y). Validity travels with the samples.
Image roll_columns(const Image& image, int shift);

/// Swaps the left and right halves (a roll by W/2). Requires even width.
Image swap_halves(const Image& image);

/// Largest absolute per-sample difference over pixels valid in both images.
double max_abs_difference(const Image& a, const Image& b);

}
