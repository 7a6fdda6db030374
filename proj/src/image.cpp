#include "panoflow/image.hpp"

#include "panoflow/error.hpp"
#include "panoflow/flow_field.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace panoflow {

Image::Image(int width, int height, int channels, float fill)
    : m_width(width), m_height(height), m_channels(channels)
{
    require(width >= 0 && height >= 0, "image dimensions must be nonnegative");
    require(channels == 1 || channels == 3, "image must have 1 or 3 channels");
    m_data.assign(pixel_count() * std::size_t(channels), fill);
    m_valid.assign(pixel_count(), 1);
}

void require_equirect(const Image& image, const char* what)
{
    if(image.empty() || image.width() != 2 * image.height())
        throw ContractError(std::string(what) + ": expected a 2:1 equirectangular image, got "
                            + std::to_string(image.width()) + "x" + std::to_string(image.height()));
}

Image to_grayscale(const Image& image)
{
    if(image.channels() == 1) return image;

    Image gray(image.width(), image.height(), 1);
    for(int y = 0; y < image.height(); ++y)
        for(int x = 0; x < image.width(); ++x)
        {
            auto p = image.pixel(x, y);
            gray.at(x, y) = 0.299f * p[0] + 0.587f * p[1] + 0.114f * p[2];
        }
    gray.valid_mask() = image.valid_mask();
    return gray;
}

namespace {

int wrap_index(int i, int n)
{
    int r = i % n;
    return r < 0 ? r + n : r;
}

}

Image roll_columns(const Image& image, int shift)
{
    Image out(image.width(), image.height(), image.channels());
    const int w = image.width();
    for(int y = 0; y < image.height(); ++y)
        for(int x = 0; x < w; ++x)
        {
            const int src = wrap_index(x - shift, w);
            std::copy_n(image.pixel(src, y).begin(), image.channels(), out.pixel(x, y).begin());
            out.set_valid(x, y, image.valid(src, y));
        }
    return out;
}

Image swap_halves(const Image& image)
{
    require(image.width() % 2 == 0, "swap_halves requires an even width");
    return roll_columns(image, image.width() / 2);
}

double max_abs_difference(const Image& a, const Image& b)
{
    require(a.same_shape(b), "max_abs_difference: shape mismatch");
    double worst = 0.0;
    for(int y = 0; y < a.height(); ++y)
        for(int x = 0; x < a.width(); ++x)
        {
            if(!a.valid(x, y) || !b.valid(x, y)) continue;
            for(int c = 0; c < a.channels(); ++c)
                worst = std::max(worst, double(std::abs(a.at(x, y, c) - b.at(x, y, c))));
        }
    return worst;
}

// FlowField

const char* to_string(FlowRepresentation rep) noexcept
{
    return rep == FlowRepresentation::Classical ? "classical" : "wrapped360";
}

FlowField::FlowField(int width, int height, FlowRepresentation rep)
    : m_width(width), m_height(height), m_rep(rep)
{
    require(width >= 0 && height >= 0, "flow dimensions must be nonnegative");
    const auto n = std::size_t(width) * std::size_t(height);
    m_u.assign(n, 0.0f);
    m_v.assign(n, 0.0f);
    m_valid.assign(n, 1);
}

FlowField FlowField::constant(int width, int height, float u, float v, FlowRepresentation rep)
{
    FlowField flow(width, height, rep);
    std::fill(flow.m_u.begin(), flow.m_u.end(), u);
    std::fill(flow.m_v.begin(), flow.m_v.end(), v);
    return flow;
}

FlowField roll_columns(const FlowField& flow, int shift)
{
    FlowField out(flow.width(), flow.height(), flow.representation());
    const int w = flow.width();
    for(int y = 0; y < flow.height(); ++y)
        for(int x = 0; x < w; ++x)
        {
            const int src = wrap_index(x - shift, w);
            out.set(x, y, flow.u(src, y), flow.v(src, y));
            out.set_valid(x, y, flow.valid(src, y));
        }
    return out;
}

}
