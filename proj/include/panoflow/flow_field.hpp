#pragma once

#include "panoflow/image.hpp"

#include <cstddef>
#include <vector>

namespace panoflow {

/// Classical flow is an unconstrained in-image displacement. Wrapped360 flow is
/// the shortest displacement along the great circle, so |u| <= W/2.
enum class FlowRepresentation { Classical, Wrapped360 };

const char* to_string(FlowRepresentation rep) noexcept;

/// Dense per-pixel displacement (u, v) in pixels, mapping pixel (x, y) of the
/// first frame to (x + u, y + v) in the second.
class FlowField {
public:
    FlowField() = default;
    FlowField(int width, int height, FlowRepresentation rep = FlowRepresentation::Classical);

    int width() const noexcept { return m_width; }
    int height() const noexcept { return m_height; }
    std::size_t pixel_count() const noexcept { return m_u.size(); }

    FlowRepresentation representation() const noexcept { return m_rep; }
    void set_representation(FlowRepresentation rep) noexcept { m_rep = rep; }

    float& u(int x, int y) noexcept { return m_u[index(x, y)]; }
    float u(int x, int y) const noexcept { return m_u[index(x, y)]; }
    float& v(int x, int y) noexcept { return m_v[index(x, y)]; }
    float v(int x, int y) const noexcept { return m_v[index(x, y)]; }

    bool valid(int x, int y) const noexcept { return m_valid[index(x, y)] != 0; }
    void set_valid(int x, int y, bool valid) noexcept { m_valid[index(x, y)] = valid ? 1 : 0; }

    void set(int x, int y, float u, float v) noexcept
    {
        auto i = index(x, y);
        m_u[i] = u;
        m_v[i] = v;
    }

    std::vector<float>& u_data() noexcept { return m_u; }
    const std::vector<float>& u_data() const noexcept { return m_u; }
    std::vector<float>& v_data() noexcept { return m_v; }
    const std::vector<float>& v_data() const noexcept { return m_v; }
    Mask& valid_mask() noexcept { return m_valid; }
    const Mask& valid_mask() const noexcept { return m_valid; }

    bool same_size(const FlowField& other) const noexcept
    {
        return m_width == other.m_width && m_height == other.m_height;
    }

    /// Bitwise equality of u, v, validity and representation.
    bool operator==(const FlowField& other) const = default;

    static FlowField constant(int width, int height, float u, float v,
                              FlowRepresentation rep = FlowRepresentation::Classical);

private:
    std::size_t index(int x, int y) const noexcept { return std::size_t(y) * std::size_t(m_width) + std::size_t(x); }

    int m_width = 0;
    int m_height = 0;
    FlowRepresentation m_rep = FlowRepresentation::Classical;
    std::vector<float> m_u;
    std::vector<float> m_v;
    Mask m_valid;
};

/// out(x, y) = in((x - shift) mod W, y); displacements are carried unchanged.
FlowField roll_columns(const FlowField& flow, int shift);

}
