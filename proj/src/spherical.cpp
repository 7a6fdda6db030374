#include "panoflow/spherical.hpp"

#include "panoflow/error.hpp"
#include "panoflow/parallel.hpp"
#include "panoflow/sampling.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace panoflow {

namespace {

constexpr double deg = std::numbers::pi / 180.0;

void require_panorama_dims(int width, int height, const char* what)
{
    if(width <= 0 || height <= 0 || width != 2 * height)
        throw ContractError(std::string(what) + ": expected W == 2H, got " + std::to_string(width) + "x"
                            + std::to_string(height));
}

}

Vec3 to_vector(const SphereDirection& d)
{
    const double lon = d.longitude * deg;
    const double lat = d.latitude * deg;
    const double c = std::cos(lat);
    return {c * std::cos(lon), c * std::sin(lon), std::sin(lat)};
}

SphereDirection to_direction(const Vec3& v)
{
    const double horizontal = std::hypot(v[0], v[1]);
    return {wrap_longitude(std::atan2(v[1], v[0]) / deg), std::atan2(v[2], horizontal) / deg};
}

double wrap_longitude(double degrees)
{
    double wrapped = std::fmod(degrees + 180.0, 360.0);
    if(wrapped < 0.0) wrapped += 360.0;
    wrapped -= 180.0;
    if(wrapped >= 180.0) wrapped -= 360.0;
    return wrapped;
}

SphereDirection pix_to_sphere(double x, double y, int width, int height)
{
    require_panorama_dims(width, height, "pix_to_sphere");
    if(!(x >= 0.0 && x < double(width) && y >= 0.0 && y < double(height)))
        throw ContractError("pix_to_sphere: pixel outside the image");
    return {(x + 0.5) / double(width) * 360.0 - 180.0, 90.0 - (y + 0.5) / double(height) * 180.0};
}

std::array<double, 2> sphere_to_pix(const SphereDirection& d, int width, int height)
{
    require_panorama_dims(width, height, "sphere_to_pix");
    const double lon = wrap_longitude(d.longitude);
    return {(lon + 180.0) / 360.0 * double(width) - 0.5, (90.0 - d.latitude) / 180.0 * double(height) - 0.5};
}

Mat3 rotation_matrix(const RotationSpec& rot)
{
    auto multiply = [](const Mat3& a, const Mat3& b) {
        Mat3 m{};
        for(int i = 0; i < 3; ++i)
            for(int j = 0; j < 3; ++j)
                for(int k = 0; k < 3; ++k) m[i][j] += a[i][k] * b[k][j];
        return m;
    };

    const double cy = std::cos(rot.yaw * deg), sy = std::sin(rot.yaw * deg);
    const double cp = std::cos(rot.pitch * deg), sp = std::sin(rot.pitch * deg);
    const double cr = std::cos(rot.roll * deg), sr = std::sin(rot.roll * deg);

    const Mat3 yaw = {{{cy, -sy, 0.0}, {sy, cy, 0.0}, {0.0, 0.0, 1.0}}};
    const Mat3 pitch = {{{1.0, 0.0, 0.0}, {0.0, cp, -sp}, {0.0, sp, cp}}};
    const Mat3 roll = {{{cr, 0.0, sr}, {0.0, 1.0, 0.0}, {-sr, 0.0, cr}}};
    return multiply(roll, multiply(pitch, yaw));
}

Mat3 transpose(const Mat3& m)
{
    Mat3 t{};
    for(int i = 0; i < 3; ++i)
        for(int j = 0; j < 3; ++j) t[i][j] = m[j][i];
    return t;
}

Vec3 apply(const Mat3& m, const Vec3& v)
{
    return {m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2]};
}

SphereDirection rotate(const SphereDirection& d, const RotationSpec& rot)
{
    return to_direction(panoflow::apply(rotation_matrix(rot), to_vector(d)));
}

SphereDirection rotate_inverse(const SphereDirection& d, const RotationSpec& rot)
{
    return to_direction(panoflow::apply(transpose(rotation_matrix(rot)), to_vector(d)));
}

double wrap_horizontal_flow(double u, int width)
{
    const double w = double(width);
    if(u > w / 2.0) return u - w;
    if(u < -w / 2.0) return u + w;
    return u;
}

FlowField convert_to_360(const FlowField& flow)
{
    require(flow.representation() == FlowRepresentation::Classical,
            "convert_to_360: input is already Wrapped360");

    FlowField out = flow;
    out.set_representation(FlowRepresentation::Wrapped360);
    const double w = double(flow.width());
    for(int y = 0; y < flow.height(); ++y)
        for(int x = 0; x < flow.width(); ++x)
        {
            if(!flow.valid(x, y)) continue;
            const double u = flow.u(x, y);
            if(!(std::abs(u) <= w))
                throw ContractError("convert_to_360: |u| exceeds the image width at (" + std::to_string(x) + ", "
                                    + std::to_string(y) + ")");
            out.u(x, y) = float(wrap_horizontal_flow(u, flow.width()));
        }
    return out;
}

FlowField rotation_flow_gt(const RotationSpec& rot, int width, int height)
{
    require_panorama_dims(width, height, "rotation_flow_gt");
    const Mat3 m = rotation_matrix(rot);

    FlowField flow(width, height, FlowRepresentation::Wrapped360);
    parallel_rows(height, [&](int y) {
        for(int x = 0; x < width; ++x)
        {
            const auto d = pix_to_sphere(x, y, width, height);
            const auto target = sphere_to_pix(to_direction(panoflow::apply(m, to_vector(d))), width, height);
            const double u = wrap_horizontal_flow(target[0] - double(x), width);
            flow.set(x, y, float(u), float(target[1] - double(y)));
        }
    });
    return flow;
}

Image rotate_equirect(const Image& image, const RotationSpec& rot)
{
    require_equirect(image, "rotate_equirect");
    const int w = image.width();
    const int h = image.height();
    const Mat3 inverse = transpose(rotation_matrix(rot));

    Image out(w, h, image.channels());
    parallel_rows(h, [&](int y) {
        for(int x = 0; x < w; ++x)
        {
            const auto d = pix_to_sphere(x, y, w, h);
            const auto src = sphere_to_pix(to_direction(panoflow::apply(inverse, to_vector(d))), w, h);
            auto taps = bilinear_taps(src[0], src[1], w, h, EdgeMode::Wrap, EdgeMode::Clamp);
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

}
