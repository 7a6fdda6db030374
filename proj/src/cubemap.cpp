#include "panoflow/cubemap.hpp"

#include "panoflow/error.hpp"
#include "panoflow/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace panoflow {

namespace {

constexpr double deg = std::numbers::pi / 180.0;

/// A signed unit axis: component index and sign.
struct SignedAxis {
    int index;
    double sign;

    double dot(const Vec3& v) const { return sign * v[std::size_t(index)]; }
};

struct FaceAxes {
    SignedAxis axis;
    SignedAxis right;
    SignedAxis down;
};

constexpr std::array<FaceAxes, 6> face_axes = {{
    {{0, 1.0}, {1, 1.0}, {2, -1.0}},   // front
    {{1, 1.0}, {0, -1.0}, {2, -1.0}},  // right
    {{0, -1.0}, {1, -1.0}, {2, -1.0}}, // back
    {{1, -1.0}, {0, 1.0}, {2, -1.0}},  // left
    {{2, 1.0}, {1, 1.0}, {0, 1.0}},    // up
    {{2, -1.0}, {1, 1.0}, {0, -1.0}},  // down
}};

Vec3 axis_vector(const SignedAxis& a)
{
    Vec3 v{0.0, 0.0, 0.0};
    v[std::size_t(a.index)] = a.sign;
    return v;
}

struct MirrorTaps {
    int i0;
    int i1;
    double w0;
    double w1;
};

// Bilinear taps for a face coordinate given as an offset from the face center
// in pixels. Negative offsets reuse the arithmetic of the mirrored positive
// offset, so flipping an image and negating the offset is bit-exact.
MirrorTaps mirror_taps(double offset, int size)
{
    const double center = double(size - 1) / 2.0;
    const double pos = center + std::abs(offset);
    int i0 = int(std::floor(pos));
    double f = pos - double(i0);
    if(i0 >= size - 1)
    {
        i0 = size - 1;
        f = 0.0;
    }
    int i1 = std::min(i0 + 1, size - 1);
    if(offset < 0.0)
    {
        i0 = size - 1 - i0;
        i1 = size - 1 - i1;
    }
    return {i0, i1, 1.0 - f, f};
}

void sample_face(const Image& face, double s, double t, std::span<float> out)
{
    const int n = face.width();
    const auto tx = mirror_taps(s * double(n) / 2.0, n);
    const auto ty = mirror_taps(t * double(n) / 2.0, n);

    for(int c = 0; c < face.channels(); ++c)
    {
        std::array<double, 4> terms = {
            double(face.at(tx.i0, ty.i0, c)) * (tx.w0 * ty.w0),
            double(face.at(tx.i1, ty.i0, c)) * (tx.w1 * ty.w0),
            double(face.at(tx.i0, ty.i1, c)) * (tx.w0 * ty.w1),
            double(face.at(tx.i1, ty.i1, c)) * (tx.w1 * ty.w1),
        };
        // Summation order must not depend on which axis is which.
        std::sort(terms.begin(), terms.end());
        out[std::size_t(c)] = float(((terms[0] + terms[1]) + terms[2]) + terms[3]);
    }
}

void project_and_sample(const CubeFaceSet& faces, CubeFace face, const Vec3& d, std::span<float> out)
{
    const auto& axes = face_axes[std::size_t(face)];
    const double along = axes.axis.dot(d);
    sample_face(faces[face], axes.right.dot(d) / along, axes.down.dot(d) / along, out);
}

// Direction of an output pixel expressed in the frame of its quarter of the
// panorama, where longitude runs over [0, 90).
Vec3 quarter_local_vector(int x_local, int y, int width, int height)
{
    const double lon = (double(x_local) + 0.5) / double(width) * 360.0 * deg;
    const double lat = (90.0 - (double(y) + 0.5) / double(height) * 180.0) * deg;
    const double c = std::cos(lat);
    return {c * std::cos(lon), c * std::sin(lon), std::sin(lat)};
}

// Rotates a quarter-local vector by (quarter * 90 - 180) degrees about z; a
// signed permutation, hence exact.
Vec3 quarter_to_world(const Vec3& v, int quarter)
{
    switch(quarter)
    {
        case 0: return {-v[0], -v[1], v[2]};
        case 1: return {v[1], -v[0], v[2]};
        case 2: return v;
        default: return {-v[1], v[0], v[2]};
    }
}

CubeFace side_face(int index)
{
    return static_cast<CubeFace>(((index % 4) + 4) % 4);
}

}

std::string_view to_string(CubeFace face) noexcept
{
    switch(face)
    {
        case CubeFace::Front: return "front";
        case CubeFace::Right: return "right";
        case CubeFace::Back: return "back";
        case CubeFace::Left: return "left";
        case CubeFace::Up: return "up";
        case CubeFace::Down: return "down";
    }
    return "?";
}

void CubeFaceSet::validate() const
{
    const int n = faces[0].width();
    const int channels = faces[0].channels();
    require(n > 0, "cube faces must not be empty");
    for(auto f : all_cube_faces)
    {
        const auto& img = (*this)[f];
        if(img.width() != n || img.height() != n)
            throw ContractError("cube face '" + std::string(to_string(f)) + "' is not " + std::to_string(n) + "x"
                                + std::to_string(n));
        if(img.channels() != channels)
            throw ContractError("cube face '" + std::string(to_string(f)) + "' has a different channel count");
    }
}

FaceBasis face_basis(CubeFace face)
{
    const auto& a = face_axes[std::size_t(face)];
    return {axis_vector(a.axis), axis_vector(a.right), axis_vector(a.down)};
}

CubeFace select_face(const Vec3& d)
{
    const double ax = std::abs(d[0]), ay = std::abs(d[1]), az = std::abs(d[2]);
    if(az > ax && az > ay) return d[2] > 0.0 ? CubeFace::Up : CubeFace::Down;
    if(ax >= ay) return d[0] >= 0.0 ? CubeFace::Front : CubeFace::Back;
    return d[1] >= 0.0 ? CubeFace::Right : CubeFace::Left;
}

Vec3 face_pixel_direction(CubeFace face, double i, double j, int size)
{
    const auto b = face_basis(face);
    const double s = (2.0 * (i + 0.5) / double(size)) - 1.0;
    const double t = (2.0 * (j + 0.5) / double(size)) - 1.0;
    Vec3 d;
    for(std::size_t k = 0; k < 3; ++k) d[k] = b.axis[k] + s * b.right[k] + t * b.down[k];
    const double norm = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
    for(auto& c : d) c /= norm;
    return d;
}

Image cubemap_to_equirect(const CubeFaceSet& faces, int out_width)
{
    faces.validate();
    require(out_width > 0 && out_width % 2 == 0, "cubemap_to_equirect: output width must be positive and even");

    const int w = out_width;
    const int h = out_width / 2;
    Image out(w, h, faces[CubeFace::Front].channels());

    if(w % 4 != 0)
    {
        parallel_rows(h, [&](int y) {
            for(int x = 0; x < w; ++x)
            {
                const Vec3 d = to_vector(pix_to_sphere(x, y, w, h));
                project_and_sample(faces, select_face(d), d, out.pixel(x, y));
            }
        });
        return out;
    }

    // Faces are chosen in the quarter-local frame, where the two candidate
    // sides are local +x and local +y, then mapped to the world face. This
    // keeps the stitch exactly equivariant to quarter-turn yaws.
    const int quarter_width = w / 4;
    parallel_rows(h, [&](int y) {
        for(int x = 0; x < w; ++x)
        {
            const int quarter = x / quarter_width;
            const Vec3 local = quarter_local_vector(x % quarter_width, y, w, h);
            const double az = std::abs(local[2]);

            CubeFace face;
            if(az > local[0] && az > local[1])
                face = local[2] > 0.0 ? CubeFace::Up : CubeFace::Down;
            else if(local[0] >= local[1])
                face = side_face(quarter + 2);
            else
                face = side_face(quarter + 3);

            project_and_sample(faces, face, quarter_to_world(local, quarter), out.pixel(x, y));
        }
    });
    return out;
}

namespace {

// out(row j', col i') for the up face turned so that it matches a +90 degree yaw.
Image turn_counterclockwise(const Image& in)
{
    const int n = in.width();
    Image out(n, n, in.channels());
    for(int j = 0; j < n; ++j)
        for(int i = 0; i < n; ++i)
            std::copy_n(in.pixel(i, j).begin(), in.channels(), out.pixel(j, n - 1 - i).begin());
    return out;
}

Image turn_clockwise(const Image& in)
{
    const int n = in.width();
    Image out(n, n, in.channels());
    for(int j = 0; j < n; ++j)
        for(int i = 0; i < n; ++i)
            std::copy_n(in.pixel(i, j).begin(), in.channels(), out.pixel(n - 1 - j, i).begin());
    return out;
}

}

CubeFaceSet rotate_face_roles(const CubeFaceSet& faces)
{
    faces.validate();
    CubeFaceSet out;
    out[CubeFace::Right] = faces[CubeFace::Front];
    out[CubeFace::Back] = faces[CubeFace::Right];
    out[CubeFace::Left] = faces[CubeFace::Back];
    out[CubeFace::Front] = faces[CubeFace::Left];
    out[CubeFace::Up] = turn_counterclockwise(faces[CubeFace::Up]);
    out[CubeFace::Down] = turn_clockwise(faces[CubeFace::Down]);
    return out;
}

}
