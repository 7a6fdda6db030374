#pragma once

#include "panoflow/flow_field.hpp"
#include "panoflow/image.hpp"

#include <array>

namespace panoflow {

/// Point on the unit sphere. Longitude in [-180, 180), latitude in [-90, 90], degrees.
struct SphereDirection {
    double longitude = 0.0;
    double latitude = 0.0;
};

using Vec3 = std::array<double, 3>;

/// Right-handed frame: x toward (lon 0, lat 0), y toward (lon +90, lat 0), z up.
Vec3 to_vector(const SphereDirection& d);
SphereDirection to_direction(const Vec3& v);

/// Wraps a longitude into [-180, 180).
double wrap_longitude(double degrees);

/// Pixel (x, y) in index coordinates (center of pixel i at i) of a W x H
/// equirectangular image. Requires 0 <= x < W, 0 <= y < H and W == 2H.
SphereDirection pix_to_sphere(double x, double y, int width, int height);

/// Inverse of pix_to_sphere; x lands in [-0.5, W - 0.5).
std::array<double, 2> sphere_to_pix(const SphereDirection& d, int width, int height);

/// Extrinsic rotation applied yaw first, then pitch, then roll.
///
/// yaw rotates about z (longitude increases by yaw), pitch about x (the axis
/// through longitudes 0 and 180, so the lon +-90 meridians move purely in
/// latitude), roll about y. Each is a right-hand rotation by the given angle.
struct RotationSpec {
    double yaw = 0.0;
    double pitch = 0.0;
    double roll = 0.0;
};

/// Row-major 3x3 rotation matrix.
using Mat3 = std::array<std::array<double, 3>, 3>;

Mat3 rotation_matrix(const RotationSpec& rot);
Mat3 transpose(const Mat3& m);
Vec3 apply(const Mat3& m, const Vec3& v);

SphereDirection rotate(const SphereDirection& d, const RotationSpec& rot);
SphereDirection rotate_inverse(const SphereDirection& d, const RotationSpec& rot);

/// Shortest-path 360 flow: u > W/2 becomes u - W, u < -W/2 becomes u + W,
/// anything else (including u == +-W/2) is unchanged. Requires Classical input
/// and |u| <= W on valid pixels.
FlowField convert_to_360(const FlowField& flow);

/// The scalar rule of convert_to_360.
double wrap_horizontal_flow(double u, int width);

/// Analytic Wrapped360 flow of a camera rotation: each pixel moves to
/// sphere_to_pix(rotate(pix_to_sphere(p))).
FlowField rotation_flow_gt(const RotationSpec& rot, int width, int height);

/// out(p) = bilinear sample of image at sphere_to_pix(rotate_inverse(pix_to_sphere(p))),
/// wrapping horizontally and clamping at the poles.
Image rotate_equirect(const Image& image, const RotationSpec& rot);

}
