#pragma once

#include "panoflow/image.hpp"
#include "panoflow/spherical.hpp"

#include <array>
#include <string_view>

namespace panoflow {

enum class CubeFace { Front, Right, Back, Left, Up, Down };

inline constexpr std::array<CubeFace, 6> all_cube_faces = {CubeFace::Front, CubeFace::Right, CubeFace::Back,
                                                           CubeFace::Left,  CubeFace::Up,    CubeFace::Down};

std::string_view to_string(CubeFace face) noexcept;

/// Six square 90x90 degree pinhole views of identical size and channel count.
///
/// Face axes in the sphere frame (x = lon 0, y = lon +90, z = up):
///   front +x, right +y, back -x, left -y, up +z, down -z.
/// Image columns run along `right_axis`, rows along `down_axis`:
///   side faces: right = the next face clockwise seen from above, down = -z
///   up:   right = +y, down = +x   (bottom edge meets the top edge of front)
///   down: right = +y, down = -x   (top edge meets the bottom edge of front)
struct CubeFaceSet {
    std::array<Image, 6> faces;

    Image& operator[](CubeFace f) noexcept { return faces[std::size_t(f)]; }
    const Image& operator[](CubeFace f) const noexcept { return faces[std::size_t(f)]; }

    int size() const noexcept { return faces[0].width(); }

    /// Throws ContractError unless all faces are square, equal-sized and have
    /// matching channel counts.
    void validate() const;
};

struct FaceBasis {
    Vec3 axis;
    Vec3 right;
    Vec3 down;
};

FaceBasis face_basis(CubeFace face);

/// Face hit by a direction: the axis with the largest |component|, sides
/// preferred over up/down and the lower-numbered side on exact ties.
CubeFace select_face(const Vec3& direction);

/// Direction through the center of face pixel (i, j).
Vec3 face_pixel_direction(CubeFace face, double i, double j, int size);

/// Stitches a cubemap into a W x W/2 panorama: every output pixel picks its
/// face by select_face, projects gnomonically and samples bilinearly with
/// edge clamping inside the face. Requires an even out_width.
Image cubemap_to_equirect(const CubeFaceSet& faces, int out_width);

/// The face set seen after yawing the rig by +90 degrees: each side face takes
/// the role of its clockwise neighbour and up/down are turned in-plane.
/// cubemap_to_equirect of the result is the original panorama rolled by W/4.
CubeFaceSet rotate_face_roles(const CubeFaceSet& faces);

}
