#pragma once

#include "panoflow/flow_field.hpp"
#include "panoflow/image.hpp"
#include "panoflow/spherical.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace panoflow {

inline constexpr const char* generator_version = "panoflow-synth/1";

enum class TextureKind { ProceduralNoise, Checker, AnalyticGradient, ImageFile };
enum class Condition { Sunny, Cloud, Fog, Rain };

/// "procedural-noise", "checker", "analytic-gradient", "image-file".
const char* to_string(TextureKind kind) noexcept;
TextureKind parse_texture_kind(const std::string& name);
/// "sunny", "cloud", "fog", "rain".
const char* to_string(Condition condition) noexcept;
Condition parse_condition(const std::string& name);

struct SyntheticScene {
    TextureKind texture = TextureKind::ProceduralNoise;
    std::uint64_t seed = 0;
    Condition condition = Condition::Sunny;
    /// Smallest noise lattice cell, in pixels. Larger values give smoother textures.
    double noise_cell = 4.0;
    /// Checker squares per 360 degrees of longitude.
    int checker_cells = 16;
    /// Source for TextureKind::ImageFile; resampled to the requested size.
    std::filesystem::path image_path;
};

/// Renders the scene's texture as a W x W/2 RGB panorama without any
/// condition applied. Every texture is continuous across the left/right seam.
Image render_texture(const SyntheticScene& scene, int width);

/// Photometric perturbation of a condition; identity for Sunny. Rain draws
/// its streak layout from `seed`, so both frames of a pair get the same streaks.
Image apply_condition(const Image& image, Condition condition, std::uint64_t seed);

struct SyntheticPair {
    Image first;
    Image second;
    FlowField gt;
};

/// I1 from the scene, I2 = rotate_equirect(I1, rot), gt = rotation_flow_gt
/// (Wrapped360). The condition is applied to both frames after warping.
SyntheticPair gen_rotation_pair(const SyntheticScene& scene, const RotationSpec& rot, int width);

/// Builds I2 with I2(p + flow(p)) = I1(p) (horizontal wrap) by backward
/// warping I1 through the numerically inverted flow; gt = flow.
/// A flow whose map p -> p + flow(p) folds over (nonpositive Jacobian) or whose
/// inverse does not converge is a ContractError.
SyntheticPair gen_warp_pair(const SyntheticScene& scene, const FlowField& flow, int width);

/// Smooth horizontally periodic Classical flow: a sum of two sinusoids per
/// component with the given peak amplitude, phases drawn from `seed`.
FlowField sinusoidal_flow(int width, int height, double amplitude, std::uint64_t seed);

/// Dataset manifest:
///   { "root": "out",            (optional; overridden by the caller's root)
///     "width": 256,
///     "texture": "procedural-noise", "noise_cell": 4, "checker_cells": 16, "image": "tex.png",
///     "conditions": ["sunny", "fog"],
///     "sequences": [ { "id": "seq_000", "seed": 7,
///                      "rotation": { "yaw": 10, "pitch": 0, "roll": 0 },
///                      "texture": "checker" } ] }
/// Per-sequence keys override the top-level texture settings. Unknown keys are
/// a ContractError.
struct DatasetSequence {
    std::string id;
    std::uint64_t seed = 0;
    RotationSpec rotation;
    SyntheticScene scene;
};

struct DatasetManifest {
    int width = 256;
    std::vector<Condition> conditions;
    std::vector<DatasetSequence> sequences;
};

DatasetManifest parse_manifest(const nlohmann::json& j, const std::filesystem::path& base_dir = {});

/// Writes <root>/<condition>/<seq_id>/{frame_0001.png, frame_0002.png,
/// flow_0001.flo, meta.json}. Each sequence directory is built under a
/// temporary name and renamed into place. Returns the sequence directories.
std::vector<std::filesystem::path> gen_dataset(const DatasetManifest& manifest, const std::filesystem::path& root);

}
