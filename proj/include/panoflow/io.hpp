#pragma once

#include "panoflow/flow_field.hpp"
#include "panoflow/image.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace panoflow {

/// Middlebury .flo: "PIEH" tag, little-endian int32 width and height, then
/// row-major interleaved float32 (u, v). Invalid pixels are written as the
/// conventional 1e10 sentinel. The representation tag is not stored; reads
/// always yield Classical flow.
inline constexpr float flo_unknown_value = 1e10f;
inline constexpr float flo_unknown_threshold = 1e9f;

FlowField read_flo(const std::filesystem::path& path);
void write_flo(const FlowField& flow, const std::filesystem::path& path);

std::vector<unsigned char> encode_flo(const FlowField& flow);
FlowField decode_flo(std::span<const unsigned char> bytes);

/// 8-bit PNG. Gray, gray+alpha, RGB, RGBA and palette inputs are accepted;
/// alpha is dropped. Samples are scaled to [0, 1].
Image read_png(const std::filesystem::path& path);

/// Writes 1- or 3-channel images as 8-bit PNG with round(clamp(v) * 255).
/// Encoder settings are fixed, so identical images give identical files.
void write_png(const Image& image, const std::filesystem::path& path);

/// Writes through a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::span<const unsigned char> bytes);
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path);

}
