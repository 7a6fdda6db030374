#include "panoflow/io.hpp"

#include "panoflow/error.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <random>
#include <system_error>

namespace panoflow {

namespace fs = std::filesystem;

namespace {

constexpr std::array<unsigned char, 4> flo_magic = {'P', 'I', 'E', 'H'};

void put_u32(std::vector<unsigned char>& out, std::uint32_t value)
{
    for(int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((value >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(std::span<const unsigned char> bytes, std::size_t offset)
{
    std::uint32_t value = 0;
    for(int i = 0; i < 4; ++i) value |= std::uint32_t(bytes[offset + std::size_t(i)]) << (8 * i);
    return value;
}

}

std::vector<unsigned char> encode_flo(const FlowField& flow)
{
    require(flow.width() > 0 && flow.height() > 0, "write_flo: empty flow field");

    std::vector<unsigned char> out;
    out.reserve(12 + flow.pixel_count() * 8);
    for(char c : flo_magic) out.push_back(static_cast<unsigned char>(c));
    put_u32(out, std::uint32_t(flow.width()));
    put_u32(out, std::uint32_t(flow.height()));

    for(int y = 0; y < flow.height(); ++y)
        for(int x = 0; x < flow.width(); ++x)
        {
            float u = flo_unknown_value;
            float v = flo_unknown_value;
            if(flow.valid(x, y))
            {
                u = flow.u(x, y);
                v = flow.v(x, y);
                if(!std::isfinite(u) || !std::isfinite(v))
                    throw ContractError("write_flo: non-finite flow at a valid pixel");
            }
            put_u32(out, std::bit_cast<std::uint32_t>(u));
            put_u32(out, std::bit_cast<std::uint32_t>(v));
        }
    return out;
}

FlowField decode_flo(std::span<const unsigned char> bytes)
{
    if(bytes.size() >= 4 && !std::equal(flo_magic.begin(), flo_magic.end(), bytes.begin()))
        throw FormatError("read_flo: bad magic tag (expected PIEH)");
    if(bytes.size() < 12)
        throw IoError("read_flo: truncated header");

    const auto width = std::int32_t(get_u32(bytes, 4));
    const auto height = std::int32_t(get_u32(bytes, 8));
    if(width <= 0 || height <= 0)
        throw FormatError("read_flo: nonpositive dimensions " + std::to_string(width) + "x" + std::to_string(height));

    const auto expected = 12 + std::uint64_t(width) * std::uint64_t(height) * 8;
    if(bytes.size() < expected)
        throw IoError("read_flo: truncated payload");

    FlowField flow(width, height, FlowRepresentation::Classical);
    std::size_t offset = 12;
    for(int y = 0; y < height; ++y)
        for(int x = 0; x < width; ++x)
        {
            const float u = std::bit_cast<float>(get_u32(bytes, offset));
            const float v = std::bit_cast<float>(get_u32(bytes, offset + 4));
            offset += 8;

            const bool known = std::isfinite(u) && std::isfinite(v)
                               && std::abs(u) <= flo_unknown_threshold && std::abs(v) <= flo_unknown_threshold;
            if(known)
                flow.set(x, y, u, v);
            else
                flow.set_valid(x, y, false);
        }
    return flow;
}

FlowField read_flo(const fs::path& path)
{
    return decode_flo(read_file_bytes(path));
}

void write_flo(const FlowField& flow, const fs::path& path)
{
    write_file_atomic(path, encode_flo(flow));
}

std::vector<unsigned char> read_file_bytes(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if(!in) throw IoError("cannot open " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if(in.bad()) throw IoError("read failed: " + path.string());
    return bytes;
}

void write_file_atomic(const fs::path& path, std::span<const unsigned char> bytes)
{
    thread_local std::mt19937_64 rng(std::random_device{}());
    auto tmp = path;
    tmp += ".tmp" + std::to_string(rng() & 0xffffffu);

    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if(!out) throw IoError("cannot write " + path.string());
        out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
        out.flush();
        if(!out)
        {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw IoError("write failed: " + path.string());
        }
    }

    std::error_code ec;
    fs::rename(tmp, path, ec);
    if(ec)
    {
        fs::remove(tmp, ec);
        throw IoError("cannot move into place: " + path.string());
    }
}

void write_text_atomic(const fs::path& path, const std::string& text)
{
    write_file_atomic(path, std::span(reinterpret_cast<const unsigned char*>(text.data()), text.size()));
}

// PNG through the libpng "simplified" API.

Image read_png(const fs::path& path)
{
    const auto bytes = read_file_bytes(path);

    png_image png;
    std::memset(&png, 0, sizeof(png));
    png.version = PNG_IMAGE_VERSION;
    if(!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size()))
        throw FormatError("read_png: " + path.string() + ": " + png.message);

    const bool color = (png.format & PNG_FORMAT_FLAG_COLOR) != 0;
    png.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    const int channels = color ? 3 : 1;

    std::vector<png_byte> buffer(PNG_IMAGE_SIZE(png));
    if(!png_image_finish_read(&png, nullptr, buffer.data(), 0, nullptr))
    {
        std::string message = png.message;
        png_image_free(&png);
        throw FormatError("read_png: " + path.string() + ": " + message);
    }

    Image image(int(png.width), int(png.height), channels);
    auto& data = image.data();
    for(std::size_t i = 0; i < data.size(); ++i) data[i] = float(buffer[i]) / 255.0f;
    return image;
}

void write_png(const Image& image, const fs::path& path)
{
    require(!image.empty(), "write_png: empty image");

    std::vector<png_byte> buffer(image.data().size());
    std::transform(image.data().begin(), image.data().end(), buffer.begin(), [](float v) {
        const float clamped = std::clamp(std::isfinite(v) ? v : 0.0f, 0.0f, 1.0f);
        return png_byte(std::lround(clamped * 255.0f));
    });

    png_image png;
    std::memset(&png, 0, sizeof(png));
    png.version = PNG_IMAGE_VERSION;
    png.width = png_uint_32(image.width());
    png.height = png_uint_32(image.height());
    png.format = image.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;

    png_alloc_size_t size = 0;
    if(!png_image_write_get_memory_size(png, size, 0, buffer.data(), 0, nullptr))
        throw IoError("write_png: " + std::string(png.message));

    std::vector<unsigned char> encoded(size);
    if(!png_image_write_to_memory(&png, encoded.data(), &size, 0, buffer.data(), 0, nullptr))
        throw IoError("write_png: " + std::string(png.message));
    encoded.resize(size);

    write_file_atomic(path, encoded);
}

}
