#include "panoflow/synthetic.hpp"

#include "panoflow/error.hpp"
#include "panoflow/io.hpp"
#include "panoflow/parallel.hpp"
#include "panoflow/random.hpp"
#include "panoflow/sampling.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <set>

namespace panoflow {

namespace fs = std::filesystem;

const char* to_string(TextureKind kind) noexcept
{
    switch(kind)
    {
        case TextureKind::ProceduralNoise: return "procedural-noise";
        case TextureKind::Checker: return "checker";
        case TextureKind::AnalyticGradient: return "analytic-gradient";
        case TextureKind::ImageFile: return "image-file";
    }
    return "?";
}

TextureKind parse_texture_kind(const std::string& name)
{
    for(auto k : {TextureKind::ProceduralNoise, TextureKind::Checker, TextureKind::AnalyticGradient, TextureKind::ImageFile})
        if(name == to_string(k)) return k;
    throw UsageError("unknown texture '" + name + "'");
}

const char* to_string(Condition condition) noexcept
{
    switch(condition)
    {
        case Condition::Sunny: return "sunny";
        case Condition::Cloud: return "cloud";
        case Condition::Fog: return "fog";
        case Condition::Rain: return "rain";
    }
    return "?";
}

Condition parse_condition(const std::string& name)
{
    for(auto c : {Condition::Sunny, Condition::Cloud, Condition::Fog, Condition::Rain})
        if(name == to_string(c)) return c;
    throw UsageError("unknown condition '" + name + "'");
}

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

double smoothstep(double t)
{
    return t * t * (3.0 - 2.0 * t);
}

// Value noise on a lattice with `cells_x` cells around the panorama, so the
// left and right borders join.
double value_noise(std::uint64_t seed, double fx, double fy, int cells_x)
{
    const double ix = std::floor(fx), iy = std::floor(fy);
    const double tx = smoothstep(fx - ix), ty = smoothstep(fy - iy);
    const auto node = [&](double i, double j) {
        const auto wrapped = ((std::int64_t(i) % cells_x) + cells_x) % cells_x;
        return unit_double(lattice_hash(seed, wrapped, std::int64_t(j)));
    };
    const double a = node(ix, iy), b = node(ix + 1, iy), c = node(ix, iy + 1), d = node(ix + 1, iy + 1);
    return (a * (1 - tx) + b * tx) * (1 - ty) + (c * (1 - tx) + d * tx) * ty;
}

Image render_noise(const SyntheticScene& scene, int w, int h)
{
    require(scene.noise_cell > 0.0, "noise_cell must be positive");
    std::vector<int> octaves;
    for(int cells = 8; double(w) / double(cells) >= scene.noise_cell; cells *= 2) octaves.push_back(cells);
    if(octaves.empty()) octaves.push_back(std::max(1, w / 2));

    Image out(w, h, 3);
    parallel_rows(h, [&](int y) {
        for(int x = 0; x < w; ++x)
        {
            std::array<double, 4> acc{};
            double total = 0.0;
            double amp = 1.0;
            for(std::size_t o = 0; o < octaves.size(); ++o)
            {
                const int cells = octaves[o];
                const double fx = (double(x) + 0.5) / double(w) * double(cells);
                const double fy = (double(y) + 0.5) / double(w) * double(cells);
                for(std::size_t c = 0; c < 4; ++c)
                    acc[c] += amp * value_noise(scene.seed * 8 + c + 0x100 * o, fx, fy, cells);
                total += amp;
                amp *= 0.75;
            }
            const double lum = 0.5 + 2.2 * (acc[0] / total - 0.5);
            for(int c = 0; c < 3; ++c)
            {
                const double chroma = 0.6 * (acc[std::size_t(c) + 1] / total - 0.5);
                out.at(x, y, c) = float(std::clamp(lum + chroma, 0.0, 1.0));
            }
        }
    });
    return out;
}

Image render_checker(const SyntheticScene& scene, int w, int h)
{
    require(scene.checker_cells > 0, "checker_cells must be positive");
    Image out(w, h, 3);
    for(int y = 0; y < h; ++y)
        for(int x = 0; x < w; ++x)
        {
            const int cx = int(std::floor((double(x) + 0.5) / double(w) * scene.checker_cells));
            const int cy = int(std::floor((double(y) + 0.5) / double(h) * scene.checker_cells / 2.0));
            const bool light = ((cx + cy) % 2) == 0;
            const float base = light ? 0.85f : 0.15f;
            out.at(x, y, 0) = base;
            out.at(x, y, 1) = light ? 0.8f : 0.25f;
            out.at(x, y, 2) = light ? 0.7f : 0.35f;
        }
    return out;
}

Image render_gradient(int w, int h)
{
    Image out(w, h, 3);
    parallel_rows(h, [&](int y) {
        for(int x = 0; x < w; ++x)
        {
            const Vec3 d = to_vector(pix_to_sphere(x, y, w, h));
            for(int c = 0; c < 3; ++c) out.at(x, y, c) = float((d[std::size_t(c)] + 1.0) / 2.0);
        }
    });
    return out;
}

Image render_file(const SyntheticScene& scene, int w, int h)
{
    const Image src = read_png(scene.image_path);
    Image out(w, h, 3);
    const double sx = double(src.width()) / double(w);
    const double sy = double(src.height()) / double(h);
    parallel_rows(h, [&](int y) {
        for(int x = 0; x < w; ++x)
        {
            const auto taps = bilinear_taps((double(x) + 0.5) * sx - 0.5, (double(y) + 0.5) * sy - 0.5, src.width(),
                                            src.height(), EdgeMode::Wrap, EdgeMode::Clamp);
            for(int c = 0; c < 3; ++c)
            {
                const int sc = src.channels() == 3 ? c : 0;
                out.at(x, y, c) = float(taps->blend([&](int ix, int iy) { return double(src.at(ix, iy, sc)); }));
            }
        }
    });
    return out;
}

}

Image render_texture(const SyntheticScene& scene, int width)
{
    require(width >= 2 && width % 2 == 0, "render_texture: width must be even and >= 2");
    const int h = width / 2;
    switch(scene.texture)
    {
        case TextureKind::ProceduralNoise: return render_noise(scene, width, h);
        case TextureKind::Checker: return render_checker(scene, width, h);
        case TextureKind::AnalyticGradient: return render_gradient(width, h);
        case TextureKind::ImageFile: return render_file(scene, width, h);
    }
    throw ContractError("render_texture: unknown texture");
}

Image apply_condition(const Image& image, Condition condition, std::uint64_t seed)
{
    Image out = image;
    auto& data = out.data();
    switch(condition)
    {
        case Condition::Sunny: break;
        case Condition::Cloud:
            for(auto& s : data) s = float(0.08 + 0.72 * std::pow(double(s), 1.15));
            break;
        case Condition::Fog:
            for(auto& s : data) s = float(0.55 * double(s) + 0.38);
            break;
        case Condition::Rain:
        {
            for(auto& s : data) s = float(0.85 * double(s));
            const int w = out.width(), h = out.height();
            Rng rng(seed ^ 0x5261696e5261696eull);
            const int streaks = std::max(1, w * h / 400);
            for(int k = 0; k < streaks; ++k)
            {
                const double x0 = rng.uniform(0.0, double(w));
                const int y0 = rng.below(h);
                const int length = 6 + rng.below(9);
                for(int t = 0; t < length && y0 + t < h; ++t)
                {
                    const int x = ((int(std::floor(x0 + 0.3 * t)) % w) + w) % w;
                    for(int c = 0; c < out.channels(); ++c)
                    {
                        float& s = out.at(x, y0 + t, c);
                        s = float(0.65 * double(s) + 0.35 * 0.9);
                    }
                }
            }
            break;
        }
    }
    for(auto& s : data) s = std::clamp(s, 0.0f, 1.0f);
    return out;
}

namespace {

std::uint64_t condition_seed(const SyntheticScene& scene)
{
    return scene.seed * 0x9e3779b97f4a7c15ull + 17;
}

}

SyntheticPair gen_rotation_pair(const SyntheticScene& scene, const RotationSpec& rot, int width)
{
    const Image base = render_texture(scene, width);
    const Image rotated = rotate_equirect(base, rot);
    return {apply_condition(base, scene.condition, condition_seed(scene)),
            apply_condition(rotated, scene.condition, condition_seed(scene)), rotation_flow_gt(rot, width, width / 2)};
}

namespace {

struct FlowSample {
    double u;
    double v;
};

FlowSample sample_flow(const FlowField& flow, double x, double y)
{
    const auto taps = bilinear_taps(x, y, flow.width(), flow.height(), EdgeMode::Wrap, EdgeMode::Clamp);
    return {taps->blend([&](int ix, int iy) { return double(flow.u(ix, iy)); }),
            taps->blend([&](int ix, int iy) { return double(flow.v(ix, iy)); })};
}

// The flow is sampled bilinearly, so p -> p + flow(p) is bilinear on each cell
// and orientation-preserving iff the Jacobian is positive at all four corners.
void check_fold_over(const FlowField& flow)
{
    const int w = flow.width(), h = flow.height();
    const auto jacobian_ok = [](double ux, double vx, double uy, double vy) {
        return (1.0 + ux) * (1.0 + vy) - uy * vx > 0.0;
    };
    for(int y = 0; y < h; ++y)
        for(int x = 0; x < w; ++x)
        {
            const int xr = (x + 1) % w;
            const int yd = std::min(y + 1, h - 1);
            // Edge vectors of the cell, minus the identity part.
            const double ux0 = double(flow.u(xr, y)) - flow.u(x, y), vx0 = double(flow.v(xr, y)) - flow.v(x, y);
            const double ux1 = double(flow.u(xr, yd)) - flow.u(x, yd), vx1 = double(flow.v(xr, yd)) - flow.v(x, yd);
            bool ok = jacobian_ok(ux0, vx0, 0.0, 0.0);
            if(yd != y)
            {
                const double uy0 = double(flow.u(x, yd)) - flow.u(x, y), vy0 = double(flow.v(x, yd)) - flow.v(x, y);
                const double uy1 = double(flow.u(xr, yd)) - flow.u(xr, y), vy1 = double(flow.v(xr, yd)) - flow.v(xr, y);
                ok = jacobian_ok(ux0, vx0, uy0, vy0) && jacobian_ok(ux0, vx0, uy1, vy1) && jacobian_ok(ux1, vx1, uy0, vy0)
                     && jacobian_ok(ux1, vx1, uy1, vy1);
            }
            if(!ok)
                throw ContractError("gen_warp_pair: flow folds over at (" + std::to_string(x) + ", " + std::to_string(y) + ")");
        }
}

}

SyntheticPair gen_warp_pair(const SyntheticScene& scene, const FlowField& flow, int width)
{
    require(flow.width() == width && flow.height() == width / 2, "gen_warp_pair: flow size must be W x W/2");
    require(flow.representation() == FlowRepresentation::Classical, "gen_warp_pair: flow must be Classical");
    for(std::size_t i = 0; i < flow.pixel_count(); ++i)
        require(flow.valid_mask()[i] && std::isfinite(flow.u_data()[i]) && std::isfinite(flow.v_data()[i]),
                "gen_warp_pair: flow must be valid and finite everywhere");
    check_fold_over(flow);

    const Image base = render_texture(scene, width);
    const int w = width, h = width / 2;
    Image second(w, h, base.channels());
    std::atomic<bool> diverged{false};

    // I2(q) = I1(p) with p + flow(p) = q, found by fixed-point iteration.
    parallel_rows(h, [&](int y) {
        for(int x = 0; x < w; ++x)
        {
            double px = x - double(flow.u(x, y));
            double py = y - double(flow.v(x, y));
            bool converged = false;
            for(int it = 0; it < 200; ++it)
            {
                const auto f = sample_flow(flow, px, py);
                const double nx = x - f.u, ny = y - f.v;
                const double step = std::hypot(nx - px, ny - py);
                px = nx;
                py = ny;
                if(step < 1e-9)
                {
                    converged = true;
                    break;
                }
            }
            if(!converged) diverged = true;
            if(py < -0.5 || py > double(h) - 0.5)
            {
                second.set_valid(x, y, false);
                continue;
            }
            const auto taps = bilinear_taps(px, py, w, h, EdgeMode::Wrap, EdgeMode::Clamp);
            for(int c = 0; c < base.channels(); ++c)
                second.at(x, y, c) = float(taps->blend([&](int ix, int iy) { return double(base.at(ix, iy, c)); }));
        }
    });
    if(diverged) throw ContractError("gen_warp_pair: flow inverse did not converge (flow too steep)");

    return {apply_condition(base, scene.condition, condition_seed(scene)),
            apply_condition(second, scene.condition, condition_seed(scene)), flow};
}

FlowField sinusoidal_flow(int width, int height, double amplitude, std::uint64_t seed)
{
    require(width > 0 && height > 0, "sinusoidal_flow: empty size");
    Rng rng(seed);
    std::array<double, 8> phase{};
    for(auto& p : phase) p = rng.uniform(0.0, two_pi);

    FlowField flow(width, height);
    for(int y = 0; y < height; ++y)
        for(int x = 0; x < width; ++x)
        {
            const double ax = two_pi * (double(x) + 0.5) / double(width);
            const double ay = two_pi * (double(y) + 0.5) / double(height);
            const double u = 0.6 * std::sin(2 * ax + phase[0]) * std::cos(ay + phase[1])
                             + 0.4 * std::sin(3 * ax + 2 * ay + phase[2]);
            const double v = 0.6 * std::cos(ax + phase[3]) * std::sin(2 * ay + phase[4])
                             + 0.4 * std::sin(2 * ax - ay + phase[5]);
            flow.set(x, y, float(amplitude * u), float(amplitude * v));
            flow.set_valid(x, y, true);
        }
    return flow;
}

// ---------------------------------------------------------------------------
// datasets

namespace {

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where)
{
    if(!j.is_object()) throw ContractError(where + " must be a JSON object");
    for(const auto& [key, value] : j.items())
        if(!allowed.count(key)) throw ContractError("unknown key '" + key + "' in " + where);
}

template<typename T>
T get(const nlohmann::json& j, const char* key, const std::string& where)
{
    try
    {
        return j.at(key).get<T>();
    }
    catch(const nlohmann::json::exception& e)
    {
        throw ContractError(where + ": bad or missing '" + key + "': " + e.what());
    }
}

void read_texture_settings(const nlohmann::json& j, SyntheticScene& scene, const fs::path& base_dir, const std::string& where)
{
    if(j.contains("texture")) scene.texture = parse_texture_kind(get<std::string>(j, "texture", where));
    if(j.contains("noise_cell")) scene.noise_cell = get<double>(j, "noise_cell", where);
    if(j.contains("checker_cells")) scene.checker_cells = get<int>(j, "checker_cells", where);
    if(j.contains("image"))
    {
        fs::path p = get<std::string>(j, "image", where);
        scene.image_path = p.is_absolute() ? p : base_dir / p;
    }
}

bool safe_component(const std::string& id)
{
    return !id.empty() && id != "." && id != ".." && id.find('/') == std::string::npos && id.find('\\') == std::string::npos
           && id.front() != '.';
}

}

DatasetManifest parse_manifest(const nlohmann::json& j, const fs::path& base_dir)
{
    reject_unknown(j, {"root", "width", "texture", "noise_cell", "checker_cells", "image", "conditions", "sequences"},
                   "manifest");
    DatasetManifest m;
    if(j.contains("width")) m.width = get<int>(j, "width", "manifest");
    require(m.width >= 2 && m.width % 2 == 0, "manifest: width must be even and >= 2");

    SyntheticScene defaults;
    read_texture_settings(j, defaults, base_dir, "manifest");

    for(const auto& name : get<std::vector<std::string>>(j, "conditions", "manifest"))
    {
        const auto c = parse_condition(name);
        if(std::find(m.conditions.begin(), m.conditions.end(), c) != m.conditions.end())
            throw ContractError("manifest: duplicate condition '" + name + "'");
        m.conditions.push_back(c);
    }
    require(!m.conditions.empty(), "manifest: no conditions");

    require(j.contains("sequences"), "manifest: missing 'sequences'");
    const auto& seqs = j.at("sequences");
    require(seqs.is_array() && !seqs.empty(), "manifest: 'sequences' must be a non-empty array");
    std::set<std::string> ids;
    for(std::size_t k = 0; k < seqs.size(); ++k)
    {
        const auto& s = seqs[k];
        const std::string where = "manifest sequence " + std::to_string(k);
        reject_unknown(s, {"id", "seed", "rotation", "texture", "noise_cell", "checker_cells", "image"}, where);
        DatasetSequence seq;
        seq.id = get<std::string>(s, "id", where);
        require(safe_component(seq.id), where + ": id '" + seq.id + "' is not a plain directory name");
        require(ids.insert(seq.id).second, where + ": duplicate id '" + seq.id + "'");
        seq.seed = get<std::uint64_t>(s, "seed", where);
        if(s.contains("rotation"))
        {
            const auto& r = s.at("rotation");
            reject_unknown(r, {"yaw", "pitch", "roll"}, where + " rotation");
            if(r.contains("yaw")) seq.rotation.yaw = get<double>(r, "yaw", where);
            if(r.contains("pitch")) seq.rotation.pitch = get<double>(r, "pitch", where);
            if(r.contains("roll")) seq.rotation.roll = get<double>(r, "roll", where);
        }
        seq.scene = defaults;
        read_texture_settings(s, seq.scene, base_dir, where);
        seq.scene.seed = seq.seed;
        m.sequences.push_back(std::move(seq));
    }
    return m;
}

std::vector<fs::path> gen_dataset(const DatasetManifest& manifest, const fs::path& root)
{
    std::vector<fs::path> written;
    for(Condition condition : manifest.conditions)
    {
        const fs::path cond_dir = root / to_string(condition);
        std::error_code ec;
        fs::create_directories(cond_dir, ec);
        if(ec) throw IoError("cannot create " + cond_dir.string() + ": " + ec.message());

        for(const auto& seq : manifest.sequences)
        {
            SyntheticScene scene = seq.scene;
            scene.condition = condition;
            const auto pair = gen_rotation_pair(scene, seq.rotation, manifest.width);

            const fs::path final_dir = cond_dir / seq.id;
            const fs::path tmp_dir = cond_dir / ("." + seq.id + ".tmp");
            fs::remove_all(tmp_dir, ec);
            fs::create_directories(tmp_dir, ec);
            if(ec) throw IoError("cannot create " + tmp_dir.string() + ": " + ec.message());

            write_png(pair.first, tmp_dir / "frame_0001.png");
            write_png(pair.second, tmp_dir / "frame_0002.png");
            write_flo(pair.gt, tmp_dir / "flow_0001.flo");

            nlohmann::json meta = {
                {"generator_version", generator_version},
                {"seed", seq.seed},
                {"rotation", {{"yaw", seq.rotation.yaw}, {"pitch", seq.rotation.pitch}, {"roll", seq.rotation.roll}}},
                {"condition", to_string(condition)},
                {"texture", to_string(scene.texture)},
                {"width", manifest.width},
                {"height", manifest.width / 2},
            };
            write_text_atomic(tmp_dir / "meta.json", meta.dump(2) + "\n");

            fs::remove_all(final_dir, ec);
            if(ec) throw IoError("cannot replace " + final_dir.string() + ": " + ec.message());
            fs::rename(tmp_dir, final_dir, ec);
            if(ec) throw IoError("cannot move " + tmp_dir.string() + " into place: " + ec.message());
            written.push_back(final_dir);
        }
    }
    return written;
}

}
