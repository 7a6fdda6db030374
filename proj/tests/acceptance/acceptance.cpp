// Acceptance checks. Prints one PASS/FAIL line per criterion and exits nonzero
// if any criterion fails or exceeds its time budget.

#include "test_support.hpp"

#include "panoflow/cfe.hpp"
#include "panoflow/cubemap.hpp"
#include "panoflow/distortion.hpp"
#include "panoflow/error.hpp"
#include "panoflow/io.hpp"
#include "panoflow/metrics.hpp"
#include "panoflow/spherical.hpp"
#include "panoflow/synthetic.hpp"
#include "panoflow/warp.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace panoflow;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

BuiltinParams panorama_params(int width)
{
    BuiltinParams p;
    p.levels = 4;
    p.radius = 4;
    p.coarse_radius = 32;
    p.max_horizontal_displacement = width / 2;
    p.circular = true;
    return p;
}

double mean_abs_valid(const Image& a, const Image& b)
{
    double sum = 0.0;
    long n = 0;
    for(int y = 0; y < a.height(); ++y)
        for(int x = 0; x < a.width(); ++x)
        {
            if(!a.valid(x, y) || !b.valid(x, y)) continue;
            for(int c = 0; c < a.channels(); ++c) sum += std::abs(a.at(x, y, c) - b.at(x, y, c));
            n += a.channels();
        }
    return n ? sum / double(n) : 1.0;
}

// 1. 360 conversion on random samples from its domain |u| <= W.
Outcome conversion_suite()
{
    std::mt19937_64 rng(1);
    long failures = 0, samples = 0;
    while(samples < 100000)
    {
        const int w = 2 * (1 + int(rng() % 2048));
        FlowField f(w, 1);
        for(int x = 0; x < w; ++x)
            f.set(x, 0, std::uniform_real_distribution<float>(float(-w), float(w))(rng), float(x));
        const FlowField once = convert_to_360(f);
        FlowField again(w, 1);
        again.u_data() = once.u_data();
        again.v_data() = once.v_data();
        const FlowField twice = convert_to_360(again);
        for(int x = 0; x < w; ++x)
        {
            const double k = (double(once.u(x, 0)) - f.u(x, 0)) / w;
            const bool ok = std::abs(once.u(x, 0)) <= w / 2.0 && std::abs(k - std::round(k)) < 1e-6
                            && twice.u(x, 0) == once.u(x, 0) && once.v(x, 0) == f.v(x, 0);
            failures += !ok;
        }
        samples += w;
    }
    FlowField outside(8, 1);
    outside.set(0, 0, 9.0f, 0.0f);
    bool rejected = false;
    try
    {
        convert_to_360(outside);
    }
    catch(const ContractError&)
    {
        rejected = true;
    }
    return {failures == 0 && rejected, fmt("%.0f samples, %.0f failures", double(samples), double(failures))
                                           + (rejected ? ", |u| > W rejected" : ", |u| > W NOT rejected")};
}

// 2. Identity model and zero flow.
Outcome identity_and_zero()
{
    const FlowField f = testing::random_flow(512, 256, 20.0, 2);
    const bool identity = distort_flow(f, DistortionModel(centered_params(512, 256, {}), 512, 256)) == f;
    const FlowField z = distort_flow(FlowField(512, 256), DistortionModel(centered_params(512, 256), 512, 256));
    long nonzero = 0, valid = 0;
    for(int y = 0; y < 256; ++y)
        for(int x = 0; x < 512; ++x)
            if(z.valid(x, y))
            {
                ++valid;
                nonzero += z.u(x, y) != 0.0f || z.v(x, y) != 0.0f;
            }
    return {identity && nonzero == 0 && valid > 0,
            std::string("identity ") + (identity ? "bit-identical" : "differs") + ", zero flow: "
                + std::to_string(nonzero) + " nonzero of " + std::to_string(valid) + " valid"};
}

// 3. Distorted frames stay consistent with the distorted flow.
Outcome photometric_consistency()
{
    double worst = 0.0;
    const DistortionGrid grid(DistortionModel(centered_params(512, 256), 512, 256));
    for(std::uint64_t i = 0; i < 10; ++i)
    {
        SyntheticScene scene;
        scene.seed = 100 + i;
        scene.noise_cell = 16.0;
        const double amplitude = 1.0 + 0.4 * double(i); // 1 .. 4.6 px
        const SyntheticPair pair = gen_warp_pair(scene, sinusoidal_flow(512, 256, amplitude, 200 + i), 512);
        const Image d1 = distort_image(pair.first, grid);
        const Image d2 = distort_image(pair.second, grid);
        const Image recon = backward_warp(d2, distort_flow(pair.gt, grid), false);
        worst = std::max(worst, mean_abs_valid(recon, d1));
    }
    return {worst < 3.0 / 255.0, fmt("worst mean error %.3f/255 over 10 pairs (limit 3/255)", worst * 255.0)};
}

// 4. Inverse map fidelity.
Outcome inverse_fidelity()
{
    const DistortionModel m(centered_params(1024, 512), 1024, 512);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> ux(0.0, 1023.0), uy(0.0, 511.0);
    double worst = 0.0;
    for(int i = 0; i < 10000; ++i)
    {
        const Point2 q{ux(rng), uy(rng)};
        const Point2 r = m.forward(m.inverse(q));
        worst = std::max(worst, std::hypot(r.x - q.x, r.y - q.y));
    }
    return {worst < 1e-6, fmt("max |F(F'(q)) - q| = %.3g px over 1e4 points", worst)};
}

struct OraclePair {
    double yaw;
    SyntheticPair pair;
};

std::vector<OraclePair> oracle_pairs()
{
    std::vector<OraclePair> pairs;
    for(double yaw : {170.0, 350.0})
    {
        SyntheticScene scene;
        scene.seed = 300 + std::uint64_t(yaw);
        pairs.push_back({yaw, gen_rotation_pair(scene, {yaw, 0.0, 0.0}, 512)});
    }
    return pairs;
}

// 5. Default beats Naive on seam-crossing yaw.
Outcome cfe_oracle(const std::vector<OraclePair>& pairs)
{
    const BuiltinBackend be(panorama_params(512));
    bool ok = true;
    std::string detail;
    for(const auto& p : pairs)
    {
        const double naive = epe(cyclic_estimate(be, p.pair.first, p.pair.second, CfeMode::Naive), p.pair.gt).epe_mean;
        const double def = epe(cyclic_estimate(be, p.pair.first, p.pair.second, CfeMode::Default), p.pair.gt).epe_mean;
        ok = ok && def < 2.0 && def < naive;
        detail += fmt("yaw %.0f: default %.3f naive %.3f; ", p.yaw, def, naive);
    }
    return {ok, detail.substr(0, detail.size() - 2)};
}

// 6. Default and DoubleEstimation agree bit for bit.
Outcome default_equals_double()
{
    const BuiltinBackend be(panorama_params(256));
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> yaw(0.0, 360.0), tilt(-10.0, 10.0);
    int equal = 0;
    for(int i = 0; i < 10; ++i)
    {
        SyntheticScene scene;
        scene.seed = 600 + std::uint64_t(i);
        scene.texture = i % 3 == 2 ? TextureKind::Checker : TextureKind::ProceduralNoise;
        const SyntheticPair pair = gen_rotation_pair(scene, {yaw(rng), tilt(rng), tilt(rng)}, 256);
        equal += cyclic_estimate(be, pair.first, pair.second, CfeMode::Default)
                 == cyclic_estimate(be, pair.first, pair.second, CfeMode::DoubleEstimation);
    }
    return {equal == 10, std::to_string(equal) + "/10 pairs bit-identical"};
}

// 7. Half same padding is worse than Default.
Outcome half_same_degrades(const std::vector<OraclePair>& pairs)
{
    const BuiltinBackend be(panorama_params(512));
    bool ok = true;
    std::string detail;
    for(const auto& p : pairs)
    {
        const double half = epe(cyclic_estimate(be, p.pair.first, p.pair.second, CfeMode::HalfSamePadding), p.pair.gt).epe_mean;
        const double def = epe(cyclic_estimate(be, p.pair.first, p.pair.second, CfeMode::Default), p.pair.gt).epe_mean;
        ok = ok && half > def;
        detail += fmt("yaw %.0f: half-same %.3f default %.3f; ", p.yaw, half, def);
    }
    return {ok, detail.substr(0, detail.size() - 2)};
}

// 8. Runtime of Default relative to Naive.
Outcome runtime_ratio()
{
    SyntheticScene scene;
    scene.seed = 800;
    const SyntheticPair pair = gen_rotation_pair(scene, {30.0, 0.0, 0.0}, 1024);
    const BuiltinBackend be;
    const auto time_mode = [&](CfeMode mode) {
        const auto t0 = Clock::now();
        const FlowField f = cyclic_estimate(be, pair.first, pair.second, mode);
        const double s = seconds_since(t0);
        if(f.width() != 1024) std::abort();
        return s;
    };
    time_mode(CfeMode::Naive);
    time_mode(CfeMode::Default);
    std::vector<double> naive, def;
    for(int i = 0; i < 3; ++i)
    {
        naive.push_back(time_mode(CfeMode::Naive));
        def.push_back(time_mode(CfeMode::Default));
    }
    std::sort(naive.begin(), naive.end());
    std::sort(def.begin(), def.end());
    const double ratio = def[1] / naive[1];
    return {ratio <= 2.0, fmt("median default %.3f s / naive %.3f s = %.2fx (limit 2.0x)", def[1], naive[1], ratio)};
}

// 9. Module EPE against direct summation.
Outcome epe_oracle()
{
    double worst = 0.0;
    for(std::uint64_t i = 0; i < 100; ++i)
    {
        FlowField pred = testing::random_flow(8, 8, 10.0, 900 + i);
        const FlowField gt = testing::random_flow(8, 8, 10.0, 1900 + i);
        if(i % 4 == 0) pred.set_valid(int(i % 8), 3, false);
        const double module = epe(pred, gt).epe_mean;
        const double oracle = testing::brute_force_epe(pred, gt);
        worst = std::max(worst, std::abs(module - oracle) / oracle);
    }
    return {worst <= 1e-6, fmt("max relative difference %.3g over 100 pairs", worst)};
}

// 10. Cubemap projection properties.
Outcome projection_suite()
{
    CubeFaceSet constant;
    for(CubeFace f : all_cube_faces) constant[f] = Image(64, 64, 3, 0.25f);
    const Image flat = cubemap_to_equirect(constant, 512);
    const bool constancy = std::all_of(flat.data().begin(), flat.data().end(), [](float v) { return v == 0.25f; });

    CubeFaceSet random;
    for(CubeFace f : all_cube_faces) random[f] = testing::random_image(48, 48, 3, 1000 + std::uint64_t(f));
    const bool equivariant = cubemap_to_equirect(rotate_face_roles(random), 256).data()
                             == roll_columns(cubemap_to_equirect(random, 256), 64).data();

    // Analytic texture: the color is a smooth function of the view direction.
    const int size = 128, w = 512, h = 256;
    CubeFaceSet analytic;
    for(CubeFace f : all_cube_faces)
    {
        Image img(size, size, 3);
        for(int j = 0; j < size; ++j)
            for(int i = 0; i < size; ++i)
            {
                const auto c = testing::direction_color(face_pixel_direction(f, i, j, size));
                for(int k = 0; k < 3; ++k) img.at(i, j, k) = c[std::size_t(k)];
            }
        analytic[f] = img;
    }
    const Image pano = cubemap_to_equirect(analytic, w);
    double worst = 0.0;
    for(int y = 0; y < h; ++y)
        for(int x = 0; x < w; ++x)
        {
            const auto c = testing::direction_color(to_vector(pix_to_sphere(x, y, w, h)));
            for(int k = 0; k < 3; ++k) worst = std::max(worst, double(std::abs(pano.at(x, y, k) - c[std::size_t(k)])));
        }
    const bool seams = worst < 2.0 / 255.0;
    return {constancy && equivariant && seams,
            std::string("constancy ") + (constancy ? "exact" : "FAILED") + ", W/4 roll " + (equivariant ? "exact" : "FAILED")
                + fmt(", seam max error %.3f/255", worst * 255.0)};
}

// 11. synth -> estimate -> evaluate through the command line.
Outcome cli_pipeline()
{
    testing::TempDir dir("acceptance");
    std::ofstream(dir / "manifest.json") << R"({
        "width": 256,
        "conditions": ["sunny", "cloud", "fog", "rain"],
        "sequences": [
            {"id": "seq_000", "seed": 11, "rotation": {"yaw": 6}},
            {"id": "seq_001", "seed": 12, "rotation": {"yaw": 355, "pitch": 2}}
        ]})";
    const auto synth = testing::run_cli({"synth", (dir / "manifest.json").string(), "--root", (dir / "data").string()});
    if(synth.code != 0) return {false, "synth exited " + std::to_string(synth.code) + ": " + synth.err};
    const auto est = testing::run_cli({"estimate", "--dataset", (dir / "data").string(), "--out-dir",
                                       (dir / "pred").string(), "--cfe", "default"});
    if(est.code != 0) return {false, "estimate exited " + std::to_string(est.code) + ": " + est.err};
    const auto ev = testing::run_cli({"evaluate", (dir / "pred").string(), (dir / "data").string(), "--per-condition",
                                      "--out", (dir / "report.json").string()});
    if(ev.code != 0) return {false, "evaluate exited " + std::to_string(ev.code) + ": " + ev.err};
    std::ifstream in(dir / "report.json");
    const auto report = nlohmann::json::parse(in);
    bool rows = report["conditions"].size() == 4;
    for(const char* c : {"sunny", "cloud", "fog", "rain"}) rows = rows && ev.out.find(c) != std::string::npos;
    const auto self = testing::run_cli({"--json", "evaluate", (dir / "data").string(), (dir / "data").string()});
    if(self.code != 0) return {false, "gt-vs-gt evaluate exited " + std::to_string(self.code)};
    const double self_epe = nlohmann::json::parse(self.out.substr(self.out.find('{')))["all"]["epe"].get<double>();
    return {rows && self_epe == 0.0,
            fmt("All EPE %.3f over 4 conditions, gt-vs-gt EPE %.1f", report["all"]["epe"].get<double>(), self_epe)
                + (rows ? "" : ", per-condition rows missing")};
}

}

int main()
{
    struct Criterion {
        int id;
        const char* name;
        double budget;
        std::function<Outcome()> run;
    };
    std::vector<OraclePair> pairs;
    const std::vector<Criterion> criteria = {
        {1, "360 conversion suite", 1.0, conversion_suite},
        {2, "distortion identity and zero flow", 1.0, identity_and_zero},
        {3, "distortion photometric consistency", 30.0, photometric_consistency},
        {4, "inverse map fidelity", 5.0, inverse_fidelity},
        {5, "CFE Default vs Naive on yaw oracle", 120.0, [&] {
             pairs = oracle_pairs();
             return cfe_oracle(pairs);
         }},
        {6, "Default equals DoubleEstimation", 120.0, default_equals_double},
        {7, "HalfSamePadding worse than Default", 120.0, [&] { return half_same_degrades(pairs); }},
        {8, "runtime Default <= 2.0x Naive", 300.0, runtime_ratio},
        {9, "EPE brute-force equivalence", 1.0, epe_oracle},
        {10, "projection suite", 30.0, projection_suite},
        {11, "end-to-end CLI pipeline", 300.0, cli_pipeline},
    };

    int failed = 0;
    for(const auto& c : criteria)
    {
        const auto t0 = Clock::now();
        Outcome o;
        try
        {
            o = c.run();
        }
        catch(const std::exception& e)
        {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double s = seconds_since(t0);
        const bool in_time = s < c.budget;
        const bool pass = o.pass && in_time;
        failed += !pass;
        std::cout << (pass ? "PASS" : "FAIL") << " [" << c.id << "] " << c.name << ": " << o.detail
                  << fmt(" (%.2f s, budget %.0f s)", s, c.budget) << (in_time ? "" : " over budget") << std::endl;
    }
    std::cout << (criteria.size() - std::size_t(failed)) << "/" << criteria.size() << " criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
