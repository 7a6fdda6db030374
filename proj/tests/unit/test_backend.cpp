#include "test_support.hpp"

#include "panoflow/backend.hpp"
#include "panoflow/error.hpp"
#include "panoflow/io.hpp"
#include "panoflow/synthetic.hpp"

#include <doctest.h>

#include <bit>
#include <fstream>
#include <limits>

using namespace panoflow;

namespace {

// 7x7 census over a plain grayscale image, row-major bit order, center skipped.
std::uint64_t oracle_census(const Image& g, int x, int y, bool circular)
{
    std::uint64_t code = 0;
    int bit = 0;
    for(int dy = -3; dy <= 3; ++dy)
        for(int dx = -3; dx <= 3; ++dx)
        {
            if(dx == 0 && dy == 0) continue;
            const int yy = std::clamp(y + dy, 0, g.height() - 1);
            const int xx = circular ? ((x + dx) % g.width() + g.width()) % g.width() : std::clamp(x + dx, 0, g.width() - 1);
            if(g.at(xx, yy) > g.at(x, y)) code |= std::uint64_t(1) << bit;
            ++bit;
        }
    return code;
}

// Exhaustive integer search at full resolution: window-mean Hamming cost over
// the in-image part of the window, targets inside the image.
FlowField brute_force_flow(const Image& a, const Image& b, int range, int agg)
{
    const Image ga = to_grayscale(a), gb = to_grayscale(b);
    const int w = a.width(), h = a.height();
    std::vector<std::uint64_t> ca(std::size_t(w * h)), cb(std::size_t(w * h));
    for(int y = 0; y < h; ++y)
        for(int x = 0; x < w; ++x)
        {
            ca[std::size_t(y * w + x)] = oracle_census(ga, x, y, false);
            cb[std::size_t(y * w + x)] = oracle_census(gb, x, y, false);
        }
    FlowField out(w, h);
    for(int y = 0; y < h; ++y)
        for(int x = 0; x < w; ++x)
        {
            double best = std::numeric_limits<double>::infinity();
            int bu = 0, bv = 0;
            for(int v = -range; v <= range; ++v)
                for(int u = -range; u <= range; ++u)
                {
                    if(x + u < 0 || x + u >= w || y + v < 0 || y + v >= h) continue;
                    long sum = 0, n = 0;
                    for(int oy = -agg; oy <= agg; ++oy)
                        for(int ox = -agg; ox <= agg; ++ox)
                        {
                            const int sx = x + ox, sy = y + oy;
                            if(sx < 0 || sx >= w || sy < 0 || sy >= h) continue;
                            const int tx = sx + u, ty = sy + v;
                            if(tx < 0 || tx >= w || ty < 0 || ty >= h) continue;
                            sum += std::popcount(ca[std::size_t(sy * w + sx)] ^ cb[std::size_t(ty * w + tx)]);
                            ++n;
                        }
                    const double cost = double(sum) / double(n);
                    const auto better = [&] {
                        if(cost != best) return cost < best;
                        if(std::abs(u) != std::abs(bu)) return std::abs(u) < std::abs(bu);
                        return std::abs(v) < std::abs(bv);
                    };
                    if(better())
                    {
                        best = cost;
                        bu = u;
                        bv = v;
                    }
                }
            out.set(x, y, float(bu), float(bv));
        }
    return out;
}

double interior_epe(const FlowField& a, const FlowField& b, int border)
{
    double sum = 0.0;
    long n = 0;
    for(int y = border; y < a.height() - border; ++y)
        for(int x = border; x < a.width() - border; ++x)
        {
            sum += std::hypot(a.u(x, y) - b.u(x, y), a.v(x, y) - b.v(x, y));
            ++n;
        }
    return sum / double(n);
}

Image textured(int w, std::uint64_t seed, double cell = 4.0)
{
    SyntheticScene scene;
    scene.seed = seed;
    scene.noise_cell = cell;
    return render_texture(scene, w);
}

}

TEST_SUITE("builtin encoder")
{
    TEST_CASE("constant image gives all-zero census codes")
    {
        const FeatureStack s = BuiltinBackend().encode(Image(64, 32, 3, 0.5f));
        CHECK(s.size() == 4);
        for(const auto& level : s)
            for(float v : level.values) CHECK(v == 0.0f);
    }

    TEST_CASE("level shapes and downsampling")
    {
        const FeatureStack s = BuiltinBackend().encode(Image(64, 32, 1, 0.0f));
        for(std::size_t l = 0; l < s.size(); ++l)
        {
            CHECK(s[l].channels == census_channels);
            CHECK(s[l].width == 64 >> l);
            CHECK(s[l].downsample == 1 << l);
        }
        CHECK_THROWS_AS(BuiltinBackend().encode(Image(72, 36, 1)), ContractError);
    }

    TEST_CASE("level 0 matches a direct census")
    {
        const Image img = testing::random_image(32, 16, 1, 11);
        for(bool circular : {false, true})
        {
            BuiltinParams p;
            p.circular = circular;
            const FeatureStack s = BuiltinBackend(p).encode(img);
            for(int y = 0; y < 16; ++y)
                for(int x = 0; x < 32; ++x) CHECK(census_code(s[0], y, x) == oracle_census(img, x, y, circular));
        }
    }

    TEST_CASE("circular encoding commutes with rolls; replicate padding only differs near the seam")
    {
        const Image img = textured(128, 3);
        BuiltinParams circ;
        circ.circular = true;
        const FeatureStack a = BuiltinBackend(circ).encode(roll_columns(img, 16));
        const FeatureStack b = BuiltinBackend(circ).encode(img);
        for(std::size_t l = 0; l < a.size(); ++l)
        {
            const int shift = 16 >> l;
            for(int y = 0; y < a[l].height; ++y)
                for(int x = 0; x < a[l].width; ++x)
                    CHECK(census_code(a[l], y, x) == census_code(b[l], y, ((x - shift) % b[l].width + b[l].width) % b[l].width));
        }

        const FeatureStack plain = BuiltinBackend().encode(img);
        int differing_columns = 0;
        for(int x = 0; x < 128; ++x)
        {
            bool differs = false;
            for(int y = 0; y < 64; ++y) differs |= census_code(plain[0], y, x) != census_code(b[0], y, x);
            if(differs)
            {
                ++differing_columns;
                CHECK((x < 3 || x >= 125));
            }
        }
        CHECK(differing_columns <= 6);
    }

    TEST_CASE("no context encoder")
    {
        CHECK_FALSE(BuiltinBackend().encode_context(Image(32, 16, 1)).has_value());
    }
}

TEST_SUITE("builtin matcher")
{
    TEST_CASE("identical frames give zero flow")
    {
        const Image img = textured(256, 5);
        const FlowEstimate e = BuiltinBackend().estimate({img, img, {}});
        for(int y = 0; y < 128; ++y)
            for(int x = 0; x < 256; ++x)
            {
                CHECK(e.flow.u(x, y) == 0.0f);
                CHECK(e.flow.v(x, y) == 0.0f);
            }
    }

    TEST_CASE("estimate equals decode of the encodings")
    {
        const Image a = textured(128, 6);
        const Image b = roll_columns(a, 3);
        const BuiltinBackend be;
        const FlowEstimate direct = be.estimate({a, b, {}});
        const FlowEstimate split = be.decode({be.encode(a), be.encode(b), be.encode_context(a)});
        CHECK(direct.flow == split.flow);
        CHECK(direct.confident == split.confident);
    }

    TEST_CASE("a column roll is recovered away from the seam")
    {
        const Image a = textured(256, 7);
        const Image b = roll_columns(a, 8);
        const FlowEstimate e = BuiltinBackend().estimate({a, b, {}});
        long hits = 0, total = 0;
        for(int y = 0; y < 128; ++y)
            for(int x = 8; x < 240; ++x)
            {
                ++total;
                hits += e.flow.u(x, y) == 8.0f && e.flow.v(x, y) == 0.0f;
            }
        CHECK(double(hits) / double(total) >= 0.99);
    }

    TEST_CASE("agrees with an exhaustive search on small motion")
    {
        const FlowField gt = sinusoidal_flow(128, 64, 2.5, 12);
        SyntheticScene scene;
        scene.seed = 13;
        const SyntheticPair pair = gen_warp_pair(scene, gt, 128);
        BuiltinParams p;
        p.levels = 2;
        const FlowEstimate e = BuiltinBackend(p).estimate({pair.first, pair.second, {}});
        const FlowField oracle = brute_force_flow(pair.first, pair.second, 4, p.aggregation_radius);
        CHECK(interior_epe(e.flow, oracle, 6) <= 0.5);
    }

    TEST_CASE("sinusoidal flow of amplitude 3")
    {
        const FlowField gt = sinusoidal_flow(256, 128, 3.0, 14);
        SyntheticScene scene;
        scene.seed = 15;
        const SyntheticPair pair = gen_warp_pair(scene, gt, 256);
        const FlowEstimate e = BuiltinBackend().estimate({pair.first, pair.second, {}});
        CHECK(interior_epe(e.flow, gt, 8) < 1.0);
    }

    TEST_CASE("horizontal cap")
    {
        const Image a = textured(256, 16);
        BuiltinParams p;
        p.max_horizontal_displacement = 5;
        const FlowEstimate e = BuiltinBackend(p).estimate({a, roll_columns(a, 12), {}});
        for(int y = 0; y < 128; ++y)
            for(int x = 0; x < 256; ++x) CHECK(std::abs(e.flow.u(x, y)) <= 5.0f);
    }

    TEST_CASE("contract errors")
    {
        const BuiltinBackend be;
        const FeatureStack a = be.encode(Image(64, 32, 1, 0.0f));
        const FeatureStack b = be.encode(Image(128, 64, 1, 0.0f));
        CHECK_THROWS_AS(be.decode({a, b, std::nullopt}), ContractError);
        CHECK_THROWS_AS(be.estimate({Image(64, 32, 1), Image(128, 64, 1), {}}), ContractError);
    }
}

TEST_SUITE("file backend")
{
    TEST_CASE("reads the stored flow bit-exactly")
    {
        testing::TempDir dir("fb");
        const FlowField f = testing::random_flow(16, 8, 30.0, 17);
        write_flo(f, dir / "pair.flo");
        const FileBackend be(dir.path());
        CHECK_FALSE(be.capabilities().has_encode_decode_split);
        const Image img(16, 8, 1);
        const FlowEstimate e = be.estimate({img, img, "pair", {}});
        CHECK(e.flow == f);
        CHECK(file_backend_estimate("pair", dir.path()) == f);
        CHECK(be.path_for("pair", true) == dir / "pair_swapped.flo");
        CHECK_THROWS_AS(be.encode(img), ContractError);
    }

    TEST_CASE("missing and corrupt files")
    {
        testing::TempDir dir("fb");
        CHECK_THROWS_AS(file_backend_estimate("absent", dir.path()), LookupError);
        std::ofstream(dir / "bad.flo", std::ios::binary) << "not a flow file at all";
        CHECK_THROWS_AS(file_backend_estimate("bad", dir.path()), FormatError);
    }
}
