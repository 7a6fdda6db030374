#include "test_support.hpp"

#include "panoflow/cfe.hpp"
#include "panoflow/error.hpp"
#include "panoflow/io.hpp"
#include "panoflow/metrics.hpp"
#include "panoflow/synthetic.hpp"

#include <doctest.h>

using namespace panoflow;

namespace {

FeatureMap toy_map(std::initializer_list<float> row)
{
    FeatureMap m(1, 1, int(row.size()), 1);
    std::copy(row.begin(), row.end(), m.values.begin());
    return m;
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

FlowField flow_of(std::initializer_list<std::pair<float, float>> vectors)
{
    FlowField f(64, 1); // wide enough that the 360 wrap leaves these vectors alone
    int x = 0;
    for(auto [u, v] : vectors) f.set(x++, 0, u, v);
    return f;
}

}

TEST_SUITE("feature regrouping")
{
    TEST_CASE("width-2 toy")
    {
        const FeatureStack first{toy_map({1.0f, 2.0f})};
        const FeatureStack second{toy_map({3.0f, 4.0f})};
        const FeatureStack context{toy_map({5.0f, 6.0f})};
        const RegroupedPairs r = regroup_features(first, second, context);
        CHECK(r.original.source[0].values == std::vector<float>{1.0f, 2.0f});
        CHECK(r.original.target[0].values == std::vector<float>{3.0f, 4.0f});
        CHECK(r.original.context->at(0).values == std::vector<float>{5.0f, 6.0f});
        CHECK(r.swapped.source[0].values == std::vector<float>{2.0f, 1.0f});
        CHECK(r.swapped.target[0].values == std::vector<float>{4.0f, 3.0f});
        CHECK(r.swapped.context->at(0).values == std::vector<float>{6.0f, 5.0f});
    }

    TEST_CASE("original pair equals the inputs; swap is an involution")
    {
        const BuiltinBackend be;
        const Image a = testing::random_image(64, 32, 1, 1), b = testing::random_image(64, 32, 1, 2);
        const FeatureStack fa = be.encode(a), fb = be.encode(b);
        const RegroupedPairs r = regroup_features(fa, fb, std::nullopt);
        CHECK(r.original.source == fa);
        CHECK(r.original.target == fb);
        CHECK_FALSE(r.original.context.has_value());
        CHECK(swap_halves(r.swapped.source) == fa);
        // Census is local, so the swapped encoding of a circular encoder equals
        // the encoding of the swapped image.
        BuiltinParams p;
        p.circular = true;
        const BuiltinBackend circ(p);
        CHECK(swap_halves(circ.encode(a)) == circ.encode(swap_halves(a)));
    }

    TEST_CASE("odd widths and mismatched shapes")
    {
        CHECK_THROWS_AS(regroup_features({toy_map({1, 2, 3})}, {toy_map({1, 2, 3})}, std::nullopt), ContractError);
        CHECK_THROWS_AS(regroup_features({toy_map({1, 2})}, {toy_map({1, 2, 3, 4})}, std::nullopt), ContractError);
    }
}

TEST_SUITE("reindex and select")
{
    TEST_CASE("reindex moves columns by W/2 and is an involution")
    {
        const FlowField f = testing::random_flow(8, 2, 3.0, 4);
        const FlowField r = reindex_swapped(f);
        for(int y = 0; y < 2; ++y)
            for(int x = 0; x < 8; ++x)
            {
                CHECK(r.u((x + 4) % 8, y) == f.u(x, y));
                CHECK(r.v((x + 4) % 8, y) == f.v(x, y));
            }
        CHECK(reindex_swapped(r) == f);
        const Mask m{1, 0, 0, 0, 0, 0, 0, 0};
        CHECK(reindex_swapped(m, 8, 1) == Mask{0, 0, 0, 0, 1, 0, 0, 0});
    }

    TEST_CASE("smaller norm wins, ties go to the primary, result is wrapped")
    {
        const FlowField primary = flow_of({{3, 0}, {-1, 2}, {6, 0}});
        const FlowField cyclic = flow_of({{-1, 0}, {1, -2}, {-5, 1}});
        const FlowField s = select_min(primary, cyclic);
        CHECK(s.representation() == FlowRepresentation::Wrapped360);
        CHECK(s.u(0, 0) == -1.0f);
        CHECK(s.u(1, 0) == -1.0f);
        CHECK(s.v(1, 0) == 2.0f);
        CHECK(s.u(2, 0) == -5.0f);
        CHECK(s.v(2, 0) == 1.0f);
    }

    TEST_CASE("selection never increases the magnitude")
    {
        const FlowField a = testing::random_flow(16, 8, 8.0, 5), b = testing::random_flow(16, 8, 8.0, 6);
        const FlowField s = select_min(a, b);
        for(int y = 0; y < 8; ++y)
            for(int x = 0; x < 16; ++x)
            {
                const double n = std::hypot(s.u(x, y), s.v(x, y));
                CHECK(n <= std::hypot(a.u(x, y), a.v(x, y)) + 1e-6);
                CHECK(n <= std::hypot(b.u(x, y), b.v(x, y)) + 1e-6);
            }
    }

    TEST_CASE("confidence and validity gate the choice")
    {
        FlowField primary = flow_of({{1, 0}, {1, 0}, {1, 0}, {1, 0}});
        FlowField cyclic = flow_of({{5, 0}, {5, 0}, {0, 0}, {0, 0}});
        Mask pc(64, 1), cc(64, 1);
        pc[0] = 0;
        pc[3] = 0;
        cc[2] = 0;
        cc[3] = 0;
        primary.set_valid(2, 0, false);
        cyclic.set_valid(3, 0, false);
        const FlowField s = select_min(primary, cyclic, &pc, &cc);
        CHECK(s.u(0, 0) == 5.0f); // only the cyclic one is confident
        CHECK(s.u(1, 0) == 1.0f); // both confident, smaller norm
        CHECK(s.u(2, 0) == 0.0f); // primary invalid
        CHECK(s.u(3, 0) == 1.0f); // cyclic invalid
        primary.set_valid(4, 0, false);
        cyclic.set_valid(4, 0, false);
        CHECK_FALSE(select_min(primary, cyclic).valid(4, 0));
    }

    TEST_CASE("wrapped inputs and size mismatch are contract errors")
    {
        CHECK_THROWS_AS(select_min(FlowField(4, 2, FlowRepresentation::Wrapped360), FlowField(4, 2)), ContractError);
        CHECK_THROWS_AS(select_min(FlowField(4, 2), FlowField(8, 4)), ContractError);
    }

    TEST_CASE("mode names")
    {
        for(CfeMode m : {CfeMode::Naive, CfeMode::Default, CfeMode::DoubleEstimation, CfeMode::HalfZeroPadding,
                         CfeMode::HalfSamePadding})
            CHECK(parse_cfe_mode(to_string(m)) == m);
        CHECK_THROWS_AS(parse_cfe_mode("triple"), UsageError);
        CHECK(needs_feature_split(CfeMode::Default));
        CHECK_FALSE(needs_feature_split(CfeMode::DoubleEstimation));
    }
}

TEST_SUITE("cyclic estimation")
{
    TEST_CASE("identical frames give zero flow in every mode")
    {
        SyntheticScene scene;
        scene.seed = 21;
        const Image img = render_texture(scene, 128);
        const BuiltinBackend be(panorama_params(128));
        for(CfeMode m : {CfeMode::Naive, CfeMode::Default, CfeMode::DoubleEstimation, CfeMode::HalfZeroPadding,
                         CfeMode::HalfSamePadding})
        {
            const FlowField f = cyclic_estimate(be, img, img, m);
            CHECK(f.representation() == FlowRepresentation::Wrapped360);
            for(int y = 0; y < 64; ++y)
                for(int x = 0; x < 128; ++x)
                {
                    CHECK(f.u(x, y) == 0.0f);
                    CHECK(f.v(x, y) == 0.0f);
                }
        }
    }

    TEST_CASE("Default equals DoubleEstimation with a circular encoder")
    {
        const BuiltinBackend be(panorama_params(256));
        for(std::uint64_t seed = 0; seed < 3; ++seed)
        {
            SyntheticScene scene;
            scene.seed = 30 + seed;
            const SyntheticPair pair = gen_rotation_pair(scene, {40.0 + 60.0 * double(seed), 3.0, -2.0}, 256);
            CHECK(cyclic_estimate(be, pair.first, pair.second, CfeMode::Default)
                  == cyclic_estimate(be, pair.first, pair.second, CfeMode::DoubleEstimation));
        }
    }

    TEST_CASE("yaw across the seam")
    {
        const BuiltinBackend be(panorama_params(512));
        SyntheticScene scene;
        scene.seed = 40;
        for(double yaw : {350.0, 170.0})
        {
            const SyntheticPair pair = gen_rotation_pair(scene, {yaw, 0.0, 0.0}, 512);
            const double naive = epe(cyclic_estimate(be, pair.first, pair.second, CfeMode::Naive), pair.gt).epe_mean;
            const double def = epe(cyclic_estimate(be, pair.first, pair.second, CfeMode::Default), pair.gt).epe_mean;
            CAPTURE(yaw);
            CAPTURE(naive);
            CHECK(def < 2.0);
            CHECK(def <= naive);
        }
    }

    TEST_CASE("feature modes need the split; odd widths are rejected")
    {
        testing::TempDir dir("cfe");
        const FileBackend fb(dir.path());
        const Image img(64, 32, 1);
        CHECK_THROWS_AS(cyclic_estimate(fb, img, img, CfeMode::Default), ContractError);
        CHECK_THROWS_AS(cyclic_estimate(fb, img, img, CfeMode::HalfSamePadding), ContractError);
        CHECK_THROWS_AS(cyclic_estimate(BuiltinBackend(), Image(66, 33, 1), Image(66, 33, 1), CfeMode::Naive), ContractError);
    }

    TEST_CASE("double estimation with precomputed flows")
    {
        testing::TempDir dir("cfe");
        FlowField original = FlowField::constant(8, 4, 6.0f, 0.0f);
        FlowField swapped = FlowField::constant(8, 4, -1.0f, 0.0f);
        write_flo(original, dir / "p.flo");
        write_flo(swapped, dir / "p_swapped.flo");
        const Image img(8, 4, 1);
        const FlowField f = cyclic_estimate(FileBackend(dir.path()), img, img, CfeMode::DoubleEstimation, {"p"});
        for(int x = 0; x < 8; ++x) CHECK(f.u(x, 0) == -1.0f);
        const FlowField n = cyclic_estimate(FileBackend(dir.path()), img, img, CfeMode::Naive, {"p"});
        CHECK(n.u(0, 0) == -2.0f);
    }
}
