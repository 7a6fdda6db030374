#include "panoflow/cfe.hpp"

#include "panoflow/error.hpp"
#include "panoflow/spherical.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace panoflow {

const char* to_string(CfeMode mode) noexcept
{
    switch(mode)
    {
        case CfeMode::Naive: return "naive";
        case CfeMode::Default: return "default";
        case CfeMode::DoubleEstimation: return "double";
        case CfeMode::HalfZeroPadding: return "half-zero";
        case CfeMode::HalfSamePadding: return "half-same";
    }
    return "?";
}

CfeMode parse_cfe_mode(const std::string& name)
{
    for(auto m : {CfeMode::Naive, CfeMode::Default, CfeMode::DoubleEstimation, CfeMode::HalfZeroPadding,
                  CfeMode::HalfSamePadding})
        if(name == to_string(m)) return m;
    throw UsageError("unknown CFE mode '" + name + "' (expected naive, default, double, half-zero or half-same)");
}

bool needs_feature_split(CfeMode mode) noexcept
{
    return mode == CfeMode::Default || mode == CfeMode::HalfZeroPadding || mode == CfeMode::HalfSamePadding;
}

FeatureMap swap_halves(const FeatureMap& map)
{
    require(map.width % 2 == 0, "feature width " + std::to_string(map.width) + " is odd");
    FeatureMap out = map;
    const int half = map.width / 2;
    for(int c = 0; c < map.channels; ++c)
        for(int y = 0; y < map.height; ++y)
            for(int x = 0; x < map.width; ++x) out.at(c, y, (x + half) % map.width) = map.at(c, y, x);
    return out;
}

FeatureStack swap_halves(const FeatureStack& stack)
{
    FeatureStack out;
    out.reserve(stack.size());
    for(const auto& m : stack) out.push_back(swap_halves(m));
    return out;
}

RegroupedPairs regroup_features(const FeatureStack& first, const FeatureStack& second,
                                const std::optional<FeatureStack>& context)
{
    FeaturePair original{first, second, context};
    original.validate();
    FeaturePair swapped{swap_halves(first), swap_halves(second),
                        context ? std::optional<FeatureStack>(swap_halves(*context)) : std::nullopt};
    return {std::move(original), std::move(swapped)};
}

FlowField reindex_swapped(const FlowField& flow)
{
    require(flow.width() % 2 == 0, "reindex_swapped: odd width");
    return roll_columns(flow, flow.width() / 2);
}

Mask reindex_swapped(const Mask& mask, int width, int height)
{
    require(width % 2 == 0, "reindex_swapped: odd width");
    require(mask.size() == std::size_t(width) * std::size_t(height), "reindex_swapped: mask size mismatch");
    Mask out(mask.size());
    const int half = width / 2;
    for(int y = 0; y < height; ++y)
        for(int x = 0; x < width; ++x)
            out[std::size_t(y) * std::size_t(width) + std::size_t((x + half) % width)] =
                mask[std::size_t(y) * std::size_t(width) + std::size_t(x)];
    return out;
}

FlowField select_min(const FlowField& primary, const FlowField& cyclic)
{
    return select_min(primary, cyclic, nullptr, nullptr);
}

FlowField select_min(const FlowField& primary, const FlowField& cyclic, const Mask* primary_confident,
                     const Mask* cyclic_confident)
{
    require(primary.same_size(cyclic), "select_min: candidate sizes differ");
    require(primary.representation() == FlowRepresentation::Classical
                && cyclic.representation() == FlowRepresentation::Classical,
            "select_min: candidates must be Classical");
    const std::size_t n = primary.pixel_count();
    require(!primary_confident || primary_confident->size() == n, "select_min: confidence size mismatch");
    require(!cyclic_confident || cyclic_confident->size() == n, "select_min: confidence size mismatch");

    const int w = primary.width();
    FlowField out(w, primary.height(), FlowRepresentation::Wrapped360);
    for(int y = 0; y < primary.height(); ++y)
        for(int x = 0; x < w; ++x)
        {
            const std::size_t i = std::size_t(y) * std::size_t(w) + std::size_t(x);
            const bool pv = primary.valid(x, y);
            const bool cv = cyclic.valid(x, y);
            const bool pu = pv && (!primary_confident || (*primary_confident)[i]);
            const bool cu = cv && (!cyclic_confident || (*cyclic_confident)[i]);

            const FlowField* winner = nullptr;
            if(pu != cu)
                winner = pu ? &primary : &cyclic;
            else if(pv && cv)
            {
                const double np = std::hypot(double(primary.u(x, y)), double(primary.v(x, y)));
                const double nc = std::hypot(double(cyclic.u(x, y)), double(cyclic.v(x, y)));
                winner = nc < np ? &cyclic : &primary;
            }
            else if(pv || cv)
                winner = pv ? &primary : &cyclic;

            if(!winner)
            {
                out.set(x, y, 0.0f, 0.0f);
                out.set_valid(x, y, false);
                continue;
            }
            const double u = winner->u(x, y);
            require(std::abs(u) <= double(w), "select_min: |u| exceeds the image width");
            out.set(x, y, float(wrap_horizontal_flow(u, w)), winner->v(x, y));
            out.set_valid(x, y, true);
        }
    return out;
}

namespace {

enum class Padding { Zero, Same };

// Keeps one half of every level and fills the other with zeros or a copy of
// the kept half.
FeatureMap pad_half(const FeatureMap& map, bool keep_left, Padding padding)
{
    FeatureMap out = map;
    const int half = map.width / 2;
    const int kept = keep_left ? 0 : half;
    const int filled = keep_left ? half : 0;
    for(int c = 0; c < map.channels; ++c)
        for(int y = 0; y < map.height; ++y)
            for(int x = 0; x < half; ++x)
                out.at(c, y, filled + x) = padding == Padding::Zero ? 0.0f : map.at(c, y, kept + x);
    return out;
}

FeaturePair pad_pair(const FeaturePair& pair, bool keep_left, Padding padding)
{
    FeaturePair out;
    for(const auto& m : pair.source) out.source.push_back(pad_half(m, keep_left, padding));
    for(const auto& m : pair.target) out.target.push_back(pad_half(m, keep_left, padding));
    if(pair.context)
    {
        out.context.emplace();
        for(const auto& m : *pair.context) out.context->push_back(pad_half(m, keep_left, padding));
    }
    return out;
}

// Left-half pixels from `left`, right-half pixels from `right`.
FlowEstimate compose_halves(const FlowEstimate& left, const FlowEstimate& right)
{
    FlowEstimate out = left;
    const int w = left.flow.width();
    for(int y = 0; y < left.flow.height(); ++y)
        for(int x = w / 2; x < w; ++x)
        {
            const std::size_t i = std::size_t(y) * std::size_t(w) + std::size_t(x);
            out.flow.set(x, y, right.flow.u(x, y), right.flow.v(x, y));
            out.flow.set_valid(x, y, right.flow.valid(x, y));
            out.confident[i] = right.confident[i];
        }
    return out;
}

FlowEstimate decode_padded(const EstimatorBackend& backend, const FeaturePair& pair, Padding padding)
{
    return compose_halves(backend.decode(pad_pair(pair, true, padding)), backend.decode(pad_pair(pair, false, padding)));
}

FlowField combine(const FlowEstimate& primary, const FlowEstimate& swapped)
{
    const FlowField cyclic = reindex_swapped(swapped.flow);
    const Mask cyclic_conf = reindex_swapped(swapped.confident, cyclic.width(), cyclic.height());
    return select_min(primary.flow, cyclic, &primary.confident, &cyclic_conf);
}

void check_estimate(const FlowEstimate& e, const Image& frame)
{
    require(e.flow.width() == frame.width() && e.flow.height() == frame.height(),
            "backend returned a flow of the wrong size");
    require(e.flow.representation() == FlowRepresentation::Classical, "backend returned a non-Classical flow");
    require(e.confident.size() == e.flow.pixel_count(), "backend returned a confidence mask of the wrong size");
}

}

FlowField cyclic_estimate(const EstimatorBackend& backend, const Image& first, const Image& second, CfeMode mode,
                          const CfeOptions& options)
{
    require(first.width() == second.width() && first.height() == second.height(), "cyclic_estimate: frame sizes differ");
    require(first.width() >= 2 && first.width() % 2 == 0, "cyclic_estimate: image width must be even");
    if(needs_feature_split(mode) && !backend.capabilities().has_encode_decode_split)
        throw ContractError(std::string("CFE mode '") + to_string(mode) + "' needs a backend with an encode/decode split");

    switch(mode)
    {
        case CfeMode::Naive:
        {
            const auto e = backend.estimate({first, second, options.pair_id, false});
            check_estimate(e, first);
            return convert_to_360(e.flow);
        }
        case CfeMode::DoubleEstimation:
        {
            const auto primary = backend.estimate({first, second, options.pair_id, false});
            check_estimate(primary, first);
            const Image s1 = swap_halves(first);
            const Image s2 = swap_halves(second);
            const auto swapped = backend.estimate({s1, s2, options.pair_id, true});
            check_estimate(swapped, first);
            return combine(primary, swapped);
        }
        case CfeMode::Default:
        case CfeMode::HalfZeroPadding:
        case CfeMode::HalfSamePadding:
        {
            const auto pairs = regroup_features(backend.encode(first), backend.encode(second), backend.encode_context(first));
            FlowEstimate primary, swapped;
            if(mode == CfeMode::Default)
            {
                primary = backend.decode(pairs.original);
                swapped = backend.decode(pairs.swapped);
            }
            else
            {
                const Padding padding = mode == CfeMode::HalfZeroPadding ? Padding::Zero : Padding::Same;
                primary = decode_padded(backend, pairs.original, padding);
                swapped = decode_padded(backend, pairs.swapped, padding);
            }
            check_estimate(primary, first);
            check_estimate(swapped, first);
            return combine(primary, swapped);
        }
    }
    throw ContractError("cyclic_estimate: unknown mode");
}

}
