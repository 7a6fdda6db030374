#pragma once

#include "panoflow/backend.hpp"
#include "panoflow/flow_field.hpp"
#include "panoflow/image.hpp"

#include <optional>
#include <string>

namespace panoflow {

/// Naive: one estimate, then the 360 wrap. Default: one encoding per frame and
/// two decodings (original and half-swapped feature pairs). DoubleEstimation:
/// two full estimates on original and half-swapped images. Half*Padding: one
/// encoding and four decodings, each seeing only one half of real features.
enum class CfeMode { Naive, Default, DoubleEstimation, HalfZeroPadding, HalfSamePadding };

/// "naive", "default", "double", "half-zero", "half-same".
const char* to_string(CfeMode mode) noexcept;
CfeMode parse_cfe_mode(const std::string& name);

/// Whether the mode needs the encode/decode split.
bool needs_feature_split(CfeMode mode) noexcept;

/// Left/right halves of a feature map exchanged (a roll by W_f / 2).
FeatureMap swap_halves(const FeatureMap& map);
FeatureStack swap_halves(const FeatureStack& stack);

struct RegroupedPairs {
    FeaturePair original; ///< P1 = {F_a1 + F_b1, F_a2 + F_b2}, context P_c1
    FeaturePair swapped;  ///< P2 = {F_b1 + F_a1, F_b2 + F_a2}, context P_c2
};

/// Splits every level at W_f / 2 and regroups into the original-order and
/// swapped-order pairs. Odd widths or mismatched shapes are a ContractError.
RegroupedPairs regroup_features(const FeatureStack& first, const FeatureStack& second,
                                const std::optional<FeatureStack>& context);

/// Moves a field estimated on half-swapped frames back to original columns:
/// column c of the input describes original column (c + W/2) mod W.
/// Displacements are unchanged. An involution for even W.
FlowField reindex_swapped(const FlowField& flow);
Mask reindex_swapped(const Mask& mask, int width, int height);

/// Per-pixel choice between the primary and cyclic candidate (both Classical,
/// both in original coordinates), returned as Wrapped360.
///
/// A candidate is usable when it is valid and, if confidences are given,
/// confident. When exactly one is usable it wins; otherwise the valid
/// candidate with the smaller Euclidean norm wins, ties going to the primary.
/// The winner goes through the 360 wrap. Pixels with no valid candidate stay
/// invalid.
FlowField select_min(const FlowField& primary, const FlowField& cyclic);
FlowField select_min(const FlowField& primary, const FlowField& cyclic, const Mask* primary_confident,
                     const Mask* cyclic_confident);

struct CfeOptions {
    std::string pair_id; ///< forwarded to keyed backends
};

/// Cyclic flow estimation in the given mode; the result is Wrapped360.
/// Modes needing the feature split on a backend without it, and odd widths,
/// are a ContractError.
FlowField cyclic_estimate(const EstimatorBackend& backend, const Image& first, const Image& second, CfeMode mode,
                          const CfeOptions& options = {});

}
