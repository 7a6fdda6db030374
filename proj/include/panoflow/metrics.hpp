#pragma once

#include "panoflow/flow_field.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <string>

#include <json.hpp>

namespace panoflow {

/// End-point-error statistics over one set of pixels.
struct EpeStats {
    double epe_mean = 0.0;
    double px1 = 0.0; ///< fraction with error > 1 px
    double px3 = 0.0; ///< fraction with error > 3 px
    double px5 = 0.0; ///< fraction with error > 5 px
    std::size_t pixel_count = 0;
};

/// Running sums behind EpeStats; merging accumulators is exact in the counts
/// and gives the pixel-count-weighted mean of the parts.
struct EpeAccumulator {
    double error_sum = 0.0;
    std::size_t over1 = 0;
    std::size_t over3 = 0;
    std::size_t over5 = 0;
    std::size_t count = 0;

    void add(double error);
    void merge(const EpeAccumulator& other);
    EpeStats stats() const;
};

/// Accumulates per-pixel sqrt(du^2 + dv^2) over pixels valid in both fields
/// and selected by the optional mask (nonzero = use).
EpeAccumulator epe_accumulate(const FlowField& pred, const FlowField& gt, const Mask* mask = nullptr);

/// Throws ContractError on size or representation mismatch, or when no pixel
/// survives the masks.
EpeStats epe(const FlowField& pred, const FlowField& gt, const Mask* mask = nullptr);

/// Per-condition EPE table with an "All" aggregate.
class EvalReport {
public:
    void add(const std::string& condition, const EpeAccumulator& acc);

    const std::map<std::string, EpeAccumulator>& conditions() const noexcept { return m_conditions; }
    EpeStats condition(const std::string& name) const;
    EpeStats overall() const;
    bool empty() const noexcept { return m_conditions.empty(); }

    /// Without per-condition columns only the aggregate is reported.
    nlohmann::json to_json(bool per_condition = true) const;

    /// Metric rows, one column per condition plus "All".
    std::string to_text(bool per_condition = true) const;

private:
    std::map<std::string, EpeAccumulator> m_conditions;
};

nlohmann::json to_json(const EpeStats& stats);

}
