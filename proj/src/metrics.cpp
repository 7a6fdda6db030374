#include "panoflow/metrics.hpp"

#include "panoflow/error.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <vector>

namespace panoflow {

void EpeAccumulator::add(double error)
{
    error_sum += error;
    over1 += error > 1.0;
    over3 += error > 3.0;
    over5 += error > 5.0;
    ++count;
}

void EpeAccumulator::merge(const EpeAccumulator& other)
{
    error_sum += other.error_sum;
    over1 += other.over1;
    over3 += other.over3;
    over5 += other.over5;
    count += other.count;
}

EpeStats EpeAccumulator::stats() const
{
    EpeStats s;
    s.pixel_count = count;
    if(count == 0) return s;
    const double n = double(count);
    s.epe_mean = error_sum / n;
    s.px1 = double(over1) / n;
    s.px3 = double(over3) / n;
    s.px5 = double(over5) / n;
    return s;
}

EpeAccumulator epe_accumulate(const FlowField& pred, const FlowField& gt, const Mask* mask)
{
    require(pred.same_size(gt), "epe: flow fields differ in size");
    require(pred.representation() == gt.representation(),
            std::string("epe: representation mismatch (") + to_string(pred.representation()) + " vs "
                + to_string(gt.representation()) + ")");
    require(mask == nullptr || mask->size() == pred.pixel_count(), "epe: mask size mismatch");

    EpeAccumulator acc;
    for(int y = 0; y < gt.height(); ++y)
        for(int x = 0; x < gt.width(); ++x)
        {
            if(!pred.valid(x, y) || !gt.valid(x, y)) continue;
            if(mask && (*mask)[std::size_t(y) * std::size_t(gt.width()) + std::size_t(x)] == 0) continue;
            const double du = double(pred.u(x, y)) - double(gt.u(x, y));
            const double dv = double(pred.v(x, y)) - double(gt.v(x, y));
            acc.add(std::sqrt(du * du + dv * dv));
        }
    return acc;
}

EpeStats epe(const FlowField& pred, const FlowField& gt, const Mask* mask)
{
    auto acc = epe_accumulate(pred, gt, mask);
    if(acc.count == 0) throw ContractError("epe: no pixel is valid under the mask");
    return acc.stats();
}

void EvalReport::add(const std::string& condition, const EpeAccumulator& acc)
{
    m_conditions[condition].merge(acc);
}

EpeStats EvalReport::condition(const std::string& name) const
{
    auto it = m_conditions.find(name);
    if(it == m_conditions.end()) throw LookupError("no such condition in report: " + name);
    return it->second.stats();
}

EpeStats EvalReport::overall() const
{
    EpeAccumulator all;
    for(const auto& [name, acc] : m_conditions) all.merge(acc);
    return all.stats();
}

nlohmann::json to_json(const EpeStats& stats)
{
    return {{"epe", stats.epe_mean},
            {"px1", stats.px1},
            {"px3", stats.px3},
            {"px5", stats.px5},
            {"pixels", stats.pixel_count}};
}

nlohmann::json EvalReport::to_json(bool per_condition) const
{
    nlohmann::json conditions = nlohmann::json::object();
    if(per_condition)
        for(const auto& [name, acc] : m_conditions) conditions[name] = panoflow::to_json(acc.stats());
    return {{"conditions", conditions}, {"all", panoflow::to_json(overall())}};
}

namespace {

std::string format_value(double value, int precision)
{
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.*f", precision, value);
    return buffer;
}

}

std::string EvalReport::to_text(bool per_condition) const
{
    std::vector<std::string> headers = {"Metric"};
    std::vector<EpeStats> columns;
    for(const auto& [name, acc] : m_conditions)
    {
        if(!per_condition) break;
        headers.push_back(name);
        columns.push_back(acc.stats());
    }
    headers.push_back("All");
    columns.push_back(overall());

    struct Row {
        std::string label;
        std::vector<std::string> cells;
    };
    std::vector<Row> rows = {{"EPE", {}}, {">1px", {}}, {">3px", {}}, {">5px", {}}, {"pixels", {}}};
    for(const auto& s : columns)
    {
        rows[0].cells.push_back(format_value(s.epe_mean, 4));
        rows[1].cells.push_back(format_value(s.px1, 4));
        rows[2].cells.push_back(format_value(s.px3, 4));
        rows[3].cells.push_back(format_value(s.px5, 4));
        rows[4].cells.push_back(std::to_string(s.pixel_count));
    }

    std::vector<std::size_t> widths(headers.size());
    for(std::size_t c = 0; c < headers.size(); ++c)
    {
        widths[c] = headers[c].size();
        for(const auto& row : rows)
            widths[c] = std::max(widths[c], c == 0 ? row.label.size() : row.cells[c - 1].size());
    }

    std::ostringstream out;
    auto emit = [&](const std::string& first, const std::vector<std::string>& rest) {
        out << first << std::string(widths[0] - first.size(), ' ');
        for(std::size_t c = 0; c < rest.size(); ++c)
            out << "  " << std::string(widths[c + 1] - rest[c].size(), ' ') << rest[c];
        out << '\n';
    };
    emit(headers[0], {headers.begin() + 1, headers.end()});
    for(const auto& row : rows) emit(row.label, row.cells);
    return out.str();
}

}
