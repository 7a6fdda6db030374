#include "panoflow/backend.hpp"

#include "panoflow/error.hpp"
#include "panoflow/io.hpp"
#include "panoflow/parallel.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstdlib>
#include <limits>

namespace panoflow {

FeatureMap::FeatureMap(int channels_, int height_, int width_, int downsample_)
    : channels(channels_), height(height_), width(width_), downsample(downsample_),
      values(std::size_t(channels_) * std::size_t(height_) * std::size_t(width_), 0.0f)
{
    require(channels_ > 0 && height_ > 0 && width_ > 0 && downsample_ > 0, "FeatureMap: dimensions must be positive");
}

void FeaturePair::validate() const
{
    require(!source.empty(), "FeaturePair: empty feature stack");
    require(source.size() == target.size(), "FeaturePair: source and target level counts differ");
    for(std::size_t l = 0; l < source.size(); ++l)
        require(source[l].same_shape(target[l]), "FeaturePair: source and target shapes differ at level " + std::to_string(l));
    if(context)
    {
        require(context->size() == source.size(), "FeaturePair: context level count differs");
        for(std::size_t l = 0; l < source.size(); ++l)
        {
            const auto& c = (*context)[l];
            require(c.height == source[l].height && c.width == source[l].width && c.downsample == source[l].downsample,
                    "FeaturePair: context shape differs at level " + std::to_string(l));
        }
    }
}

FeatureStack EstimatorBackend::encode(const Image&) const
{
    throw ContractError("backend has no encode/decode split");
}

std::optional<FeatureStack> EstimatorBackend::encode_context(const Image&) const
{
    throw ContractError("backend has no encode/decode split");
}

FlowEstimate EstimatorBackend::decode(const FeaturePair&) const
{
    throw ContractError("backend has no encode/decode split");
}

// ---------------------------------------------------------------------------
// encoder

namespace {

struct Plane {
    int width = 0;
    int height = 0;
    std::vector<float> v;

    float at(int x, int y) const { return v[std::size_t(y) * std::size_t(width) + std::size_t(x)]; }
    float& at(int x, int y) { return v[std::size_t(y) * std::size_t(width) + std::size_t(x)]; }
};

int horizontal_index(int x, int width, bool circular)
{
    if(circular) return ((x % width) + width) % width;
    return std::clamp(x, 0, width - 1);
}

// 5-tap binomial blur followed by taking every second row and column.
Plane reduce(const Plane& in, bool circular)
{
    static constexpr std::array<float, 5> kernel = {1.0f / 16, 4.0f / 16, 6.0f / 16, 4.0f / 16, 1.0f / 16};

    Plane horizontal{in.width / 2, in.height, {}};
    horizontal.v.resize(std::size_t(horizontal.width) * std::size_t(horizontal.height));
    parallel_rows(in.height, [&](int y) {
        for(int xo = 0; xo < horizontal.width; ++xo)
        {
            const int x = 2 * xo;
            float acc = 0.0f;
            for(int k = -2; k <= 2; ++k) acc += kernel[std::size_t(k + 2)] * in.at(horizontal_index(x + k, in.width, circular), y);
            horizontal.at(xo, y) = acc;
        }
    });

    Plane out{horizontal.width, (in.height + 1) / 2, {}};
    out.v.resize(std::size_t(out.width) * std::size_t(out.height));
    parallel_rows(out.height, [&](int yo) {
        const int y = 2 * yo;
        for(int x = 0; x < out.width; ++x)
        {
            float acc = 0.0f;
            for(int k = -2; k <= 2; ++k) acc += kernel[std::size_t(k + 2)] * horizontal.at(x, std::clamp(y + k, 0, in.height - 1));
            out.at(x, yo) = acc;
        }
    });
    return out;
}

FeatureMap census(const Plane& p, int downsample, bool circular)
{
    FeatureMap f(census_channels, p.height, p.width, downsample);
    parallel_rows(p.height, [&](int y) {
        for(int x = 0; x < p.width; ++x)
        {
            const float center = p.at(x, y);
            std::uint64_t code = 0;
            int bit = 0;
            for(int dy = -census_radius; dy <= census_radius; ++dy)
            {
                const int yy = std::clamp(y + dy, 0, p.height - 1);
                for(int dx = -census_radius; dx <= census_radius; ++dx)
                {
                    if(dx == 0 && dy == 0) continue;
                    if(p.at(horizontal_index(x + dx, p.width, circular), yy) > center) code |= std::uint64_t(1) << bit;
                    ++bit;
                }
            }
            for(int c = 0; c < census_channels; ++c) f.at(c, y, x) = float((code >> (16 * c)) & 0xFFFFu);
        }
    });
    return f;
}

std::vector<std::uint64_t> census_codes(const FeatureMap& f)
{
    require(f.channels == census_channels, "builtin decode: features are not census features");
    std::vector<std::uint64_t> codes(std::size_t(f.width) * std::size_t(f.height));
    for(int y = 0; y < f.height; ++y)
        for(int x = 0; x < f.width; ++x) codes[std::size_t(y) * std::size_t(f.width) + std::size_t(x)] = census_code(f, y, x);
    return codes;
}

}

std::uint64_t census_code(const FeatureMap& f, int y, int x)
{
    std::uint64_t code = 0;
    for(int c = 0; c < census_channels; ++c) code |= std::uint64_t(f.at(c, y, x)) << (16 * c);
    return code;
}

BuiltinBackend::BuiltinBackend(BuiltinParams params) : m_params(params)
{
    if(params.levels < 1) throw UsageError("builtin backend: levels must be >= 1");
    if(params.radius < 0 || params.coarse_radius < 0) throw UsageError("builtin backend: search radii must be >= 0");
    if(params.iterations < 1) throw UsageError("builtin backend: iterations must be >= 1");
    if(params.aggregation_radius < 0 || params.aggregation_radius > 16)
        throw UsageError("builtin backend: aggregation radius must be in [0, 16]");
    if(params.max_horizontal_displacement < 0)
        throw UsageError("builtin backend: max horizontal displacement must be >= 0");
    if(!(params.confidence_bits >= 0.0)) throw UsageError("builtin backend: confidence threshold must be >= 0");
}

BackendCapabilities BuiltinBackend::capabilities() const
{
    return {true, m_params.circular};
}

int BuiltinBackend::reach() const noexcept
{
    const int top = 1 << (m_params.levels - 1);
    return m_params.coarse_radius * top + m_params.radius * (top - 1);
}

FeatureStack BuiltinBackend::encode(const Image& image) const
{
    const int step = 1 << m_params.levels;
    if(image.empty() || image.width() % step != 0)
        throw ContractError("builtin encode: image width " + std::to_string(image.width()) + " is not divisible by 2^"
                            + std::to_string(m_params.levels));

    const Image gray = to_grayscale(image);
    Plane level{gray.width(), gray.height(), gray.data()};

    FeatureStack stack;
    stack.reserve(std::size_t(m_params.levels));
    for(int l = 0; l < m_params.levels; ++l)
    {
        if(l > 0) level = reduce(level, m_params.circular);
        stack.push_back(census(level, 1 << l, m_params.circular));
    }
    return stack;
}

std::optional<FeatureStack> BuiltinBackend::encode_context(const Image&) const
{
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// decoder

namespace {

struct LevelFlow {
    int width = 0;
    int height = 0;
    std::vector<int> u;
    std::vector<int> v;
    std::vector<double> score; ///< sum over the levels so far of each pixel's best mean cost

    std::size_t index(int x, int y) const { return std::size_t(y) * std::size_t(width) + std::size_t(x); }
};

// Window cost: Hamming sum over the window pixels whose target lies inside
// the image, and how many such pixels there are. Candidates are ordered by
// mean cost (sum / count), then |u|, |v|, u, v. For equal counts that order is
// a single integer key: the sum in the high word, the displacement rank below.
inline std::uint32_t displacement_rank(int u, int v)
{
    return (std::uint32_t(std::abs(u)) << 16) | (std::uint32_t(std::abs(v)) << 2) | (std::uint32_t(u > 0) << 1)
           | std::uint32_t(v > 0);
}

struct Best {
    std::vector<std::int64_t> key;
    std::vector<int> count; ///< 0 = no candidate yet
    std::vector<int> u;
    std::vector<int> v;
};

constexpr int fallback_chunk = 64;

// Equal-count candidates replace the best when their key is lower. Returns
// whether some lane had a different count and needs the exact comparison.
bool
compare_equal_counts(const int* col, int n, std::int64_t rank, int u, int v, std::int64_t* best_key, int* best_count,
                     int* best_u, int* best_v)
{
    int special = 0;
    for(int x = 0; x < n; ++x)
    {
        const int count = col[x] >> 16;
        const std::int64_t key = (std::int64_t(col[x] & 0xFFFF) << 32) | rank;
        const bool take = count == best_count[x] && key < best_key[x];
        special |= count != best_count[x];
        best_key[x] = take ? key : best_key[x];
        best_u[x] = take ? u : best_u[x];
        best_v[x] = take ? v : best_v[x];
    }
    return special != 0;
}

void compare_unequal_counts(const int* col, int n, std::int64_t rank, int u, int v, std::int64_t* best_key,
                            int* best_count, int* best_u, int* best_v)
{
    for(int x = 0; x < n; ++x)
    {
        const int count = col[x] >> 16;
        if(count == best_count[x]) continue;
        const long sum = col[x] & 0xFFFF;
        bool take = best_count[x] == 0;
        if(!take)
        {
            const long lhs = sum * best_count[x], rhs = long(best_key[x] >> 32) * count;
            take = lhs < rhs || (lhs == rhs && rank < (best_key[x] & 0xFFFFFFFF));
        }
        if(take)
        {
            best_key[x] = (sum << 32) | rank;
            best_count[x] = count;
            best_u[x] = u;
            best_v[x] = v;
        }
    }
}

// Per-pixel terms pack the Hamming distance in the low 16 bits and an
// in-image flag above, so one box filter yields both sums.
constexpr int count_shift = 16;

// One matching pass; level_score receives each pixel's best mean cost.
//
// For every candidate offset the per-pixel terms are streamed row by row:
// horizontal window sums go into a ring of 2a+1 rows and a rolling column sum
// yields the window total for each output row, which is compared in place.
void match_level(const std::vector<std::uint64_t>& src, const std::vector<std::uint64_t>& dst, LevelFlow& flow,
                 int radius, int cap, const BuiltinParams& params, std::vector<double>& level_score)
{
    const int w = flow.width;
    const int h = flow.height;
    const int r = params.aggregation_radius;
    const int ring_rows = 2 * r + 1;
    const std::size_t n = std::size_t(w) * std::size_t(h);
    const std::vector<int> base_u = flow.u;
    const std::vector<int> base_v = flow.v;

    Best best{std::vector<std::int64_t>(n, 0), std::vector<int>(n, 0), base_u, base_v};

    // Runs of equal base displacement along each row; within a run, targets
    // of a candidate are contiguous.
    struct Run {
        int x0, x1, u, v;
    };
    std::vector<Run> runs;
    std::vector<std::size_t> row_runs(std::size_t(h) + 1);
    for(int y = 0; y < h; ++y)
    {
        row_runs[std::size_t(y)] = runs.size();
        const std::size_t row = std::size_t(y) * std::size_t(w);
        for(int x = 0; x < w;)
        {
            const int u = base_u[row + std::size_t(x)], v = base_v[row + std::size_t(x)];
            int e = x + 1;
            while(e < w && base_u[row + std::size_t(e)] == u && base_v[row + std::size_t(e)] == v) ++e;
            runs.push_back({x, e, u, v});
            x = e;
        }
    }
    row_runs[std::size_t(h)] = runs.size();

    // Columns of [x0, x1) whose target column x + u stays inside the image.
    const auto clip = [w](const Run& run, int u, int& lo, int& hi) {
        lo = std::max(run.x0, -u);
        hi = std::min(run.x1, w - u);
    };

    // Strips of rows small enough that their per-pixel state stays in cache
    // while all candidates are tried.
    constexpr int strip_rows = 32;
    const int strips = (h + strip_rows - 1) / strip_rows;
    parallel_rows(strips, [&](int strip) {
        const int y0 = strip * strip_rows;
        const int y1 = std::min(h, y0 + strip_rows);
        std::vector<int> ring(std::size_t(ring_rows) * std::size_t(w));
        std::vector<int> column(static_cast<std::size_t>(w));
        std::vector<int> terms(static_cast<std::size_t>(w));

        const auto add_row = [&](int y, int du, int dv, int* out) {
            const std::size_t row = std::size_t(y) * std::size_t(w);
            const std::uint64_t* s = src.data() + row;
            int* t = terms.data();
            std::fill(terms.begin(), terms.end(), 0);
            for(std::size_t k = row_runs[std::size_t(y)]; k < row_runs[std::size_t(y) + 1]; ++k)
            {
                const Run& run = runs[k];
                const int u = run.u + du;
                const int ty = y + run.v + dv;
                if(unsigned(ty) >= unsigned(h)) continue;
                int lo, hi;
                clip(run, u, lo, hi);
                const std::uint64_t* d = dst.data() + std::size_t(ty) * std::size_t(w) + u;
                for(int x = lo; x < hi; ++x) t[x] = (1 << count_shift) + std::popcount(s[x] ^ d[x]);
            }
            // Horizontal window sums replace the slot's previous row; the
            // column sum takes the difference.
            int* c = column.data();
            int acc = 0;
            for(int x = 0; x < std::min(r, w); ++x) acc += t[x];
            const auto emit = [&](int x) {
                c[x] += acc - out[x];
                out[x] = acc;
            };
            int x = 0;
            for(; x < w && (x - r - 1 < 0 || x + r >= w); ++x)
            {
                if(x + r < w) acc += t[x + r];
                if(x - r - 1 >= 0) acc -= t[x - r - 1];
                emit(x);
            }
            for(; x + r < w; ++x)
            {
                acc += t[x + r] - t[x - r - 1];
                emit(x);
            }
            for(; x < w; ++x)
            {
                if(x - r - 1 >= 0) acc -= t[x - r - 1];
                emit(x);
            }
        };

        for(int dv = -radius; dv <= radius; ++dv)
            for(int du = -radius; du <= radius; ++du)
            {
                std::fill(ring.begin(), ring.end(), 0);
                std::fill(column.begin(), column.end(), 0);
                const int first = std::max(0, y0 - r);
                const auto slot = [&](int y) { return &ring[std::size_t(y % ring_rows) * std::size_t(w)]; };
                for(int y = first; y <= std::min(y0 + r - 1, h - 1); ++y) add_row(y, du, dv, slot(y));
                for(int yo = y0; yo < y1; ++yo)
                {
                    if(yo + r < h)
                        add_row(yo + r, du, dv, slot(yo + r));
                    else if(yo - r - 1 >= first)
                    {
                        int* old = slot(yo - r - 1);
                        for(int x = 0; x < w; ++x)
                        {
                            column[std::size_t(x)] -= old[x];
                            old[x] = 0;
                        }
                    }

                    const std::size_t row = std::size_t(yo) * std::size_t(w);
                    const int* col = column.data();
                    for(std::size_t k = row_runs[std::size_t(yo)]; k < row_runs[std::size_t(yo) + 1]; ++k)
                    {
                        const Run& run = runs[k];
                        const int u = run.u + du;
                        const int v = run.v + dv;
                        if(unsigned(yo + v) >= unsigned(h)) continue;
                        if(cap > 0 && std::abs(u) > cap) continue;
                        int lo, hi;
                        clip(run, u, lo, hi);
                        const std::int64_t rank = displacement_rank(u, v);
                        for(int x = lo; x < hi; x += fallback_chunk)
                        {
                            const int len = std::min(fallback_chunk, hi - x);
                            const std::size_t i = row + std::size_t(x);
                            if(compare_equal_counts(col + x, len, rank, u, v, &best.key[i], &best.count[i], &best.u[i],
                                                    &best.v[i]))
                                compare_unequal_counts(col + x, len, rank, u, v, &best.key[i], &best.count[i],
                                                       &best.u[i], &best.v[i]);
                        }
                    }
                }
            }
    });

    level_score.assign(n, double(census_bits));
    for(std::size_t i = 0; i < n; ++i)
    {
        flow.u[i] = best.u[i];
        flow.v[i] = best.v[i];
        if(best.count[i] > 0) level_score[i] = double(best.key[i] >> 32) / double(best.count[i]);
    }
}

std::vector<int> median3x3(const std::vector<int>& in, int w, int h)
{
    std::vector<int> out(in.size());
    std::array<int, 9> window{};
    for(int y = 0; y < h; ++y)
        for(int x = 0; x < w; ++x)
        {
            int k = 0;
            for(int yy = std::max(y - 1, 0); yy <= std::min(y + 1, h - 1); ++yy)
                for(int xx = std::max(x - 1, 0); xx <= std::min(x + 1, w - 1); ++xx)
                    window[std::size_t(k++)] = in[std::size_t(yy) * std::size_t(w) + std::size_t(xx)];
            std::nth_element(window.begin(), window.begin() + k / 2, window.begin() + k);
            out[std::size_t(y) * std::size_t(w) + std::size_t(x)] = window[std::size_t(k / 2)];
        }
    return out;
}

LevelFlow upsample(const LevelFlow& coarse, int w, int h)
{
    const auto mu = median3x3(coarse.u, coarse.width, coarse.height);
    const auto mv = median3x3(coarse.v, coarse.width, coarse.height);
    const std::size_t n = std::size_t(w) * std::size_t(h);
    LevelFlow fine{w, h, std::vector<int>(n), std::vector<int>(n), std::vector<double>(n)};
    for(int y = 0; y < h; ++y)
        for(int x = 0; x < w; ++x)
        {
            const std::size_t src = coarse.index(std::min(x / 2, coarse.width - 1), std::min(y / 2, coarse.height - 1));
            fine.u[fine.index(x, y)] = 2 * mu[src];
            fine.v[fine.index(x, y)] = 2 * mv[src];
            fine.score[fine.index(x, y)] = coarse.score[src];
        }
    return fine;
}

}

FlowEstimate BuiltinBackend::decode(const FeaturePair& pair) const
{
    pair.validate();
    const int levels = int(pair.source.size());
    require(levels > 0, "decode: empty feature stack");
    require(pair.source[0].width <= 65535 && pair.source[0].height <= 16383, "decode: features too large");

    LevelFlow flow;
    for(int l = levels - 1; l >= 0; --l)
    {
        const auto& s = pair.source[std::size_t(l)];
        const auto& t = pair.target[std::size_t(l)];
        if(l == levels - 1)
        {
            const std::size_t n = std::size_t(s.width) * std::size_t(s.height);
            flow = {s.width, s.height, std::vector<int>(n, 0), std::vector<int>(n, 0), std::vector<double>(n, 0.0)};
        }
        else
            flow = upsample(flow, s.width, s.height);

        const auto src = census_codes(s);
        const auto dst = census_codes(t);
        const int radius = l == levels - 1 ? m_params.coarse_radius : m_params.radius;
        const int cap = m_params.max_horizontal_displacement > 0
                            ? std::max(1, m_params.max_horizontal_displacement / s.downsample)
                            : 0;
        std::vector<double> level_score;
        for(int it = 0; it < m_params.iterations; ++it) match_level(src, dst, flow, radius, cap, m_params, level_score);
        for(std::size_t i = 0; i < level_score.size(); ++i) flow.score[i] += level_score[i];
    }

    const int w = flow.width;
    const int h = flow.height;
    FlowEstimate out{FlowField(w, h, FlowRepresentation::Classical), Mask(flow.score.size(), 0)};
    for(std::size_t i = 0; i < flow.score.size(); ++i)
        out.confident[i] = flow.score[i] <= m_params.confidence_bits * double(levels);
    for(int y = 0; y < h; ++y)
        for(int x = 0; x < w; ++x)
        {
            const std::size_t i = flow.index(x, y);
            out.flow.set(x, y, float(flow.u[i]), float(flow.v[i]));
            out.flow.set_valid(x, y, true);
        }
    return out;
}

FlowEstimate BuiltinBackend::estimate(const EstimateRequest& request) const
{
    require(request.first.width() == request.second.width() && request.first.height() == request.second.height(),
            "builtin estimate: frame sizes differ");
    return decode({encode(request.first), encode(request.second), encode_context(request.first)});
}

// ---------------------------------------------------------------------------
// file backend

FileBackend::FileBackend(std::filesystem::path flow_dir) : m_dir(std::move(flow_dir)) {}

BackendCapabilities FileBackend::capabilities() const
{
    return {false, false};
}

std::filesystem::path FileBackend::path_for(const std::string& pair_id, bool halves_swapped) const
{
    return m_dir / (pair_id + (halves_swapped ? "_swapped" : "") + ".flo");
}

FlowEstimate FileBackend::estimate(const EstimateRequest& request) const
{
    require(!request.pair_id.empty(), "file backend: a pair id is required");
    FlowField flow = file_backend_estimate(request.pair_id + (request.halves_swapped ? "_swapped" : ""), m_dir);
    require(flow.width() == request.first.width() && flow.height() == request.first.height(),
            "file backend: flow '" + request.pair_id + "' does not match the frame size");
    Mask confident = flow.valid_mask();
    return {std::move(flow), std::move(confident)};
}

FlowField file_backend_estimate(const std::string& pair_id, const std::filesystem::path& flow_dir)
{
    const auto path = flow_dir / (pair_id + ".flo");
    std::error_code ec;
    if(!std::filesystem::is_regular_file(path, ec)) throw LookupError("no precomputed flow for '" + pair_id + "' at " + path.string());
    return read_flo(path);
}

}
