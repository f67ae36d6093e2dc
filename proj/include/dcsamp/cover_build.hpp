#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "cover.hpp"
#include "region.hpp"
#include "rng.hpp"

namespace dcsamp {

// Factor total_parts into one factor per dimension, as balanced as
// possible (smallest max/min ratio). Ties give the larger factor to the
// earlier dimension.
inline std::vector<int> disperse_cover(int total_parts, int dims) {
    if (total_parts < 1 || dims < 1)
        throw std::invalid_argument("disperse_cover: counts must be >= 1");
    std::vector<int> best;
    double best_ratio = kInf;
    std::vector<int> cur(dims, 1);
    auto ratio_of = [](const std::vector<int>& f) {
        auto [mn, mx] = std::ranges::minmax(f);
        return static_cast<double>(mx) / mn;
    };
    std::function<void(int, int)> rec = [&](int d, int remaining) {
        if (d == dims - 1) {
            cur[d] = remaining;
            double r = ratio_of(cur);
            // lexicographic preference keeps larger factors first on ties
            if (r < best_ratio || (r == best_ratio && cur > best)) {
                best_ratio = r;
                best = cur;
            }
            return;
        }
        for (int f = 1; f <= remaining; ++f) {
            if (remaining % f) continue;
            cur[d] = f;
            rec(d + 1, remaining / f);
        }
    };
    rec(0, total_parts);
    return best;
}

// Empirical quantile with mid-point interpolation at the exact order
// statistics: with h = q*n integral, the quantile is the average of the
// h-th and (h+1)-th smallest values, so {1,2,3,4} at q=1/2 gives 2.5.
inline double empirical_quantile(std::span<const double> sorted, double q) {
    const std::size_t n = sorted.size();
    if (n == 0) throw std::invalid_argument("empirical_quantile: empty sample");
    if (q <= 0.0) return sorted.front();
    if (q >= 1.0) return sorted.back();
    const double h = q * static_cast<double>(n);
    const double k = std::round(h);
    if (std::abs(h - k) < 1e-9 * n && k >= 1.0 && k <= static_cast<double>(n - 1)) {
        const auto i = static_cast<std::size_t>(k);
        return 0.5 * (sorted[i - 1] + sorted[i]);
    }
    auto i = static_cast<std::size_t>(std::ceil(h));
    i = std::min(std::max<std::size_t>(i, 1), n);
    return sorted[i - 1];
}

// Breakpoints at masses i/parts, i = 1..parts-1, from one pilot column.
inline std::vector<double> quantile_breakpoints(std::vector<double> sample, int parts) {
    if (parts < 1) throw std::invalid_argument("quantile_breakpoints: parts must be >= 1");
    if (sample.empty()) throw std::invalid_argument("quantile_breakpoints: empty sample");
    std::ranges::sort(sample);
    std::vector<double> bp;
    for (int i = 1; i < parts; ++i)
        bp.push_back(empirical_quantile(sample, static_cast<double>(i) / parts));
    return bp;
}

// Quantile function of one pilot column; evaluates arbitrary masses so the
// grid builder can widen slab edges by mass rather than by distance.
class EmpiricalCdf {
  public:
    explicit EmpiricalCdf(std::vector<double> sample) : sorted_(std::move(sample)) {
        if (sorted_.empty()) throw std::invalid_argument("EmpiricalCdf: empty sample");
        std::ranges::sort(sorted_);
    }
    double operator()(double q) const { return empirical_quantile(sorted_, q); }
    const std::vector<double>& sorted() const { return sorted_; }

  private:
    std::vector<double> sorted_;
};

using QuantileFn = std::function<double(double)>;

std::vector<int> snake_cell(long t, const std::vector<int>& part_counts);

// Grid cover from per-dimension quantile functions. Slab j in a dimension
// with p slabs spans masses [j/p - delta/2, (j+1)/p + delta/2], so each
// adjacent slab pair overlaps with mass delta under the pilot law; outer
// edges are pinned to the support so the union is exact.
inline LinkedCover merge_cover(const std::vector<QuantileFn>& quantiles, double delta,
                               const Region& support, const std::vector<int>& part_counts) {
    const std::size_t dims = support.dim();
    if (quantiles.size() != dims || part_counts.size() != dims)
        throw std::invalid_argument("merge_cover: per-dimension inputs do not match support");
    int max_parts = 1;
    for (int p : part_counts) {
        if (p < 1) throw std::invalid_argument("merge_cover: part count must be >= 1");
        max_parts = std::max(max_parts, p);
    }
    if (max_parts > 1) {
        if (!(delta > 0.0))
            throw std::invalid_argument("merge_cover: overlap mass must be positive");
        if (delta >= 1.0 / max_parts)
            throw std::invalid_argument(
                "merge_cover: overlap mass >= 1/parts makes non-adjacent slabs meet");
    }

    LinkedCover::Grid grid;
    grid.part_counts = part_counts;
    grid.slab_lo.resize(dims);
    grid.slab_hi.resize(dims);
    for (std::size_t d = 0; d < dims; ++d) {
        const int p = part_counts[d];
        for (int j = 0; j < p; ++j) {
            double lo = (j == 0) ? support.lo[d]
                                 : quantiles[d](static_cast<double>(j) / p - delta / 2.0);
            double hi = (j == p - 1) ? support.hi[d]
                                     : quantiles[d](static_cast<double>(j + 1) / p + delta / 2.0);
            if (!(lo < hi))
                throw std::invalid_argument("merge_cover: zero-width slab in dimension " +
                                            std::to_string(d));
            grid.slab_lo[d].push_back(lo);
            grid.slab_hi[d].push_back(hi);
        }
        for (int j = 0; j + 1 < p; ++j)
            if (!(grid.slab_lo[d][j + 1] < grid.slab_hi[d][j]))
                throw std::invalid_argument("merge_cover: zero-width slab overlap in dimension " +
                                            std::to_string(d));
    }

    const long cells = std::accumulate(part_counts.begin(), part_counts.end(), 1L,
                                       std::multiplies<>());
    std::vector<Region> parts;
    parts.reserve(cells);
    for (long t = 0; t < cells; ++t) {
        std::vector<int> idx = snake_cell(t, part_counts);
        std::vector<double> lo(dims), hi(dims);
        for (std::size_t d = 0; d < dims; ++d) {
            lo[d] = grid.slab_lo[d][idx[d]];
            hi[d] = grid.slab_hi[d][idx[d]];
        }
        parts.emplace_back(std::move(lo), std::move(hi));
    }
    return LinkedCover(support, std::move(parts), std::move(grid));
}

// Boustrophedon cell order: consecutive linear indices map to grid cells
// differing by one step in exactly one dimension, which is what links the
// cover (adjacent cells share a widened slab in that dimension).
inline std::vector<int> snake_cell(long t, const std::vector<int>& part_counts) {
    const std::size_t dims = part_counts.size();
    std::vector<long> block(dims, 1);
    for (std::size_t d = 1; d < dims; ++d) block[d] = block[d - 1] * part_counts[d - 1];
    if (t < 0 || t >= block[dims - 1] * part_counts[dims - 1])
        throw std::out_of_range("snake_cell: linear index out of range");
    std::vector<int> idx(dims);
    long r = t;
    for (std::size_t d = dims; d-- > 1;) {
        long q = r / block[d];
        r %= block[d];
        if (q & 1) r = block[d] - 1 - r;  // reverse traversal of the lower block
        idx[d] = static_cast<int>(q);
    }
    idx[0] = static_cast<int>(r);
    return idx;
}

struct EstimatedCover {
    LinkedCover cover;
    std::vector<std::vector<double>> pilot_columns;  // per-dimension pilot draws
};

// Pilot-based cover estimation: a full-space random-walk chain supplies
// empirical quantiles, the part budget is spread over dimensions, and the
// grid builder places overlaps of mass delta (default 0.1/W).
inline EstimatedCover estimate_cover(
    const std::function<double(std::span<const double>)>& log_density, const Region& support,
    int pilot_size, int total_parts, std::uint64_t seed, double delta = -1.0) {
    if (total_parts < 1) throw std::invalid_argument("estimate_cover: parts must be >= 1");
    if (delta < 0.0) delta = 0.1 / total_parts;
    const std::size_t dims = support.dim();

    if (total_parts == 1) {
        LinkedCover::Grid grid;
        grid.part_counts.assign(dims, 1);
        grid.slab_lo.resize(dims);
        grid.slab_hi.resize(dims);
        for (std::size_t d = 0; d < dims; ++d) {
            grid.slab_lo[d] = {support.lo[d]};
            grid.slab_hi[d] = {support.hi[d]};
        }
        return {LinkedCover(support, {support}, std::move(grid)), {}};
    }
    if (pilot_size < 2 * total_parts)
        throw std::invalid_argument("estimate_cover: pilot too small for requested parts");

    Rng rng = Rng::stream(seed, "cover-pilot");

    // Chain start: center of bounded sides, one unit inward on half-open
    // sides; fall back to a rejection search if the density is zero there.
    std::vector<double> x(dims);
    for (std::size_t d = 0; d < dims; ++d) {
        double a = support.lo[d], b = support.hi[d];
        bool alo = std::isinf(a), bhi = std::isinf(b);
        if (!alo && !bhi) x[d] = 0.5 * (a + b);
        else if (alo && bhi) x[d] = 0.0;
        else x[d] = alo ? b - 1.0 : a + 1.0;
    }
    if (!std::isfinite(log_density(x))) {
        LinkedCover probe_helper(support, {support});
        bool found = false;
        for (int att = 0; att < 10000 && !found; ++att) {
            for (std::size_t d = 0; d < dims; ++d) x[d] = probe_helper.probe_coord(rng, d);
            found = std::isfinite(log_density(x));
        }
        if (!found)
            throw std::runtime_error("estimate_cover: no point of positive density found");
    }

    const int warm = std::max(pilot_size / 10, 10);
    std::vector<double> step(dims);
    for (std::size_t d = 0; d < dims; ++d) {
        double w = support.hi[d] - support.lo[d];
        step[d] = std::isfinite(w) ? 0.2 * w : 1.0;
    }
    auto advance = [&](std::vector<std::vector<double>>* columns, int iters) {
        double lp = log_density(x);
        std::vector<double> prop(dims);
        for (int it = 0; it < iters; ++it) {
            for (std::size_t d = 0; d < dims; ++d) prop[d] = x[d] + step[d] * rng.normal();
            if (support.contains(prop)) {
                double lq = log_density(prop);
                if (std::isfinite(lq) && std::log(rng.uniform()) < lq - lp) {
                    x = prop;
                    lp = lq;
                }
            }
            if (columns)
                for (std::size_t d = 0; d < dims; ++d) (*columns)[d].push_back(x[d]);
        }
    };

    std::vector<std::vector<double>> warm_cols(dims);
    advance(&warm_cols, warm);
    for (std::size_t d = 0; d < dims; ++d) {
        double m = std::accumulate(warm_cols[d].begin(), warm_cols[d].end(), 0.0) / warm;
        double ss = 0.0;
        for (double v : warm_cols[d]) ss += (v - m) * (v - m);
        double sd = std::sqrt(ss / warm);
        if (sd > 0.0) step[d] = sd;
    }

    std::vector<std::vector<double>> cols(dims);
    advance(&cols, pilot_size);

    std::vector<int> part_counts = disperse_cover(total_parts, static_cast<int>(dims));
    std::vector<QuantileFn> qfns;
    for (std::size_t d = 0; d < dims; ++d)
        qfns.emplace_back([cdf = EmpiricalCdf(cols[d])](double q) { return cdf(q); });
    LinkedCover cover = merge_cover(qfns, delta, support, part_counts);
    return {std::move(cover), std::move(cols)};
}

}  // namespace dcsamp
