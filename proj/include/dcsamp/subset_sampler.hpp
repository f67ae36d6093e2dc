#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cover.hpp"
#include "region.hpp"
#include "rng.hpp"
#include "target.hpp"

namespace dcsamp {

// Draws from one cover element, with the bookkeeping the later stages
// need: which draws an earlier element already claims (in_prior), and how
// many land in the two adjacent overlaps (these drive the proportion
// ratios). Counts are derivable from the draws; they are stored so the
// merge never re-touches the cover on the hot path.
struct SubsetSample {
    std::size_t part = 0;   // cover element index j
    std::size_t dims = 1;
    long M = 0;             // retained draws (post burn-in)
    long burn_in = 0;
    std::uint64_t seed = 0;
    double acceptance_rate = 1.0;

    std::vector<double> draws;        // flat, M x dims
    std::vector<std::uint8_t> in_prior;  // draw lies in C_k n C_j for some k < j
    long hits_lower = 0;              // draws in D_{j-1} = C_{j-1} n C_j
    long hits_upper = 0;              // draws in D_j     = C_j n C_{j+1}

    std::span<const double> draw(long k) const {
        return {draws.data() + static_cast<std::size_t>(k) * dims, dims};
    }
    double prior_fraction() const {
        long n = 0;
        for (auto f : in_prior) n += f;
        return M > 0 ? static_cast<double>(n) / static_cast<double>(M) : 0.0;
    }
};

struct SubsetChainConfig {
    long M = 10000;
    long burn_in = 0;             // extra leading iterations, discarded
    std::uint64_t seed = 1;
    std::vector<double> scales;   // per-dim proposal scale; empty = from region width
    std::vector<double> start;    // empty = deterministic placement rule
    bool unit_step = false;       // lattice proposal (+-1 per dimension)

    void validate() const {
        if (M < 1) throw std::invalid_argument("SubsetChainConfig: M must be >= 1");
        if (burn_in < 0 || burn_in >= M)
            throw std::invalid_argument("SubsetChainConfig: burn-in must lie in [0, M)");
    }
};

namespace detail {

inline void flag_draw(SubsetSample& s, const LinkedCover& cover, std::size_t j,
                      std::span<const double> x, const Region* lower, const Region* upper) {
    s.in_prior.push_back(cover.in_prior_overlap(j, x) ? 1 : 0);
    if (lower && lower->contains(x)) ++s.hits_lower;
    if (upper && upper->contains(x)) ++s.hits_upper;
}

inline std::vector<double> chain_start(const Region& region, const TargetModel& target,
                                       std::span<const double> scales, Rng& rng) {
    std::vector<double> x(region.dim());
    for (std::size_t d = 0; d < region.dim(); ++d) {
        double a = region.lo[d], b = region.hi[d];
        bool alo = std::isinf(a), bhi = std::isinf(b);
        if (!alo && !bhi) x[d] = 0.5 * (a + b);
        else if (alo && bhi) x[d] = 0.0;
        else x[d] = alo ? b - scales[d] : a + scales[d];
    }
    if (std::isfinite(target.log_density(x))) return x;
    // Placement landed on zero density: rejection-search the region.
    LinkedCover probe_helper(region, {region});
    for (int att = 0; att < 10000; ++att) {
        for (std::size_t d = 0; d < region.dim(); ++d) x[d] = probe_helper.probe_coord(rng, d);
        if (region.contains(x) && std::isfinite(target.log_density(x))) return x;
    }
    throw std::runtime_error("subset sampler: no starting point of positive density found");
}

}  // namespace detail

// Random-walk Metropolis restricted to cover element j: proposals outside
// C_j (or outside the target support) are rejected and the chain stays
// put, which is the restricted-target acceptance ratio.
inline SubsetSample subset_mh(const TargetModel& target, const LinkedCover& cover,
                              std::size_t j, const SubsetChainConfig& cfg) {
    cfg.validate();
    const Region& region = cover.part(j);
    const std::size_t dims = region.dim();
    if (target.dims != dims) throw std::invalid_argument("subset_mh: dimension mismatch");

    std::vector<double> scales(cfg.scales);
    if (scales.empty()) {
        scales.resize(dims);
        for (std::size_t d = 0; d < dims; ++d) {
            double w = region.hi[d] - region.lo[d];
            scales[d] = std::isfinite(w) ? 0.2 * w : 1.0;
        }
    } else if (scales.size() != dims) {
        throw std::invalid_argument("subset_mh: scale dimension mismatch");
    }

    Rng rng(cfg.seed);
    std::vector<double> x =
        cfg.start.empty() ? detail::chain_start(region, target, scales, rng) : cfg.start;
    if (x.size() != dims || !region.contains(x))
        throw std::invalid_argument("subset_mh: start point not in region");
    double lp = target.log_density(x);
    if (!std::isfinite(lp))
        throw std::invalid_argument("subset_mh: start point has zero density");

    SubsetSample out;
    out.part = j;
    out.dims = dims;
    out.M = cfg.M;
    out.burn_in = cfg.burn_in;
    out.seed = cfg.seed;
    out.draws.reserve(static_cast<std::size_t>(cfg.M) * dims);

    const Region lower = j > 0 ? intersect(cover.part(j - 1), region) : Region(1.0, 0.0);
    const Region upper =
        j + 1 < cover.size() ? intersect(region, cover.part(j + 1)) : Region(1.0, 0.0);
    const Region* lower_p = j > 0 ? &lower : nullptr;
    const Region* upper_p = j + 1 < cover.size() ? &upper : nullptr;

    std::vector<double> prop(dims);
    long accepted = 0;
    const long total = cfg.burn_in + cfg.M;
    for (long it = 0; it < total; ++it) {
        if (cfg.unit_step) {
            for (std::size_t d = 0; d < dims; ++d)
                prop[d] = x[d] + (rng.bernoulli(0.5) ? 1.0 : -1.0);
        } else {
            for (std::size_t d = 0; d < dims; ++d) prop[d] = x[d] + scales[d] * rng.normal();
        }
        if (region.contains(prop)) {
            double lq = target.log_density(prop);
            if (std::isfinite(lq) && (lq >= lp || std::log(rng.uniform()) < lq - lp)) {
                x = prop;
                lp = lq;
                ++accepted;
            }
        }
        if (it >= cfg.burn_in) {
            out.draws.insert(out.draws.end(), x.begin(), x.end());
            detail::flag_draw(out, cover, j, x, lower_p, upper_p);
        }
    }
    out.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(total);
    return out;
}

// Exact i.i.d. draws from the target conditioned on a 1-d cover element,
// via inverse-cdf on the truncated mass. Needs the exact cdf/quantile
// pair, so this is the reference sampler for targets that carry one.
inline SubsetSample iid_subset_sample(const TargetModel& target, const LinkedCover& cover,
                                      std::size_t j, long M, std::uint64_t seed) {
    if (target.dims != 1 || cover.dim() != 1)
        throw std::invalid_argument("iid_subset_sample: 1-d targets only");
    if (!target.cdf || !target.quantile)
        throw std::invalid_argument("iid_subset_sample: target lacks exact cdf/quantile");
    if (M < 1) throw std::invalid_argument("iid_subset_sample: M must be >= 1");
    const Region& region = cover.part(j);
    const double flo = target.cdf(region.lo[0]);
    const double fhi = std::isfinite(region.hi[0]) ? target.cdf(region.hi[0]) : 1.0;
    if (!(fhi > flo))
        throw std::runtime_error("iid_subset_sample: cover element carries no mass");

    Rng rng(seed);
    SubsetSample out;
    out.part = j;
    out.dims = 1;
    out.M = M;
    out.seed = seed;
    out.draws.reserve(M);

    const Region lower = j > 0 ? intersect(cover.part(j - 1), region) : Region(1.0, 0.0);
    const Region upper =
        j + 1 < cover.size() ? intersect(region, cover.part(j + 1)) : Region(1.0, 0.0);
    const Region* lower_p = j > 0 ? &lower : nullptr;
    const Region* upper_p = j + 1 < cover.size() ? &upper : nullptr;

    for (long k = 0; k < M; ++k) {
        double u = flo + (fhi - flo) * rng.uniform();
        double x = target.quantile(std::min(u, std::nextafter(1.0, 0.0)));
        x = std::clamp(x, region.lo[0], region.hi[0]);
        out.draws.push_back(x);
        detail::flag_draw(out, cover, j, std::span<const double>(&x, 1), lower_p, upper_p);
    }
    return out;
}

// Proposal envelope for rejection sampling: draws from q, evaluates log q,
// and guarantees log pi <= log_bound + log q on the support.
struct Envelope {
    std::function<std::vector<double>(Rng&)> sample;
    std::function<double(std::span<const double>)> log_density;
    double log_bound = 0.0;
};

inline SubsetSample subset_rejection(const TargetModel& target, const Envelope& envelope,
                                     const LinkedCover& cover, std::size_t j, long M,
                                     std::uint64_t seed) {
    if (M < 1) throw std::invalid_argument("subset_rejection: M must be >= 1");
    const Region& region = cover.part(j);
    Rng rng(seed);
    SubsetSample out;
    out.part = j;
    out.dims = region.dim();
    out.M = M;
    out.seed = seed;
    out.draws.reserve(static_cast<std::size_t>(M) * out.dims);

    const Region lower = j > 0 ? intersect(cover.part(j - 1), region) : Region(1.0, 0.0);
    const Region upper =
        j + 1 < cover.size() ? intersect(region, cover.part(j + 1)) : Region(1.0, 0.0);
    const Region* lower_p = j > 0 ? &lower : nullptr;
    const Region* upper_p = j + 1 < cover.size() ? &upper : nullptr;

    long kept = 0;
    long attempts = 0;
    const long max_attempts = 2000000000L;
    long accepted_env = 0;
    while (kept < M) {
        if (++attempts > max_attempts)
            throw std::runtime_error("subset_rejection: acceptance rate too low");
        std::vector<double> x = envelope.sample(rng);
        if (x.size() != out.dims)
            throw std::invalid_argument("subset_rejection: envelope dimension mismatch");
        if (!region.contains(x)) continue;  // outside C_j: discard, no accept test
        const double lp = target.log_density(x);
        const double lq = envelope.log_density(x) + envelope.log_bound;
        if (lp > lq + 1e-9)
            throw std::runtime_error("subset_rejection: envelope bound violated");
        if (std::isfinite(lp) && std::log(rng.uniform()) < lp - lq) {
            out.draws.insert(out.draws.end(), x.begin(), x.end());
            detail::flag_draw(out, cover, j, x, lower_p, upper_p);
            ++kept;
            ++accepted_env;
        }
    }
    out.acceptance_rate = attempts > 0 ? static_cast<double>(accepted_env) / attempts : 1.0;
    return out;
}

// One step of the kernel-as-proposal chain: propose from the current row;
// a proposal outside the restriction keeps the chain where it is. For a
// reversible kernel the acceptance ratio of in-restriction proposals is
// exactly 1, so no density evaluations appear here.
inline int discrete_chain_step(const DiscreteTarget& target, int state,
                               const std::function<bool(int)>& allowed, Rng& rng) {
    const auto& row = target.kernel.at(state);
    const int next = static_cast<int>(rng.categorical(row));
    return allowed(next) ? next : state;
}

// Chain over cover element j of a finite-state target.
inline SubsetSample discrete_subset_chain(const DiscreteTarget& target,
                                          const DiscreteCover& cover, std::size_t j,
                                          const SubsetChainConfig& cfg) {
    cfg.validate();
    target.validate();
    Rng rng(cfg.seed);

    int state;
    if (!cfg.start.empty()) {
        state = static_cast<int>(cfg.start[0]);
        if (!cover.contains(j, state))
            throw std::invalid_argument("discrete_subset_chain: start state not in part");
    } else {
        const auto& part = cover.part(j);
        state = part[rng.uniform_int(part.size())];
    }

    SubsetSample out;
    out.part = j;
    out.dims = 1;
    out.M = cfg.M;
    out.burn_in = cfg.burn_in;
    out.seed = cfg.seed;
    out.draws.reserve(cfg.M);

    const std::vector<int> lower = j > 0 ? cover.adjacent_overlap(j - 1) : std::vector<int>{};
    const std::vector<int> upper =
        j + 1 < cover.size() ? cover.adjacent_overlap(j) : std::vector<int>{};
    std::vector<std::uint8_t> in_lower(target.states, 0), in_upper(target.states, 0);
    for (int s : lower) in_lower[s] = 1;
    for (int s : upper) in_upper[s] = 1;

    auto allowed = [&](int s) { return cover.contains(j, s); };
    long moved = 0;
    const long total = cfg.burn_in + cfg.M;
    for (long it = 0; it < total; ++it) {
        int next = discrete_chain_step(target, state, allowed, rng);
        if (next != state) ++moved;
        state = next;
        if (it >= cfg.burn_in) {
            out.draws.push_back(static_cast<double>(state));
            out.in_prior.push_back(cover.in_prior_overlap(j, state) ? 1 : 0);
            if (in_lower[state]) ++out.hits_lower;
            if (in_upper[state]) ++out.hits_upper;
        }
    }
    out.acceptance_rate = static_cast<double>(moved) / static_cast<double>(total);
    return out;
}

// Unrestricted chain simulation of the same kernel (the standard-sampler
// baseline in the benchmarks).
inline std::vector<int> discrete_chain(const DiscreteTarget& target, long steps, int start,
                                       std::uint64_t seed) {
    target.validate();
    if (start < 0 || start >= target.states)
        throw std::invalid_argument("discrete_chain: start state out of range");
    Rng rng(seed);
    std::vector<int> out;
    out.reserve(steps);
    int state = start;
    for (long it = 0; it < steps; ++it) {
        state = static_cast<int>(rng.categorical(target.kernel[state]));
        out.push_back(state);
    }
    return out;
}

}  // namespace dcsamp
