#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "cover.hpp"
#include "region.hpp"
#include "subset_sampler.hpp"
#include "target.hpp"

namespace dcsamp {

// A required overlap collected zero hits, so the chain-to-chain ratio is
// undefined. This is an error value on purpose: the caller decides whether
// to re-run with more draws, not the estimator.
class FailureError : public std::runtime_error {
public:
    FailureError(std::size_t overlap, std::size_t chain, const std::string& what_)
        : std::runtime_error(what_), overlap_index(overlap), chain_index(chain) {}
    std::size_t overlap_index;  // which adjacent overlap had no hits
    std::size_t chain_index;    // which chain failed to reach it
};

struct ProportionEstimate {
    std::vector<double> pi;         // element proportions, pi[0..W-1]
    std::vector<double> exclusive;  // element-minus-prior-overlap weights, sums to 1
    std::vector<long> hits_lower;   // per chain: own draws in the lower adjacent overlap
    std::vector<long> hits_upper;   // per chain: own draws in the upper adjacent overlap
    std::vector<long> M;            // per chain: draw count
};

// Chains the hit-count ratios along adjacent overlaps, with chain lengths
// allowed to differ. Ratio step j-1 -> j:
//   raw_j = raw_{j-1} * (M_j * hits_upper_{j-1}) / (M_{j-1} * hits_lower_j)
// then normalizes by sum_s raw_s * (1 - prior_fraction_s): the prior-overlap
// fractions knock out the double-counted mass, so both pi and the exclusive
// weights come out of one pass. Exclusive weights sum to 1 by construction;
// the final division only squeezes out float error.
inline ProportionEstimate estimate_proportions_unequal(const std::vector<SubsetSample>& samples) {
    const std::size_t W = samples.size();
    if (W == 0) throw std::invalid_argument("estimate_proportions: no samples");
    for (std::size_t j = 0; j < W; ++j) {
        if (samples[j].part != j)
            throw std::invalid_argument("estimate_proportions: samples out of cover order");
        if (samples[j].M < 1)
            throw std::invalid_argument("estimate_proportions: empty sample");
    }

    std::vector<double> raw(W, 0.0);
    raw[0] = 1.0;
    for (std::size_t j = 1; j < W; ++j) {
        const long up = samples[j - 1].hits_upper;
        const long lo = samples[j].hits_lower;
        if (up == 0)
            throw FailureError(j - 1, j - 1,
                               "proportion estimation failed: chain " + std::to_string(j - 1) +
                                   " never hit its upper overlap");
        if (lo == 0)
            throw FailureError(j - 1, j,
                               "proportion estimation failed: chain " + std::to_string(j) +
                                   " never hit its lower overlap");
        raw[j] = raw[j - 1] * (static_cast<double>(samples[j].M) * static_cast<double>(up)) /
                 (static_cast<double>(samples[j - 1].M) * static_cast<double>(lo));
    }

    double denom = 0.0;
    std::vector<double> excl(W);
    for (std::size_t j = 0; j < W; ++j) {
        excl[j] = raw[j] * (1.0 - samples[j].prior_fraction());
        denom += excl[j];
    }
    if (!(denom > 0.0))
        throw std::runtime_error("proportion estimation failed: all draws sit in prior overlaps");

    ProportionEstimate out;
    out.pi.resize(W);
    out.exclusive.resize(W);
    out.hits_lower.resize(W);
    out.hits_upper.resize(W);
    out.M.resize(W);
    double excl_sum = 0.0;
    for (std::size_t j = 0; j < W; ++j) {
        out.pi[j] = raw[j] / denom;
        excl_sum += excl[j];
    }
    for (std::size_t j = 0; j < W; ++j) {
        out.exclusive[j] = excl[j] / excl_sum;
        out.hits_lower[j] = samples[j].hits_lower;
        out.hits_upper[j] = samples[j].hits_upper;
        out.M[j] = samples[j].M;
    }
    return out;
}

// Equal-length variant: same arithmetic with the M factors cancelled.
inline ProportionEstimate estimate_proportions(const std::vector<SubsetSample>& samples) {
    for (std::size_t j = 1; j < samples.size(); ++j)
        if (samples[j].M != samples[0].M)
            throw std::invalid_argument(
                "estimate_proportions: chain lengths differ, use the unequal-length variant");
    return estimate_proportions_unequal(samples);
}

// Worst-case probability that some adjacent overlap collects zero hits:
//   P(failure) <= 1 - (1 - p^M)^(2(W-1))
// where p bounds each of the 2(W-1) per-chain overlap miss probabilities.
inline double failure_bound(double p_worst, long M, std::size_t W) {
    if (!(p_worst >= 0.0 && p_worst <= 1.0))
        throw std::invalid_argument("failure_bound: p_worst must lie in [0, 1]");
    if (M < 1) throw std::invalid_argument("failure_bound: M must be >= 1");
    if (W < 1) throw std::invalid_argument("failure_bound: W must be >= 1");
    if (W == 1) return 0.0;
    const double miss = std::pow(p_worst, static_cast<double>(M));
    return 1.0 - std::pow(1.0 - miss, 2.0 * static_cast<double>(W - 1));
}

struct TrueProportions {
    std::vector<double> pi;          // exact element masses under the target
    std::vector<double> exclusive;   // exact element-minus-prior-overlap masses
    std::vector<double> delta_mass;  // exact mass of each adjacent overlap, size W-1
    double p_worst = 0.0;            // max miss probability over adjacent overlaps
};

namespace detail {

// Total cdf mass of a union of 1-d intervals.
inline double union_mass(std::vector<std::pair<double, double>> iv,
                         const std::function<double(double)>& cdf) {
    if (iv.empty()) return 0.0;
    std::sort(iv.begin(), iv.end());
    double mass = 0.0;
    double lo = iv[0].first, hi = iv[0].second;
    for (std::size_t i = 1; i < iv.size(); ++i) {
        if (iv[i].first <= hi) {
            hi = std::max(hi, iv[i].second);
        } else {
            mass += cdf(hi) - cdf(lo);
            lo = iv[i].first;
            hi = iv[i].second;
        }
    }
    mass += cdf(hi) - cdf(lo);
    return mass;
}

}  // namespace detail

// Exact proportions for a 1-d target from its cdf: the reference the
// estimated proportions are checked against.
inline TrueProportions true_proportions(const TargetModel& target, const LinkedCover& cover) {
    if (target.dims != 1 || cover.dim() != 1)
        throw std::invalid_argument("true_proportions: 1-d targets only");
    if (!target.cdf) throw std::invalid_argument("true_proportions: target lacks a cdf");
    auto cdf = [&](double x) {
        if (std::isinf(x)) return x > 0 ? 1.0 : 0.0;
        return target.cdf(x);
    };
    const std::size_t W = cover.size();
    TrueProportions out;
    out.pi.resize(W);
    out.exclusive.resize(W);
    for (std::size_t j = 0; j < W; ++j) {
        const Region& cj = cover.part(j);
        out.pi[j] = cdf(cj.hi[0]) - cdf(cj.lo[0]);
        std::vector<std::pair<double, double>> prior;
        for (std::size_t k = 0; k < j; ++k) {
            Region ov = intersect(cover.part(k), cj);
            if (!ov.empty()) prior.emplace_back(ov.lo[0], ov.hi[0]);
        }
        out.exclusive[j] = out.pi[j] - detail::union_mass(prior, cdf);
    }
    for (std::size_t j = 0; j + 1 < W; ++j) {
        Region ov = cover.adjacent_overlap(j);
        const double dm = cdf(ov.hi[0]) - cdf(ov.lo[0]);
        out.delta_mass.push_back(dm);
        out.p_worst = std::max({out.p_worst, 1.0 - dm / out.pi[j], 1.0 - dm / out.pi[j + 1]});
    }
    return out;
}

// Exact proportions for a finite-state target from its stationary law.
inline TrueProportions true_proportions(std::span<const double> stationary,
                                        const DiscreteCover& cover) {
    if (static_cast<int>(stationary.size()) != cover.states())
        throw std::invalid_argument("true_proportions: stationary vector length mismatch");
    const std::size_t W = cover.size();
    TrueProportions out;
    out.pi.resize(W);
    out.exclusive.resize(W);
    for (std::size_t j = 0; j < W; ++j) {
        double mass = 0.0, excl = 0.0;
        for (int s : cover.part(j)) {
            mass += stationary[s];
            if (!cover.in_prior_overlap(j, s)) excl += stationary[s];
        }
        out.pi[j] = mass;
        out.exclusive[j] = excl;
    }
    for (std::size_t j = 0; j + 1 < W; ++j) {
        double dm = 0.0;
        for (int s : cover.adjacent_overlap(j)) dm += stationary[s];
        out.delta_mass.push_back(dm);
        out.p_worst = std::max({out.p_worst, 1.0 - dm / out.pi[j], 1.0 - dm / out.pi[j + 1]});
    }
    return out;
}

}  // namespace dcsamp
