#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cover.hpp"
#include "proportion.hpp"
#include "subset_sampler.hpp"

namespace dcsamp {

// One sample over the whole space, assembled from per-element draws.
// source[k] records which chain produced draw k (the diagnostics use it).
struct MergedSample {
    std::size_t dims = 1;
    std::vector<double> draws;  // flat, size() x dims
    std::vector<std::int32_t> source;

    std::size_t size() const { return source.size(); }
    std::span<const double> draw(std::size_t k) const {
        return {draws.data() + k * dims, dims};
    }
};

namespace detail {

inline void check_merge_inputs(const std::vector<SubsetSample>& samples,
                               const ProportionEstimate& props) {
    if (samples.empty()) throw std::invalid_argument("merge: no samples");
    if (props.pi.size() != samples.size())
        throw std::invalid_argument("merge: proportion estimate does not match sample count");
    for (std::size_t j = 0; j < samples.size(); ++j) {
        if (samples[j].part != j)
            throw std::invalid_argument("merge: samples out of cover order");
        if (samples[j].dims != samples[0].dims)
            throw std::invalid_argument("merge: sample dimension mismatch");
    }
}

inline void append_draw(MergedSample& out, const SubsetSample& s, long k) {
    auto d = s.draw(k);
    out.draws.insert(out.draws.end(), d.begin(), d.end());
    out.source.push_back(static_cast<std::int32_t>(s.part));
}

}  // namespace detail

// Thinning merge. Iteration k keeps chain j's draw with probability
// pi_j / max_r pi_r, and never keeps a draw that lies in an earlier
// element (those would be counted twice). Survivors of one iteration are
// shuffled so the output carries no leftover chain ordering. Output length
// is random; each draw is an unweighted point from the whole target.
inline MergedSample merge(const std::vector<SubsetSample>& samples,
                          const ProportionEstimate& props, std::uint64_t seed) {
    detail::check_merge_inputs(samples, props);
    const long M = samples[0].M;
    for (const auto& s : samples)
        if (s.M != M)
            throw std::invalid_argument("merge: thinning merge needs equal chain lengths");

    const double pi_max = *std::max_element(props.pi.begin(), props.pi.end());
    std::vector<double> keep(samples.size());
    for (std::size_t j = 0; j < samples.size(); ++j) keep[j] = props.pi[j] / pi_max;

    Rng rng(seed);
    MergedSample out;
    out.dims = samples[0].dims;
    out.draws.reserve(samples.size() * static_cast<std::size_t>(M) * out.dims / 2);

    std::vector<std::size_t> survivors;
    for (long k = 0; k < M; ++k) {
        survivors.clear();
        for (std::size_t j = 0; j < samples.size(); ++j) {
            if (samples[j].in_prior[static_cast<std::size_t>(k)]) continue;
            if (keep[j] >= 1.0 || rng.bernoulli(keep[j])) survivors.push_back(j);
        }
        for (std::size_t i = survivors.size(); i > 1; --i)
            std::swap(survivors[i - 1], survivors[rng.uniform_int(i)]);
        for (std::size_t j : survivors) detail::append_draw(out, samples[j], k);
    }
    return out;
}

// Resampling merge: fixed output length. Each output draw picks a chain by
// its exclusive weight, then a uniform draw among that chain's draws
// outside earlier elements. Errors if a chain with positive weight has no
// such draw to offer.
inline MergedSample merge_weighted(const std::vector<SubsetSample>& samples,
                                   const ProportionEstimate& props, long n_out,
                                   std::uint64_t seed) {
    detail::check_merge_inputs(samples, props);
    if (n_out < 1) throw std::invalid_argument("merge_weighted: output size must be >= 1");

    std::vector<std::vector<long>> eligible(samples.size());
    for (std::size_t j = 0; j < samples.size(); ++j)
        for (long k = 0; k < samples[j].M; ++k)
            if (!samples[j].in_prior[static_cast<std::size_t>(k)]) eligible[j].push_back(k);

    Rng rng(seed);
    MergedSample out;
    out.dims = samples[0].dims;
    out.draws.reserve(static_cast<std::size_t>(n_out) * out.dims);
    for (long i = 0; i < n_out; ++i) {
        const std::size_t j = rng.categorical(props.exclusive);
        if (eligible[j].empty())
            throw std::runtime_error("merge_weighted: chain " + std::to_string(j) +
                                     " has positive weight but no draws outside earlier elements");
        const long k = eligible[j][rng.uniform_int(eligible[j].size())];
        detail::append_draw(out, samples[j], k);
    }
    return out;
}

// Membership tests the reuse merge needs, decoupled from the cover type.
// in_upper_overlap(j, x): x lies in C_j n C_{j+1}.
// in_prior(j, x): x lies in C_k n C_j for some k < j.
struct CoverView {
    std::size_t parts = 0;
    std::function<bool(std::size_t, std::span<const double>)> in_upper_overlap;
    std::function<bool(std::size_t, std::span<const double>)> in_prior;
};

inline CoverView cover_view(const LinkedCover& c) {
    CoverView v;
    v.parts = c.size();
    v.in_upper_overlap = [&c](std::size_t j, std::span<const double> x) {
        return intersect(c.part(j), c.part(j + 1)).contains(x);
    };
    v.in_prior = [&c](std::size_t j, std::span<const double> x) {
        return c.in_prior_overlap(j, x);
    };
    return v;
}

inline CoverView cover_view(const DiscreteCover& c) {
    CoverView v;
    v.parts = c.size();
    v.in_upper_overlap = [&c](std::size_t j, std::span<const double> x) {
        const int s = static_cast<int>(x[0]);
        return c.contains(j, s) && c.contains(j + 1, s);
    };
    v.in_prior = [&c](std::size_t j, std::span<const double> x) {
        return c.in_prior_overlap(j, static_cast<int>(x[0]));
    };
    return v;
}

// Resampling merge that also reuses the draws the other merges discard:
// chain j+1's draws inside C_j n C_{j+1} follow the same conditional law
// as chain j's, so they can stand in for them. Output draw: pick owner s
// by exclusive weight; with probability equal to the fraction of chain s's
// eligible draws that sit in its upper overlap, draw uniformly from the
// pooled overlap draws (own + donated from chain s+1), otherwise from
// chain s's draws outside every overlap it touches. Both pools are
// filtered to exclude earlier elements, keeping every pool's law exact.
inline MergedSample merge_with_reuse(const std::vector<SubsetSample>& samples,
                                     const ProportionEstimate& props, const CoverView& cover,
                                     long n_out, std::uint64_t seed) {
    detail::check_merge_inputs(samples, props);
    if (cover.parts != samples.size())
        throw std::invalid_argument("merge_with_reuse: cover does not match sample count");
    if (n_out < 1) throw std::invalid_argument("merge_with_reuse: output size must be >= 1");

    const std::size_t W = samples.size();
    struct Pool {
        std::vector<std::pair<std::int32_t, long>> overlap;  // (chain, draw) in upper overlap
        std::vector<long> interior;                          // own draws outside all overlaps
        double split = 0.0;  // P(draw from overlap pool), from own eligible counts
    };
    std::vector<Pool> pools(W);
    for (std::size_t j = 0; j < W; ++j) {
        long eligible = 0, in_upper = 0;
        for (long k = 0; k < samples[j].M; ++k) {
            if (samples[j].in_prior[static_cast<std::size_t>(k)]) continue;
            ++eligible;
            if (j + 1 < W && cover.in_upper_overlap(j, samples[j].draw(k))) {
                ++in_upper;
                pools[j].overlap.emplace_back(static_cast<std::int32_t>(j), k);
            } else {
                pools[j].interior.push_back(k);
            }
        }
        pools[j].split = eligible > 0 ? static_cast<double>(in_upper) / eligible : 0.0;
        // Donations: chain j+1 draws inside C_j n C_{j+1} but outside every
        // element before C_j share the overlap pool's law.
        if (j + 1 < W) {
            for (long k = 0; k < samples[j + 1].M; ++k) {
                auto x = samples[j + 1].draw(k);
                if (cover.in_upper_overlap(j, x) && !cover.in_prior(j, x))
                    pools[j].overlap.emplace_back(static_cast<std::int32_t>(j + 1), k);
            }
        }
    }

    Rng rng(seed);
    MergedSample out;
    out.dims = samples[0].dims;
    out.draws.reserve(static_cast<std::size_t>(n_out) * out.dims);
    for (long i = 0; i < n_out; ++i) {
        const std::size_t s = rng.categorical(props.exclusive);
        const Pool& p = pools[s];
        const bool use_overlap = p.split > 0.0 && (p.split >= 1.0 || rng.bernoulli(p.split));
        if (use_overlap) {
            auto [chain, k] = p.overlap[rng.uniform_int(p.overlap.size())];
            detail::append_draw(out, samples[static_cast<std::size_t>(chain)], k);
        } else {
            if (p.interior.empty())
                throw std::runtime_error(
                    "merge_with_reuse: chain " + std::to_string(s) +
                    " has positive weight but no draws outside every overlap");
            const long k = p.interior[rng.uniform_int(p.interior.size())];
            detail::append_draw(out, samples[s], k);
        }
    }
    return out;
}

}  // namespace dcsamp
