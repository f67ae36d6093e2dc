#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "proportion.hpp"
#include "subset_sampler.hpp"

namespace dcsamp {

struct PartExpectation {
    double weight = 0.0;     // exclusive weight of the element
    double mean = 0.0;       // mean of h over the element's eligible draws
    double stderr_ = 0.0;    // batch-means standard error of that mean
    long n_eligible = 0;     // draws outside earlier elements
};

struct ExpectationResult {
    double estimate = 0.0;
    double stderr_ = 0.0;
    bool literal_form = false;
    // The error combines per-element chain noise only; the noise in the
    // estimated weights themselves is not propagated.
    bool weight_uncertainty_ignored = true;
    std::vector<PartExpectation> per_part;
};

struct ExpectationOptions {
    // Default combines per-element conditional means with exclusive
    // weights. The literal form instead averages h * indicator over all M
    // draws of each chain; it undercounts by the eligible fraction and is
    // kept only for side-by-side comparison.
    bool literal_form = false;
    int batches = 20;
};

// E[h] as a weighted sum of per-element conditional expectations:
//   sum_j w_j * mean{ h(x) : x from chain j, x outside earlier elements }
// with w_j the exclusive element weights. The standard error treats the
// chains as independent: sqrt( sum_j w_j^2 se_j^2 ), each se_j from batch
// means over the eligible subsequence.
inline ExpectationResult estimate_expectation(
    const std::function<double(std::span<const double>)>& h,
    const std::vector<SubsetSample>& samples, const ProportionEstimate& props,
    const ExpectationOptions& opts = {}) {
    if (samples.empty()) throw std::invalid_argument("estimate_expectation: no samples");
    if (props.exclusive.size() != samples.size())
        throw std::invalid_argument("estimate_expectation: proportion estimate mismatch");
    if (opts.batches < 2)
        throw std::invalid_argument("estimate_expectation: need at least 2 batches");

    ExpectationResult out;
    out.literal_form = opts.literal_form;
    out.per_part.resize(samples.size());

    double est = 0.0, var = 0.0;
    std::vector<double> hv;
    for (std::size_t j = 0; j < samples.size(); ++j) {
        const SubsetSample& s = samples[j];
        hv.clear();
        for (long k = 0; k < s.M; ++k)
            if (!s.in_prior[static_cast<std::size_t>(k)]) hv.push_back(h(s.draw(k)));
        if (hv.empty())
            throw std::runtime_error("estimate_expectation: chain " + std::to_string(j) +
                                     " has no draws outside earlier elements");

        double mean = 0.0;
        for (double v : hv) mean += v;
        mean /= static_cast<double>(hv.size());

        // Batch means over the eligible subsequence; fewer draws than
        // batches degrades gracefully to per-draw batches.
        const long n = static_cast<long>(hv.size());
        const long B = std::min<long>(opts.batches, n);
        double se = 0.0;
        if (B >= 2) {
            const long len = n / B;
            double bvar = 0.0;
            for (long b = 0; b < B; ++b) {
                double bm = 0.0;
                for (long i = b * len; i < (b + 1) * len; ++i) bm += hv[static_cast<std::size_t>(i)];
                bm /= static_cast<double>(len);
                bvar += (bm - mean) * (bm - mean);
            }
            bvar /= static_cast<double>(B - 1);
            se = std::sqrt(bvar / static_cast<double>(B));
        }

        const double w = props.exclusive[j];
        const double scale =
            opts.literal_form ? static_cast<double>(n) / static_cast<double>(s.M) : 1.0;
        est += w * scale * mean;
        var += (w * scale * se) * (w * scale * se);
        out.per_part[j] = {w, mean, se, n};
    }
    out.estimate = est;
    out.stderr_ = std::sqrt(var);
    return out;
}

}  // namespace dcsamp
