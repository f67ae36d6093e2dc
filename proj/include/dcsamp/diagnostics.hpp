#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dcsamp {

struct TVReport {
    double tv = 0.0;  // max_j |freq_j - lambda_j|
    long N = 0;
    std::string label;
};

// Empirical total-variation statistic against an exact law: the maximum
// absolute deviation between state frequencies and probabilities.
inline TVReport tv_from_counts(std::span<const long> counts, std::span<const double> lambda,
                               const std::string& label = {}) {
    if (counts.size() != lambda.size())
        throw std::invalid_argument("tv_from_counts: state count mismatch");
    long N = 0;
    for (long c : counts) N += c;
    if (N < 1) throw std::invalid_argument("tv_from_counts: empty chain");
    double tv = 0.0;
    for (std::size_t j = 0; j < counts.size(); ++j) {
        double freq = static_cast<double>(counts[j]) / static_cast<double>(N);
        tv = std::max(tv, std::abs(freq - lambda[j]));
    }
    return {tv, N, label};
}

inline TVReport tv_discrete(std::span<const int> chain, std::span<const double> lambda,
                            const std::string& label = {}) {
    if (chain.empty()) throw std::invalid_argument("tv_discrete: empty chain");
    std::vector<long> counts(lambda.size(), 0);
    for (int s : chain) {
        if (s < 0 || static_cast<std::size_t>(s) >= lambda.size())
            throw std::out_of_range("tv_discrete: state index out of range");
        ++counts[static_cast<std::size_t>(s)];
    }
    return tv_from_counts(counts, lambda, label);
}

// Same statistic for integer-valued draws stored as reals (lattice
// targets). States at or beyond the truncation point are lumped into the
// last bin of the reference vector.
inline TVReport tv_lattice(std::span<const double> draws, std::span<const double> lambda,
                           const std::string& label = {}) {
    if (draws.empty()) throw std::invalid_argument("tv_lattice: empty sample");
    std::vector<long> counts(lambda.size(), 0);
    for (double d : draws) {
        long s = std::lround(d);
        if (s < 0) throw std::out_of_range("tv_lattice: negative state");
        ++counts[std::min<std::size_t>(static_cast<std::size_t>(s), lambda.size() - 1)];
    }
    return tv_from_counts(counts, lambda, label);
}

namespace detail {

inline bool strongly_connected(const std::vector<std::vector<double>>& P, bool reversed) {
    const int K = static_cast<int>(P.size());
    std::vector<char> seen(K, 0);
    std::queue<int> q;
    q.push(0);
    seen[0] = 1;
    int reached = 1;
    while (!q.empty()) {
        int u = q.front();
        q.pop();
        for (int v = 0; v < K; ++v) {
            double p = reversed ? P[v][u] : P[u][v];
            if (p > 0.0 && !seen[v]) {
                seen[v] = 1;
                ++reached;
                q.push(v);
            }
        }
    }
    return reached == K;
}

}  // namespace detail

// Stationary law of a row-stochastic irreducible kernel by dense solve of
// lambda P = lambda, sum lambda = 1.
inline std::vector<double> stationary_distribution(const std::vector<std::vector<double>>& P) {
    const int K = static_cast<int>(P.size());
    if (K < 1) throw std::invalid_argument("stationary_distribution: empty matrix");
    for (const auto& row : P) {
        if (static_cast<int>(row.size()) != K)
            throw std::invalid_argument("stationary_distribution: matrix not square");
        double s = 0.0;
        for (double p : row) {
            if (p < 0.0) throw std::invalid_argument("stationary_distribution: negative entry");
            s += p;
        }
        if (std::abs(s - 1.0) > 1e-12)
            throw std::invalid_argument("stationary_distribution: rows must sum to 1");
    }
    if (!detail::strongly_connected(P, false) || !detail::strongly_connected(P, true))
        throw std::invalid_argument("stationary_distribution: kernel is reducible");

    // (P^T - I) lambda = 0 with the last equation replaced by sum = 1.
    Eigen::MatrixXd A(K, K);
    for (int i = 0; i < K; ++i)
        for (int j = 0; j < K; ++j) A(i, j) = P[j][i] - (i == j ? 1.0 : 0.0);
    for (int j = 0; j < K; ++j) A(K - 1, j) = 1.0;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(K);
    b(K - 1) = 1.0;
    Eigen::VectorXd lambda = A.fullPivLu().solve(b);

    std::vector<double> out(K);
    for (int j = 0; j < K; ++j) {
        if (lambda(j) < -1e-12)
            throw std::runtime_error("stationary_distribution: negative solution entry");
        out[j] = std::max(lambda(j), 0.0);
    }
    double resid = 0.0;
    for (int j = 0; j < K; ++j) {
        double lp = 0.0;
        for (int i = 0; i < K; ++i) lp += out[i] * P[i][j];
        resid = std::max(resid, std::abs(lp - out[j]));
    }
    if (resid > 1e-12)
        throw std::runtime_error("stationary_distribution: residual above 1e-12");
    return out;
}

// Biased autocovariance estimate normalized by lag 0; r[0] is exactly 1.
inline std::vector<double> autocorrelation(std::span<const double> series, int max_lag) {
    const long n = static_cast<long>(series.size());
    if (max_lag < 0) throw std::invalid_argument("autocorrelation: negative max_lag");
    if (n <= max_lag) throw std::invalid_argument("autocorrelation: series shorter than max_lag");
    double mean = 0.0;
    for (double v : series) mean += v;
    mean /= static_cast<double>(n);
    double c0 = 0.0;
    for (double v : series) c0 += (v - mean) * (v - mean);
    c0 /= static_cast<double>(n);
    if (c0 == 0.0) throw std::invalid_argument("autocorrelation: constant series");

    std::vector<double> r(static_cast<std::size_t>(max_lag) + 1);
    r[0] = 1.0;
    for (int k = 1; k <= max_lag; ++k) {
        double ck = 0.0;
        for (long t = 0; t + k < n; ++t)
            ck += (series[static_cast<std::size_t>(t)] - mean) *
                  (series[static_cast<std::size_t>(t + k)] - mean);
        ck /= static_cast<double>(n);
        r[static_cast<std::size_t>(k)] = ck / c0;
    }
    return r;
}

// Kolmogorov distance between the empirical cdf of a sample and an exact
// cdf: max over order statistics of the one-sided gaps.
inline double ks_distance(std::span<const double> sample,
                          const std::function<double(double)>& cdf) {
    if (sample.empty()) throw std::invalid_argument("ks_distance: empty sample");
    std::vector<double> x(sample.begin(), sample.end());
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = cdf(x[i]);
        d = std::max(d, std::max(std::abs((static_cast<double>(i) + 1.0) / n - f),
                                 std::abs(static_cast<double>(i) / n - f)));
    }
    return d;
}

// Two-sample Kolmogorov distance via a sorted merge walk.
inline double ks_two_sample(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
    std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const double na = static_cast<double>(x.size()), nb = static_cast<double>(y.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < x.size() && j < y.size()) {
        const double v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] <= v) ++i;
        while (j < y.size() && y[j] <= v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

// Rejection threshold for the two-sample Kolmogorov test at level alpha:
// c(alpha) * sqrt((n+m)/(n*m)), c(alpha) = sqrt(-ln(alpha/2)/2).
inline double ks_two_sample_threshold(double alpha, std::size_t n, std::size_t m) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("ks_two_sample_threshold: alpha must lie in (0, 1)");
    if (n == 0 || m == 0) throw std::invalid_argument("ks_two_sample_threshold: empty sample");
    const double c = std::sqrt(-std::log(alpha / 2.0) / 2.0);
    return c * std::sqrt((static_cast<double>(n) + static_cast<double>(m)) /
                         (static_cast<double>(n) * static_cast<double>(m)));
}

}  // namespace dcsamp
