#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/gamma.hpp>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "region.hpp"
#include "rng.hpp"

namespace dcsamp {

// Continuous (or lattice) target: unnormalized log density over a box
// support, with exact cdf/quantile attached when the family provides them
// (1-d only; used by oracles and by the exact inverse-cdf subset sampler).
struct TargetModel {
    std::size_t dims = 1;
    Region support;
    std::function<double(std::span<const double>)> log_density;
    std::function<double(double)> cdf;       // may be empty
    std::function<double(double)> quantile;  // may be empty

    bool in_support(std::span<const double> x) const {
        return support.contains(x) && std::isfinite(log_density(x));
    }
    double log_density_at(double x) const {
        return log_density(std::span<const double>(&x, 1));
    }
};

inline TargetModel gamma_target(double shape, double scale) {
    if (!(shape > 0.0) || !(scale > 0.0))
        throw std::invalid_argument("gamma_target: shape and scale must be positive");
    TargetModel t;
    t.dims = 1;
    t.support = Region(0.0, kInf);
    const double lnorm = std::lgamma(shape) + shape * std::log(scale);
    t.log_density = [shape, scale, lnorm](std::span<const double> x) {
        const double v = x[0];
        if (v < 0.0) return -kInf;
        if (v == 0.0) return shape == 1.0 ? -lnorm : -kInf;
        return (shape - 1.0) * std::log(v) - v / scale - lnorm;
    };
    boost::math::gamma_distribution<double> dist(shape, scale);
    t.cdf = [dist](double x) { return x <= 0.0 ? 0.0 : boost::math::cdf(dist, x); };
    t.quantile = [dist](double q) { return boost::math::quantile(dist, q); };
    return t;
}

// Poisson as a lattice target on the nonnegative integers; the sampler
// side moves by +-1 proposals, the density side rejects non-integers.
inline TargetModel poisson_target(double intensity = 14.0) {
    if (!(intensity > 0.0))
        throw std::invalid_argument("poisson_target: intensity must be positive");
    TargetModel t;
    t.dims = 1;
    t.support = Region(0.0, kInf);
    t.log_density = [intensity](std::span<const double> x) {
        const double v = x[0];
        const double k = std::round(v);
        if (v < 0.0 || std::abs(v - k) > 1e-9) return -kInf;
        return k * std::log(intensity) - intensity - std::lgamma(k + 1.0);
    };
    t.cdf = [intensity](double x) {
        if (x < 0.0) return 0.0;
        // P(X <= k) = Q(k+1, intensity), the regularized upper incomplete gamma
        return boost::math::gamma_q(std::floor(x) + 1.0, intensity);
    };
    return t;
}

inline TargetModel uniform_target(Region box) {
    for (std::size_t d = 0; d < box.dim(); ++d)
        if (!std::isfinite(box.lo[d]) || !std::isfinite(box.hi[d]) || !(box.lo[d] < box.hi[d]))
            throw std::invalid_argument("uniform_target: box must be finite and non-degenerate");
    TargetModel t;
    t.dims = box.dim();
    t.support = box;
    Region b = box;
    t.log_density = [b](std::span<const double> x) { return b.contains(x) ? 0.0 : -kInf; };
    if (box.dim() == 1) {
        double lo = box.lo[0], hi = box.hi[0];
        t.cdf = [lo, hi](double x) {
            return std::clamp((x - lo) / (hi - lo), 0.0, 1.0);
        };
        t.quantile = [lo, hi](double q) { return lo + q * (hi - lo); };
    }
    return t;
}

// Mixture of full-covariance Gaussians. Keeps its own exact sampler so it
// can serve as a rejection envelope for its restricted versions.
class GaussianMixture {
  public:
    GaussianMixture(std::vector<double> weights, std::vector<Eigen::VectorXd> means,
                    std::vector<Eigen::MatrixXd> covs)
        : weights_(std::move(weights)), means_(std::move(means)) {
        if (weights_.empty() || weights_.size() != means_.size() || means_.size() != covs.size())
            throw std::invalid_argument("GaussianMixture: component count mismatch");
        const auto d = static_cast<std::size_t>(means_[0].size());
        double wsum = 0.0;
        for (double w : weights_) {
            if (!(w > 0.0)) throw std::invalid_argument("GaussianMixture: weights must be > 0");
            wsum += w;
        }
        for (double& w : weights_) w /= wsum;
        for (std::size_t c = 0; c < covs.size(); ++c) {
            if (static_cast<std::size_t>(means_[c].size()) != d ||
                covs[c].rows() != means_[c].size() || covs[c].cols() != means_[c].size())
                throw std::invalid_argument("GaussianMixture: dimension mismatch");
            Eigen::LLT<Eigen::MatrixXd> llt(covs[c]);
            if (llt.info() != Eigen::Success)
                throw std::invalid_argument("GaussianMixture: covariance not positive definite");
            chol_.push_back(llt.matrixL());
            double logdet = 0.0;
            for (Eigen::Index i = 0; i < chol_.back().rows(); ++i)
                logdet += 2.0 * std::log(chol_.back()(i, i));
            lognorm_.push_back(-0.5 * (logdet + d * std::log(2.0 * std::numbers::pi)));
        }
    }

    std::size_t dims() const { return static_cast<std::size_t>(means_[0].size()); }

    double log_density(std::span<const double> x) const {
        Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
        double best = -kInf;
        std::vector<double> terms(weights_.size());
        for (std::size_t c = 0; c < weights_.size(); ++c) {
            Eigen::VectorXd z = chol_[c].triangularView<Eigen::Lower>().solve(xv - means_[c]);
            terms[c] = std::log(weights_[c]) + lognorm_[c] - 0.5 * z.squaredNorm();
            best = std::max(best, terms[c]);
        }
        if (!std::isfinite(best)) return -kInf;
        double s = 0.0;
        for (double t : terms) s += std::exp(t - best);
        return best + std::log(s);
    }

    std::vector<double> sample(Rng& rng) const {
        const std::size_t c = rng.categorical(weights_);
        Eigen::VectorXd z(means_[c].size());
        for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
        Eigen::VectorXd x = means_[c] + chol_[c] * z;
        return {x.data(), x.data() + x.size()};
    }

    double cdf1d(double x) const {
        if (dims() != 1) throw std::logic_error("GaussianMixture::cdf1d: 1-d mixtures only");
        double s = 0.0;
        for (std::size_t c = 0; c < weights_.size(); ++c) {
            const double z = (x - means_[c](0)) / chol_[c](0, 0);
            s += weights_[c] * 0.5 * std::erfc(-z / std::numbers::sqrt2);
        }
        return s;
    }

  private:
    std::vector<double> weights_;
    std::vector<Eigen::VectorXd> means_;
    std::vector<Eigen::MatrixXd> chol_;
    std::vector<double> lognorm_;
};

inline TargetModel gaussian_mixture_target(std::shared_ptr<const GaussianMixture> mix) {
    TargetModel t;
    t.dims = mix->dims();
    t.support = Region(std::vector<double>(t.dims, -kInf), std::vector<double>(t.dims, kInf));
    t.log_density = [mix](std::span<const double> x) { return mix->log_density(x); };
    if (t.dims == 1) t.cdf = [mix](double x) { return mix->cdf1d(x); };
    return t;
}

// Finite-state target given by a Markov kernel; the stationary law is the
// sampling target and the kernel itself is the natural proposal.
struct DiscreteTarget {
    int states = 0;
    std::vector<std::vector<double>> kernel;  // row-stochastic

    void validate() const {
        if (states < 1 || kernel.size() != static_cast<std::size_t>(states))
            throw std::invalid_argument("DiscreteTarget: kernel size mismatch");
        for (const auto& row : kernel) {
            if (row.size() != static_cast<std::size_t>(states))
                throw std::invalid_argument("DiscreteTarget: kernel row size mismatch");
            double s = 0.0;
            for (double p : row) {
                if (p < 0.0) throw std::invalid_argument("DiscreteTarget: negative probability");
                s += p;
            }
            if (std::abs(s - 1.0) > 1e-12)
                throw std::invalid_argument("DiscreteTarget: kernel row does not sum to 1");
        }
    }
};

// Seven-state chain with a bottleneck at state 3 (0-based); `a` is the
// squeeze parameter, small `a` makes the two halves nearly disconnected.
inline DiscreteTarget seven_state_chain(double a) {
    if (!(a > 0.0) || !(a <= 0.5))
        throw std::invalid_argument("seven_state_chain: a must lie in (0, 0.5]");
    const double th = 1.0 / 3.0;
    DiscreteTarget t;
    t.states = 7;
    t.kernel = {
        {th, th, th, 0, 0, 0, 0},
        {th, th, th, 0, 0, 0, 0},
        {(1 - a) / 3, (1 - a) / 3, (1 - a) / 3, a, 0, 0, 0},
        {0, 0, (1 - a) / 2, (1 - a) / 2, a, 0, 0},
        {0, 0, 0, a, (1 - a) / 3, (1 - a) / 3, (1 - a) / 3},
        {0, 0, 0, 0, th, th, th},
        {0, 0, 0, 0, a, a, 1 - 2 * a},
    };
    t.validate();
    return t;
}

}  // namespace dcsamp
