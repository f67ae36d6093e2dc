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

#include <Eigen/Dense>

#include "cover.hpp"
#include "region.hpp"
#include "rng.hpp"

namespace dcsamp {

// Stochastic volatility model with leverage:
//   Y_k = beta * exp(X_k / 2) * u_k
//   X_k = phi * X_{k-1} + sigma * w_k,  corr(u_k, w_k) = rho
//   X_0 ~ N(0, sigma^2 / (1 - phi^2))
struct SVParams {
    double phi = 0.0;
    double beta = 1.0;
    double rho = 0.0;
    double sigma = 1.0;

    bool valid() const {
        return phi >= 0.0 && phi < 1.0 && beta > 0.0 && rho > -1.0 && rho < 1.0 && sigma > 0.0;
    }
    std::vector<double> as_vector() const { return {phi, beta, rho, sigma}; }
    static SVParams from_vector(std::span<const double> v) {
        if (v.size() != 4) throw std::invalid_argument("SVParams: need 4 values");
        return {v[0], v[1], v[2], v[3]};
    }
};

struct SVPath {
    std::vector<double> x;  // latent log-volatility, x[0..T]
    std::vector<double> y;  // observed log returns, y[0..T-1]
};

inline SVPath simulate_sv(const SVParams& p, long T, std::uint64_t seed) {
    if (!p.valid()) throw std::invalid_argument("simulate_sv: invalid parameters");
    if (T < 1) throw std::invalid_argument("simulate_sv: T must be >= 1");
    Rng rng(seed);
    SVPath path;
    path.x.resize(static_cast<std::size_t>(T) + 1);
    path.y.resize(static_cast<std::size_t>(T));
    path.x[0] = rng.normal(0.0, p.sigma / std::sqrt(1.0 - p.phi * p.phi));
    const double ucoef = std::sqrt(1.0 - p.rho * p.rho);
    for (long k = 1; k <= T; ++k) {
        const double w = rng.normal();
        const double u = p.rho * w + ucoef * rng.normal();
        path.x[static_cast<std::size_t>(k)] = p.phi * path.x[static_cast<std::size_t>(k - 1)] +
                                              p.sigma * w;
        path.y[static_cast<std::size_t>(k - 1)] =
            p.beta * std::exp(path.x[static_cast<std::size_t>(k)] / 2.0) * u;
    }
    return path;
}

struct PFConfig {
    int n_particles = 100;
    std::string resampling = "systematic";  // or "multinomial"
};

namespace detail {

inline double logsumexp(std::span<const double> v) {
    double mx = -kInf;
    for (double x : v) mx = std::max(mx, x);
    if (!std::isfinite(mx)) return -kInf;
    double s = 0.0;
    for (double x : v) s += std::exp(x - mx);
    return mx + std::log(s);
}

inline void resample_indices(std::span<const double> weights, std::span<int> idx,
                             const std::string& kind, Rng& rng) {
    const int N = static_cast<int>(weights.size());
    if (kind == "systematic") {
        const double u0 = rng.uniform() / N;
        double cum = weights[0];
        int j = 0;
        for (int i = 0; i < N; ++i) {
            const double u = u0 + static_cast<double>(i) / N;
            while (cum < u && j + 1 < N) cum += weights[static_cast<std::size_t>(++j)];
            idx[static_cast<std::size_t>(i)] = j;
        }
    } else if (kind == "multinomial") {
        for (int i = 0; i < N; ++i)
            idx[static_cast<std::size_t>(i)] = static_cast<int>(rng.categorical(weights));
    } else {
        throw std::invalid_argument("pf_loglik: unknown resampling scheme '" + kind + "'");
    }
}

}  // namespace detail

// Every particle weight underflowed to zero at one filter step; the
// likelihood estimate is unusable. Carries the step so the caller can see
// where the filter died.
class PFUnderflowError : public std::runtime_error {
public:
    PFUnderflowError(long step_, const std::string& what_)
        : std::runtime_error(what_), step(step_) {}
    long step;
};

// Bootstrap particle filter estimate of the log marginal likelihood.
// The observation density conditions on the state innovation:
//   Y_k | X_k, X_{k-1} ~ N( beta e^{X_k/2} rho w_k,  beta^2 e^{X_k} (1 - rho^2) )
// with w_k = (X_k - phi X_{k-1}) / sigma. Resampling happens every step.
inline double pf_loglik(const SVParams& p, std::span<const double> y, const PFConfig& cfg,
                        Rng& rng) {
    if (!p.valid()) throw std::invalid_argument("pf_loglik: invalid parameters");
    if (y.empty()) throw std::invalid_argument("pf_loglik: empty series");
    if (cfg.n_particles < 1) throw std::invalid_argument("pf_loglik: need >= 1 particle");

    const int N = cfg.n_particles;
    const double obs_var_coef = p.beta * p.beta * (1.0 - p.rho * p.rho);
    std::vector<double> x(N), xnew(N), logw(N), w(N);
    std::vector<int> idx(N);
    const double sd0 = p.sigma / std::sqrt(1.0 - p.phi * p.phi);
    for (int i = 0; i < N; ++i) x[static_cast<std::size_t>(i)] = rng.normal(0.0, sd0);

    double loglik = 0.0;
    for (long k = 0; k < static_cast<long>(y.size()); ++k) {
        const double yk = y[static_cast<std::size_t>(k)];
        for (int i = 0; i < N; ++i) {
            const double wi = rng.normal();
            const double xi = p.phi * x[static_cast<std::size_t>(i)] + p.sigma * wi;
            const double mean = p.beta * std::exp(xi / 2.0) * p.rho * wi;
            const double var = obs_var_coef * std::exp(xi);
            logw[static_cast<std::size_t>(i)] =
                -0.5 * std::log(2.0 * M_PI * var) - (yk - mean) * (yk - mean) / (2.0 * var);
            xnew[static_cast<std::size_t>(i)] = xi;
        }
        const double lse = detail::logsumexp(logw);
        if (!std::isfinite(lse))
            throw PFUnderflowError(k, "particle filter: all weights zero at step " +
                                          std::to_string(k));
        loglik += lse - std::log(static_cast<double>(N));
        for (int i = 0; i < N; ++i)
            w[static_cast<std::size_t>(i)] = std::exp(logw[static_cast<std::size_t>(i)] - lse);
        detail::resample_indices(w, idx, cfg.resampling, rng);
        for (int i = 0; i < N; ++i)
            x[static_cast<std::size_t>(i)] = xnew[static_cast<std::size_t>(idx[i])];
    }
    return loglik;
}

// Log prior over SVParams. The default is independent: phi uniform on
// [0, 1), beta exponential with mean 1, rho uniform on [-1, 1], sigma
// exponential with mean 1/2.
struct SVPrior {
    std::function<double(const SVParams&)> log_density;
};

inline SVPrior default_sv_prior() {
    SVPrior prior;
    prior.log_density = [](const SVParams& p) {
        if (!p.valid()) return -kInf;
        return -p.beta + std::log(0.5) + std::log(2.0) - 2.0 * p.sigma;
    };
    return prior;
}

// Parameter space as a box over (phi, beta, rho, sigma).
inline Region sv_support() {
    return Region({0.0, 0.0, -1.0, 0.0}, {1.0, kInf, 1.0, kInf});
}

// Two-part cover of the parameter space split in phi at 0.55 with a
// 0.01 margin on each side; every other dimension spans the full support.
// The overlap is the slab phi in [0.54, 0.56].
inline LinkedCover sv_cover() {
    const Region support = sv_support();
    Region c1 = support, c2 = support;
    c1.hi[0] = 0.56;
    c2.lo[0] = 0.54;
    return LinkedCover(support, {c1, c2});
}

struct PmmhConfig {
    long iters = 1000;
    PFConfig pf;
    // Proposal covariance: 4 entries = diagonal variances, 16 = full
    // row-major matrix. Empty = default diag(0.02, 0.05, 0.05, 0.02)^2.
    std::vector<double> proposal_cov;
    std::vector<double> init;  // optional starting point (phi, beta, rho, sigma)
};

struct PmmhResult {
    std::vector<double> phi, beta, rho, sigma, loglik;
    std::vector<std::uint8_t> accepted;
    double acceptance_rate = 0.0;

    long size() const { return static_cast<long>(phi.size()); }
    SVParams row(long k) const {
        const auto i = static_cast<std::size_t>(k);
        return {phi[i], beta[i], rho[i], sigma[i]};
    }
};

namespace detail {

inline Eigen::Matrix4d proposal_chol(const std::vector<double>& cov) {
    Eigen::Matrix4d C;
    if (cov.empty()) {
        C.setZero();
        const double d[4] = {0.02, 0.05, 0.05, 0.02};
        for (int i = 0; i < 4; ++i) C(i, i) = d[i] * d[i];
    } else if (cov.size() == 4) {
        C.setZero();
        for (int i = 0; i < 4; ++i) C(i, i) = cov[static_cast<std::size_t>(i)];
    } else if (cov.size() == 16) {
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) C(i, j) = cov[static_cast<std::size_t>(i * 4 + j)];
    } else {
        throw std::invalid_argument("pmmh: proposal covariance needs 4 or 16 entries");
    }
    if (C.isZero(0.0)) return Eigen::Matrix4d::Zero();
    Eigen::LLT<Eigen::Matrix4d> llt(C);
    if (llt.info() != Eigen::Success)
        throw std::invalid_argument("pmmh: proposal covariance not positive definite");
    return llt.matrixL();
}

inline std::vector<double> pmmh_start(const Region& restriction, Rng& rng) {
    std::vector<double> x(4);
    for (std::size_t d = 0; d < 4; ++d) {
        const double a = restriction.lo[d], b = restriction.hi[d];
        if (std::isfinite(a) && std::isfinite(b)) x[d] = 0.5 * (a + b);
        else if (std::isfinite(a)) x[d] = a + 1.0;
        else if (std::isfinite(b)) x[d] = b - 1.0;
        else x[d] = 0.0;
    }
    if (SVParams::from_vector(x).valid()) return x;
    for (int att = 0; att < 10000; ++att) {
        for (std::size_t d = 0; d < 4; ++d) {
            const double a = restriction.lo[d], b = restriction.hi[d];
            if (std::isfinite(a) && std::isfinite(b)) x[d] = rng.uniform(a, b);
            else if (std::isfinite(a)) x[d] = a + rng.exponential(1.0);
            else if (std::isfinite(b)) x[d] = b - rng.exponential(1.0);
            else x[d] = rng.normal();
        }
        if (SVParams::from_vector(x).valid()) return x;
    }
    throw std::runtime_error("pmmh: no valid starting point inside the restriction");
}

}  // namespace detail

// Particle marginal Metropolis-Hastings over the SV parameters, restricted
// to a box (the whole support for a standard run, one cover element for a
// DC run). The stored likelihood of the current point is reused across
// iterations; the particle filter runs only for fresh proposals inside the
// restriction with positive prior density. A zero-length proposal step is
// accepted without re-evaluation (the acceptance ratio is exactly 1).
inline PmmhResult pmmh_chain(std::span<const double> y, const SVPrior& prior,
                             const Region& restriction, const PmmhConfig& cfg,
                             std::uint64_t seed) {
    if (cfg.iters < 1) throw std::invalid_argument("pmmh_chain: iters must be >= 1");
    if (restriction.dim() != 4)
        throw std::invalid_argument("pmmh_chain: restriction must be 4-dimensional");

    const Eigen::Matrix4d L = detail::proposal_chol(cfg.proposal_cov);
    Rng mh_rng = Rng::stream(seed, "pmmh-mh");

    std::vector<double> cur =
        cfg.init.empty() ? detail::pmmh_start(restriction, mh_rng) : cfg.init;
    if (cur.size() != 4 || !restriction.contains(cur) || !SVParams::from_vector(cur).valid())
        throw std::invalid_argument("pmmh_chain: invalid starting point");
    double cur_prior = prior.log_density(SVParams::from_vector(cur));
    if (!std::isfinite(cur_prior))
        throw std::invalid_argument("pmmh_chain: starting point has zero prior density");
    Rng pf_rng = Rng::stream(seed, 0);
    double cur_ll = pf_loglik(SVParams::from_vector(cur), y, cfg.pf, pf_rng);

    PmmhResult out;
    out.phi.reserve(cfg.iters);
    out.beta.reserve(cfg.iters);
    out.rho.reserve(cfg.iters);
    out.sigma.reserve(cfg.iters);
    out.loglik.reserve(cfg.iters);
    out.accepted.reserve(cfg.iters);

    long accepted = 0;
    std::vector<double> prop(4);
    for (long it = 1; it <= cfg.iters; ++it) {
        Eigen::Vector4d z;
        for (int d = 0; d < 4; ++d) z(d) = mh_rng.normal();
        const Eigen::Vector4d step = L * z;
        bool zero_step = true;
        for (int d = 0; d < 4; ++d) {
            prop[static_cast<std::size_t>(d)] = cur[static_cast<std::size_t>(d)] + step(d);
            if (step(d) != 0.0) zero_step = false;
        }

        bool accept = false;
        if (zero_step) {
            accept = true;  // identical point: ratio 1, stored likelihood reused
        } else if (restriction.contains(prop)) {
            const SVParams pp = SVParams::from_vector(prop);
            const double lp = prior.log_density(pp);
            if (std::isfinite(lp) && pp.valid()) {
                Rng step_rng = Rng::stream(seed, static_cast<std::uint64_t>(it));
                bool have_ll = true;
                double ll = 0.0;
                try {
                    ll = pf_loglik(pp, y, cfg.pf, step_rng);
                } catch (const PFUnderflowError&) {
                    have_ll = false;  // zero-likelihood proposal: reject
                }
                const double ratio = have_ll ? (ll + lp) - (cur_ll + cur_prior) : -kInf;
                if (ratio >= 0.0 || std::log(mh_rng.uniform()) < ratio) {
                    accept = true;
                    cur = prop;
                    cur_ll = ll;
                    cur_prior = lp;
                }
            }
        }
        if (accept) ++accepted;
        out.phi.push_back(cur[0]);
        out.beta.push_back(cur[1]);
        out.rho.push_back(cur[2]);
        out.sigma.push_back(cur[3]);
        out.loglik.push_back(cur_ll);
        out.accepted.push_back(accept ? 1 : 0);
    }
    out.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(cfg.iters);
    return out;
}

}  // namespace dcsamp
