#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "cover.hpp"
#include "cover_build.hpp"
#include "diagnostics.hpp"
#include "expectation.hpp"
#include "merge.hpp"
#include "pmmh.hpp"
#include "proportion.hpp"
#include "region.hpp"
#include "rng.hpp"
#include "serialize.hpp"
#include "subset_sampler.hpp"
#include "target.hpp"

namespace dcsamp {

// Fixed three-part cover of the positive half-line used by the gamma
// benchmark: [0, 3.55], [3.45, 7.55], [7.45, inf).
inline LinkedCover gamma_cover() {
    Region support(0.0, kInf);
    return LinkedCover(support,
                       {Region(0.0, 3.55), Region(3.45, 7.55), Region(7.45, kInf)});
}

// Two-part cover of the 7-state chain: {0,1,2,3} and {3,4,5,6}, overlap
// at the bridge state 3. States are 0-based throughout.
inline DiscreteCover seven_state_cover() {
    return DiscreteCover(7, {{0, 1, 2, 3}, {3, 4, 5, 6}});
}

// Lattice cover split at the mode: [0, mode] and [mode, inf), overlapping
// in the single state `mode`.
inline LinkedCover poisson_cover(double intensity) {
    const double mode = std::floor(intensity);
    Region support(0.0, kInf);
    return LinkedCover(support, {Region(0.0, mode), Region(mode, kInf)});
}

// Trimodal 1-d mixture with enough overlap between modes for a pilot
// random walk to cross, used by the cover-estimation benchmark.
inline std::shared_ptr<const GaussianMixture> default_gmm() {
    auto vec1 = [](double v) {
        Eigen::VectorXd m(1);
        m(0) = v;
        return m;
    };
    auto cov1 = [](double sd) {
        Eigen::MatrixXd c(1, 1);
        c(0, 0) = sd * sd;
        return c;
    };
    return std::make_shared<const GaussianMixture>(
        std::vector<double>{0.35, 0.40, 0.25},
        std::vector<Eigen::VectorXd>{vec1(-1.5), vec1(1.0), vec1(3.5)},
        std::vector<Eigen::MatrixXd>{cov1(0.7), cov1(0.8), cov1(0.9)});
}

// Poisson pmf over states 0..n-2 with the tail mass lumped into the last
// entry, for the lattice TV statistic.
inline std::vector<double> poisson_pmf_vector(double intensity, int states) {
    if (states < 2) throw std::invalid_argument("poisson_pmf_vector: need >= 2 states");
    std::vector<double> pmf(static_cast<std::size_t>(states));
    double cum = 0.0;
    for (int k = 0; k + 1 < states; ++k) {
        pmf[static_cast<std::size_t>(k)] =
            std::exp(k * std::log(intensity) - intensity - std::lgamma(k + 1.0));
        cum += pmf[static_cast<std::size_t>(k)];
    }
    pmf[static_cast<std::size_t>(states - 1)] = std::max(0.0, 1.0 - cum);
    return pmf;
}

struct ExperimentConfig {
    std::string experiment = "gamma";  // gamma | discrete | poisson | sv | gmm
    std::string method = "dc";         // dc | standard | rosenthal
    long M = 10000;                    // draws per worker
    long burn_in = 0;
    std::uint64_t seed = 1;
    std::string out_dir;               // empty = no files written
    int threads = 0;                   // 0 = one thread per worker if available
    std::string proportions = "estimated";     // estimated | exact
    std::string merge_variant = "downsample";  // downsample | weighted | reuse
    std::string sampler;               // gamma: iid (default) | mh; gmm: mh
    long batches = 1;                  // poisson batched-TV comparison

    // Cover estimation (gmm benchmark).
    int W = 3;
    double delta = -1.0;  // overlap mass per adjacent pair; <0 = 0.1/W
    long pilot_size = 10000;

    double gamma_shape = 4.0;
    double gamma_scale = 1.0;
    double discrete_a = 0.003;
    double poisson_intensity = 14.0;
    int lattice_states = 61;  // TV truncation for the Poisson report

    long sv_T = 200;
    int sv_particles = 100;
    long sv_iters = 2000;
    long sv_pilot_iters = 500;
    std::string sv_data;  // return-series CSV; empty = simulate at sv_truth
    SVParams sv_truth{0.55, 0.7, -0.3, 0.3};

    void validate() const {
        auto one_of = [](const std::string& v, std::initializer_list<const char*> allowed) {
            for (const char* a : allowed)
                if (v == a) return true;
            return false;
        };
        if (!one_of(experiment, {"gamma", "discrete", "poisson", "sv", "gmm"}))
            throw std::invalid_argument("config: unknown experiment '" + experiment + "'");
        if (!one_of(method, {"dc", "standard", "rosenthal"}))
            throw std::invalid_argument("config: unknown method '" + method + "'");
        if (!one_of(proportions, {"estimated", "exact"}))
            throw std::invalid_argument("config: proportions must be estimated or exact");
        if (!one_of(merge_variant, {"downsample", "weighted", "reuse"}))
            throw std::invalid_argument("config: unknown merge variant '" + merge_variant + "'");
        if (M < 1) throw std::invalid_argument("config: M must be >= 1");
        if (burn_in < 0 || burn_in >= M)
            throw std::invalid_argument("config: burn-in must lie in [0, M)");
        if (W < 1) throw std::invalid_argument("config: W must be >= 1");
        if (batches < 1) throw std::invalid_argument("config: batches must be >= 1");
        if (delta > 0.0 && W > 1 && delta >= 1.0 / static_cast<double>(W))
            throw std::invalid_argument("config: delta too large for W parts");
        if (experiment == "sv" && proportions == "exact")
            throw std::invalid_argument("config: sv has no exact proportion oracle");
    }
};

struct RunResult {
    SummaryRow summary;            // method, N, runtime_s, quality
    double worker_max_s = 0.0;     // slowest worker's sampling wall time
    double overhead_s = 0.0;       // proportion estimation + merge wall time
    std::vector<double> worker_s;  // per-worker sampling wall time
    long merged_N = 0;
    MergedSample merged;
    std::vector<SubsetSample> samples;
    ProportionEstimate props;  // empty for standard/rosenthal
};

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Run one job per worker, each timing its own sampling span. Thread
// scheduling cannot change results: worker j writes only slot j and draws
// from its own seed stream.
inline void run_workers(std::size_t n, int threads,
                        const std::function<void(std::size_t)>& job,
                        std::vector<double>& times) {
    times.assign(n, 0.0);
    auto timed_job = [&](std::size_t j) {
        const auto t0 = std::chrono::steady_clock::now();
        job(j);
        times[j] = seconds_since(t0);
    };
    unsigned hw = std::thread::hardware_concurrency();
    const int want = threads > 0 ? threads : static_cast<int>(hw == 0 ? 1 : hw);
    if (want <= 1 || n <= 1) {
        for (std::size_t j = 0; j < n; ++j) timed_job(j);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(n);
    for (std::size_t j = 0; j < n; ++j) pool.emplace_back(timed_job, j);
    for (auto& t : pool) t.join();
}

inline MergedSample concat_samples(const std::vector<SubsetSample>& samples) {
    MergedSample m;
    m.dims = samples.empty() ? 1 : samples[0].dims;
    for (const auto& s : samples)
        for (long k = 0; k < s.M; ++k) {
            auto d = s.draw(k);
            m.draws.insert(m.draws.end(), d.begin(), d.end());
            m.source.push_back(static_cast<std::int32_t>(s.part));
        }
    return m;
}

inline std::vector<double> first_coordinate(const MergedSample& m) {
    std::vector<double> x;
    x.reserve(m.size());
    for (std::size_t k = 0; k < m.size(); ++k) x.push_back(m.draw(k)[0]);
    return x;
}

inline ProportionEstimate exact_props_from(const TrueProportions& tp,
                                           const std::vector<SubsetSample>& samples) {
    ProportionEstimate p;
    p.pi = tp.pi;
    p.exclusive = tp.exclusive;
    for (const auto& s : samples) {
        p.hits_lower.push_back(s.hits_lower);
        p.hits_upper.push_back(s.hits_upper);
        p.M.push_back(s.M);
    }
    return p;
}

inline MergedSample run_merge(const std::vector<SubsetSample>& samples,
                              const ProportionEstimate& props, const CoverView& view,
                              const std::string& variant, std::uint64_t seed) {
    Rng probe = Rng::stream(seed, "merge");
    const std::uint64_t merge_seed = probe.next_u64();
    if (variant == "downsample") return merge(samples, props, merge_seed);
    // Match the thinning merge's expected output size so the variants are
    // comparable at equal N.
    double keep = 0.0;
    const double pi_max = *std::max_element(props.pi.begin(), props.pi.end());
    for (std::size_t j = 0; j < samples.size(); ++j)
        keep += (props.pi[j] / pi_max) * (1.0 - samples[j].prior_fraction());
    const long n_out = std::max<long>(1, std::lround(keep * static_cast<double>(samples[0].M)));
    if (variant == "weighted") return merge_weighted(samples, props, n_out, merge_seed);
    return merge_with_reuse(samples, props, view, n_out, merge_seed);
}

}  // namespace detail

// Continuous-target DC pipeline over an explicit cover. Returns samples,
// proportions, merged sample, and timing; writes nothing.
inline RunResult run_dc_continuous(const TargetModel& target, const LinkedCover& cover,
                                   const ExperimentConfig& cfg) {
    RunResult r;
    const std::size_t W = cover.size();
    r.samples.resize(W);
    const std::string sampler = cfg.sampler.empty()
                                    ? (target.cdf && target.quantile ? "iid" : "mh")
                                    : cfg.sampler;

    auto job = [&](std::size_t j) {
        Rng probe = Rng::stream(cfg.seed, j);
        const std::uint64_t wseed = probe.next_u64();
        if (sampler == "iid") {
            r.samples[j] = iid_subset_sample(target, cover, j, cfg.M, wseed);
        } else if (sampler == "mh") {
            SubsetChainConfig sc;
            sc.M = cfg.M;
            sc.burn_in = cfg.burn_in;
            sc.seed = wseed;
            sc.unit_step = cfg.experiment == "poisson";
            if (cfg.experiment == "poisson") {
                // Fair start: every chain begins at the mode, which lies in
                // both parts of the mode-split cover.
                const double mode = std::floor(cfg.poisson_intensity);
                sc.start = {std::clamp(mode, cover.part(j).lo[0], cover.part(j).hi[0])};
            }
            r.samples[j] = subset_mh(target, cover, j, sc);
        } else {
            throw std::invalid_argument("run: unknown sampler '" + sampler + "'");
        }
    };
    detail::run_workers(W, cfg.threads, job, r.worker_s);
    r.worker_max_s = *std::max_element(r.worker_s.begin(), r.worker_s.end());

    const auto t0 = std::chrono::steady_clock::now();
    if (cfg.proportions == "exact")
        r.props = detail::exact_props_from(true_proportions(target, cover), r.samples);
    else
        r.props = estimate_proportions(r.samples);
    r.merged = detail::run_merge(r.samples, r.props, cover_view(cover), cfg.merge_variant,
                                 cfg.seed);
    r.overhead_s = detail::seconds_since(t0);
    r.merged_N = static_cast<long>(r.merged.size());
    return r;
}

// Discrete-kernel DC pipeline (7-state benchmark).
inline RunResult run_dc_discrete(const DiscreteTarget& target, const DiscreteCover& cover,
                                 const ExperimentConfig& cfg) {
    RunResult r;
    const std::size_t W = cover.size();
    r.samples.resize(W);
    auto job = [&](std::size_t j) {
        Rng probe = Rng::stream(cfg.seed, j);
        SubsetChainConfig sc;
        sc.M = cfg.M;
        sc.burn_in = cfg.burn_in;
        sc.seed = probe.next_u64();
        r.samples[j] = discrete_subset_chain(target, cover, j, sc);
    };
    detail::run_workers(W, cfg.threads, job, r.worker_s);
    r.worker_max_s = *std::max_element(r.worker_s.begin(), r.worker_s.end());

    const auto t0 = std::chrono::steady_clock::now();
    if (cfg.proportions == "exact") {
        const std::vector<double> lambda = stationary_distribution(target.kernel);
        r.props = detail::exact_props_from(true_proportions(lambda, cover), r.samples);
    } else {
        r.props = estimate_proportions(r.samples);
    }
    r.merged = detail::run_merge(r.samples, r.props, cover_view(cover), cfg.merge_variant,
                                 cfg.seed);
    r.overhead_s = detail::seconds_since(t0);
    r.merged_N = static_cast<long>(r.merged.size());
    return r;
}

namespace detail {

// Standard and Rosenthal baselines share one shape: full-space chains, one
// or W of them, started either at the default placement or in separate
// cover parts, concatenated after burn-in.
inline RunResult run_baseline_continuous(const TargetModel& target, const LinkedCover& cover,
                                         const ExperimentConfig& cfg) {
    RunResult r;
    const bool rosenthal = cfg.method == "rosenthal";
    const std::size_t chains = rosenthal ? cover.size() : 1;
    // Rosenthal chains run the same M-step budget as a DC worker and drop
    // their burn-in from it; a standard chain retains all M draws.
    const long burn = rosenthal ? std::max<long>(cfg.M / 10, cfg.burn_in) : cfg.burn_in;
    const long retain = rosenthal ? cfg.M - burn : cfg.M;
    if (retain < 1) throw std::invalid_argument("run: burn-in leaves no draws");
    const LinkedCover full(cover.support(), {cover.support()});

    r.samples.resize(chains);
    auto job = [&](std::size_t j) {
        Rng probe = Rng::stream(cfg.seed, j);
        SubsetChainConfig sc;
        sc.M = retain;
        sc.burn_in = burn;
        sc.seed = probe.next_u64();
        sc.unit_step = cfg.experiment == "poisson";
        if (cfg.experiment == "poisson") {
            const double mode = std::floor(cfg.poisson_intensity);
            if (rosenthal) {
                const Region& part = cover.part(j);
                sc.start = {std::isfinite(part.hi[0]) ? std::floor(0.5 * (part.lo[0] + part.hi[0]))
                                                      : part.lo[0] + std::floor(mode / 2.0)};
            } else {
                sc.start = {mode};
            }
        } else if (rosenthal) {
            const Region& part = cover.part(j);
            std::vector<double> start(part.dim());
            for (std::size_t d = 0; d < part.dim(); ++d) {
                const double a = part.lo[d], b = part.hi[d];
                if (std::isfinite(a) && std::isfinite(b)) start[d] = 0.5 * (a + b);
                else if (std::isfinite(a)) start[d] = a + 1.0;
                else if (std::isfinite(b)) start[d] = b - 1.0;
                else start[d] = 0.0;
            }
            sc.start = start;
        }
        r.samples[j] = subset_mh(target, full, 0, sc);
        r.samples[j].part = j;  // which cover part seeded this chain's start
    };
    detail::run_workers(chains, cfg.threads, job, r.worker_s);
    r.worker_max_s = *std::max_element(r.worker_s.begin(), r.worker_s.end());
    r.merged = detail::concat_samples(r.samples);
    r.merged_N = static_cast<long>(r.merged.size());
    return r;
}

inline RunResult run_baseline_discrete(const DiscreteTarget& target, const DiscreteCover& cover,
                                       const ExperimentConfig& cfg) {
    RunResult r;
    const bool rosenthal = cfg.method == "rosenthal";
    const std::size_t chains = rosenthal ? cover.size() : 1;
    const long burn = rosenthal ? std::max<long>(cfg.M / 10, cfg.burn_in) : cfg.burn_in;
    const long retain = rosenthal ? cfg.M - burn : cfg.M;
    if (retain < 1) throw std::invalid_argument("run: burn-in leaves no draws");
    const std::vector<int> all_states = [&] {
        std::vector<int> v(static_cast<std::size_t>(target.states));
        std::iota(v.begin(), v.end(), 0);
        return v;
    }();
    const DiscreteCover full(target.states, {all_states});

    r.samples.resize(chains);
    auto job = [&](std::size_t j) {
        Rng probe = Rng::stream(cfg.seed, j);
        SubsetChainConfig sc;
        sc.M = retain;
        sc.burn_in = burn;
        sc.seed = probe.next_u64();
        if (rosenthal) {
            const auto& part = cover.part(j);
            sc.start = {static_cast<double>(part[part.size() / 2])};
        }
        r.samples[j] = discrete_subset_chain(target, full, 0, sc);
        r.samples[j].part = j;
    };
    detail::run_workers(chains, cfg.threads, job, r.worker_s);
    r.worker_max_s = *std::max_element(r.worker_s.begin(), r.worker_s.end());
    r.merged = detail::concat_samples(r.samples);
    r.merged_N = static_cast<long>(r.merged.size());
    return r;
}

}  // namespace detail

// PMMH pipeline: one restricted chain per cover part (dc), one full-space
// chain (standard), or W full-space chains started in separate parts
// (rosenthal). The proposal covariance comes from a short full-space pilot
// run scaled by 2.38^2 / 4, falling back to a fixed diagonal.
inline RunResult run_sv(const ExperimentConfig& cfg, std::vector<double>* data_out = nullptr,
                        std::vector<PmmhResult>* chains_out = nullptr) {
    Rng data_probe = Rng::stream(cfg.seed, "sv-data");
    const std::vector<double> y = cfg.sv_data.empty()
                                      ? simulate_sv(cfg.sv_truth, cfg.sv_T, data_probe.next_u64()).y
                                      : read_return_series_csv(cfg.sv_data);
    if (data_out) *data_out = y;

    PmmhConfig pilot_cfg;
    pilot_cfg.iters = std::min(cfg.sv_pilot_iters, cfg.sv_iters);
    pilot_cfg.pf.n_particles = cfg.sv_particles;
    Rng pilot_probe = Rng::stream(cfg.seed, "sv-pilot");
    const PmmhResult pilot = pmmh_chain(y, default_sv_prior(), sv_support(), pilot_cfg,
                                        pilot_probe.next_u64());

    // Empirical covariance of the pilot chain, scaled; a degenerate pilot
    // keeps the fallback diagonal.
    std::vector<double> prop_cov;
    if (pilot.acceptance_rate > 0.0 && pilot.size() >= 10) {
        Eigen::MatrixXd X(pilot.size(), 4);
        for (long k = 0; k < pilot.size(); ++k) {
            X(k, 0) = pilot.phi[static_cast<std::size_t>(k)];
            X(k, 1) = pilot.beta[static_cast<std::size_t>(k)];
            X(k, 2) = pilot.rho[static_cast<std::size_t>(k)];
            X(k, 3) = pilot.sigma[static_cast<std::size_t>(k)];
        }
        const Eigen::RowVector4d mean = X.colwise().mean();
        Eigen::Matrix4d C = (X.rowwise() - mean).transpose() * (X.rowwise() - mean) /
                            static_cast<double>(pilot.size() - 1);
        C *= 2.38 * 2.38 / 4.0;
        Eigen::LLT<Eigen::Matrix4d> llt(C);
        if (llt.info() == Eigen::Success) {
            prop_cov.resize(16);
            for (int i = 0; i < 4; ++i)
                for (int j = 0; j < 4; ++j) prop_cov[static_cast<std::size_t>(i * 4 + j)] = C(i, j);
        }
    }

    const LinkedCover cover = sv_cover();
    const bool dc = cfg.method == "dc";
    const bool rosenthal = cfg.method == "rosenthal";
    const std::size_t chains = cfg.method == "standard" ? 1 : cover.size();
    const long burn = rosenthal ? std::max<long>(cfg.sv_iters / 10, cfg.burn_in) : cfg.burn_in;
    const long retain = cfg.sv_iters - burn;
    if (retain < 1) throw std::invalid_argument("run: burn-in leaves no draws");

    RunResult r;
    r.samples.resize(chains);
    std::vector<PmmhResult> results(chains);
    auto job = [&](std::size_t j) {
        PmmhConfig pc;
        pc.iters = cfg.sv_iters;
        pc.pf.n_particles = cfg.sv_particles;
        pc.proposal_cov = prop_cov;
        const Region restriction = dc ? cover.part(j) : cover.support();
        if (rosenthal) {
            // Start in separate parts: midpoint of the part's phi interval.
            pc.init = {0.5 * (cover.part(j).lo[0] + cover.part(j).hi[0]), 1.0, 0.0, 0.5};
        }
        Rng probe = Rng::stream(cfg.seed, j);
        const PmmhResult chain = pmmh_chain(y, default_sv_prior(), restriction, pc,
                                            probe.next_u64());

        SubsetSample s;
        s.part = j;
        s.dims = 4;
        s.M = retain;
        s.burn_in = burn;
        s.seed = cfg.seed;
        s.acceptance_rate = chain.acceptance_rate;
        for (long k = burn; k < chain.size(); ++k) {
            const SVParams p = chain.row(k);
            s.draws.insert(s.draws.end(), {p.phi, p.beta, p.rho, p.sigma});
        }
        for (long k = 0; k < retain; ++k) {
            auto x = s.draw(k);
            s.in_prior.push_back(dc && cover.in_prior_overlap(j, x) ? 1 : 0);
            if (dc && j > 0 && intersect(cover.part(j - 1), cover.part(j)).contains(x))
                ++s.hits_lower;
            if (dc && j + 1 < cover.size() && intersect(cover.part(j), cover.part(j + 1)).contains(x))
                ++s.hits_upper;
        }
        r.samples[j] = std::move(s);
        results[j] = std::move(chain);
    };
    detail::run_workers(chains, cfg.threads, job, r.worker_s);
    r.worker_max_s = *std::max_element(r.worker_s.begin(), r.worker_s.end());
    if (chains_out) *chains_out = std::move(results);

    const auto t0 = std::chrono::steady_clock::now();
    if (dc) {
        r.props = estimate_proportions(r.samples);
        r.merged = detail::run_merge(r.samples, r.props, cover_view(cover), cfg.merge_variant,
                                     cfg.seed);
    } else {
        r.merged = detail::concat_samples(r.samples);
    }
    r.overhead_s = detail::seconds_since(t0);
    r.merged_N = static_cast<long>(r.merged.size());
    return r;
}

namespace detail {

inline void write_common_outputs(const RunResult& r, const ExperimentConfig& cfg,
                                 const std::string& prefix, const json& extra_meta) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    const std::string base = (fs::path(cfg.out_dir) / prefix).string();
    for (const auto& s : r.samples)
        write_subset_sample_csv(s, base + "_part" + std::to_string(s.part) + ".csv",
                                base + "_part" + std::to_string(s.part) + ".json");
    if (!r.props.pi.empty()) write_json(proportions_to_json(r.props), base + "_props.json");
    write_merged_sample_csv(r.merged, base + "_merged.csv", base + "_merged_meta.json",
                            cfg.seed);
    write_summary_csv({r.summary}, base + "_summary.csv");
    json timing{{"worker_s", r.worker_s},
                {"worker_max_s", r.worker_max_s},
                {"overhead_s", r.overhead_s}};
    // Timing lives in its own file so every other output is byte-stable
    // across reruns of the same seed.
    write_json(timing, base + "_timing.json");
    json meta = extra_meta;
    meta["experiment"] = cfg.experiment;
    meta["method"] = cfg.method;
    meta["seed"] = cfg.seed;
    meta["M"] = cfg.M;
    meta["merge_variant"] = cfg.merge_variant;
    meta["proportions"] = cfg.proportions;
    write_json(meta, base + "_config.json");
}

}  // namespace detail

// Run one experiment configuration end to end; writes the result bundle
// under out_dir when set.
inline RunResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    RunResult r;
    json extra;
    std::string prefix = cfg.experiment + "_" + cfg.method;
    std::optional<json> cover_json;

    if (cfg.experiment == "gamma" || cfg.experiment == "gmm") {
        TargetModel target;
        LinkedCover cover = gamma_cover();
        if (cfg.experiment == "gamma") {
            target = gamma_target(cfg.gamma_shape, cfg.gamma_scale);
            extra["gamma_shape"] = cfg.gamma_shape;
            extra["gamma_scale"] = cfg.gamma_scale;
        } else {
            target = gaussian_mixture_target(default_gmm());
            Rng probe = Rng::stream(cfg.seed, "gmm-cover");
            EstimatedCover est = estimate_cover(target.log_density, target.support,
                                                cfg.pilot_size, cfg.W, probe.next_u64(),
                                                cfg.delta);
            cover = std::move(est.cover);
            extra["W"] = cfg.W;
            extra["delta"] = cfg.delta > 0.0 ? cfg.delta : 0.1 / static_cast<double>(cfg.W);
        }
        r = cfg.method == "dc" ? run_dc_continuous(target, cover, cfg)
                               : detail::run_baseline_continuous(target, cover, cfg);
        const auto x = detail::first_coordinate(r.merged);
        r.summary.quality = ks_distance(x, target.cdf);
        cover_json = cover_to_json(cover);
    } else if (cfg.experiment == "poisson") {
        TargetModel target = poisson_target(cfg.poisson_intensity);
        LinkedCover cover = poisson_cover(cfg.poisson_intensity);
        ExperimentConfig c = cfg;
        c.sampler = "mh";
        r = cfg.method == "dc" ? run_dc_continuous(target, cover, c)
                               : detail::run_baseline_continuous(target, cover, c);
        const auto x = detail::first_coordinate(r.merged);
        const auto pmf = poisson_pmf_vector(cfg.poisson_intensity, cfg.lattice_states);
        r.summary.quality = tv_lattice(x, pmf).tv;
        extra["poisson_intensity"] = cfg.poisson_intensity;
        cover_json = cover_to_json(cover);
    } else if (cfg.experiment == "discrete") {
        DiscreteTarget target = seven_state_chain(cfg.discrete_a);
        DiscreteCover cover = seven_state_cover();
        r = cfg.method == "dc" ? run_dc_discrete(target, cover, cfg)
                               : detail::run_baseline_discrete(target, cover, cfg);
        const std::vector<double> lambda = stationary_distribution(target.kernel);
        std::vector<int> states;
        states.reserve(r.merged.size());
        for (std::size_t k = 0; k < r.merged.size(); ++k)
            states.push_back(static_cast<int>(r.merged.draw(k)[0]));
        r.summary.quality = tv_discrete(states, lambda).tv;
        extra["discrete_a"] = cfg.discrete_a;
        cover_json = cover_to_json(cover);
    } else {  // sv
        std::vector<double> y;
        std::vector<PmmhResult> chains;
        ExperimentConfig c = cfg;
        c.M = cfg.sv_iters;  // summary N bookkeeping
        r = run_sv(c, &y, &chains);
        r.summary.quality = std::numeric_limits<double>::quiet_NaN();
        extra["sv_T"] = static_cast<long>(y.size());
        extra["sv_particles"] = cfg.sv_particles;
        extra["sv_iters"] = cfg.sv_iters;
        if (!cfg.out_dir.empty()) {
            namespace fs = std::filesystem;
            fs::create_directories(cfg.out_dir);
            const std::string base = (fs::path(cfg.out_dir) / prefix).string();
            write_return_series_csv(y, base + "_returns.csv");
            for (std::size_t j = 0; j < chains.size(); ++j)
                write_pmmh_chain_csv(chains[j], base + "_chain" + std::to_string(j) + ".csv");
        }
    }

    r.summary.method = cfg.experiment + "-" + cfg.method;
    if (cfg.experiment == "discrete") {
        // Keep the kernel parameter in the label; the report tool groups
        // hard (small a) rows above nice ones.
        std::ostringstream os;
        os << "(a=" << cfg.discrete_a << ")";
        r.summary.method += os.str();
    }
    r.summary.N = r.merged_N;
    r.summary.runtime_s = r.worker_max_s + r.overhead_s;

    if (!cfg.out_dir.empty()) {
        detail::write_common_outputs(r, cfg, prefix, extra);
        if (cover_json) {
            namespace fs = std::filesystem;
            write_json(*cover_json,
                       (fs::path(cfg.out_dir) / (prefix + "_cover.json")).string());
        }
    }
    return r;
}

// Batched mean-TV comparison (the Poisson benchmark): `batches`
// independent replicates per method, reporting per-method mean TV and its
// standard error.
struct BatchComparison {
    double mean_tv_dc = 0.0, se_tv_dc = 0.0;
    double mean_tv_standard = 0.0, se_tv_standard = 0.0;
    long batches = 0;
    long failures_dc = 0;  // batches whose proportion estimate failed
};

inline BatchComparison compare_poisson_batches(const ExperimentConfig& cfg) {
    cfg.validate();
    const TargetModel target = poisson_target(cfg.poisson_intensity);
    const LinkedCover cover = poisson_cover(cfg.poisson_intensity);
    const auto pmf = poisson_pmf_vector(cfg.poisson_intensity, cfg.lattice_states);

    BatchComparison out;
    out.batches = cfg.batches;
    double s_dc = 0.0, s2_dc = 0.0, s_st = 0.0, s2_st = 0.0;
    long n_dc = 0;
    for (long b = 0; b < cfg.batches; ++b) {
        ExperimentConfig c = cfg;
        c.out_dir.clear();
        c.batches = 1;
        Rng probe = Rng::stream(cfg.seed, static_cast<std::uint64_t>(b));
        c.seed = probe.next_u64();
        c.method = "dc";
        c.sampler = "mh";
        try {
            RunResult dc = run_dc_continuous(target, cover, c);
            const auto x = detail::first_coordinate(dc.merged);
            const double tv = tv_lattice(x, pmf).tv;
            s_dc += tv;
            s2_dc += tv * tv;
            ++n_dc;
        } catch (const FailureError&) {
            ++out.failures_dc;
        }
        c.method = "standard";
        RunResult st = detail::run_baseline_continuous(target, cover, c);
        const auto xs = detail::first_coordinate(st.merged);
        const double tvs = tv_lattice(xs, pmf).tv;
        s_st += tvs;
        s2_st += tvs * tvs;
    }
    const double nb = static_cast<double>(cfg.batches);
    if (n_dc > 0) {
        out.mean_tv_dc = s_dc / static_cast<double>(n_dc);
        const double var = (s2_dc - s_dc * s_dc / static_cast<double>(n_dc)) /
                           std::max(1.0, static_cast<double>(n_dc - 1));
        out.se_tv_dc = std::sqrt(var / static_cast<double>(n_dc));
    }
    out.mean_tv_standard = s_st / nb;
    const double var_st = (s2_st - s_st * s_st / nb) / std::max(1.0, nb - 1.0);
    out.se_tv_standard = std::sqrt(var_st / nb);
    return out;
}

inline void emit_summary(const std::vector<SummaryRow>& rows, const std::string& path) {
    write_summary_csv(rows, path);
}

}  // namespace dcsamp
