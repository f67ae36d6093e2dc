// Command-line harness: cover estimation, per-part sampling, merging,
// expectation evaluation, the benchmark suite, and report assembly.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <dcsamp/dcsamp.hpp>

namespace fs = std::filesystem;
using namespace dcsamp;

namespace {

std::string default_out_dir() {
    const char* env = std::getenv("DCSAMP_OUT");
    return env && *env ? env : ".";
}

// --config JSON is applied before flag parsing so explicit flags win.
ExperimentConfig load_config_file(int argc, char** argv) {
    ExperimentConfig cfg;
    cfg.out_dir = default_out_dir();
    std::string path;
    for (int i = 1; i + 1 < argc; ++i)
        if (std::string(argv[i]) == "--config") path = argv[i + 1];
    if (path.empty()) return cfg;
    const json j = read_json(path);
    cfg.experiment = j.value("experiment", cfg.experiment);
    cfg.method = j.value("method", cfg.method);
    cfg.M = j.value("M", cfg.M);
    cfg.burn_in = j.value("burn_in", cfg.burn_in);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.out_dir = j.value("out_dir", cfg.out_dir);
    cfg.threads = j.value("threads", cfg.threads);
    cfg.proportions = j.value("proportions", cfg.proportions);
    cfg.merge_variant = j.value("merge_variant", cfg.merge_variant);
    cfg.sampler = j.value("sampler", cfg.sampler);
    cfg.batches = j.value("batches", cfg.batches);
    cfg.W = j.value("W", cfg.W);
    cfg.delta = j.value("delta", cfg.delta);
    cfg.pilot_size = j.value("pilot_size", cfg.pilot_size);
    cfg.gamma_shape = j.value("gamma_shape", cfg.gamma_shape);
    cfg.gamma_scale = j.value("gamma_scale", cfg.gamma_scale);
    cfg.discrete_a = j.value("discrete_a", cfg.discrete_a);
    cfg.poisson_intensity = j.value("poisson_intensity", cfg.poisson_intensity);
    cfg.lattice_states = j.value("lattice_states", cfg.lattice_states);
    cfg.sv_T = j.value("sv_T", cfg.sv_T);
    cfg.sv_particles = j.value("sv_particles", cfg.sv_particles);
    cfg.sv_iters = j.value("sv_iters", cfg.sv_iters);
    cfg.sv_pilot_iters = j.value("sv_pilot_iters", cfg.sv_pilot_iters);
    cfg.sv_data = j.value("sv_data", cfg.sv_data);
    return cfg;
}

void add_common_flags(CLI::App* cmd, ExperimentConfig& cfg) {
    cmd->add_option("--config", "JSON config file; flags override its values")
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", cfg.seed, "master seed");
    cmd->add_option("--out-dir", cfg.out_dir, "output directory (env DCSAMP_OUT)");
    cmd->add_option("--threads", cfg.threads, "worker threads; 0 = auto");
}

TargetModel make_target(const ExperimentConfig& cfg, const std::string& name) {
    if (name == "gamma") return gamma_target(cfg.gamma_shape, cfg.gamma_scale);
    if (name == "poisson") return poisson_target(cfg.poisson_intensity);
    if (name == "gmm") return gaussian_mixture_target(default_gmm());
    throw CLI::ValidationError("--target", "unknown target '" + name + "'");
}

LinkedCover load_cover(const ExperimentConfig& cfg, const std::string& arg) {
    if (arg == "gamma") return gamma_cover();
    if (arg == "poisson") return poisson_cover(cfg.poisson_intensity);
    return cover_from_json(read_json(arg));
}

std::vector<SubsetSample> read_parts(const std::string& prefix) {
    std::vector<SubsetSample> samples;
    for (std::size_t j = 0;; ++j) {
        const std::string csv = prefix + "_part" + std::to_string(j) + ".csv";
        const std::string meta = prefix + "_part" + std::to_string(j) + ".json";
        if (!fs::exists(csv) || !fs::exists(meta)) break;
        samples.push_back(read_subset_sample_csv(csv, meta));
    }
    if (samples.empty())
        throw CLI::ValidationError("--in", "no part files found at prefix '" + prefix + "'");
    return samples;
}

int cmd_cover(const ExperimentConfig& cfg, const std::string& target_name,
              const std::string& out) {
    const TargetModel target = make_target(cfg, target_name);
    Rng probe = Rng::stream(cfg.seed, "gmm-cover");
    EstimatedCover est = estimate_cover(target.log_density, target.support, cfg.pilot_size,
                                        cfg.W, probe.next_u64(), cfg.delta);
    write_json(cover_to_json(est.cover), out);
    std::cout << "cover with " << est.cover.size() << " parts written to " << out << "\n";
    return 0;
}

int cmd_sample(const ExperimentConfig& cfg, const std::string& target_name,
               const std::string& cover_arg, int part, const std::string& out_prefix) {
    const TargetModel target = make_target(cfg, target_name);
    const LinkedCover cover = load_cover(cfg, cover_arg);
    if (part < 0 || static_cast<std::size_t>(part) >= cover.size())
        throw CLI::ValidationError("--part", "part index out of range");
    Rng probe = Rng::stream(cfg.seed, static_cast<std::uint64_t>(part));
    const std::uint64_t wseed = probe.next_u64();

    SubsetSample s;
    const std::string sampler =
        cfg.sampler.empty() ? (target.cdf && target.quantile ? "iid" : "mh") : cfg.sampler;
    if (sampler == "iid") {
        s = iid_subset_sample(target, cover, static_cast<std::size_t>(part), cfg.M, wseed);
    } else if (sampler == "mh") {
        SubsetChainConfig sc;
        sc.M = cfg.M;
        sc.burn_in = cfg.burn_in;
        sc.seed = wseed;
        sc.unit_step = target_name == "poisson";
        s = subset_mh(target, cover, static_cast<std::size_t>(part), sc);
    } else {
        throw CLI::ValidationError("--sampler", "unknown sampler '" + sampler + "'");
    }
    write_subset_sample_csv(s, out_prefix + "_part" + std::to_string(part) + ".csv",
                            out_prefix + "_part" + std::to_string(part) + ".json");
    std::cout << "part " << part << ": " << s.M << " draws, acceptance "
              << s.acceptance_rate << "\n";
    return 0;
}

int cmd_merge(const ExperimentConfig& cfg, const std::string& in_prefix,
              const std::string& cover_arg, const std::string& out_prefix) {
    const std::vector<SubsetSample> samples = read_parts(in_prefix);
    const ProportionEstimate props = estimate_proportions_unequal(samples);
    write_json(proportions_to_json(props), out_prefix + "_props.json");

    MergedSample merged;
    Rng probe = Rng::stream(cfg.seed, "merge");
    const std::uint64_t mseed = probe.next_u64();
    if (cfg.merge_variant == "downsample") {
        merged = merge(samples, props, mseed);
    } else {
        long n_out = 0;
        for (const auto& s : samples) n_out += s.M;
        if (cfg.merge_variant == "weighted") {
            merged = merge_weighted(samples, props, n_out, mseed);
        } else {
            if (cover_arg.empty())
                throw CLI::ValidationError("--cover", "reuse merge needs the cover");
            const LinkedCover cover = load_cover(cfg, cover_arg);
            merged = merge_with_reuse(samples, props, cover_view(cover), n_out, mseed);
        }
    }
    write_merged_sample_csv(merged, out_prefix + "_merged.csv",
                            out_prefix + "_merged_meta.json", cfg.seed);
    std::cout << "merged " << merged.size() << " draws (" << cfg.merge_variant << ")\n";
    return 0;
}

int cmd_expect(const ExperimentConfig& cfg, const std::string& in_prefix,
               const std::string& h_name, double lo, double hi, const std::string& out) {
    const std::vector<SubsetSample> samples = read_parts(in_prefix);
    const ProportionEstimate props = estimate_proportions_unequal(samples);

    std::function<double(std::span<const double>)> h;
    std::string label = h_name;
    if (h_name == "mean") {
        h = [](std::span<const double> x) { return x[0]; };
    } else if (h_name == "moment2") {
        h = [](std::span<const double> x) { return x[0] * x[0]; };
    } else if (h_name == "indicator") {
        h = [lo, hi](std::span<const double> x) {
            return (x[0] >= lo && x[0] <= hi) ? 1.0 : 0.0;
        };
        std::ostringstream os;
        os << "indicator[" << lo << "," << hi << "]";
        label = os.str();
    } else {
        throw CLI::ValidationError("--fn", "unknown integrand '" + h_name + "'");
    }
    (void)cfg;
    const ExpectationResult r = estimate_expectation(h, samples, props);
    write_json(expectation_to_json(label, r), out);
    std::cout << label << " = " << r.estimate << " +- " << r.stderr_ << "\n";
    return 0;
}

int cmd_bench(ExperimentConfig cfg, const std::string& experiment,
              const std::string& methods) {
    cfg.experiment = experiment;

    if (experiment == "poisson" && cfg.batches > 1) {
        const BatchComparison c = compare_poisson_batches(cfg);
        fs::create_directories(cfg.out_dir);
        const std::string base = (fs::path(cfg.out_dir) / "poisson_batches").string();
        write_json(json{{"batches", c.batches},
                        {"mean_tv_dc", c.mean_tv_dc},
                        {"se_tv_dc", c.se_tv_dc},
                        {"mean_tv_standard", c.mean_tv_standard},
                        {"se_tv_standard", c.se_tv_standard},
                        {"failures_dc", c.failures_dc}},
                   base + ".json");
        std::vector<SummaryRow> rows;
        rows.push_back({"poisson-dc(batched)", cfg.M, 0.0, c.mean_tv_dc});
        rows.push_back({"poisson-standard(batched)", cfg.M, 0.0, c.mean_tv_standard});
        write_summary_csv(rows, base + "_summary.csv");
        std::cout << "mean TV dc " << c.mean_tv_dc << " (se " << c.se_tv_dc << "), standard "
                  << c.mean_tv_standard << " (se " << c.se_tv_standard << ") over "
                  << c.batches << " batches\n";
        return 0;
    }

    std::vector<std::string> run_methods;
    if (methods == "all") run_methods = {"dc", "standard", "rosenthal"};
    else run_methods = {methods};
    if (experiment == "sv" && methods == "all") run_methods = {"dc", "standard"};

    std::vector<SummaryRow> rows;
    for (const auto& m : run_methods) {
        cfg.method = m;
        const RunResult r = run_experiment(cfg);
        rows.push_back(r.summary);
        std::cout << r.summary.method << ": N=" << r.summary.N << " quality="
                  << r.summary.quality << " runtime=" << r.summary.runtime_s << "s\n";
    }
    const std::string path =
        (fs::path(cfg.out_dir) / (experiment + "_summary.csv")).string();
    write_summary_csv(rows, path);
    std::cout << "summary written to " << path << "\n";
    return 0;
}

// Combine summary CSVs into one table. Discrete rows keep the benchmark's
// grouping: smaller `a` (the hard case) above larger.
int cmd_report(const std::vector<std::string>& inputs, const std::string& out) {
    struct Row {
        std::string line;
        double a = -1.0;
        std::size_t order = 0;
    };
    std::vector<Row> rows;
    for (const auto& path : inputs) {
        std::ifstream f(path);
        if (!f) throw CLI::ValidationError("--in", "cannot open " + path);
        std::string line;
        bool first = true;
        while (std::getline(f, line)) {
            if (line.empty()) continue;
            if (first) {
                first = false;
                continue;  // header
            }
            Row r;
            r.line = line;
            r.order = rows.size();
            const auto pos = line.find("(a=");
            if (pos != std::string::npos) r.a = std::stod(line.substr(pos + 3));
            rows.push_back(std::move(r));
        }
    }
    std::stable_sort(rows.begin(), rows.end(), [](const Row& x, const Row& y) {
        const bool xa = x.a >= 0.0, ya = y.a >= 0.0;
        if (xa != ya) return xa;  // discrete rows first, grouped by a
        if (xa && x.a != y.a) return x.a < y.a;
        return x.order < y.order;
    });
    std::ofstream f(out);
    if (!f) throw CLI::ValidationError("--out", "cannot open " + out);
    f << "method,N,runtime_s,tv,tv_times_n\n";
    for (const auto& r : rows) f << r.line << "\n";
    std::cout << rows.size() << " rows written to " << out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    ExperimentConfig cfg = load_config_file(argc, argv);

    CLI::App app{"Decomposition sampling toolkit: split a sample space into an "
                 "ordered overlapping cover, sample the parts independently, and "
                 "merge into one exact sample"};
    app.require_subcommand(1);

    auto* cover_cmd = app.add_subcommand("cover", "estimate a cover from a pilot run");
    std::string cover_target = "gmm", cover_out = "cover.json";
    add_common_flags(cover_cmd, cfg);
    cover_cmd->add_option("--target", cover_target, "gamma | poisson | gmm");
    cover_cmd->add_option("--W", cfg.W, "number of parts");
    cover_cmd->add_option("--delta", cfg.delta, "overlap mass per adjacent pair");
    cover_cmd->add_option("--pilot", cfg.pilot_size, "pilot chain length");
    cover_cmd->add_option("--out", cover_out, "output cover JSON");

    auto* sample_cmd = app.add_subcommand("sample", "draw from one cover part");
    std::string sample_target = "gamma", sample_cover = "gamma", sample_out = "sample";
    int sample_part = 0;
    add_common_flags(sample_cmd, cfg);
    sample_cmd->add_option("--target", sample_target, "gamma | poisson | gmm");
    sample_cmd->add_option("--cover", sample_cover, "gamma | poisson | cover JSON path");
    sample_cmd->add_option("--part", sample_part, "cover part index (0-based)");
    sample_cmd->add_option("--M", cfg.M, "draws to retain");
    sample_cmd->add_option("--burn", cfg.burn_in, "burn-in iterations");
    sample_cmd->add_option("--sampler", cfg.sampler, "iid | mh");
    sample_cmd->add_option("--shape", cfg.gamma_shape, "gamma shape");
    sample_cmd->add_option("--scale", cfg.gamma_scale, "gamma scale");
    sample_cmd->add_option("--intensity", cfg.poisson_intensity, "poisson intensity");
    sample_cmd->add_option("--out", sample_out, "output prefix");

    auto* merge_cmd = app.add_subcommand("merge", "combine part samples into one");
    std::string merge_in = "sample", merge_cover, merge_out = "merge";
    add_common_flags(merge_cmd, cfg);
    merge_cmd->add_option("--in", merge_in, "input prefix from `sample`");
    merge_cmd->add_option("--variant", cfg.merge_variant, "downsample | weighted | reuse");
    merge_cmd->add_option("--cover", merge_cover, "cover (needed for reuse)");
    merge_cmd->add_option("--out", merge_out, "output prefix");

    auto* expect_cmd = app.add_subcommand("expect", "estimate E[h(X)] from part samples");
    std::string expect_in = "sample", expect_h = "mean", expect_out = "expect.json";
    double expect_lo = 0.0, expect_hi = 0.0;
    add_common_flags(expect_cmd, cfg);
    expect_cmd->add_option("--in", expect_in, "input prefix from `sample`");
    expect_cmd->add_option("--fn", expect_h, "mean | moment2 | indicator");
    expect_cmd->add_option("--lo", expect_lo, "indicator lower bound");
    expect_cmd->add_option("--hi", expect_hi, "indicator upper bound");
    expect_cmd->add_option("--out", expect_out, "output JSON");

    auto* bench_cmd = app.add_subcommand("bench", "run a benchmark experiment");
    std::string bench_experiment, bench_methods = "all";
    bench_cmd->require_subcommand(1);
    for (const char* name : {"discrete", "poisson", "gamma", "sv", "gmm"}) {
        auto* sub = bench_cmd->add_subcommand(name);
        add_common_flags(sub, cfg);
        sub->add_option("--method", bench_methods, "dc | standard | rosenthal | all");
        sub->add_option("--M", cfg.M, "draws per worker");
        sub->add_option("--burn", cfg.burn_in, "burn-in iterations");
        sub->add_option("--proportions", cfg.proportions, "estimated | exact");
        sub->add_option("--variant", cfg.merge_variant, "downsample | weighted | reuse");
        sub->add_option("--batches", cfg.batches, "poisson: batched TV comparison");
        sub->add_option("--a", cfg.discrete_a, "discrete: kernel parameter");
        sub->add_option("--shape", cfg.gamma_shape, "gamma shape");
        sub->add_option("--scale", cfg.gamma_scale, "gamma scale");
        sub->add_option("--intensity", cfg.poisson_intensity, "poisson intensity");
        sub->add_option("--W", cfg.W, "gmm: cover parts");
        sub->add_option("--delta", cfg.delta, "gmm: overlap mass");
        sub->add_option("--sv-T", cfg.sv_T, "sv: series length");
        sub->add_option("--sv-iters", cfg.sv_iters, "sv: chain iterations");
        sub->add_option("--sv-particles", cfg.sv_particles, "sv: particle count");
        sub->add_option("--sv-data", cfg.sv_data, "sv: return-series CSV");
        sub->callback([&bench_experiment, name]() { bench_experiment = name; });
    }

    auto* report_cmd = app.add_subcommand("report", "combine summary CSVs into one table");
    std::vector<std::string> report_in;
    std::string report_out = "report.csv";
    report_cmd->add_option("--in", report_in, "summary CSV files")->required();
    report_cmd->add_option("--out", report_out, "combined CSV");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(cover_cmd))
            return cmd_cover(cfg, cover_target,
                             (fs::path(cfg.out_dir) / cover_out).string());
        if (app.got_subcommand(sample_cmd))
            return cmd_sample(cfg, sample_target, sample_cover, sample_part,
                              (fs::path(cfg.out_dir) / sample_out).string());
        if (app.got_subcommand(merge_cmd))
            return cmd_merge(cfg, (fs::path(cfg.out_dir) / merge_in).string(), merge_cover,
                             (fs::path(cfg.out_dir) / merge_out).string());
        if (app.got_subcommand(expect_cmd))
            return cmd_expect(cfg, (fs::path(cfg.out_dir) / expect_in).string(), expect_h,
                              expect_lo, expect_hi,
                              (fs::path(cfg.out_dir) / expect_out).string());
        if (app.got_subcommand(bench_cmd)) return cmd_bench(cfg, bench_experiment, bench_methods);
        if (app.got_subcommand(report_cmd))
            return cmd_report(report_in, (fs::path(cfg.out_dir) / report_out).string());
    } catch (const FailureError& e) {
        // Evaluate the worst-case zero-hit bound at this M so the user can
        // size a retry.
        std::cerr << "error: " << e.what() << "\n"
                  << "hint: at M draws per part the zero-hit probability bound is "
                     "1-(1-p^M)^(2(W-1)); raise M or widen the overlaps\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
