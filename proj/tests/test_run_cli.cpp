// File formats round-trip exactly, and the experiment runner produces
// deterministic, schedule-independent output bundles. The bundle checks
// byte-compare whole directories, masking only wall-clock fields.

#include <catch2/catch_amalgamated.hpp>

#include <dcsamp/dcsamp.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace dcsamp;

namespace {

// Fresh scratch directory under the system temp root. Wiped on entry so
// reruns never see stale files.
std::string fresh_dir(const std::string& name) {
    fs::path p = fs::temp_directory_path() / "dcsamp_tests" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p.string();
}

std::string slurp(const fs::path& p) {
    REQUIRE(fs::exists(p));
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// Summary rows with the runtime_s column blanked, so deterministic fields
// can be compared across runs that differ only in wall time.
std::string mask_runtime(const std::string& csv) {
    std::istringstream in(csv);
    std::ostringstream out;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!first) {
            int field = 0;
            std::string masked;
            for (char c : line) {
                if (c == ',') {
                    ++field;
                    masked += c;
                } else if (field != 2) {
                    masked += c;
                }
            }
            line = masked;
        }
        first = false;
        out << line << '\n';
    }
    return out.str();
}

std::vector<std::string> dir_file_names(const std::string& dir) {
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(dir)) names.push_back(e.path().filename().string());
    std::sort(names.begin(), names.end());
    return names;
}

// Byte-compares two output bundles. Timing files hold wall-clock spans and
// are checked for existence only; the summary gets its runtime column
// masked first.
void require_same_bundle(const std::string& a, const std::string& b) {
    auto names_a = dir_file_names(a);
    auto names_b = dir_file_names(b);
    REQUIRE(names_a == names_b);
    for (const auto& name : names_a) {
        if (name.size() >= 12 && name.substr(name.size() - 12) == "_timing.json") continue;
        std::string ca = slurp(fs::path(a) / name);
        std::string cb = slurp(fs::path(b) / name);
        if (name.size() >= 12 && name.substr(name.size() - 12) == "_summary.csv") {
            ca = mask_runtime(ca);
            cb = mask_runtime(cb);
        }
        INFO("file " << name);
        REQUIRE(ca == cb);
    }
}

long count_lines(const fs::path& p) {
    std::ifstream f(p);
    long n = 0;
    std::string line;
    while (std::getline(f, line)) ++n;
    return n;
}

}  // namespace

TEST_CASE("covers and regions survive a json round trip") {
    SECTION("linked cover with unbounded sides") {
        LinkedCover c = gamma_cover();
        const std::string dir = fresh_dir("roundtrip_cover");
        write_json(cover_to_json(c), dir + "/cover.json");
        LinkedCover back = cover_from_json(read_json(dir + "/cover.json"));

        REQUIRE(back.size() == c.size());
        REQUIRE(back.dim() == 1);
        REQUIRE(back.support().lo[0] == 0.0);
        REQUIRE(std::isinf(back.support().hi[0]));
        for (std::size_t j = 0; j < c.size(); ++j) {
            REQUIRE(back.part(j).lo[0] == c.part(j).lo[0]);
            REQUIRE(back.part(j).hi[0] == c.part(j).hi[0]);
        }
        REQUIRE(std::isinf(back.part(2).hi[0]));
    }

    SECTION("bound encoding") {
        REQUIRE(bound_from_json(bound_to_json(kInf)) == kInf);
        REQUIRE(bound_from_json(bound_to_json(-kInf)) == -kInf);
        REQUIRE(bound_from_json(bound_to_json(3.25)) == 3.25);
        REQUIRE_THROWS_AS(bound_from_json(json("oops")), std::invalid_argument);
    }

    SECTION("tampered dimension count is rejected") {
        json j = cover_to_json(gamma_cover());
        j["dims"] = 5;
        REQUIRE_THROWS_AS(cover_from_json(j), std::invalid_argument);
    }

    SECTION("discrete cover") {
        DiscreteCover c = seven_state_cover();
        json j = cover_to_json(c);
        DiscreteCover back = discrete_cover_from_json(j);
        REQUIRE(back.states() == 7);
        REQUIRE(back.size() == 2);
        REQUIRE(back.part(0) == std::vector<int>{0, 1, 2, 3});
        REQUIRE(back.part(1) == std::vector<int>{3, 4, 5, 6});
    }
}

TEST_CASE("subset samples and proportions survive their file formats") {
    const std::string dir = fresh_dir("roundtrip_sample");
    TargetModel target = gamma_target(4.0, 1.0);
    LinkedCover cover = gamma_cover();

    SECTION("subset sample csv plus sidecar") {
        SubsetSample s = iid_subset_sample(target, cover, 1, 300, 77);
        write_subset_sample_csv(s, dir + "/part1.csv", dir + "/part1.json");
        SubsetSample back = read_subset_sample_csv(dir + "/part1.csv", dir + "/part1.json");

        REQUIRE(back.part == 1);
        REQUIRE(back.dims == 1);
        REQUIRE(back.M == 300);
        REQUIRE(back.seed == 77);
        REQUIRE(back.burn_in == s.burn_in);
        REQUIRE(back.acceptance_rate == s.acceptance_rate);
        REQUIRE(back.hits_lower == s.hits_lower);
        REQUIRE(back.hits_upper == s.hits_upper);
        // 17 significant digits in the writer makes doubles exact.
        REQUIRE(back.draws == s.draws);
        REQUIRE(back.in_prior == s.in_prior);
    }

    SECTION("draw count must match the sidecar") {
        SubsetSample s = iid_subset_sample(target, cover, 0, 50, 3);
        write_subset_sample_csv(s, dir + "/bad.csv", dir + "/bad.json");
        json meta = read_json(dir + "/bad.json");
        meta["M"] = 49;
        write_json(meta, dir + "/bad.json");
        REQUIRE_THROWS_AS(read_subset_sample_csv(dir + "/bad.csv", dir + "/bad.json"),
                          std::runtime_error);
    }

    SECTION("proportion estimate json") {
        std::vector<SubsetSample> parts;
        for (std::size_t j = 0; j < cover.size(); ++j)
            parts.push_back(iid_subset_sample(target, cover, j, 500, 100 + j));
        ProportionEstimate p = estimate_proportions(parts);

        write_json(proportions_to_json(p), dir + "/props.json");
        ProportionEstimate back = proportions_from_json(read_json(dir + "/props.json"));
        REQUIRE(back.pi == p.pi);
        REQUIRE(back.exclusive == p.exclusive);
        REQUIRE(back.hits_lower == p.hits_lower);
        REQUIRE(back.hits_upper == p.hits_upper);
        REQUIRE(back.M == p.M);

        json j = proportions_to_json(p);
        j["exclusive"].erase(j["exclusive"].size() - 1);
        REQUIRE_THROWS_AS(proportions_from_json(j), std::invalid_argument);
    }

    SECTION("return series csv") {
        std::vector<double> y = {0.0125, -3.5, 0.0, 1e-9, 42.0};
        write_return_series_csv(y, dir + "/returns.csv");
        REQUIRE(read_return_series_csv(dir + "/returns.csv") == y);

        std::ofstream(dir + "/empty.csv") << "log_return\n";
        REQUIRE_THROWS_AS(read_return_series_csv(dir + "/empty.csv"), std::runtime_error);
    }
}

TEST_CASE("expectation and summary formats are stable") {
    SECTION("expectation json keys") {
        TargetModel target = gamma_target(4.0, 1.0);
        LinkedCover cover = gamma_cover();
        std::vector<SubsetSample> parts;
        for (std::size_t j = 0; j < cover.size(); ++j)
            parts.push_back(iid_subset_sample(target, cover, j, 400, 60 + j));
        ProportionEstimate p = estimate_proportions(parts);
        ExpectationResult r = estimate_expectation(
            [](std::span<const double> x) { return x[0]; }, parts, p);

        json j = expectation_to_json("mean", r);
        REQUIRE(j.at("h") == "mean");
        REQUIRE(j.at("estimate").get<double>() == r.estimate);
        REQUIRE(j.at("stderr").get<double>() == r.stderr_);
        REQUIRE(j.at("literal_form").get<bool>() == r.literal_form);
        REQUIRE(j.at("weight_uncertainty_ignored").get<bool>());
        REQUIRE(j.at("per_part").size() == 3);
    }

    SECTION("summary csv layout is frozen") {
        const std::string dir = fresh_dir("summary_csv");
        write_summary_csv({}, dir + "/empty.csv");
        REQUIRE(slurp(dir + "/empty.csv") == "method,N,runtime_s,tv,tv_times_n\n");

        SummaryRow row;
        row.method = "gamma-dc";
        row.N = 100;
        row.runtime_s = 1.5;
        row.quality = 0.02;
        write_summary_csv({row}, dir + "/one.csv");
        REQUIRE(slurp(dir + "/one.csv") ==
                "method,N,runtime_s,tv,tv_times_n\ngamma-dc,100,1.5,0.02,2\n");
    }
}

TEST_CASE("gamma pipeline writes a deterministic bundle") {
    ExperimentConfig cfg;
    cfg.experiment = "gamma";
    cfg.method = "dc";
    cfg.M = 2000;
    cfg.seed = 5;
    cfg.out_dir = fresh_dir("gamma_a");

    RunResult r = run_experiment(cfg);
    REQUIRE(r.summary.method == "gamma-dc");
    REQUIRE(r.summary.N == r.merged_N);
    REQUIRE(r.merged_N > 1000);
    REQUIRE(static_cast<long>(r.merged.size()) == r.merged_N);
    REQUIRE(r.samples.size() == 3);
    REQUIRE(r.props.pi.size() == 3);
    REQUIRE(r.worker_s.size() == 3);
    // iid gamma sampling at M=2000 keeps the empirical cdf close.
    REQUIRE(r.summary.quality < 0.08);

    for (const char* suffix :
         {"_part0.csv", "_part0.json", "_part1.csv", "_part1.json", "_part2.csv", "_part2.json",
          "_props.json", "_merged.csv", "_merged_meta.json", "_summary.csv", "_timing.json",
          "_config.json", "_cover.json"}) {
        INFO("missing " << suffix);
        REQUIRE(fs::exists(fs::path(cfg.out_dir) / ("gamma_dc" + std::string(suffix))));
    }

    json config = read_json(cfg.out_dir + "/gamma_dc_config.json");
    REQUIRE(config.at("experiment") == "gamma");
    REQUIRE(config.at("method") == "dc");
    REQUIRE(config.at("seed").get<std::uint64_t>() == 5);
    REQUIRE(config.at("M").get<long>() == 2000);
    REQUIRE(config.at("proportions") == "estimated");

    json meta = read_json(cfg.out_dir + "/gamma_dc_merged_meta.json");
    REQUIRE(meta.at("N").get<long>() == r.merged_N);
    REQUIRE(meta.at("kept_per_chain").size() == 3);

    SECTION("same seed reproduces every byte") {
        ExperimentConfig again = cfg;
        again.out_dir = fresh_dir("gamma_b");
        RunResult r2 = run_experiment(again);
        REQUIRE(r2.summary.quality == r.summary.quality);
        REQUIRE(r2.merged.draws == r.merged.draws);
        require_same_bundle(cfg.out_dir, again.out_dir);
    }

    SECTION("worker scheduling cannot leak into the outputs") {
        ExperimentConfig serial = cfg;
        serial.threads = 1;
        serial.out_dir = fresh_dir("gamma_serial");
        ExperimentConfig threaded = cfg;
        threaded.threads = 2;
        threaded.out_dir = fresh_dir("gamma_threaded");
        run_experiment(serial);
        run_experiment(threaded);
        require_same_bundle(serial.out_dir, threaded.out_dir);
    }

    SECTION("seed changes the draws") {
        ExperimentConfig other = cfg;
        other.seed = 6;
        other.out_dir.clear();
        RunResult r2 = run_experiment(other);
        REQUIRE(r2.merged.draws != r.merged.draws);
    }
}

TEST_CASE("discrete pipeline labels the difficulty and supports both proportion modes") {
    SECTION("hard setting with exact proportions") {
        ExperimentConfig cfg;
        cfg.experiment = "discrete";
        cfg.method = "dc";
        cfg.proportions = "exact";
        cfg.M = 2000;
        cfg.burn_in = 200;
        cfg.seed = 7;
        cfg.out_dir = fresh_dir("discrete_exact");

        RunResult r = run_experiment(cfg);
        REQUIRE(r.summary.method == "discrete-dc(a=0.003)");
        REQUIRE(r.samples.size() == 2);
        REQUIRE(r.summary.quality < 0.15);
        REQUIRE(fs::exists(fs::path(cfg.out_dir) / "discrete_dc_props.json"));
        REQUIRE(fs::exists(fs::path(cfg.out_dir) / "discrete_dc_cover.json"));

        json config = read_json(cfg.out_dir + "/discrete_dc_config.json");
        REQUIRE(config.at("proportions") == "exact");
        REQUIRE(config.at("discrete_a").get<double>() == 0.003);
    }

    SECTION("easy setting with estimated proportions") {
        ExperimentConfig cfg;
        cfg.experiment = "discrete";
        cfg.method = "dc";
        cfg.discrete_a = 0.2;
        cfg.M = 4000;
        cfg.burn_in = 400;
        cfg.seed = 21;
        RunResult r = run_experiment(cfg);
        REQUIRE(r.summary.method == "discrete-dc(a=0.2)");
        REQUIRE(r.summary.quality < 0.12);
    }

    SECTION("single-chain baseline") {
        ExperimentConfig cfg;
        cfg.experiment = "discrete";
        cfg.method = "standard";
        cfg.discrete_a = 0.2;
        cfg.M = 4000;
        cfg.seed = 3;
        RunResult r = run_experiment(cfg);
        REQUIRE(r.summary.method == "discrete-standard(a=0.2)");
        REQUIRE(r.samples.size() == 1);
        REQUIRE(r.props.pi.empty());
        REQUIRE(r.merged_N == 4000);
    }
}

TEST_CASE("starved overlaps surface as the typed failure") {
    // At a=0.003 with tiny chains the bridge state is rarely visited, so
    // proportion estimation must fail at least once across a seed sweep
    // rather than fabricating weights.
    int failures = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        ExperimentConfig cfg;
        cfg.experiment = "discrete";
        cfg.method = "dc";
        cfg.M = 50;
        cfg.seed = seed;
        try {
            run_experiment(cfg);
        } catch (const FailureError& e) {
            ++failures;
            REQUIRE(e.overlap_index == 0);
        }
    }
    REQUIRE(failures >= 1);
}

TEST_CASE("poisson pipeline and batched comparison") {
    SECTION("single run") {
        ExperimentConfig cfg;
        cfg.experiment = "poisson";
        cfg.method = "dc";
        cfg.M = 3000;
        cfg.burn_in = 300;
        cfg.seed = 11;
        RunResult r = run_experiment(cfg);
        REQUIRE(r.summary.method == "poisson-dc");
        REQUIRE(r.samples.size() == 2);
        REQUIRE(r.summary.quality < 0.15);
        // Lattice chains move on integers; merged output must too.
        for (std::size_t k = 0; k < std::min<std::size_t>(r.merged.size(), 200); ++k) {
            double x = r.merged.draw(k)[0];
            REQUIRE(x == std::floor(x));
        }
    }

    SECTION("batched two-method comparison") {
        ExperimentConfig cfg;
        cfg.experiment = "poisson";
        cfg.batches = 25;
        cfg.M = 400;
        cfg.burn_in = 50;
        cfg.seed = 19;
        BatchComparison c = compare_poisson_batches(cfg);
        REQUIRE(c.batches == 25);
        REQUIRE(c.failures_dc == 0);
        REQUIRE(c.mean_tv_dc > 0.0);
        REQUIRE(c.mean_tv_dc < 0.5);
        REQUIRE(c.mean_tv_standard > 0.0);
        REQUIRE(c.mean_tv_standard < 0.5);
        REQUIRE(c.se_tv_dc > 0.0);
        REQUIRE(c.se_tv_standard > 0.0);

        BatchComparison again = compare_poisson_batches(cfg);
        REQUIRE(again.mean_tv_dc == c.mean_tv_dc);
        REQUIRE(again.mean_tv_standard == c.mean_tv_standard);
    }
}

TEST_CASE("estimated-cover pipeline on the mixture target") {
    ExperimentConfig cfg;
    cfg.experiment = "gmm";
    cfg.method = "dc";
    cfg.W = 3;
    cfg.pilot_size = 2000;
    cfg.M = 2000;
    cfg.burn_in = 200;
    cfg.seed = 13;
    cfg.out_dir = fresh_dir("gmm_dc");

    RunResult r = run_experiment(cfg);
    REQUIRE(r.summary.method == "gmm-dc");
    REQUIRE(r.samples.size() == 3);
    REQUIRE(r.summary.quality < 0.15);

    const fs::path cover_path = fs::path(cfg.out_dir) / "gmm_dc_cover.json";
    REQUIRE(fs::exists(cover_path));
    LinkedCover cover = cover_from_json(read_json(cover_path.string()));
    REQUIRE(cover.size() == 3);
    REQUIRE(std::isinf(-cover.support().lo[0]));
    REQUIRE(std::isinf(cover.support().hi[0]));

    json config = read_json(cfg.out_dir + "/gmm_dc_config.json");
    REQUIRE(config.at("W").get<int>() == 3);
    REQUIRE(config.at("delta").get<double>() > 0.0);
}

TEST_CASE("volatility pipeline writes chains and returns") {
    ExperimentConfig cfg;
    cfg.experiment = "sv";
    cfg.method = "dc";
    cfg.sv_T = 30;
    cfg.sv_iters = 400;
    cfg.sv_pilot_iters = 60;
    cfg.sv_particles = 30;
    cfg.M = cfg.sv_iters;
    cfg.seed = 23;
    cfg.out_dir = fresh_dir("sv_dc");

    RunResult r = run_experiment(cfg);
    REQUIRE(r.summary.method == "sv-dc");
    REQUIRE(std::isnan(r.summary.quality));
    REQUIRE(r.samples.size() == 2);
    REQUIRE(r.samples[0].dims == 4);
    REQUIRE(r.merged.dims == 4);
    REQUIRE(r.merged_N > 0);

    const fs::path dir(cfg.out_dir);
    REQUIRE(fs::exists(dir / "sv_dc_returns.csv"));
    REQUIRE(fs::exists(dir / "sv_dc_chain0.csv"));
    REQUIRE(fs::exists(dir / "sv_dc_chain1.csv"));
    REQUIRE(fs::exists(dir / "sv_dc_merged.csv"));
    REQUIRE(fs::exists(dir / "sv_dc_summary.csv"));
    REQUIRE_FALSE(fs::exists(dir / "sv_dc_cover.json"));
    REQUIRE(count_lines(dir / "sv_dc_chain0.csv") == cfg.sv_iters + 1);
    REQUIRE(count_lines(dir / "sv_dc_returns.csv") == cfg.sv_T + 1);

    SECTION("deterministic across reruns") {
        ExperimentConfig again = cfg;
        again.out_dir = fresh_dir("sv_dc_b");
        run_experiment(again);
        REQUIRE(slurp(dir / "sv_dc_merged.csv") ==
                slurp(fs::path(again.out_dir) / "sv_dc_merged.csv"));
        REQUIRE(slurp(dir / "sv_dc_chain1.csv") ==
                slurp(fs::path(again.out_dir) / "sv_dc_chain1.csv"));
    }

    SECTION("standard method runs one full-space chain") {
        ExperimentConfig std_cfg = cfg;
        std_cfg.method = "standard";
        std_cfg.out_dir = fresh_dir("sv_standard");
        RunResult rs = run_experiment(std_cfg);
        REQUIRE(rs.samples.size() == 1);
        REQUIRE(rs.props.pi.empty());
        REQUIRE(fs::exists(fs::path(std_cfg.out_dir) / "sv_standard_chain0.csv"));
        REQUIRE_FALSE(fs::exists(fs::path(std_cfg.out_dir) / "sv_standard_chain1.csv"));
        REQUIRE_FALSE(fs::exists(fs::path(std_cfg.out_dir) / "sv_standard_props.json"));
    }
}

TEST_CASE("config validation rejects nonsense") {
    ExperimentConfig cfg;

    cfg.experiment = "laplace";
    REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.experiment = "gamma";

    cfg.method = "turbo";
    REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.method = "dc";

    cfg.merge_variant = "median";
    REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.merge_variant = "downsample";

    cfg.proportions = "guessed";
    REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.proportions = "estimated";

    cfg.burn_in = cfg.M;
    REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.burn_in = 0;

    cfg.W = 3;
    cfg.delta = 0.4;
    REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.delta = -1.0;

    cfg.experiment = "sv";
    cfg.proportions = "exact";
    REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.proportions = "estimated";
    REQUIRE_NOTHROW(cfg.validate());
}
