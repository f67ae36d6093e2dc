#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cover.hpp"
#include "expectation.hpp"
#include "merge.hpp"
#include "pmmh.hpp"
#include "proportion.hpp"
#include "region.hpp"
#include "subset_sampler.hpp"

namespace dcsamp {

using json = nlohmann::json;

// Infinite bounds travel as the strings "inf" / "-inf"; JSON has no
// number for them.
inline json bound_to_json(double v) {
    if (std::isinf(v)) return v > 0 ? json("inf") : json("-inf");
    return json(v);
}

inline double bound_from_json(const json& j) {
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "inf") return kInf;
        if (s == "-inf") return -kInf;
        throw std::invalid_argument("bound_from_json: unknown bound string '" + s + "'");
    }
    return j.get<double>();
}

inline json region_to_json(const Region& r) {
    json lo = json::array(), hi = json::array();
    for (double v : r.lo) lo.push_back(bound_to_json(v));
    for (double v : r.hi) hi.push_back(bound_to_json(v));
    return json{{"lo", lo}, {"hi", hi}};
}

inline Region region_from_json(const json& j) {
    std::vector<double> lo, hi;
    for (const auto& v : j.at("lo")) lo.push_back(bound_from_json(v));
    for (const auto& v : j.at("hi")) hi.push_back(bound_from_json(v));
    return Region(std::move(lo), std::move(hi));
}

inline json cover_to_json(const LinkedCover& c) {
    json parts = json::array();
    for (std::size_t j = 0; j < c.size(); ++j) parts.push_back(region_to_json(c.part(j)));
    return json{{"dims", c.dim()}, {"support", region_to_json(c.support())}, {"parts", parts}};
}

inline LinkedCover cover_from_json(const json& j) {
    Region support = region_from_json(j.at("support"));
    std::vector<Region> parts;
    for (const auto& p : j.at("parts")) parts.push_back(region_from_json(p));
    LinkedCover cover(std::move(support), std::move(parts));
    if (j.contains("dims") && j.at("dims").get<std::size_t>() != cover.dim())
        throw std::invalid_argument("cover_from_json: dims field disagrees with bounds");
    return cover;
}

inline json cover_to_json(const DiscreteCover& c) {
    json parts = json::array();
    for (std::size_t j = 0; j < c.size(); ++j) parts.push_back(c.part(j));
    return json{{"states", c.states()}, {"parts", parts}};
}

inline DiscreteCover discrete_cover_from_json(const json& j) {
    std::vector<std::vector<int>> parts;
    for (const auto& p : j.at("parts")) parts.push_back(p.get<std::vector<int>>());
    return DiscreteCover(j.at("states").get<int>(), std::move(parts));
}

inline json proportions_to_json(const ProportionEstimate& p) {
    json hits = json::array();
    for (std::size_t j = 0; j < p.pi.size(); ++j)
        hits.push_back(json{{"lower", p.hits_lower[j]}, {"upper", p.hits_upper[j]}});
    return json{{"pi", p.pi}, {"exclusive", p.exclusive}, {"hits", hits}, {"M", p.M}};
}

inline ProportionEstimate proportions_from_json(const json& j) {
    ProportionEstimate p;
    p.pi = j.at("pi").get<std::vector<double>>();
    p.exclusive = j.at("exclusive").get<std::vector<double>>();
    p.M = j.at("M").get<std::vector<long>>();
    for (const auto& h : j.at("hits")) {
        p.hits_lower.push_back(h.at("lower").get<long>());
        p.hits_upper.push_back(h.at("upper").get<long>());
    }
    if (p.exclusive.size() != p.pi.size() || p.M.size() != p.pi.size() ||
        p.hits_lower.size() != p.pi.size())
        throw std::invalid_argument("proportions_from_json: field lengths disagree");
    return p;
}

inline json expectation_to_json(const std::string& name, const ExpectationResult& r) {
    json per_part = json::array();
    for (const auto& pp : r.per_part)
        per_part.push_back(json{{"weight", pp.weight},
                                {"mean", pp.mean},
                                {"stderr", pp.stderr_},
                                {"n_eligible", pp.n_eligible}});
    return json{{"h", name},
                {"estimate", r.estimate},
                {"stderr", r.stderr_},
                {"literal_form", r.literal_form},
                {"weight_uncertainty_ignored", r.weight_uncertainty_ignored},
                {"per_part", per_part}};
}

namespace detail {

// Full round-trip precision for CSV floats.
inline std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    return f;
}

}  // namespace detail

inline void write_json(const json& j, const std::string& path) {
    auto f = detail::open_out(path);
    f << j.dump(2) << '\n';
}

inline json read_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open for reading: " + path);
    return json::parse(f);
}

// Draw matrix as CSV: coordinate columns then the in_prior flag. The
// sidecar JSON carries the chain metadata.
inline void write_subset_sample_csv(const SubsetSample& s, const std::string& csv_path,
                                    const std::string& sidecar_path) {
    auto f = detail::open_out(csv_path);
    for (std::size_t d = 0; d < s.dims; ++d) f << "x" << d << ",";
    f << "in_prior\n";
    for (long k = 0; k < s.M; ++k) {
        auto row = s.draw(k);
        for (double v : row) f << detail::fmt(v) << ",";
        f << static_cast<int>(s.in_prior[static_cast<std::size_t>(k)]) << "\n";
    }
    write_json(json{{"part", s.part},
                    {"dims", s.dims},
                    {"M", s.M},
                    {"burn_in", s.burn_in},
                    {"seed", s.seed},
                    {"acceptance_rate", s.acceptance_rate},
                    {"hits_lower", s.hits_lower},
                    {"hits_upper", s.hits_upper}},
               sidecar_path);
}

inline SubsetSample read_subset_sample_csv(const std::string& csv_path,
                                           const std::string& sidecar_path) {
    const json meta = read_json(sidecar_path);
    SubsetSample s;
    s.part = meta.at("part").get<std::size_t>();
    s.dims = meta.at("dims").get<std::size_t>();
    s.M = meta.at("M").get<long>();
    s.burn_in = meta.value("burn_in", 0L);
    s.seed = meta.value("seed", std::uint64_t{0});
    s.acceptance_rate = meta.value("acceptance_rate", 1.0);
    s.hits_lower = meta.at("hits_lower").get<long>();
    s.hits_upper = meta.at("hits_upper").get<long>();

    std::ifstream f(csv_path);
    if (!f) throw std::runtime_error("cannot open for reading: " + csv_path);
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error("empty sample file: " + csv_path);
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::stringstream row(line);
        std::string cell;
        for (std::size_t d = 0; d < s.dims; ++d) {
            if (!std::getline(row, cell, ','))
                throw std::runtime_error("short row in sample file: " + csv_path);
            s.draws.push_back(std::stod(cell));
        }
        if (!std::getline(row, cell, ','))
            throw std::runtime_error("missing in_prior column: " + csv_path);
        s.in_prior.push_back(static_cast<std::uint8_t>(std::stoi(cell) != 0));
    }
    if (static_cast<long>(s.in_prior.size()) != s.M)
        throw std::runtime_error("sample file row count disagrees with sidecar M: " + csv_path);
    return s;
}

inline void write_merged_sample_csv(const MergedSample& m, const std::string& csv_path,
                                    const std::string& meta_path, std::uint64_t seed) {
    auto f = detail::open_out(csv_path);
    for (std::size_t d = 0; d < m.dims; ++d) f << "x" << d << ",";
    f << "source\n";
    std::vector<long> kept;
    for (std::size_t k = 0; k < m.size(); ++k) {
        for (double v : m.draw(k)) f << detail::fmt(v) << ",";
        const auto src = static_cast<std::size_t>(m.source[k]);
        if (src >= kept.size()) kept.resize(src + 1, 0);
        ++kept[src];
        f << m.source[k] << "\n";
    }
    write_json(json{{"N", m.size()}, {"kept_per_chain", kept}, {"seed", seed}}, meta_path);
}

// Return series: one column, optional header accepted on read.
inline void write_return_series_csv(std::span<const double> y, const std::string& path) {
    auto f = detail::open_out(path);
    f << "log_return\n";
    for (double v : y) f << detail::fmt(v) << "\n";
}

inline std::vector<double> read_return_series_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open for reading: " + path);
    std::vector<double> y;
    std::string line;
    bool first = true;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        if (first) {
            first = false;
            try {
                y.push_back(std::stod(line));
            } catch (const std::exception&) {
                // header line
            }
            continue;
        }
        y.push_back(std::stod(line));
    }
    if (y.empty()) throw std::runtime_error("return series is empty: " + path);
    for (double v : y)
        if (!std::isfinite(v)) throw std::runtime_error("return series has non-finite entries");
    return y;
}

inline void write_pmmh_chain_csv(const PmmhResult& r, const std::string& path) {
    auto f = detail::open_out(path);
    f << "phi,beta,rho,sigma,loglik,accepted\n";
    for (long k = 0; k < r.size(); ++k) {
        const auto i = static_cast<std::size_t>(k);
        f << detail::fmt(r.phi[i]) << "," << detail::fmt(r.beta[i]) << ","
          << detail::fmt(r.rho[i]) << "," << detail::fmt(r.sigma[i]) << ","
          << detail::fmt(r.loglik[i]) << "," << static_cast<int>(r.accepted[i]) << "\n";
    }
}

// One benchmark result row; quality is TV for discrete targets and
// Kolmogorov distance for continuous ones.
struct SummaryRow {
    std::string method;
    long N = 0;
    double runtime_s = 0.0;
    double quality = 0.0;  // tv column
};

inline void write_summary_csv(const std::vector<SummaryRow>& rows, const std::string& path) {
    auto f = detail::open_out(path);
    f << "method,N,runtime_s,tv,tv_times_n\n";
    for (const auto& r : rows)
        f << r.method << "," << r.N << "," << detail::fmt(r.runtime_s) << ","
          << detail::fmt(r.quality) << "," << detail::fmt(r.quality * static_cast<double>(r.N))
          << "\n";
}

}  // namespace dcsamp
