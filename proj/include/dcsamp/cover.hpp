#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "region.hpp"
#include "rng.hpp"

namespace dcsamp {

// Ordered cover C_1..C_W of a support region. Consecutive elements must
// overlap; the overlap structure (including non-adjacent overlaps, which
// grid covers in >1 dimension do have) is precomputed so that membership
// in "some earlier element" is a fast query.
class LinkedCover {
  public:
    // Per-dimension slab edges of a grid-built cover; retained so the
    // union-covers-support check can be exact instead of Monte Carlo.
    struct Grid {
        std::vector<int> part_counts;                    // cells per dimension
        std::vector<std::vector<double>> slab_lo;        // [dim][slab]
        std::vector<std::vector<double>> slab_hi;
    };

    LinkedCover(Region support, std::vector<Region> parts,
                std::optional<Grid> grid = std::nullopt)
        : support_(std::move(support)), parts_(std::move(parts)), grid_(std::move(grid)) {
        if (parts_.empty()) throw std::invalid_argument("LinkedCover: no parts");
        for (const Region& c : parts_) {
            if (c.dim() != support_.dim())
                throw std::invalid_argument("LinkedCover: part/support dimension mismatch");
            if (c.empty()) throw std::invalid_argument("LinkedCover: empty part");
        }
        for (std::size_t j = 0; j + 1 < parts_.size(); ++j) {
            if (intersect(parts_[j], parts_[j + 1]).empty())
                throw std::invalid_argument(
                    "LinkedCover: adjacent parts " + std::to_string(j) + "," +
                    std::to_string(j + 1) + " do not overlap");
        }
        prior_.resize(parts_.size());
        for (std::size_t j = 0; j < parts_.size(); ++j) {
            for (std::size_t k = 0; k < j; ++k) {
                Region ov = intersect(parts_[k], parts_[j]);
                if (!ov.empty()) prior_[j].push_back(std::move(ov));
            }
        }
    }

    std::size_t size() const { return parts_.size(); }
    std::size_t dim() const { return support_.dim(); }
    const Region& support() const { return support_; }
    const Region& part(std::size_t j) const { return parts_.at(j); }
    const std::vector<Region>& parts() const { return parts_; }
    const std::optional<Grid>& grid() const { return grid_; }

    // Adjacent overlap D_j = C_j n C_{j+1}, j in [0, W-2].
    Region adjacent_overlap(std::size_t j) const {
        if (j + 1 >= parts_.size())
            throw std::out_of_range("adjacent_overlap: index past last pair");
        return intersect(parts_[j], parts_[j + 1]);
    }

    // True when x lies in C_k n C_j for some k < j, i.e. an earlier element
    // already claims the point. Draws with this flag set are the ones the
    // merge step discards from chain j.
    bool in_prior_overlap(std::size_t j, std::span<const double> x) const {
        for (const Region& ov : prior_.at(j))
            if (ov.contains(x)) return true;
        return false;
    }
    bool in_prior_overlap(std::size_t j, double x) const {
        return in_prior_overlap(j, std::span<const double>(&x, 1));
    }

    // Union-of-parts == support. Exact for grid-built covers (slabs chain
    // per dimension); Monte Carlo probe otherwise.
    bool covers_support(Rng& rng, int probes = 10000) const {
        if (grid_) {
            for (std::size_t d = 0; d < grid_->slab_lo.size(); ++d) {
                const auto& lo = grid_->slab_lo[d];
                const auto& hi = grid_->slab_hi[d];
                if (lo.front() != support_.lo[d] || hi.back() != support_.hi[d]) return false;
                for (std::size_t s = 0; s + 1 < lo.size(); ++s)
                    if (lo[s + 1] > hi[s]) return false;  // gap between slabs
            }
            return true;
        }
        std::vector<double> x(dim());
        for (int p = 0; p < probes; ++p) {
            for (std::size_t d = 0; d < dim(); ++d) x[d] = probe_coord(rng, d);
            bool hit = false;
            for (const Region& c : parts_)
                if (c.contains(x)) { hit = true; break; }
            if (!hit) return false;
        }
        return true;
    }

    // A coordinate inside the support, spread over unbounded sides too.
    double probe_coord(Rng& rng, std::size_t d) const {
        double a = support_.lo[d], b = support_.hi[d];
        bool alo = std::isinf(a), bhi = std::isinf(b);
        if (!alo && !bhi) return rng.uniform(a, b);
        if (alo && bhi) return rng.normal(0.0, 1.0) / rng.uniform(0.05, 1.0);
        double stretch = rng.exponential(1.0) / rng.uniform(0.05, 1.0);
        return alo ? b - stretch : a + stretch;
    }

  private:
    Region support_;
    std::vector<Region> parts_;
    std::vector<std::vector<Region>> prior_;  // nonempty C_k n C_j, k < j
    std::optional<Grid> grid_;
};

// Saturation: every element and every adjacent overlap must carry target
// mass, otherwise proportion estimation is undefined (zero-hit regions).
struct SaturationReport {
    std::vector<bool> element_has_mass;
    std::vector<bool> overlap_has_mass;

    bool saturated() const {
        return std::ranges::all_of(element_has_mass, std::identity{}) &&
               std::ranges::all_of(overlap_has_mass, std::identity{});
    }
};

// Probes each region at its center plus probe_count random points and asks
// the target for positive density. A probabilistic check: it can flag a
// genuinely saturated cover whose mass hides from the probes, never the
// converse for the probed points.
inline SaturationReport validate_saturated(
    const LinkedCover& cover, const std::function<bool(std::span<const double>)>& has_density,
    int probe_count, Rng& rng) {
    auto region_has_mass = [&](const Region& r) {
        std::vector<double> x(r.dim());
        for (int p = 0; p <= probe_count; ++p) {
            for (std::size_t d = 0; d < r.dim(); ++d) {
                double a = r.lo[d], b = r.hi[d];
                bool alo = std::isinf(a), bhi = std::isinf(b);
                if (p == 0) {  // center-ish probe first
                    if (!alo && !bhi) x[d] = 0.5 * (a + b);
                    else if (alo && bhi) x[d] = 0.0;
                    else x[d] = alo ? b - 1.0 : a + 1.0;
                } else {
                    if (!alo && !bhi) x[d] = rng.uniform(a, b);
                    else if (alo && bhi) x[d] = rng.normal(0.0, 1.0) / rng.uniform(0.05, 1.0);
                    else {
                        double stretch = rng.exponential(1.0) / rng.uniform(0.05, 1.0);
                        x[d] = alo ? b - stretch : a + stretch;
                    }
                }
            }
            if (has_density(x)) return true;
        }
        return false;
    };

    SaturationReport rep;
    for (std::size_t j = 0; j < cover.size(); ++j)
        rep.element_has_mass.push_back(region_has_mass(cover.part(j)));
    for (std::size_t j = 0; j + 1 < cover.size(); ++j)
        rep.overlap_has_mass.push_back(region_has_mass(cover.adjacent_overlap(j)));
    return rep;
}

// Cover over a finite state space {0..states-1}; parts are sorted index
// sets with the same linkage requirements as the continuous cover.
class DiscreteCover {
  public:
    DiscreteCover(int states, std::vector<std::vector<int>> parts)
        : states_(states), parts_(std::move(parts)) {
        if (states_ <= 0) throw std::invalid_argument("DiscreteCover: states must be >= 1");
        if (parts_.empty()) throw std::invalid_argument("DiscreteCover: no parts");
        std::vector<bool> seen(states_, false);
        for (auto& p : parts_) {
            if (p.empty()) throw std::invalid_argument("DiscreteCover: empty part");
            std::ranges::sort(p);
            p.erase(std::unique(p.begin(), p.end()), p.end());
            for (int s : p) {
                if (s < 0 || s >= states_)
                    throw std::invalid_argument("DiscreteCover: state index out of range");
                seen[s] = true;
            }
        }
        if (!std::ranges::all_of(seen, std::identity{}))
            throw std::invalid_argument("DiscreteCover: parts do not cover the state space");
        for (std::size_t j = 0; j + 1 < parts_.size(); ++j) {
            if (overlap_of(j, j + 1).empty())
                throw std::invalid_argument("DiscreteCover: adjacent parts " + std::to_string(j) +
                                            "," + std::to_string(j + 1) + " do not overlap");
        }
        member_.assign(parts_.size(), std::vector<bool>(states_, false));
        for (std::size_t j = 0; j < parts_.size(); ++j)
            for (int s : parts_[j]) member_[j][s] = true;
    }

    int states() const { return states_; }
    std::size_t size() const { return parts_.size(); }
    const std::vector<int>& part(std::size_t j) const { return parts_.at(j); }

    bool contains(std::size_t j, int state) const { return member_.at(j).at(state); }

    std::vector<int> adjacent_overlap(std::size_t j) const {
        if (j + 1 >= parts_.size())
            throw std::out_of_range("adjacent_overlap: index past last pair");
        return overlap_of(j, j + 1);
    }

    bool in_prior_overlap(std::size_t j, int state) const {
        if (!member_.at(j).at(state)) return false;
        for (std::size_t k = 0; k < j; ++k)
            if (member_[k][state]) return true;
        return false;
    }

  private:
    std::vector<int> overlap_of(std::size_t a, std::size_t b) const {
        std::vector<int> out;
        std::ranges::set_intersection(parts_[a], parts_[b], std::back_inserter(out));
        return out;
    }

    int states_;
    std::vector<std::vector<int>> parts_;
    std::vector<std::vector<bool>> member_;
};

}  // namespace dcsamp
