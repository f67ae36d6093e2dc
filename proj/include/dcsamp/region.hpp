#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace dcsamp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Axis-aligned hyperrectangle over the extended reals. Closed on finite
// sides; an infinite bound means the side is open out to infinity.
struct Region {
    std::vector<double> lo;
    std::vector<double> hi;

    Region() = default;
    Region(std::vector<double> lo_, std::vector<double> hi_)
        : lo(std::move(lo_)), hi(std::move(hi_)) {
        if (lo.size() != hi.size())
            throw std::invalid_argument("Region: lo/hi dimension mismatch");
        if (lo.empty()) throw std::invalid_argument("Region: dimension must be >= 1");
    }
    // 1-d convenience.
    Region(double a, double b) : Region(std::vector{a}, std::vector{b}) {}

    std::size_t dim() const { return lo.size(); }

    bool empty() const {
        for (std::size_t d = 0; d < lo.size(); ++d)
            if (!(lo[d] <= hi[d])) return true;
        return false;
    }

    bool contains(std::span<const double> x) const {
        if (x.size() != lo.size())
            throw std::invalid_argument("Region::contains: point dimension mismatch");
        for (std::size_t d = 0; d < lo.size(); ++d)
            if (x[d] < lo[d] || x[d] > hi[d]) return false;
        return true;
    }

    bool contains(double x) const { return contains(std::span<const double>(&x, 1)); }
};

inline Region intersect(const Region& a, const Region& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("intersect: dimension mismatch");
    Region r = a;
    for (std::size_t d = 0; d < a.dim(); ++d) {
        r.lo[d] = std::max(a.lo[d], b.lo[d]);
        r.hi[d] = std::min(a.hi[d], b.hi[d]);
    }
    return r;
}

}  // namespace dcsamp
