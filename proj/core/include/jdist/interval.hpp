#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace jdist {

// Real interval with endpoint membership flags. Partition cells are
// half-open on the right (last cell closed); user-facing queries default to
// closed intervals. Endpoint flags only matter for atom membership; density
// integrals ignore them.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool closed_lo = true;
    bool closed_hi = true;

    double length() const { return hi - lo; }

    bool is_empty() const {
        if (lo > hi) return true;
        if (lo == hi) return !(closed_lo && closed_hi);
        return false;
    }

    bool contains(double x) const {
        if (x < lo || x > hi) return false;
        if (x == lo && !closed_lo) return false;
        if (x == hi && !closed_hi) return false;
        return true;
    }
};

inline Interval closed_interval(double lo, double hi) {
    return Interval{lo, hi, true, true};
}

inline Interval intersect(const Interval& a, const Interval& b) {
    Interval r;
    if (a.lo > b.lo) {
        r.lo = a.lo;
        r.closed_lo = a.closed_lo;
    } else if (b.lo > a.lo) {
        r.lo = b.lo;
        r.closed_lo = b.closed_lo;
    } else {
        r.lo = a.lo;
        r.closed_lo = a.closed_lo && b.closed_lo;
    }
    if (a.hi < b.hi) {
        r.hi = a.hi;
        r.closed_hi = a.closed_hi;
    } else if (b.hi < a.hi) {
        r.hi = b.hi;
        r.closed_hi = b.closed_hi;
    } else {
        r.hi = a.hi;
        r.closed_hi = a.closed_hi && b.closed_hi;
    }
    return r;
}

// Finite union of intervals. Callers keep members disjoint; operations that
// require disjointness validate it themselves.
using IntervalSet = std::vector<Interval>;

inline double set_length(const IntervalSet& s) {
    double total = 0.0;
    for (const auto& iv : s)
        if (!iv.is_empty()) total += iv.length();
    return total;
}

}  // namespace jdist
