#include "jdist/partition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace jdist {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> dedupe_sorted(std::vector<double> xs, double tol) {
    std::sort(xs.begin(), xs.end());
    std::vector<double> out;
    for (double x : xs) {
        if (out.empty() || x - out.back() > tol) out.push_back(x);
    }
    return out;
}

// Sample grid over [lo,hi]: piece edges at density kinks of either measure,
// subdivided to the quadrature resolution, plus GL nodes inside each piece.
std::vector<double> ratio_sample_grid(const Measure1D& nu, const Measure1D& mu,
                                      double lo, double hi) {
    std::vector<double> cuts{lo, hi};
    for (const auto* m : {&nu, &mu})
        for (double b : m->density_breakpoints)
            if (b > lo && b < hi) cuts.push_back(b);
    cuts = dedupe_sorted(std::move(cuts), 0.0);

    const double max_sub = mu.support.length() / 64.0;
    const GlRule& rule = gl_rule(mu.quadrature);
    std::vector<double> grid;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        double a = cuts[k], b = cuts[k + 1];
        int sub = std::max(1, static_cast<int>(std::ceil((b - a) / max_sub - 1e-12)));
        double h = (b - a) / sub;
        for (int c = 0; c < sub; ++c) {
            double pa = a + c * h;
            double pb = (c == sub - 1) ? b : a + (c + 1) * h;
            grid.push_back(pa);
            double mid = 0.5 * (pa + pb), half = 0.5 * (pb - pa);
            for (double n : rule.nodes) grid.push_back(mid + half * n);
        }
    }
    grid.push_back(hi);
    return grid;
}

}  // namespace

IntervalPartition IntervalPartition::single(Interval span) {
    return from_breakpoints({span.lo, span.hi});
}

IntervalPartition IntervalPartition::dyadic(Interval span, int depth) {
    if (depth < 0 || depth > 30)
        throw std::invalid_argument("dyadic depth out of range");
    std::size_t n = static_cast<std::size_t>(1) << depth;
    std::vector<double> bs(n + 1);
    double w = span.hi - span.lo;
    for (std::size_t i = 0; i <= n; ++i)
        bs[i] = span.lo + w * (static_cast<double>(i) / static_cast<double>(n));
    bs.back() = span.hi;
    return from_breakpoints(std::move(bs));
}

IntervalPartition IntervalPartition::from_breakpoints(std::vector<double> bs) {
    if (bs.size() < 2)
        throw std::invalid_argument("partition needs at least two breakpoints");
    if (!std::is_sorted(bs.begin(), bs.end()) ||
        std::adjacent_find(bs.begin(), bs.end()) != bs.end())
        throw std::invalid_argument("partition breakpoints must be strictly increasing");
    IntervalPartition p;
    p.breakpoints = std::move(bs);
    return p;
}

Interval IntervalPartition::cell(std::size_t i) const {
    bool last = (i + 2 == breakpoints.size());
    return Interval{breakpoints[i], breakpoints[i + 1], true, last};
}

Interval IntervalPartition::span() const {
    return closed_interval(breakpoints.front(), breakpoints.back());
}

std::size_t IntervalPartition::find_cell(double s) const {
    auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), s);
    if (it == breakpoints.begin()) return 0;
    std::size_t i = static_cast<std::size_t>(it - breakpoints.begin()) - 1;
    return std::min(i, cell_count() - 1);
}

bool IntervalPartition::refines(const IntervalPartition& coarser, double tol) const {
    for (double b : coarser.breakpoints) {
        auto it = std::lower_bound(breakpoints.begin(), breakpoints.end(), b);
        double best = kInf;
        if (it != breakpoints.end()) best = std::min(best, std::fabs(*it - b));
        if (it != breakpoints.begin()) best = std::min(best, std::fabs(*(it - 1) - b));
        if (best > tol) return false;
    }
    return true;
}

IntervalPartition IntervalPartition::join(const IntervalPartition& other) const {
    const double span_w = breakpoints.back() - breakpoints.front();
    const double tol = kMergeTolRel * span_w;
    if (std::fabs(other.breakpoints.front() - breakpoints.front()) > tol ||
        std::fabs(other.breakpoints.back() - breakpoints.back()) > tol)
        throw std::invalid_argument("join: partitions cover different spans");
    std::vector<double> merged = breakpoints;
    merged.insert(merged.end(), other.breakpoints.begin(), other.breakpoints.end());
    merged = dedupe_sorted(std::move(merged), tol);
    merged.front() = breakpoints.front();
    merged.back() = breakpoints.back();
    return from_breakpoints(std::move(merged));
}

RatioBounds ratio_bounds(const Measure1D& nu, const Measure1D& mu, const Interval& B) {
    if (B.is_empty() || !(measure_of(mu, B) > 0.0))
        throw std::invalid_argument("ratio_bounds: mu(B) = 0, ratio set is empty");

    double lo = std::max(B.lo, mu.support.lo);
    double hi = std::min(B.hi, mu.support.hi);
    double inf = kInf, sup = -kInf;
    bool unbounded = false;

    if (hi > lo) {
        for (double s : ratio_sample_grid(nu, mu, lo, hi)) {
            double md = mu.density(s);
            double nd = nu.density(s);
            if (md > 0.0) {
                double r = nd / md;
                inf = std::min(inf, r);
                sup = std::max(sup, r);
            } else if (nd > 0.0) {
                unbounded = true;  // nu density mass where mu vanishes
            }
        }
    }

    for (const Atom& na : nu.atoms) {
        if (!(na.mass > 0.0) || !B.contains(na.loc)) continue;
        double mu_mass = 0.0;
        for (const Atom& ma : mu.atoms)
            if (ma.loc == na.loc) mu_mass = ma.mass;
        if (mu_mass > 0.0) {
            double r = na.mass / mu_mass;
            inf = std::min(inf, r);
            sup = std::max(sup, r);
        } else {
            unbounded = true;  // nu atom at a mu-null point
        }
    }
    for (const Atom& ma : mu.atoms) {
        if (!(ma.mass > 0.0) || !B.contains(ma.loc)) continue;
        bool shared = false;
        for (const Atom& na : nu.atoms)
            if (na.loc == ma.loc && na.mass > 0.0) shared = true;
        if (!shared) {
            inf = std::min(inf, 0.0);
            sup = std::max(sup, 0.0);
        }
    }

    if (unbounded) sup = kInf;
    if (inf == kInf && sup == -kInf)
        throw std::invalid_argument("ratio_bounds: no ratio information on B");
    if (inf == kInf) inf = 0.0;
    return RatioBounds{inf, sup};
}

namespace {

void require_density_pair(const Measure1D& nu, const Measure1D& mu) {
    for (const auto* m : {&nu, &mu})
        for (const Atom& a : m->atoms)
            if (a.mass > 0.0)
                throw std::invalid_argument(
                    "level-set partition requires atom-free measures; split the "
                    "singular part off with lrn_decompose first");
}

double bisect_for_threshold(const std::function<double(double)>& r, double lo,
                            double hi, double rlo, double t, double scale) {
    // r is continuous on [lo,hi] and crosses t exactly once up to sampling
    // resolution; signs at the ends differ.
    bool rising = rlo < t;
    for (int it = 0; it < 200 && hi - lo > 1e-16 * scale; ++it) {
        double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        double v = r(mid);
        bool below = rising ? (v < t) : (v > t);
        if (below)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

BandFamily band_family_for(const Measure1D& nu, const Measure1D& mu, double eps) {
    RatioBounds rb = ratio_bounds(nu, mu, mu.support);
    if (!std::isfinite(rb.sup))
        throw std::domain_error("level-set bands: non-finite density ratio");
    if (rb.sup <= 0.0) return BandFamily::log_bands;
    return (rb.sup / eps > std::log(static_cast<double>(kMaxLogBands)))
               ? BandFamily::uniform_bands
               : BandFamily::log_bands;
}

IntervalPartition level_partition_with_family(const Measure1D& nu,
                                              const Measure1D& mu, double eps,
                                              BandFamily family) {
    if (!(eps > 0.0)) throw std::invalid_argument("epsilon must be positive");
    require_density_pair(nu, mu);
    const double lo = mu.support.lo, hi = mu.support.hi;
    RatioBounds rb = ratio_bounds(nu, mu, mu.support);
    if (!std::isfinite(rb.sup))
        throw std::domain_error(
            "level_set_partition: non-finite density ratio encountered");

    if (family == BandFamily::log_bands &&
        rb.sup / eps > std::log(1048576.0))
        throw std::invalid_argument(
            "level_set_partition: log-band count infeasible for this epsilon");

    auto ratio = [&](double s) {
        double md = mu.density(s);
        double nd = nu.density(s);
        if (md > 0.0) return nd / md;
        if (nd > 0.0) throw std::domain_error(
            "level_set_partition: non-finite density ratio encountered");
        return std::numeric_limits<double>::quiet_NaN();  // 0/0: mu-null region
    };
    auto threshold = [&](long long k) {
        return family == BandFamily::log_bands
                   ? eps * std::log(static_cast<double>(k))
                   : eps * static_cast<double>(k);
    };
    // Index range of thresholds inside [vlo, vhi]; exact endpoint hits are
    // kept, since a threshold can land exactly on a sample value (uniform
    // bands over a dyadic grid do this for every threshold).
    auto index_range = [&](double vlo, double vhi) {
        double a, b;
        if (family == BandFamily::log_bands) {
            a = std::exp(vlo / eps);
            b = std::exp(vhi / eps);
        } else {
            a = vlo / eps;
            b = vhi / eps;
        }
        long long klo = static_cast<long long>(std::ceil(a));
        long long khi = static_cast<long long>(std::floor(b));
        if (family == BandFamily::log_bands) klo = std::max(klo, 2LL);
        else klo = std::max(klo, 1LL);
        return std::pair<long long, long long>(klo, khi);
    };

    std::vector<double> grid = ratio_sample_grid(nu, mu, lo, hi);
    std::vector<double> rvals(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) rvals[i] = ratio(grid[i]);

    std::vector<double> bs{lo, hi};
    for (const auto* m : {&nu, &mu})
        for (double b : m->density_breakpoints)
            if (b > lo && b < hi) bs.push_back(b);  // ratio jumps split cells

    const double scale = hi - lo;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        double r0 = rvals[i], r1 = rvals[i + 1];
        if (std::isnan(r0) || std::isnan(r1)) continue;
        double vlo = std::min(r0, r1), vhi = std::max(r0, r1);
        if (vhi - vlo <= 0.0) continue;
        auto [klo, khi] = index_range(vlo, vhi);
        for (long long k = klo; k <= khi; ++k) {
            double t = threshold(k);
            if (t == r0) {  // crossing sits exactly on a sample point
                if (grid[i] > lo && grid[i] < hi) bs.push_back(grid[i]);
                continue;
            }
            if (t == r1) {
                if (grid[i + 1] > lo && grid[i + 1] < hi) bs.push_back(grid[i + 1]);
                continue;
            }
            if (t <= vlo || t >= vhi) continue;
            bs.push_back(
                bisect_for_threshold(ratio, grid[i], grid[i + 1], r0, t, scale));
        }
    }
    bs = dedupe_sorted(std::move(bs), kMergeTolRel * scale);
    bs.front() = lo;
    bs.back() = hi;
    return IntervalPartition::from_breakpoints(std::move(bs));
}

IntervalPartition level_set_partition(const Measure1D& nu, const Measure1D& mu,
                                      double eps) {
    return level_partition_with_family(nu, mu, eps, BandFamily::log_bands);
}

}  // namespace jdist
