#include "jdist/measure1d.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

#include "jdist/summation.hpp"

namespace jdist {

namespace {

constexpr double kSupportSlack = 1e-9;

// Subcell count ratio for composite quadrature: cells no wider than
// support/64 keep 16-node GL at full double accuracy for every density kind
// used here.
constexpr double kSubdivisions = 64.0;

double legendre_newton_root(int n, double guess) {
    double x = guess;
    for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        double dp = n * (x * p1 - p0) / (x * x - 1.0);
        double step = p1 / dp;
        x -= step;
        if (std::fabs(step) < 1e-16) break;
    }
    return x;
}

GlRule make_gl_rule(int n) {
    GlRule r;
    r.nodes.resize(n);
    r.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double guess = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double x = legendre_newton_root(n, guess);
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        double dp = n * (x * p1 - p0) / (x * x - 1.0);
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        r.nodes[i] = -x;
        r.weights[i] = w;
        r.nodes[n - 1 - i] = x;
        r.weights[n - 1 - i] = w;
    }
    return r;
}

double pwl_eval(const std::vector<double>& bs, const std::vector<double>& vs, double s) {
    if (s < bs.front() || s > bs.back()) return 0.0;
    auto it = std::upper_bound(bs.begin(), bs.end(), s);
    if (it == bs.begin()) return vs.front();
    if (it == bs.end()) return vs.back();
    std::size_t i = static_cast<std::size_t>(it - bs.begin()) - 1;
    double t = (s - bs[i]) / (bs[i + 1] - bs[i]);
    return vs[i] + t * (vs[i + 1] - vs[i]);
}

double step_eval(const std::vector<double>& bs, const std::vector<double>& vs, double s) {
    if (s < bs.front() || s > bs.back()) return 0.0;
    auto it = std::upper_bound(bs.begin(), bs.end(), s);
    std::size_t i = static_cast<std::size_t>(it - bs.begin());
    if (i == 0) return vs.front();
    if (i >= bs.size()) return vs.back();
    return vs[i - 1];
}

}  // namespace

const GlRule& gl_rule(int n) {
    if (n < 1 || n > 256) throw std::invalid_argument("gl_rule: node count out of range");
    static std::mutex mu;
    static std::map<int, GlRule> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, make_gl_rule(n)).first;
    return it->second;
}

double composite_gl(const std::function<double(double)>& f, double a, double b,
                    int nodes, double max_sub) {
    if (!(b > a)) return 0.0;
    const GlRule& rule = gl_rule(nodes);
    int cells = std::max(1, static_cast<int>(std::ceil((b - a) / max_sub - 1e-12)));
    double h = (b - a) / cells;
    NeumaierSum total;
    for (int c = 0; c < cells; ++c) {
        double lo = a + c * h;
        double hi = (c == cells - 1) ? b : a + (c + 1) * h;
        double mid = 0.5 * (lo + hi);
        double half = 0.5 * (hi - lo);
        for (int q = 0; q < nodes; ++q)
            total.add(half * rule.weights[q] * f(mid + half * rule.nodes[q]));
    }
    return total.value();
}

double gaussian_cdf(double z) { return 0.5 * std::erfc(-z * M_SQRT1_2); }

double Measure1D::atom_mass_in(const Interval& where) const {
    NeumaierSum s;
    for (const Atom& at : atoms)
        if (where.contains(at.loc)) s.add(at.mass);
    return s.value();
}

double Measure1D::total_mass() const { return measure_of(*this, support); }

Measure1D measure_from_spec(Interval support, DensitySpec spec,
                            std::vector<Atom> atoms, int quadrature) {
    if (!(support.hi > support.lo))
        throw std::invalid_argument("measure support must have positive width");
    if (quadrature < 1)
        throw std::invalid_argument("quadrature node count must be positive");
    Measure1D m;
    m.support = closed_interval(support.lo, support.hi);
    m.quadrature = quadrature;
    m.atoms = std::move(atoms);
    std::sort(m.atoms.begin(), m.atoms.end(),
              [](const Atom& a, const Atom& b) { return a.loc < b.loc; });
    for (const Atom& at : m.atoms) {
        if (!(at.mass >= 0.0))
            throw std::invalid_argument("atom mass must be nonnegative");
        if (!m.support.contains(at.loc))
            throw std::invalid_argument("atom location outside support");
    }

    if (std::holds_alternative<ZeroSpec>(spec)) {
        m.density = [](double) { return 0.0; };
    } else if (const auto* g = std::get_if<GaussianSpec>(&spec)) {
        if (!(g->var > 0.0))
            throw std::invalid_argument("gaussian variance must be positive");
        double sd = std::sqrt(g->var);
        double z = gaussian_cdf((support.hi - g->mean) / sd) -
                   gaussian_cdf((support.lo - g->mean) / sd);
        if (!(z > 0.0))
            throw std::invalid_argument("gaussian has no mass on the support");
        double mean = g->mean;
        double norm = 1.0 / (z * sd * std::sqrt(2.0 * M_PI));
        m.density = [mean, sd, norm](double s) {
            double u = (s - mean) / sd;
            return norm * std::exp(-0.5 * u * u);
        };
    } else if (const auto* a = std::get_if<AffineSpec>(&spec)) {
        double at_lo = a->slope * support.lo + a->intercept;
        double at_hi = a->slope * support.hi + a->intercept;
        if (at_lo < -1e-12 || at_hi < -1e-12)
            throw std::invalid_argument("affine density negative on support");
        double slope = a->slope, intercept = a->intercept;
        m.density = [slope, intercept](double s) {
            return std::max(0.0, slope * s + intercept);
        };
    } else if (const auto* t = std::get_if<TableSpec>(&spec)) {
        if (t->breakpoints.size() < 2 || t->breakpoints.size() != t->values.size())
            throw std::invalid_argument("table density needs matching breakpoints/values, length >= 2");
        if (!std::is_sorted(t->breakpoints.begin(), t->breakpoints.end()) ||
            std::adjacent_find(t->breakpoints.begin(), t->breakpoints.end()) !=
                t->breakpoints.end())
            throw std::invalid_argument("table breakpoints must be strictly increasing");
        for (double v : t->values)
            if (!(v >= 0.0)) throw std::invalid_argument("table density value negative");
        auto bs = t->breakpoints;
        auto vs = t->values;
        m.density = [bs, vs](double s) { return pwl_eval(bs, vs, s); };
        m.density_breakpoints = bs;
    } else if (const auto* st = std::get_if<StepSpec>(&spec)) {
        if (st->breakpoints.size() < 2 ||
            st->breakpoints.size() != st->values.size() + 1)
            throw std::invalid_argument("step density needs n+1 breakpoints for n values");
        for (double v : st->values)
            if (!(v >= 0.0)) throw std::invalid_argument("step density value negative");
        auto bs = st->breakpoints;
        auto vs = st->values;
        m.density = [bs, vs](double s) { return step_eval(bs, vs, s); };
        m.density_breakpoints = bs;
    }
    m.spec = std::move(spec);
    return m;
}

Measure1D lebesgue(Interval support, int quadrature) {
    return measure_from_spec(support, AffineSpec{0.0, 1.0}, {}, quadrature);
}

Measure1D gaussian_measure(Interval support, double mean, double var, int quadrature) {
    return measure_from_spec(support, GaussianSpec{mean, var}, {}, quadrature);
}

double measure_of(const Measure1D& m, const Interval& S) {
    return measure_of(m, IntervalSet{S});
}

double measure_of(const Measure1D& m, const IntervalSet& S) {
    const double slack = kSupportSlack * (1.0 + m.support.length());
    const double max_sub = m.support.length() / kSubdivisions;
    NeumaierSum total;
    for (const Interval& iv : S) {
        if (iv.is_empty()) continue;
        if (iv.lo < m.support.lo - slack || iv.hi > m.support.hi + slack)
            throw std::invalid_argument("measure_of: query interval outside support");
        double lo = std::max(iv.lo, m.support.lo);
        double hi = std::min(iv.hi, m.support.hi);
        if (hi > lo) {
            // Split at known density kinks so each quadrature piece is smooth.
            std::vector<double> cuts;
            cuts.push_back(lo);
            for (double b : m.density_breakpoints)
                if (b > lo && b < hi) cuts.push_back(b);
            cuts.push_back(hi);
            std::sort(cuts.begin(), cuts.end());
            for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
                total.add(composite_gl(m.density, cuts[k], cuts[k + 1], m.quadrature,
                                       max_sub));
        }
        Interval clipped = iv;
        clipped.lo = lo;
        clipped.hi = hi;
        total.add(m.atom_mass_in(clipped));
    }
    return total.value();
}

Measure1D scale_measure(const Measure1D& m, double c) {
    if (!(c >= 0.0)) throw std::invalid_argument("scale factor must be nonnegative");
    Measure1D r = m;
    auto base = m.density;
    r.density = [base, c](double s) { return c * base(s); };
    for (Atom& a : r.atoms) a.mass *= c;
    if (r.spec) {
        if (auto* a = std::get_if<AffineSpec>(&*r.spec)) {
            a->slope *= c;
            a->intercept *= c;
        } else if (auto* t = std::get_if<TableSpec>(&*r.spec)) {
            for (double& v : t->values) v *= c;
        } else if (auto* st = std::get_if<StepSpec>(&*r.spec)) {
            for (double& v : st->values) v *= c;
        } else if (std::holds_alternative<GaussianSpec>(*r.spec) && c != 1.0) {
            r.spec.reset();  // scaled gaussian is not one of the serializable kinds
        }
    }
    return r;
}

}  // namespace jdist
