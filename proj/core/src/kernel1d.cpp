#include "jdist/kernel1d.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "jdist/summation.hpp"

namespace jdist {

namespace {

constexpr double kSlack = 1e-9;

struct PwlRow {
    const std::vector<double>* bs;
    const std::vector<double>* vs;
};

double pwl_value(const std::vector<double>& bs, const std::vector<double>& vs,
                 double t) {
    if (t <= bs.front()) return t == bs.front() ? vs.front() : 0.0;
    if (t >= bs.back()) return t == bs.back() ? vs.back() : 0.0;
    auto it = std::upper_bound(bs.begin(), bs.end(), t);
    std::size_t i = static_cast<std::size_t>(it - bs.begin()) - 1;
    double u = (t - bs[i]) / (bs[i + 1] - bs[i]);
    return vs[i] + u * (vs[i + 1] - vs[i]);
}

// Integral of the piecewise-linear density from bs.front() to t; exact.
double pwl_cum(const std::vector<double>& bs, const std::vector<double>& vs,
               double t) {
    if (t <= bs.front()) return 0.0;
    NeumaierSum s;
    for (std::size_t i = 0; i + 1 < bs.size(); ++i) {
        if (t >= bs[i + 1]) {
            s.add(0.5 * (vs[i] + vs[i + 1]) * (bs[i + 1] - bs[i]));
        } else {
            double dt = t - bs[i];
            double vt = vs[i] + (vs[i + 1] - vs[i]) * dt / (bs[i + 1] - bs[i]);
            s.add(0.5 * (vs[i] + vt) * dt);
            return s.value();
        }
    }
    return s.value();
}

double pwl_mass(const std::vector<double>& bs, const std::vector<double>& vs) {
    return pwl_cum(bs, vs, bs.back());
}

void validate_table(const TableKernel& t) {
    if (t.s_grid.size() < 2 || t.t_grid.size() < 2)
        throw std::invalid_argument("table kernel grids need at least two nodes");
    if (t.rows.size() != t.s_grid.size())
        throw std::invalid_argument("table kernel needs one row per s node");
    for (const auto& row : t.rows) {
        if (row.size() != t.t_grid.size())
            throw std::invalid_argument("table kernel row length mismatch");
        for (double v : row)
            if (!(v >= 0.0)) throw std::invalid_argument("table kernel density negative");
        if (std::fabs(pwl_mass(t.t_grid, row) - 1.0) > 1e-6)
            throw std::invalid_argument("table kernel row is not a probability density");
    }
}

}  // namespace

double KernelFamily1D::point_prob(double s, const Interval& B) const {
    Interval q = intersect(B, target);
    if (q.is_empty()) return 0.0;
    if (const auto* g = std::get_if<GaussianKernel>(&family)) {
        double m = g->mean(s);
        double sd = std::sqrt(g->var);
        double z = gaussian_cdf((target.hi - m) / sd) - gaussian_cdf((target.lo - m) / sd);
        double p = gaussian_cdf((q.hi - m) / sd) - gaussian_cdf((q.lo - m) / sd);
        return std::max(0.0, p / z);
    }
    if (const auto* t = std::get_if<TableKernel>(&family)) {
        double sc = std::clamp(s, t->s_grid.front(), t->s_grid.back());
        auto it = std::upper_bound(t->s_grid.begin(), t->s_grid.end(), sc);
        std::size_t i = it == t->s_grid.begin()
                            ? 0
                            : std::min(static_cast<std::size_t>(it - t->s_grid.begin()) - 1,
                                       t->s_grid.size() - 2);
        double u = (sc - t->s_grid[i]) / (t->s_grid[i + 1] - t->s_grid[i]);
        double a = pwl_cum(t->t_grid, t->rows[i], q.hi) -
                   pwl_cum(t->t_grid, t->rows[i], q.lo);
        double b = pwl_cum(t->t_grid, t->rows[i + 1], q.hi) -
                   pwl_cum(t->t_grid, t->rows[i + 1], q.lo);
        return std::max(0.0, (1.0 - u) * a + u * b);
    }
    const auto& sub = std::get<SubidentityKernel>(family);
    for (const Interval& iv : sub.keep)
        if (iv.contains(s) && q.contains(s)) return 1.0;
    return 0.0;
}

void KernelFamily1D::cdf_at(double s, const std::vector<double>& ts,
                            std::vector<double>& out) const {
    out.resize(ts.size());
    if (const auto* g = std::get_if<GaussianKernel>(&family)) {
        double m = g->mean(s);
        double sd = std::sqrt(g->var);
        double zlo = gaussian_cdf((target.lo - m) / sd);
        double z = gaussian_cdf((target.hi - m) / sd) - zlo;
        for (std::size_t i = 0; i < ts.size(); ++i) {
            double t = std::clamp(ts[i], target.lo, target.hi);
            out[i] = std::max(0.0, (gaussian_cdf((t - m) / sd) - zlo) / z);
        }
        return;
    }
    for (std::size_t i = 0; i < ts.size(); ++i)
        out[i] = point_prob(s, Interval{target.lo, ts[i], true, true});
}

double KernelFamily1D::density_at(double s, double t) const {
    if (const auto* g = std::get_if<GaussianKernel>(&family)) {
        if (t < target.lo || t > target.hi) return 0.0;
        double m = g->mean(s);
        double sd = std::sqrt(g->var);
        double z = gaussian_cdf((target.hi - m) / sd) - gaussian_cdf((target.lo - m) / sd);
        double u = (t - m) / sd;
        return std::exp(-0.5 * u * u) / (z * sd * std::sqrt(2.0 * M_PI));
    }
    if (const auto* tk = std::get_if<TableKernel>(&family)) {
        double sc = std::clamp(s, tk->s_grid.front(), tk->s_grid.back());
        auto it = std::upper_bound(tk->s_grid.begin(), tk->s_grid.end(), sc);
        std::size_t i = it == tk->s_grid.begin()
                            ? 0
                            : std::min(static_cast<std::size_t>(it - tk->s_grid.begin()) - 1,
                                       tk->s_grid.size() - 2);
        double u = (sc - tk->s_grid[i]) / (tk->s_grid[i + 1] - tk->s_grid[i]);
        return (1.0 - u) * pwl_value(tk->t_grid, tk->rows[i], t) +
               u * pwl_value(tk->t_grid, tk->rows[i + 1], t);
    }
    throw std::logic_error("subidentity kernels have no density");
}

Measure1D KernelFamily1D::slice(double s, int quadrature) const {
    if (const auto* g = std::get_if<GaussianKernel>(&family))
        return gaussian_measure(target, g->mean(s), g->var, quadrature);
    if (std::holds_alternative<TableKernel>(family)) {
        const auto& tk = std::get<TableKernel>(family);
        std::vector<double> vals(tk.t_grid.size());
        for (std::size_t j = 0; j < vals.size(); ++j)
            vals[j] = density_at(s, tk.t_grid[j]);
        return measure_from_spec(target, TableSpec{tk.t_grid, vals}, {}, quadrature);
    }
    const auto& sub = std::get<SubidentityKernel>(family);
    std::vector<Atom> atoms;
    for (const Interval& iv : sub.keep)
        if (iv.contains(s)) atoms.push_back(Atom{s, 1.0});
    if (atoms.size() > 1) atoms.resize(1);
    return measure_from_spec(target, ZeroSpec{}, atoms, quadrature);
}

KernelFamily1D gaussian_kernel(Interval source, Interval target, AffineFn mean,
                               double var) {
    if (!(var > 0.0)) throw std::invalid_argument("kernel variance must be positive");
    if (!(source.hi > source.lo) || !(target.hi > target.lo))
        throw std::invalid_argument("kernel intervals must have positive width");
    double sd = std::sqrt(var);
    for (double s : {source.lo, source.hi}) {
        double m = mean(s);
        double z = gaussian_cdf((target.hi - m) / sd) - gaussian_cdf((target.lo - m) / sd);
        if (!(z > 0.0))
            throw std::invalid_argument("gaussian kernel has no mass on the target");
    }
    return KernelFamily1D{source, target, GaussianKernel{mean, var}};
}

KernelFamily1D restrict_kernel(const IntervalSet& A, Interval space) {
    IntervalSet keep;
    for (const Interval& iv : A) {
        Interval c = intersect(iv, space);
        if (!c.is_empty()) keep.push_back(c);
    }
    return KernelFamily1D{space, space, SubidentityKernel{std::move(keep)}};
}

Measure1D pushforward(const Measure1D& mu, const KernelFamily1D& P, int grid_cells) {
    const double slack = kSlack * (1.0 + P.source.length());
    if (mu.support.lo < P.source.lo - slack || mu.support.hi > P.source.hi + slack)
        throw std::invalid_argument("pushforward: measure support outside kernel source");

    if (P.is_subidentity()) {
        const auto& sub = std::get<SubidentityKernel>(P.family);
        Measure1D r = mu;
        auto base = mu.density;
        IntervalSet keep = sub.keep;
        r.density = [base, keep](double s) {
            for (const Interval& iv : keep)
                if (s >= iv.lo && s <= iv.hi) return base(s);
            return 0.0;
        };
        r.spec.reset();
        std::vector<double> cuts = mu.density_breakpoints;
        for (const Interval& iv : keep) {
            cuts.push_back(iv.lo);
            cuts.push_back(iv.hi);
        }
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
        r.density_breakpoints = std::move(cuts);
        r.atoms.clear();
        for (const Atom& a : mu.atoms)
            for (const Interval& iv : keep)
                if (iv.contains(a.loc)) {
                    r.atoms.push_back(a);
                    break;
                }
        return r;
    }

    if (grid_cells < 2) throw std::invalid_argument("pushforward: grid too small");
    std::vector<double> grid(grid_cells + 1);
    double w = P.target.length();
    for (int j = 0; j <= grid_cells; ++j)
        grid[j] = P.target.lo + w * (static_cast<double>(j) / grid_cells);
    grid.back() = P.target.hi;

    // Density of mu o P sampled on the grid: quadrature over the source
    // density plus direct atom contributions.
    std::vector<NeumaierSum> acc(grid.size());
    const GlRule& rule = gl_rule(mu.quadrature);
    double a = mu.support.lo, b = mu.support.hi;
    std::vector<double> cuts{a, b};
    for (double c : mu.density_breakpoints)
        if (c > a && c < b) cuts.push_back(c);
    std::sort(cuts.begin(), cuts.end());
    const double max_sub = mu.support.length() / 64.0;
    for (std::size_t piece = 0; piece + 1 < cuts.size(); ++piece) {
        double lo = cuts[piece], hi = cuts[piece + 1];
        int sub = std::max(1, static_cast<int>(std::ceil((hi - lo) / max_sub - 1e-12)));
        double h = (hi - lo) / sub;
        for (int c = 0; c < sub; ++c) {
            double plo = lo + c * h;
            double phi = (c == sub - 1) ? hi : lo + (c + 1) * h;
            double mid = 0.5 * (plo + phi), half = 0.5 * (phi - plo);
            for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
                double s = mid + half * rule.nodes[q];
                double wq = half * rule.weights[q] * mu.density(s);
                if (wq == 0.0) continue;
                for (std::size_t j = 0; j < grid.size(); ++j)
                    acc[j].add(wq * P.density_at(s, grid[j]));
            }
        }
    }
    for (const Atom& at : mu.atoms) {
        if (!(at.mass > 0.0)) continue;
        for (std::size_t j = 0; j < grid.size(); ++j)
            acc[j].add(at.mass * P.density_at(at.loc, grid[j]));
    }

    std::vector<double> vals(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) vals[j] = std::max(0.0, acc[j].value());

    // Kernel rows are renormalized probabilities, so the exact image mass is
    // the mass of mu; rescale away the trapezoid discretization defect.
    double target_mass = measure_of(mu, mu.support);
    double got = pwl_mass(grid, vals);
    if (got > 0.0 && target_mass > 0.0) {
        double f = target_mass / got;
        for (double& v : vals) v *= f;
    }
    return measure_from_spec(P.target, TableSpec{std::move(grid), std::move(vals)},
                             {}, mu.quadrature);
}

KernelFamily1D compose_kernels(const KernelFamily1D& P, const KernelFamily1D& Q,
                               int s_cells, int t_cells) {
    if (P.is_subidentity() || Q.is_subidentity())
        throw std::invalid_argument(
            "compose_kernels: subidentity kernels act on measures via "
            "pushforward and are not materialized");
    const double slack = kSlack * (1.0 + P.target.length());
    if (std::fabs(P.target.lo - Q.source.lo) > slack ||
        std::fabs(P.target.hi - Q.source.hi) > slack)
        throw std::invalid_argument("compose_kernels: P target differs from Q source");
    if (s_cells < 2 || t_cells < 2)
        throw std::invalid_argument("compose_kernels: grids too small");

    TableKernel out;
    out.s_grid.resize(s_cells + 1);
    for (int i = 0; i <= s_cells; ++i)
        out.s_grid[i] = P.source.lo +
                        P.source.length() * (static_cast<double>(i) / s_cells);
    out.s_grid.back() = P.source.hi;
    out.t_grid.resize(t_cells + 1);
    for (int j = 0; j <= t_cells; ++j)
        out.t_grid[j] = Q.target.lo +
                        Q.target.length() * (static_cast<double>(j) / t_cells);
    out.t_grid.back() = Q.target.hi;

    // Mediating quadrature nodes over P's target, shared by every row.
    const GlRule& rule = gl_rule(16);
    const int sub = 64;
    double h = P.target.length() / sub;
    std::vector<double> t_nodes;
    std::vector<double> t_weights;
    for (int c = 0; c < sub; ++c) {
        double lo = P.target.lo + c * h;
        double mid = lo + 0.5 * h, half = 0.5 * h;
        for (int q = 0; q < 16; ++q) {
            t_nodes.push_back(mid + half * rule.nodes[q]);
            t_weights.push_back(half * rule.weights[q]);
        }
    }

    // W[i][j] = Q density at (t_nodes[i], u_j), shared across rows.
    std::vector<std::vector<double>> W(t_nodes.size(),
                                       std::vector<double>(out.t_grid.size()));
    for (std::size_t i = 0; i < t_nodes.size(); ++i)
        for (std::size_t j = 0; j < out.t_grid.size(); ++j)
            W[i][j] = Q.density_at(t_nodes[i], out.t_grid[j]);

    out.rows.assign(out.s_grid.size(), std::vector<double>(out.t_grid.size(), 0.0));
    std::vector<double> p(t_nodes.size());
    for (std::size_t r = 0; r < out.s_grid.size(); ++r) {
        double s = out.s_grid[r];
        for (std::size_t i = 0; i < t_nodes.size(); ++i)
            p[i] = t_weights[i] * P.density_at(s, t_nodes[i]);
        auto& row = out.rows[r];
        for (std::size_t i = 0; i < t_nodes.size(); ++i) {
            double pi = p[i];
            if (pi == 0.0) continue;
            const auto& wi = W[i];
            for (std::size_t j = 0; j < row.size(); ++j) row[j] += pi * wi[j];
        }
        double mass = pwl_mass(out.t_grid, row);
        if (mass > 0.0)
            for (double& v : row) v /= mass;
    }
    validate_table(out);
    return KernelFamily1D{P.source, Q.target, std::move(out)};
}

}  // namespace jdist
