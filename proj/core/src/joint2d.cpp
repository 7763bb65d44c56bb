#include "jdist/joint2d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "jdist/partition.hpp"
#include "jdist/summation.hpp"

namespace jdist {

namespace {

constexpr double kSlack = 1e-9;
constexpr double kMassFloorRel = 1e-13;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct GridData {
    const std::vector<double>* xb;
    const std::vector<double>* yb;
    const std::vector<double>* masses;
    std::size_t nx() const { return xb->size() - 1; }
    std::size_t ny() const { return yb->size() - 1; }
    double at(std::size_t i, std::size_t j) const { return (*masses)[i * ny() + j]; }
};

const GridData* grid_data(const JointMeasure2D& j, GridData& storage) {
    if (const auto* g = std::get_if<GridJoint>(&j.value)) {
        storage = GridData{&g->x_breaks, &g->y_breaks, &g->masses};
        return &storage;
    }
    if (const auto* d = std::get_if<DiscreteEmbedJoint>(&j.value)) {
        storage = GridData{&d->x_breaks, &d->y_breaks, &d->joint.m.data};
        return &storage;
    }
    return nullptr;
}

std::size_t locate(const std::vector<double>& bs, double s) {
    auto it = std::upper_bound(bs.begin(), bs.end(), s);
    if (it == bs.begin()) return 0;
    std::size_t i = static_cast<std::size_t>(it - bs.begin()) - 1;
    return std::min(i, bs.size() - 2);
}

// Per-cell coverage fractions of an interval set against sorted breakpoints.
std::vector<double> coverage(const std::vector<double>& bs, const IntervalSet& s) {
    std::vector<double> frac(bs.size() - 1, 0.0);
    for (const Interval& iv : s) {
        if (iv.is_empty()) continue;
        double lo = std::max(iv.lo, bs.front());
        double hi = std::min(iv.hi, bs.back());
        if (hi <= lo) continue;
        std::size_t i0 = locate(bs, lo);
        std::size_t i1 = locate(bs, hi);
        if (hi == bs[i1] && i1 > i0) --i1;
        for (std::size_t i = i0; i <= i1; ++i) {
            double w = bs[i + 1] - bs[i];
            double ov = std::min(hi, bs[i + 1]) - std::max(lo, bs[i]);
            if (ov > 0.0) frac[i] += ov / w;
        }
    }
    for (double& f : frac) f = std::min(f, 1.0);
    return frac;
}

void check_within(const Interval& iv, const Interval& sup, const char* what) {
    double slack = kSlack * (1.0 + sup.length());
    if (iv.lo < sup.lo - slack || iv.hi > sup.hi + slack)
        throw std::invalid_argument(std::string(what) + ": query outside support");
}

double grid_rect(const GridData& g, const IntervalSet& A, const IntervalSet& C) {
    std::vector<double> fx = coverage(*g.xb, A);
    std::vector<double> fy = coverage(*g.yb, C);
    NeumaierSum total;
    for (std::size_t i = 0; i < g.nx(); ++i) {
        if (fx[i] == 0.0) continue;
        for (std::size_t j = 0; j < g.ny(); ++j) {
            if (fy[j] == 0.0) continue;
            total.add(g.at(i, j) * fx[i] * fy[j]);
        }
    }
    return total.value();
}

double kernel_rect(const KernelJointSpec& kj, const IntervalSet& A,
                   const IntervalSet& C) {
    const Measure1D& mu = kj.base;
    auto prob_c = [&](double s) {
        double p = 0.0;
        for (const Interval& c : C)
            if (!c.is_empty()) p += kj.kernel.point_prob(s, c);
        return p;
    };
    const double max_sub = mu.support.length() / 64.0;
    const GlRule& rule = gl_rule(mu.quadrature);
    NeumaierSum total;
    for (const Interval& a : A) {
        if (a.is_empty()) continue;
        double lo = std::max(a.lo, mu.support.lo);
        double hi = std::min(a.hi, mu.support.hi);
        if (hi > lo) {
            std::vector<double> cuts{lo, hi};
            for (double b : mu.density_breakpoints)
                if (b > lo && b < hi) cuts.push_back(b);
            std::sort(cuts.begin(), cuts.end());
            for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
                double plo = cuts[p], phi = cuts[p + 1];
                int sub = std::max(
                    1, static_cast<int>(std::ceil((phi - plo) / max_sub - 1e-12)));
                double h = (phi - plo) / sub;
                for (int c = 0; c < sub; ++c) {
                    double slo = plo + c * h;
                    double shi = (c == sub - 1) ? phi : plo + (c + 1) * h;
                    double mid = 0.5 * (slo + shi), half = 0.5 * (shi - slo);
                    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
                        double s = mid + half * rule.nodes[q];
                        double wd = half * rule.weights[q] * mu.density(s);
                        if (wd != 0.0) total.add(wd * prob_c(s));
                    }
                }
            }
        }
        Interval clipped = a;
        clipped.lo = lo;
        clipped.hi = hi;
        for (const Atom& at : mu.atoms)
            if (at.mass > 0.0 && clipped.contains(at.loc))
                total.add(at.mass * prob_c(at.loc));
    }
    return total.value();
}

double diagonal_rect(const DiagonalJoint& d, const IntervalSet& A,
                     const IntervalSet& C) {
    NeumaierSum total;
    for (const Interval& a : A)
        for (const Interval& c : C) {
            Interval q = intersect(a, c);
            if (!q.is_empty()) total.add(measure_of(d.base, q));
        }
    return total.value();
}

double callable_rect(const CallableJoint& cj, const IntervalSet& A,
                     const IntervalSet& C) {
    const GlRule& rule = gl_rule(cj.quadrature);
    auto axis_nodes = [&](const Interval& iv, const Interval& sup,
                          std::vector<double>& xs, std::vector<double>& ws) {
        double lo = std::max(iv.lo, sup.lo), hi = std::min(iv.hi, sup.hi);
        xs.clear();
        ws.clear();
        if (hi <= lo) return;
        double max_sub = sup.length() / 32.0;
        int sub = std::max(1, static_cast<int>(std::ceil((hi - lo) / max_sub - 1e-12)));
        double h = (hi - lo) / sub;
        for (int c = 0; c < sub; ++c) {
            double plo = lo + c * h;
            double phi = (c == sub - 1) ? hi : lo + (c + 1) * h;
            double mid = 0.5 * (plo + phi), half = 0.5 * (phi - plo);
            for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
                xs.push_back(mid + half * rule.nodes[q]);
                ws.push_back(half * rule.weights[q]);
            }
        }
    };
    NeumaierSum total;
    std::vector<double> xs, wx, ys, wy;
    for (const Interval& a : A) {
        axis_nodes(a, cj.x_support, xs, wx);
        for (const Interval& c : C) {
            axis_nodes(c, cj.y_support, ys, wy);
            for (std::size_t i = 0; i < xs.size(); ++i)
                for (std::size_t j = 0; j < ys.size(); ++j)
                    total.add(wx[i] * wy[j] * cj.density(xs[i], ys[j]));
        }
    }
    return total.value();
}

Interval raw_x_support(const JointMeasure2D& j) {
    if (const auto* g = std::get_if<GridJoint>(&j.value))
        return closed_interval(g->x_breaks.front(), g->x_breaks.back());
    if (const auto* c = std::get_if<CallableJoint>(&j.value)) return c->x_support;
    if (const auto* k = std::get_if<KernelJointSpec>(&j.value)) return k->base.support;
    if (const auto* d = std::get_if<DiagonalJoint>(&j.value)) return d->base.support;
    const auto& e = std::get<DiscreteEmbedJoint>(j.value);
    return closed_interval(e.x_breaks.front(), e.x_breaks.back());
}

Interval raw_y_support(const JointMeasure2D& j) {
    if (const auto* g = std::get_if<GridJoint>(&j.value))
        return closed_interval(g->y_breaks.front(), g->y_breaks.back());
    if (const auto* c = std::get_if<CallableJoint>(&j.value)) return c->y_support;
    if (const auto* k = std::get_if<KernelJointSpec>(&j.value)) return k->kernel.target;
    if (const auto* d = std::get_if<DiagonalJoint>(&j.value)) return d->base.support;
    const auto& e = std::get<DiscreteEmbedJoint>(j.value);
    return closed_interval(e.y_breaks.front(), e.y_breaks.back());
}

double rect_unswapped(const JointMeasure2D& j, const IntervalSet& A,
                      const IntervalSet& C) {
    GridData gd;
    if (const GridData* g = grid_data(j, gd)) return grid_rect(*g, A, C);
    if (const auto* k = std::get_if<KernelJointSpec>(&j.value))
        return kernel_rect(*k, A, C);
    if (const auto* d = std::get_if<DiagonalJoint>(&j.value))
        return diagonal_rect(*d, A, C);
    return callable_rect(std::get<CallableJoint>(j.value), A, C);
}

// --- product-grid mass matrices ------------------------------------------

struct Seg {
    double frac;      // fraction of the source cell's width
    std::size_t src;  // source grid cell
    std::size_t dst;  // destination cell
};

std::vector<Seg> segments(const std::vector<double>& src,
                          const std::vector<double>& dst) {
    std::vector<double> merged = src;
    merged.insert(merged.end(), dst.begin(), dst.end());
    std::sort(merged.begin(), merged.end());
    merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
    std::vector<Seg> segs;
    segs.reserve(merged.size());
    for (std::size_t t = 0; t + 1 < merged.size(); ++t) {
        double p = merged[t], q = merged[t + 1];
        if (q <= p) continue;
        double mid = 0.5 * (p + q);
        std::size_t i = locate(src, mid);
        std::size_t r = locate(dst, mid);
        segs.push_back(Seg{(q - p) / (src[i + 1] - src[i]), i, r});
    }
    return segs;
}

// masses[r*C + c] = j(row_cell_r x col_cell_c). Fixed-order accumulation;
// the plain sums here are of nonnegative terms with relative error below
// cells * machine-eps, far inside every tolerance downstream.
std::vector<double> matrix_eval(const JointMeasure2D& j,
                                const std::vector<double>& rb,
                                const std::vector<double>& cb);

std::vector<double> matrix_eval_unswapped(const JointMeasure2D& j,
                                          const std::vector<double>& rb,
                                          const std::vector<double>& cb) {
    const std::size_t R = rb.size() - 1, C = cb.size() - 1;
    std::vector<double> out(R * C, 0.0);

    GridData gd;
    if (const GridData* g = grid_data(j, gd)) {
        std::vector<Seg> sx = segments(*g->xb, rb);
        std::vector<Seg> sy = segments(*g->yb, cb);
        for (const Seg& a : sx) {
            for (const Seg& b : sy) {
                out[a.dst * C + b.dst] += g->at(a.src, b.src) * a.frac * b.frac;
            }
        }
        return out;
    }

    if (const auto* k = std::get_if<KernelJointSpec>(&j.value)) {
        const Measure1D& mu = k->base;
        const double max_sub = mu.support.length() / 64.0;
        const GlRule& rule = gl_rule(mu.quadrature);
        std::vector<double> cdf;
        auto scatter = [&](double s, double weight, std::size_t r) {
            k->kernel.cdf_at(s, cb, cdf);
            double* row = &out[r * C];
            for (std::size_t c = 0; c < C; ++c)
                row[c] += weight * (cdf[c + 1] - cdf[c]);
        };
        for (std::size_t r = 0; r < R; ++r) {
            double lo = std::max(rb[r], mu.support.lo);
            double hi = std::min(rb[r + 1], mu.support.hi);
            if (hi <= lo) continue;
            std::vector<double> cuts{lo, hi};
            for (double b : mu.density_breakpoints)
                if (b > lo && b < hi) cuts.push_back(b);
            std::sort(cuts.begin(), cuts.end());
            for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
                double plo = cuts[p], phi = cuts[p + 1];
                int sub = std::max(
                    1, static_cast<int>(std::ceil((phi - plo) / max_sub - 1e-12)));
                double h = (phi - plo) / sub;
                for (int c = 0; c < sub; ++c) {
                    double slo = plo + c * h;
                    double shi = (c == sub - 1) ? phi : plo + (c + 1) * h;
                    double mid = 0.5 * (slo + shi), half = 0.5 * (shi - slo);
                    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
                        double s = mid + half * rule.nodes[q];
                        double wd = half * rule.weights[q] * mu.density(s);
                        if (wd != 0.0) scatter(s, wd, r);
                    }
                }
            }
        }
        for (const Atom& at : mu.atoms) {
            if (!(at.mass > 0.0)) continue;
            if (at.loc < rb.front() || at.loc > rb.back()) continue;
            scatter(at.loc, at.mass, locate(rb, at.loc));
        }
        return out;
    }

    if (const auto* d = std::get_if<DiagonalJoint>(&j.value)) {
        for (std::size_t r = 0; r < R; ++r) {
            Interval rc{rb[r], rb[r + 1], true, r + 1 == R};
            for (std::size_t c = 0; c < C; ++c) {
                Interval cc{cb[c], cb[c + 1], true, c + 1 == C};
                Interval q = intersect(rc, cc);
                if (!q.is_empty()) out[r * C + c] = measure_of(d->base, q);
            }
        }
        return out;
    }

    const auto& cj = std::get<CallableJoint>(j.value);
    for (std::size_t r = 0; r < R; ++r)
        for (std::size_t c = 0; c < C; ++c)
            out[r * C + c] = callable_rect(
                cj, {closed_interval(rb[r], rb[r + 1])},
                {closed_interval(cb[c], cb[c + 1])});
    return out;
}

std::vector<double> matrix_eval(const JointMeasure2D& j,
                                const std::vector<double>& rb,
                                const std::vector<double>& cb) {
    if (!j.swapped) return matrix_eval_unswapped(j, rb, cb);
    JointMeasure2D flat{j.value, false};
    std::vector<double> t = matrix_eval_unswapped(flat, cb, rb);
    const std::size_t R = rb.size() - 1, C = cb.size() - 1;
    std::vector<double> out(R * C);
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t r = 0; r < R; ++r) out[r * C + c] = t[c * R + r];
    return out;
}

std::vector<double> natural_axis_breaks(const JointMeasure2D& j, int axis) {
    int raw_axis = j.swapped ? 1 - axis : axis;
    GridData gd;
    JointMeasure2D flat{j.value, false};
    if (const GridData* g = grid_data(flat, gd))
        return raw_axis == 0 ? *g->xb : *g->yb;
    return {};
}

std::vector<double> dyadic_breaks(const Interval& sup, int depth) {
    return IntervalPartition::dyadic(sup, depth).breakpoints;
}

std::vector<double> merge_breaks(std::vector<double> a,
                                 const std::vector<double>& b, double span) {
    a.insert(a.end(), b.begin(), b.end());
    std::sort(a.begin(), a.end());
    std::vector<double> out;
    const double tol = kMergeTolRel * span;
    for (double x : a)
        if (out.empty() || x - out.back() > tol) out.push_back(x);
    return out;
}

std::vector<double> out_axis_breaks(const JointMeasure2D& j, int axis, int cap) {
    Interval sup = axis == 0 ? j.x_support() : j.y_support();
    std::vector<double> nat = natural_axis_breaks(j, axis);
    if (static_cast<int>(nat.size()) >= cap + 1) return nat;
    int depth = 0;
    while ((1 << (depth + 1)) <= cap) ++depth;
    std::vector<double> dy = dyadic_breaks(sup, depth);
    if (nat.empty()) return dy;
    std::vector<double> merged = merge_breaks(std::move(nat), dy, sup.length());
    merged.front() = sup.lo;
    merged.back() = sup.hi;
    return merged;
}

ConvergenceReport trivial_report(double value) {
    ConvergenceReport r;
    r.levels.push_back(ConvergenceLevel{0, 0.0, 0, value, value, value});
    r.converged = true;
    r.achieved = 0.0;
    return r;
}

}  // namespace

Interval JointMeasure2D::x_support() const {
    return swapped ? raw_y_support(JointMeasure2D{value, false})
                   : raw_x_support(JointMeasure2D{value, false});
}

Interval JointMeasure2D::y_support() const {
    return swapped ? raw_x_support(JointMeasure2D{value, false})
                   : raw_y_support(JointMeasure2D{value, false});
}

JointMeasure2D make_kernel_joint(Measure1D base, KernelFamily1D kernel) {
    double slack = kSlack * (1.0 + kernel.source.length());
    if (base.support.lo < kernel.source.lo - slack ||
        base.support.hi > kernel.source.hi + slack)
        throw std::invalid_argument("kernel joint: base support outside kernel source");
    return JointMeasure2D{KernelJointSpec{std::move(base), std::move(kernel)}, false};
}

JointMeasure2D make_diagonal_joint(Measure1D base) {
    return JointMeasure2D{DiagonalJoint{std::move(base)}, false};
}

JointMeasure2D make_grid_joint(GridJoint g) {
    if (g.x_breaks.size() < 2 || g.y_breaks.size() < 2)
        throw std::invalid_argument("grid joint needs at least one cell per axis");
    if (!std::is_sorted(g.x_breaks.begin(), g.x_breaks.end()) ||
        !std::is_sorted(g.y_breaks.begin(), g.y_breaks.end()))
        throw std::invalid_argument("grid joint breakpoints must be sorted");
    if (g.masses.size() != g.nx() * g.ny())
        throw std::invalid_argument("grid joint mass array size mismatch");
    for (double m : g.masses)
        if (!(m >= 0.0)) throw std::invalid_argument("grid joint masses must be nonnegative");
    return JointMeasure2D{std::move(g), false};
}

JointMeasure2D make_callable_joint(CallableJoint c) {
    return JointMeasure2D{std::move(c), false};
}

JointMeasure2D make_discrete_embed(DiscreteJoint j, std::vector<double> x_breaks,
                                   std::vector<double> y_breaks) {
    j.validate();
    if (x_breaks.size() != j.rows() + 1 || y_breaks.size() != j.cols() + 1)
        throw std::invalid_argument("discrete embed: cell geometry does not match joint shape");
    return JointMeasure2D{
        DiscreteEmbedJoint{std::move(j), std::move(x_breaks), std::move(y_breaks)},
        false};
}

double rect_measure(const JointMeasure2D& j, const IntervalSet& A,
                    const IntervalSet& C) {
    for (const Interval& a : A)
        if (!a.is_empty()) check_within(a, j.x_support(), "rect_measure");
    for (const Interval& c : C)
        if (!c.is_empty()) check_within(c, j.y_support(), "rect_measure");
    if (j.swapped)
        return rect_unswapped(JointMeasure2D{j.value, false}, C, A);
    return rect_unswapped(j, A, C);
}

double rect_measure(const JointMeasure2D& j, const Interval& A, const Interval& C) {
    return rect_measure(j, IntervalSet{A}, IntervalSet{C});
}

JointMeasure2D dagger(const JointMeasure2D& j) {
    JointMeasure2D r = j;
    r.swapped = !r.swapped;
    return r;
}

std::pair<Measure1D, Measure1D> marginals(const JointMeasure2D& j) {
    JointMeasure2D flat{j.value, false};
    Measure1D left, right;
    GridData gd;
    if (const GridData* g = grid_data(flat, gd)) {
        std::vector<double> xv(g->nx()), yv(g->ny());
        for (std::size_t i = 0; i < g->nx(); ++i) {
            NeumaierSum s;
            for (std::size_t jj = 0; jj < g->ny(); ++jj) s.add(g->at(i, jj));
            xv[i] = s.value() / ((*g->xb)[i + 1] - (*g->xb)[i]);
        }
        for (std::size_t jj = 0; jj < g->ny(); ++jj) {
            NeumaierSum s;
            for (std::size_t i = 0; i < g->nx(); ++i) s.add(g->at(i, jj));
            yv[jj] = s.value() / ((*g->yb)[jj + 1] - (*g->yb)[jj]);
        }
        left = measure_from_spec(closed_interval(g->xb->front(), g->xb->back()),
                                 StepSpec{*g->xb, std::move(xv)});
        right = measure_from_spec(closed_interval(g->yb->front(), g->yb->back()),
                                  StepSpec{*g->yb, std::move(yv)});
    } else if (const auto* k = std::get_if<KernelJointSpec>(&flat.value)) {
        left = k->base;
        right = pushforward(k->base, k->kernel);
    } else if (const auto* d = std::get_if<DiagonalJoint>(&flat.value)) {
        left = d->base;
        right = d->base;
    } else {
        const auto& cj = std::get<CallableJoint>(flat.value);
        auto tabulate = [&](bool along_x) {
            const Interval out_sup = along_x ? cj.x_support : cj.y_support;
            const Interval in_sup = along_x ? cj.y_support : cj.x_support;
            const int cells = 512;
            std::vector<double> bs(cells + 1), vs(cells + 1);
            for (int i = 0; i <= cells; ++i) {
                bs[i] = out_sup.lo + out_sup.length() * (static_cast<double>(i) / cells);
                double p = bs[i];
                auto f = [&](double q) {
                    return along_x ? cj.density(p, q) : cj.density(q, p);
                };
                vs[i] = composite_gl(f, in_sup.lo, in_sup.hi, cj.quadrature,
                                     in_sup.length() / 64.0);
            }
            bs.back() = out_sup.hi;
            return measure_from_spec(out_sup, TableSpec{std::move(bs), std::move(vs)});
        };
        left = tabulate(true);
        right = tabulate(false);
    }
    if (j.swapped) std::swap(left, right);
    return {std::move(left), std::move(right)};
}

ComposeResult compose(const JointMeasure2D& theta, const JointMeasure2D& eta,
                      double tol, int max_depth) {
    ComposeConfig cfg;
    cfg.tol = tol;
    cfg.max_depth = max_depth;
    return compose_with_config(theta, eta, cfg);
}

ComposeResult compose_with_config(const JointMeasure2D& theta,
                                  const JointMeasure2D& eta,
                                  const ComposeConfig& cfg) {
    if (!(cfg.tol > 0.0)) throw std::invalid_argument("compose: tol must be positive");
    if (cfg.max_depth < 1 || cfg.max_depth > 24)
        throw std::invalid_argument("compose: max_depth must lie in [1,24]");
    const int min_depth = std::min(cfg.min_depth, cfg.max_depth);

    Interval v_theta = theta.y_support();
    Interval v_eta = eta.x_support();
    double slack = kSlack * (1.0 + v_theta.length());
    if (std::fabs(v_theta.lo - v_eta.lo) > slack ||
        std::fabs(v_theta.hi - v_eta.hi) > slack)
        throw MarginalMismatchError("compose: mediating supports differ",
                                    std::max(std::fabs(v_theta.lo - v_eta.lo),
                                             std::fabs(v_theta.hi - v_eta.hi)));

    // Identity short-circuit: J1 composes exactly.
    if (std::holds_alternative<DiagonalJoint>(theta.value))
        return ComposeResult{eta, trivial_report(rect_measure(
                                      eta, eta.x_support(), eta.y_support()))};
    if (std::holds_alternative<DiagonalJoint>(eta.value))
        return ComposeResult{theta, trivial_report(rect_measure(
                                        theta, theta.x_support(), theta.y_support()))};

    const std::vector<double> xg = out_axis_breaks(theta, 0, cfg.max_out_cells);
    const std::vector<double> yg = out_axis_breaks(eta, 1, cfg.max_out_cells);
    const std::size_t nx = xg.size() - 1, ny = yg.size() - 1;

    std::vector<double> med_natural = natural_axis_breaks(theta, 1);
    med_natural = merge_breaks(std::move(med_natural), natural_axis_breaks(eta, 0),
                               v_theta.length());

    ConvergenceReport report;
    std::vector<double> zeta_prev;
    std::vector<double> part_prev;
    std::vector<double> zeta;
    bool converged = false;
    bool have_brackets = false;

    for (int depth = min_depth; depth <= cfg.max_depth; ++depth) {
        std::vector<double> part = dyadic_breaks(v_theta, depth);
        if (!med_natural.empty())
            part = merge_breaks(std::move(part), med_natural, v_theta.length());
        part.front() = v_theta.lo;
        part.back() = v_theta.hi;
        const std::size_t K = part.size() - 1;

        std::vector<double> M = matrix_eval(theta, xg, part);
        std::vector<double> N = matrix_eval(eta, part, yg);

        std::vector<double> m_theta(K, 0.0), m_eta(K, 0.0);
        for (std::size_t jj = 0; jj < K; ++jj) {
            NeumaierSum s;
            for (std::size_t i = 0; i < nx; ++i) s.add(M[i * K + jj]);
            m_theta[jj] = s.value();
        }
        for (std::size_t jj = 0; jj < K; ++jj) {
            NeumaierSum s;
            const double* row = &N[jj * ny];
            for (std::size_t c = 0; c < ny; ++c) s.add(row[c]);
            m_eta[jj] = s.value();
        }

        if (depth == min_depth) {
            double defect = 0.0;
            for (std::size_t jj = 0; jj < K; ++jj)
                defect = std::max(defect, std::fabs(m_theta[jj] - m_eta[jj]));
            if (defect > kJointMarginalTol)
                throw MarginalMismatchError(
                    "compose: shared marginal mismatch, max defect " +
                        std::to_string(defect),
                    defect);
        }

        NeumaierSum total_mass;
        for (std::size_t jj = 0; jj < K; ++jj) total_mass.add(0.5 * (m_theta[jj] + m_eta[jj]));
        const double floor = kMassFloorRel * std::max(1.0, total_mass.value());

        std::vector<double> nbar(K, 0.0);
        NeumaierSum value_sum;
        for (std::size_t jj = 0; jj < K; ++jj) {
            nbar[jj] = 0.5 * (m_theta[jj] + m_eta[jj]);
            if (nbar[jj] > floor) value_sum.add(m_theta[jj] * m_eta[jj] / nbar[jj]);
        }

        // Scale N rows by 1/nbar, then zeta = M * N'.
        std::vector<double> Ns = N;
        for (std::size_t jj = 0; jj < K; ++jj) {
            double f = nbar[jj] > floor ? 1.0 / nbar[jj] : 0.0;
            double* row = &Ns[jj * ny];
            for (std::size_t c = 0; c < ny; ++c) row[c] *= f;
        }
        zeta.assign(nx * ny, 0.0);
        for (std::size_t i = 0; i < nx; ++i) {
            const double* mrow = &M[i * K];
            double* zrow = &zeta[i * ny];
            for (std::size_t jj = 0; jj < K; ++jj) {
                double mij = mrow[jj];
                if (mij == 0.0) continue;
                const double* nrow = &Ns[jj * ny];
                for (std::size_t c = 0; c < ny; ++c) zrow[c] += mij * nrow[c];
            }
        }

        ConvergenceLevel row;
        row.level = depth;
        row.cells = K;
        row.value = value_sum.value();

        {
            // Darboux-style brackets for the level sum from child extrema of
            // the per-cell marginal ratios, grouped by parent cells (the
            // whole mediating interval at the first level).
            const std::vector<double>& parents =
                part_prev.empty() ? std::vector<double>{v_theta.lo, v_theta.hi}
                                  : part_prev;
            std::size_t P = parents.size() - 1;
            std::vector<double> fmax(P, -kInf), fmin(P, kInf), gmax(P, -kInf),
                gmin(P, kInf), pmass(P, 0.0);
            for (std::size_t jj = 0; jj < K; ++jj) {
                std::size_t p = locate(parents, 0.5 * (part[jj] + part[jj + 1]));
                pmass[p] += nbar[jj];
                if (nbar[jj] <= floor) continue;
                double f = m_theta[jj] / nbar[jj], g = m_eta[jj] / nbar[jj];
                fmax[p] = std::max(fmax[p], f);
                fmin[p] = std::min(fmin[p], f);
                gmax[p] = std::max(gmax[p], g);
                gmin[p] = std::min(gmin[p], g);
            }
            NeumaierSum up, lo;
            for (std::size_t p = 0; p < P; ++p) {
                if (!(pmass[p] > floor) || fmax[p] == -kInf) continue;
                up.add(pmass[p] * fmax[p] * gmax[p]);
                lo.add(pmass[p] * fmin[p] * gmin[p]);
            }
            row.upper = up.value();
            row.lower = lo.value();
            if (have_brackets)  // running envelope keeps uppers nonincreasing
                row.upper = std::min(row.upper, report.levels.back().upper);
            row.lower = std::min(row.lower, row.upper);
            have_brackets = true;
        }

        if (!zeta_prev.empty()) {
            NeumaierSum delta;
            for (std::size_t t = 0; t < zeta.size(); ++t)
                delta.add(std::fabs(zeta[t] - zeta_prev[t]));
            report.achieved = delta.value();
            report.levels.push_back(row);
            if (report.achieved < cfg.tol) {
                converged = true;
                break;
            }
        } else {
            report.levels.push_back(row);
        }
        zeta_prev = zeta;
        part_prev = std::move(part);
    }

    if (!converged)
        throw ConvergenceError("compose: not converged at max_depth", report);
    report.converged = true;

    GridJoint out;
    out.x_breaks = xg;
    out.y_breaks = yg;
    out.masses = std::move(zeta);
    for (double& m : out.masses) m = std::max(0.0, m);
    return ComposeResult{make_grid_joint(std::move(out)), std::move(report)};
}

double additivity_check(const JointMeasure2D& zeta, const std::vector<Rect>& parts,
                        const Rect& whole) {
    if (parts.empty()) {
        if (whole.x.is_empty() || whole.y.is_empty()) return 0.0;
        throw std::invalid_argument("additivity_check: empty family, nonempty union");
    }
    double area = 0.0;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        const Rect& r = parts[i];
        if (r.x.lo < whole.x.lo - 1e-9 || r.x.hi > whole.x.hi + 1e-9 ||
            r.y.lo < whole.y.lo - 1e-9 || r.y.hi > whole.y.hi + 1e-9)
            throw std::invalid_argument("additivity_check: part outside union rectangle");
        area += r.x.length() * r.y.length();
        for (std::size_t k = i + 1; k < parts.size(); ++k) {
            double ox = std::min(r.x.hi, parts[k].x.hi) - std::max(r.x.lo, parts[k].x.lo);
            double oy = std::min(r.y.hi, parts[k].y.hi) - std::max(r.y.lo, parts[k].y.lo);
            if (ox > 1e-12 && oy > 1e-12)
                throw std::invalid_argument("additivity_check: parts overlap");
        }
    }
    double whole_area = whole.x.length() * whole.y.length();
    if (std::fabs(area - whole_area) > 1e-9 * (1.0 + whole_area))
        throw std::invalid_argument("additivity_check: parts do not tile the union");

    NeumaierSum parts_sum;
    for (const Rect& r : parts) parts_sum.add(rect_measure(zeta, r.x, r.y));
    return std::fabs(rect_measure(zeta, whole.x, whole.y) - parts_sum.value());
}

bool shrink_to_empty_check(const JointMeasure2D& zeta,
                           const std::vector<std::vector<Rect>>& stages,
                           double tol) {
    if (stages.empty())
        throw std::invalid_argument("shrink_to_empty_check: empty sequence");

    auto union_value = [&](const std::vector<Rect>& rects) {
        // Decompose into elementary cells so overlapping members are not
        // double counted.
        std::vector<double> xs, ys;
        for (const Rect& r : rects) {
            xs.push_back(r.x.lo);
            xs.push_back(r.x.hi);
            ys.push_back(r.y.lo);
            ys.push_back(r.y.hi);
        }
        std::sort(xs.begin(), xs.end());
        xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
        std::sort(ys.begin(), ys.end());
        ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
        NeumaierSum total;
        for (std::size_t i = 0; i + 1 < xs.size(); ++i)
            for (std::size_t j = 0; j + 1 < ys.size(); ++j) {
                double mx = 0.5 * (xs[i] + xs[i + 1]);
                double my = 0.5 * (ys[j] + ys[j + 1]);
                bool covered = false;
                for (const Rect& r : rects)
                    if (mx > r.x.lo && mx < r.x.hi && my > r.y.lo && my < r.y.hi)
                        covered = true;
                if (covered)
                    total.add(rect_measure(zeta,
                                           closed_interval(xs[i], xs[i + 1]),
                                           closed_interval(ys[j], ys[j + 1])));
            }
        return total.value();
    };

    auto covered_by = [](double mx, double my, const std::vector<Rect>& rects) {
        for (const Rect& r : rects)
            if (mx > r.x.lo && mx < r.x.hi && my > r.y.lo && my < r.y.hi) return true;
        return false;
    };

    for (std::size_t s = 0; s + 1 < stages.size(); ++s) {
        // stage s+1 must lie inside stage s
        for (const Rect& r : stages[s + 1]) {
            if (r.x.is_empty() || r.y.is_empty()) continue;
            double mx = 0.5 * (r.x.lo + r.x.hi), my = 0.5 * (r.y.lo + r.y.hi);
            if (!covered_by(mx, my, stages[s]))
                throw std::invalid_argument(
                    "shrink_to_empty_check: sequence is not decreasing");
        }
    }

    double best = kInf;
    for (const auto& stage : stages) {
        bool empty = true;
        for (const Rect& r : stage)
            if (!r.x.is_empty() && !r.y.is_empty()) empty = false;
        best = std::min(best, empty ? 0.0 : union_value(stage));
    }
    return best < 10.0 * tol;
}

Moments grid_marginal_moments(const JointMeasure2D& grid_joint, int axis) {
    JointMeasure2D flat{grid_joint.value, false};
    if (grid_joint.swapped) axis = 1 - axis;
    GridData gd;
    const GridData* g = grid_data(flat, gd);
    if (!g) throw std::invalid_argument("grid_marginal_moments: not a grid joint");

    const std::vector<double>& bs = axis == 0 ? *g->xb : *g->yb;
    std::size_t n = bs.size() - 1;
    std::vector<double> mass(n, 0.0);
    for (std::size_t i = 0; i < g->nx(); ++i)
        for (std::size_t j = 0; j < g->ny(); ++j)
            mass[axis == 0 ? i : j] += g->at(i, j);

    NeumaierSum m0, m1, m2;
    for (std::size_t i = 0; i < n; ++i) {
        double w = bs[i + 1] - bs[i];
        double mid = 0.5 * (bs[i] + bs[i + 1]);
        m0.add(mass[i]);
        m1.add(mass[i] * mid);
        m2.add(mass[i] * (mid * mid + w * w / 12.0));  // uniform in-cell spread
    }
    Moments out;
    out.mass = m0.value();
    if (out.mass > 0.0) {
        out.mean = m1.value() / out.mass;
        out.var = m2.value() / out.mass - out.mean * out.mean;
    }
    return out;
}

}  // namespace jdist
