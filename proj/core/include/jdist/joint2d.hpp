#pragma once

#include <functional>
#include <utility>
#include <variant>
#include <vector>

#include "jdist/discrete.hpp"
#include "jdist/interval.hpp"
#include "jdist/kernel1d.hpp"
#include "jdist/measure1d.hpp"
#include "jdist/report.hpp"

namespace jdist {

struct Rect {
    Interval x;
    Interval y;
};

// Piecewise-constant bivariate density: cell (i,j) spans
// [x_breaks[i], x_breaks[i+1]) x [y_breaks[j], y_breaks[j+1]) and carries
// `masses[i*ny + j]`, uniformly spread. The materialization of composition
// results; exact under rectangle queries with fractional cell coverage.
struct GridJoint {
    std::vector<double> x_breaks;
    std::vector<double> y_breaks;
    std::vector<double> masses;

    std::size_t nx() const { return x_breaks.size() - 1; }
    std::size_t ny() const { return y_breaks.size() - 1; }
    double mass_at(std::size_t i, std::size_t j) const { return masses[i * ny() + j]; }
};

// Evaluable bivariate density with a 2-D composite quadrature config.
struct CallableJoint {
    Interval x_support;
    Interval y_support;
    std::function<double(double, double)> density;
    int quadrature = 16;
};

// J P: rect values integral over A of P(s,B) d base(s), realized lazily.
struct KernelJointSpec {
    Measure1D base;
    KernelFamily1D kernel;
};

// J 1_X: diagonal-supported identity; admits no density, composes by
// short-circuit.
struct DiagonalJoint {
    Measure1D base;
};

// Discrete joint with cell geometry; mass is uniform inside each box, which
// makes composition through the continuous pipeline agree with the discrete
// formula exactly once the mediating partition refines the box grid.
struct DiscreteEmbedJoint {
    DiscreteJoint joint;
    std::vector<double> x_breaks;
    std::vector<double> y_breaks;
};

struct JointMeasure2D {
    std::variant<GridJoint, CallableJoint, KernelJointSpec, DiagonalJoint,
                 DiscreteEmbedJoint>
        value;
    // Dagger is an argument swap; the flag keeps the involution exact for
    // every variant, including kernel joints which admit no structural
    // transpose.
    bool swapped = false;

    Interval x_support() const;
    Interval y_support() const;
};

JointMeasure2D make_kernel_joint(Measure1D base, KernelFamily1D kernel);
JointMeasure2D make_diagonal_joint(Measure1D base);
JointMeasure2D make_grid_joint(GridJoint g);
JointMeasure2D make_callable_joint(CallableJoint c);
JointMeasure2D make_discrete_embed(DiscreteJoint j, std::vector<double> x_breaks,
                                   std::vector<double> y_breaks);

double rect_measure(const JointMeasure2D& j, const Interval& A, const Interval& C);
double rect_measure(const JointMeasure2D& j, const IntervalSet& A,
                    const IntervalSet& C);

// (left, right) marginals materialized as measures with exact step or table
// densities.
std::pair<Measure1D, Measure1D> marginals(const JointMeasure2D& j);

JointMeasure2D dagger(const JointMeasure2D& j);

// Shared-marginal precondition tolerance for composition, checked on the
// first-level mediating cells.
inline constexpr double kJointMarginalTol = 1e-4;

struct ComposeConfig {
    double tol = 1e-3;
    int max_depth = 14;   // mediating cells <= 2^max_depth
    int min_depth = 4;
    int max_out_cells = 512;  // output grid resolution cap per axis
};

struct ComposeResult {
    JointMeasure2D joint;
    ConvergenceReport report;
};

// Disintegration-free composition: rectangle values are limits of
// sum over mediating cells B of theta(A x B) * eta(B x C) / nu(B) along a
// dyadic chain joined with the arguments' natural breakpoints. nu(B) is the
// average of the two computed marginals on B; cells with no shared mass are
// skipped. Composing with DiagonalJoint short-circuits exactly.
ComposeResult compose(const JointMeasure2D& theta, const JointMeasure2D& eta,
                      double tol = 1e-3, int max_depth = 14);
ComposeResult compose_with_config(const JointMeasure2D& theta,
                                  const JointMeasure2D& eta,
                                  const ComposeConfig& cfg);

// |zeta(whole) - sum of zeta(part)| after validating that parts are
// pairwise disjoint and tile the whole rectangle.
double additivity_check(const JointMeasure2D& zeta, const std::vector<Rect>& parts,
                        const Rect& whole);

// true iff the values of a decreasing rectangle-union sequence fall below
// 10*tol. Monotonicity of the sequence is validated.
bool shrink_to_empty_check(const JointMeasure2D& zeta,
                           const std::vector<std::vector<Rect>>& stages,
                           double tol);

struct Moments {
    double mass = 0.0;
    double mean = 0.0;
    double var = 0.0;
};

// Exact moments of a grid joint's marginal (axis 0 = x, 1 = y), including
// the within-cell uniform-spread second-moment term.
Moments grid_marginal_moments(const JointMeasure2D& grid_joint, int axis);

}  // namespace jdist
