#pragma once

#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "jdist/interval.hpp"

namespace jdist {

// Serializable density forms. Gaussian densities are truncated to the
// support and renormalized, so a gaussian spec is a probability measure on
// its interval; with the default +-8 sigma supports the renormalization
// factor differs from 1 by < 2e-15.
struct ZeroSpec {};

struct GaussianSpec {
    double mean = 0.0;
    double var = 1.0;
};

struct AffineSpec {
    double slope = 0.0;
    double intercept = 1.0;
};

// Piecewise-linear density through (breakpoints[i], values[i]); zero outside
// the table range. Breakpoints are quadrature split points, so integrals of
// table densities are exact up to rounding.
struct TableSpec {
    std::vector<double> breakpoints;
    std::vector<double> values;
};

// Piecewise-constant density: values[i] on [breakpoints[i], breakpoints[i+1]).
struct StepSpec {
    std::vector<double> breakpoints;
    std::vector<double> values;
};

using DensitySpec = std::variant<ZeroSpec, GaussianSpec, AffineSpec, TableSpec, StepSpec>;

struct Atom {
    double loc = 0.0;
    double mass = 0.0;
};

// Finite measure on [a,b]: density part plus finitely many atoms. Atoms are
// the only supported singular part. `density_breakpoints` lists known kinks
// and jumps of the density; quadrature subdivides there, keeping piecewise
// forms exactly integrable.
struct Measure1D {
    Interval support;
    std::function<double(double)> density;
    std::optional<DensitySpec> spec;
    std::vector<double> density_breakpoints;
    std::vector<Atom> atoms;
    int quadrature = 16;

    double total_mass() const;
    double atom_mass_in(const Interval& where) const;
};

Measure1D measure_from_spec(Interval support, DensitySpec spec,
                            std::vector<Atom> atoms = {}, int quadrature = 16);

Measure1D lebesgue(Interval support, int quadrature = 16);

Measure1D gaussian_measure(Interval support, double mean, double var,
                           int quadrature = 16);

// Density integral by fixed-order composite Gauss-Legendre plus atom masses,
// honoring endpoint membership flags for atoms. Deterministic.
double measure_of(const Measure1D& m, const Interval& S);
double measure_of(const Measure1D& m, const IntervalSet& S);

// mass-preserving scale: c * m.
Measure1D scale_measure(const Measure1D& m, double c);

// Gauss-Legendre rule on [-1,1]; nodes cached per n, thread-safe.
struct GlRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};
const GlRule& gl_rule(int n);

// Composite GL integral of f over [a,b] with subcells of width <= max_sub.
double composite_gl(const std::function<double(double)>& f, double a, double b,
                    int nodes, double max_sub);

// Standard normal CDF via erfc, accurate in both tails.
double gaussian_cdf(double z);

}  // namespace jdist
