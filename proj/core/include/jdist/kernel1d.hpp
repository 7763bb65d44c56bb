#pragma once

#include <variant>
#include <vector>

#include "jdist/interval.hpp"
#include "jdist/measure1d.hpp"

namespace jdist {

struct AffineFn {
    double slope = 1.0;
    double intercept = 0.0;
    double operator()(double s) const { return slope * s + intercept; }
};

// P(s,-) = N(mean(s), var) truncated to the target interval and
// renormalized; with +-8 sigma targets the lost mass is < 2e-15.
struct GaussianKernel {
    AffineFn mean;
    double var = 1.0;
};

// Rows are piecewise-linear densities on a shared t_grid, each normalized to
// unit mass; P(s,-) interpolates rows linearly in s between s_grid nodes.
struct TableKernel {
    std::vector<double> s_grid;
    std::vector<double> t_grid;
    std::vector<std::vector<double>> rows;
};

// Subidentity 1_A: passes s through iff s lies in `keep`; rows are point
// masses, so this kernel only composes (it is never materialized).
struct SubidentityKernel {
    IntervalSet keep;
};

struct KernelFamily1D {
    Interval source;
    Interval target;
    std::variant<GaussianKernel, TableKernel, SubidentityKernel> family;

    // P(s, B intersect target); a probability for gaussian/table families.
    double point_prob(double s, const Interval& B) const;

    // P(s, (-inf, t] intersect target) at each t; one erfc per breakpoint
    // for gaussian families, which is what the composition engine batches.
    void cdf_at(double s, const std::vector<double>& ts,
                std::vector<double>& out) const;

    // Kernel density p(s, t); not defined for subidentity families.
    double density_at(double s, double t) const;

    bool is_subidentity() const {
        return std::holds_alternative<SubidentityKernel>(family);
    }

    // mapping(s) materialized as a Measure1D on the target.
    Measure1D slice(double s, int quadrature = 16) const;
};

KernelFamily1D gaussian_kernel(Interval source, Interval target, AffineFn mean,
                               double var);

// Subidentity kernel on `space` keeping `A`.
KernelFamily1D restrict_kernel(const IntervalSet& A, Interval space);

inline constexpr int kKernelGridCells = 4096;

// (mu o P)(B) = integral over the source of P(s,B) d mu(s). Probability
// kernels materialize as a table density on `grid_cells` cells, rescaled so
// total mass is preserved exactly; subidentity kernels return mu masked to
// the kept set, which is exact.
Measure1D pushforward(const Measure1D& mu, const KernelFamily1D& P,
                      int grid_cells = kKernelGridCells);

// (P;Q)(s,C) = integral of Q(t,C) P(s,dt) by quadrature, materialized as a
// table family with `s_cells` source nodes and `t_cells` target cells. The
// source resolution bounds the row-interpolation error of the result, which
// must stay below the 1e-4 route-equality budget.
KernelFamily1D compose_kernels(const KernelFamily1D& P, const KernelFamily1D& Q,
                               int s_cells = 256, int t_cells = 1024);

}  // namespace jdist
