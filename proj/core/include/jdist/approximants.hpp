#pragma once

#include <functional>
#include <vector>

#include "jdist/measure1d.hpp"
#include "jdist/partition.hpp"
#include "jdist/report.hpp"

namespace jdist {

// Step-function bounds for the density ratio of (nu, mu) over a partition:
// upper[i], lower[i] on carrier cells (mu(B) > 0), zero elsewhere.
struct ApproximantPair {
    IntervalPartition partition;
    std::vector<double> upper;
    std::vector<double> lower;
    std::vector<char> carrier;

    double eval_upper(double s) const;
    double eval_lower(double s) const;
    double integral_upper_against(const Measure1D& mu) const;
};

ApproximantPair approximants(const Measure1D& nu, const Measure1D& mu,
                             const IntervalPartition& partition);

// Carrier F: union of intervals where mu has mass, minus locations of
// nu-atoms that mu does not share.
struct CarrierSet {
    IntervalSet intervals;
    std::vector<double> excluded_points;
};

struct LebesgueDecomposition {
    Measure1D ac_part;        // nu_0 << mu
    Measure1D singular_part;  // nu_1, concentrated on a mu-null set
    CarrierSet carrier;
    std::function<double(double)> derivative;  // final upper approximant on F
    // Diagnostic: the clamped approximant chain, one entry per schedule step.
    std::vector<ApproximantPair> approximant_chain;
};

std::vector<double> default_eps_schedule();  // 2^-1 .. 2^-12

// Lebesgue decomposition plus Radon-Nikodym approximation along the eps
// schedule. nu_0 is split off exactly by classification (density part of nu
// restricted to the carrier, plus nu-atoms that mu shares); the derivative
// is the final clamped upper approximant, which matches d(nu_0)/d(mu) to
// within the last band height.
LebesgueDecomposition lrn_decompose(const Measure1D& nu, const Measure1D& mu,
                                    const std::vector<double>& eps_schedule =
                                        default_eps_schedule());

struct LimitResult {
    double value = 0.0;
    ConvergenceReport report;
};

// lim over the refinement chain of sum over mu-positive cells of
// nu(B) * xi(B) / mu(B); brackets are the integrals of f+-g+- against mu.
// Stops when successive levels differ by less than tol; throws
// ConvergenceError if the schedule is exhausted first, and domain_error if
// the upper bracket is not finite (integrability premise fails).
LimitResult pair_product_limit(const Measure1D& nu, const Measure1D& xi,
                               const Measure1D& mu, double tol,
                               const std::vector<double>& eps_schedule =
                                   default_eps_schedule());

}  // namespace jdist
