#pragma once

#include <cstddef>
#include <vector>

#include "jdist/interval.hpp"
#include "jdist/measure1d.hpp"

namespace jdist {

// Finite measurable partition of [a,b] into consecutive cells, half-open on
// the right except the last. Refinement: D refines D' iff every breakpoint
// of D' appears among D's.
struct IntervalPartition {
    std::vector<double> breakpoints;

    static IntervalPartition single(Interval span);
    static IntervalPartition dyadic(Interval span, int depth);  // 2^depth cells
    static IntervalPartition from_breakpoints(std::vector<double> bs);

    std::size_t cell_count() const { return breakpoints.size() - 1; }
    Interval cell(std::size_t i) const;
    std::size_t find_cell(double s) const;
    Interval span() const;

    bool refines(const IntervalPartition& coarser, double tol = 0.0) const;
    IntervalPartition join(const IntervalPartition& other) const;
};

// Merge tolerance when joining partitions: breakpoints closer than
// kMergeTolRel * span are treated as the same threshold (root-finding
// jitter of the same analytic breakpoint).
inline constexpr double kMergeTolRel = 1e-12;

struct RatioBounds {
    double inf = 0.0;
    double sup = 0.0;  // +infinity when nu has an atom at a mu-null point of B
};

// Computational surrogate for inf/sup of {nu(C)/mu(C) : C subset of B,
// mu(C) > 0}: density-ratio extrema over the cell endpoints plus a
// quadrature-resolution sample grid, combined with atom ratio candidates.
// Exact at endpoints for monotone ratios. Throws when mu(B) = 0.
RatioBounds ratio_bounds(const Measure1D& nu, const Measure1D& mu, const Interval& B);

// Threshold families for level-set bands of the density ratio.
// `log_bands` uses thresholds eps*ln(k), which carry both Lemma-approx
// bounds but need about e^{sup/eps} bands; `uniform_bands` uses k*eps and
// carries the first bound only. level_set_partition always uses log bands;
// the chain builders in approximants.hpp switch to uniform bands when the
// log family would exceed kMaxLogBands cells.
enum class BandFamily { log_bands, uniform_bands };

inline constexpr std::size_t kMaxLogBands = 4096;

IntervalPartition level_set_partition(const Measure1D& nu, const Measure1D& mu,
                                      double eps);

IntervalPartition level_partition_with_family(const Measure1D& nu,
                                              const Measure1D& mu, double eps,
                                              BandFamily family);

// Family actually selected for a given eps by the chain builders.
BandFamily band_family_for(const Measure1D& nu, const Measure1D& mu, double eps);

}  // namespace jdist
