#include "jdist/approximants.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "jdist/summation.hpp"

namespace jdist {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double mass_floor(const Measure1D& mu) {
    return 1e-14 * std::max(1.0, measure_of(mu, mu.support));
}

std::size_t locate(const ApproximantPair& pair, double s) {
    return pair.partition.find_cell(s);
}

// Tighten raw per-cell bounds against a coarser pair whose partition the
// fine one refines. Valid bounds only ever tighten, which makes the
// monotone-sequence claims of the refinement chain structural.
void clamp_against(ApproximantPair& fine, const ApproximantPair& coarse) {
    for (std::size_t i = 0; i < fine.partition.cell_count(); ++i) {
        if (!fine.carrier[i]) continue;
        Interval c = fine.partition.cell(i);
        std::size_t p = coarse.partition.find_cell(0.5 * (c.lo + c.hi));
        if (!coarse.carrier[p]) continue;
        fine.upper[i] = std::min(fine.upper[i], coarse.upper[p]);
        fine.lower[i] = std::max(fine.lower[i], coarse.lower[p]);
    }
}

struct AtomSplit {
    std::vector<Atom> shared_nu;   // nu atoms with a matching mu atom
    std::vector<Atom> nu_only;     // nu atoms at mu-null points
    std::map<double, double> ratio_at;  // location -> nu mass / mu mass
};

AtomSplit split_atoms(const Measure1D& nu, const Measure1D& mu) {
    AtomSplit s;
    for (const Atom& na : nu.atoms) {
        if (!(na.mass > 0.0)) continue;
        double mu_mass = 0.0;
        for (const Atom& ma : mu.atoms)
            if (ma.loc == na.loc) mu_mass = ma.mass;
        if (mu_mass > 0.0) {
            s.shared_nu.push_back(na);
            s.ratio_at[na.loc] = na.mass / mu_mass;
        } else {
            s.nu_only.push_back(na);
        }
    }
    return s;
}

Measure1D without_atoms(const Measure1D& m) {
    Measure1D r = m;
    r.atoms.clear();
    return r;
}

}  // namespace

double ApproximantPair::eval_upper(double s) const {
    std::size_t i = locate(*this, s);
    return carrier[i] ? upper[i] : 0.0;
}

double ApproximantPair::eval_lower(double s) const {
    std::size_t i = locate(*this, s);
    return carrier[i] ? lower[i] : 0.0;
}

double ApproximantPair::integral_upper_against(const Measure1D& mu) const {
    NeumaierSum s;
    for (std::size_t i = 0; i < partition.cell_count(); ++i) {
        if (!carrier[i]) continue;
        s.add(upper[i] * measure_of(mu, partition.cell(i)));
    }
    return s.value();
}

ApproximantPair approximants(const Measure1D& nu, const Measure1D& mu,
                             const IntervalPartition& partition) {
    ApproximantPair pair;
    pair.partition = partition;
    std::size_t n = partition.cell_count();
    pair.upper.assign(n, 0.0);
    pair.lower.assign(n, 0.0);
    pair.carrier.assign(n, 0);
    const double floor = mass_floor(mu);
    for (std::size_t i = 0; i < n; ++i) {
        Interval cell = partition.cell(i);
        if (!(measure_of(mu, cell) > floor)) continue;
        RatioBounds rb = ratio_bounds(nu, mu, cell);
        pair.carrier[i] = 1;
        pair.upper[i] = rb.sup;
        pair.lower[i] = rb.inf;
    }
    return pair;
}

std::vector<double> default_eps_schedule() {
    std::vector<double> s;
    for (int k = 1; k <= 12; ++k) s.push_back(std::ldexp(1.0, -k));
    return s;
}

namespace {

void validate_schedule(const std::vector<double>& schedule) {
    if (schedule.empty())
        throw std::invalid_argument("epsilon schedule must be nonempty");
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        if (!(schedule[i] > 0.0))
            throw std::invalid_argument("epsilon schedule entries must be positive");
        if (i > 0 && !(schedule[i] < schedule[i - 1]))
            throw std::invalid_argument("epsilon schedule must be decreasing");
    }
}

// Level partition for one schedule step, joined onto the previous chain
// partition. Returns the previous partition unchanged when mu has no
// density mass (atom-only pairs need no ratio resolution).
IntervalPartition chain_step(const IntervalPartition& prev, const Measure1D& nu_d,
                             const Measure1D& mu_d, double eps, double mu_d_mass,
                             double floor) {
    if (!(mu_d_mass > floor)) return prev;
    BandFamily family = band_family_for(nu_d, mu_d, eps);
    return prev.join(level_partition_with_family(nu_d, mu_d, eps, family));
}

}  // namespace

LebesgueDecomposition lrn_decompose(const Measure1D& nu, const Measure1D& mu,
                                    const std::vector<double>& eps_schedule) {
    validate_schedule(eps_schedule);
    AtomSplit atoms = split_atoms(nu, mu);
    Measure1D nu_d = without_atoms(nu);
    Measure1D mu_d = without_atoms(mu);
    const double floor = mass_floor(mu);
    const double mu_d_mass = measure_of(mu_d, mu_d.support);

    LebesgueDecomposition out;
    IntervalPartition part = IntervalPartition::single(mu.support);
    for (double eps : eps_schedule) {
        part = chain_step(part, nu_d, mu_d, eps, mu_d_mass, floor);
        ApproximantPair pair = approximants(nu_d, mu_d, part);
        if (!out.approximant_chain.empty())
            clamp_against(pair, out.approximant_chain.back());
        out.approximant_chain.push_back(std::move(pair));
    }
    const ApproximantPair& last = out.approximant_chain.back();

    // Carrier: cells where mu has mass and the density ratio is finite.
    std::vector<char> keep(last.partition.cell_count(), 0);
    for (std::size_t i = 0; i < keep.size(); ++i)
        keep[i] = last.carrier[i] && std::isfinite(last.upper[i]);
    for (std::size_t i = 0; i < keep.size(); ++i) {
        if (!keep[i]) continue;
        Interval cell = last.partition.cell(i);
        while (i + 1 < keep.size() && keep[i + 1]) {
            ++i;
            cell.hi = last.partition.cell(i).hi;
        }
        cell.closed_hi = true;
        out.carrier.intervals.push_back(cell);
    }
    for (const Atom& a : atoms.nu_only)
        out.carrier.excluded_points.push_back(a.loc);

    bool full_carrier = out.carrier.intervals.size() == 1 &&
                        out.carrier.intervals.front().lo == mu.support.lo &&
                        out.carrier.intervals.front().hi == mu.support.hi;

    // nu_0: density part of nu on the carrier plus shared atoms, split off
    // exactly; nu_1: the rest (nu atoms at mu-null points, density mass
    // outside the carrier).
    out.ac_part = nu_d;
    out.ac_part.atoms = atoms.shared_nu;
    out.singular_part = nu_d;
    out.singular_part.atoms = atoms.nu_only;
    if (full_carrier) {
        out.singular_part.density = [](double) { return 0.0; };
        out.singular_part.spec = ZeroSpec{};
        out.singular_part.density_breakpoints.clear();
    } else {
        auto base = nu_d.density;
        IntervalSet carrier_ivs = out.carrier.intervals;
        auto inside = [carrier_ivs](double s) {
            for (const Interval& iv : carrier_ivs)
                if (s >= iv.lo && s <= iv.hi) return true;
            return false;
        };
        out.ac_part.density = [base, inside](double s) {
            return inside(s) ? base(s) : 0.0;
        };
        out.singular_part.density = [base, inside](double s) {
            return inside(s) ? 0.0 : base(s);
        };
        out.ac_part.spec.reset();
        out.singular_part.spec.reset();
        std::vector<double> cuts = nu_d.density_breakpoints;
        for (const Interval& iv : carrier_ivs) {
            cuts.push_back(iv.lo);
            cuts.push_back(iv.hi);
        }
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
        out.ac_part.density_breakpoints = cuts;
        out.singular_part.density_breakpoints = cuts;
    }

    ApproximantPair final_pair = last;
    std::map<double, double> atom_ratio = atoms.ratio_at;
    out.derivative = [final_pair, atom_ratio](double s) {
        auto it = atom_ratio.find(s);
        if (it != atom_ratio.end()) return it->second;
        double u = final_pair.eval_upper(s);
        return std::isfinite(u) ? u : 0.0;
    };
    return out;
}

LimitResult pair_product_limit(const Measure1D& nu, const Measure1D& xi,
                               const Measure1D& mu, double tol,
                               const std::vector<double>& eps_schedule) {
    if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
    validate_schedule(eps_schedule);
    Measure1D nu_d = without_atoms(nu);
    Measure1D xi_d = without_atoms(xi);
    Measure1D mu_d = without_atoms(mu);
    const double floor = mass_floor(mu);
    const double mu_d_mass = measure_of(mu_d, mu_d.support);

    ConvergenceReport report;
    IntervalPartition part = IntervalPartition::single(mu.support);
    ApproximantPair prev_f, prev_g;
    double prev_sum = 0.0;

    for (std::size_t k = 0; k < eps_schedule.size(); ++k) {
        double eps = eps_schedule[k];
        part = chain_step(part, nu_d, mu_d, eps, mu_d_mass, floor);
        part = chain_step(part, xi_d, mu_d, eps, mu_d_mass, floor);

        // Approximants over the full measures, so atom pathologies surface
        // in the brackets rather than being silently dropped.
        ApproximantPair f = approximants(nu, mu, part);
        ApproximantPair g = approximants(xi, mu, part);
        if (k > 0) {
            clamp_against(f, prev_f);
            clamp_against(g, prev_g);
        }

        NeumaierSum sum, lower, upper;
        bool upper_finite = true;
        for (std::size_t i = 0; i < part.cell_count(); ++i) {
            if (!f.carrier[i]) continue;
            Interval cell = part.cell(i);
            double mb = measure_of(mu, cell);
            sum.add(measure_of(nu, cell) * measure_of(xi, cell) / mb);
            lower.add(f.lower[i] * g.lower[i] * mb);
            double up = f.upper[i] * g.upper[i];
            if (!std::isfinite(up)) upper_finite = false;
            upper.add(up * mb);
        }
        if (!upper_finite)
            throw std::domain_error(
                "pair_product_limit: unbounded upper bracket, integrability "
                "premise fails");

        ConvergenceLevel row;
        row.level = static_cast<int>(k);
        row.epsilon = eps;
        row.cells = part.cell_count();
        row.value = sum.value();
        row.lower = lower.value();
        row.upper = upper.value();
        report.levels.push_back(row);

        if (k > 0) {
            report.achieved = std::fabs(row.value - prev_sum);
            if (report.achieved < tol) {
                report.converged = true;
                prev_sum = row.value;
                break;
            }
        }
        prev_sum = row.value;
        prev_f = std::move(f);
        prev_g = std::move(g);
    }

    if (!report.converged)
        throw ConvergenceError("pair_product_limit: schedule exhausted before tol",
                               report);
    return LimitResult{prev_sum, report};
}

}  // namespace jdist
