#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"

#include "jdist/approximants.hpp"
#include "jdist/measure1d.hpp"
#include "jdist/partition.hpp"

using namespace jdist;

namespace {

Measure1D linear_density() {
    return measure_from_spec(closed_interval(0.0, 1.0), AffineSpec{1.0, 0.0});
}

bool contains_breakpoint(const std::vector<double>& bs, double v, double tol) {
    for (double b : bs)
        if (std::abs(b - v) <= tol) return true;
    return false;
}

}  // namespace

TEST_SUITE("measures1d") {

TEST_CASE("measure_of matches analytic integrals and atom membership") {
    Measure1D leb = lebesgue(closed_interval(0.0, 1.0));
    CHECK(measure_of(leb, closed_interval(0.0, 1.0)) == doctest::Approx(1.0).epsilon(1e-14));

    Measure1D two_s = measure_from_spec(closed_interval(0.0, 1.0), AffineSpec{2.0, 0.0});
    CHECK(measure_of(two_s, closed_interval(0.0, 0.5)) ==
          doctest::Approx(0.25).epsilon(1e-13));
    CHECK(two_s.total_mass() == doctest::Approx(1.0).epsilon(1e-13));

    Measure1D atom_only = measure_from_spec(closed_interval(0.0, 1.0), ZeroSpec{},
                                            {Atom{0.5, 0.3}});
    CHECK(measure_of(atom_only, closed_interval(0.4, 0.6)) == 0.3);
    CHECK(measure_of(atom_only, closed_interval(0.6, 0.9)) == 0.0);
}

TEST_CASE("atom endpoint membership honors interval flags") {
    Measure1D m = measure_from_spec(closed_interval(0.0, 1.0), ZeroSpec{},
                                    {Atom{0.5, 0.3}});
    CHECK(measure_of(m, Interval{0.5, 0.9, true, true}) == 0.3);
    CHECK(measure_of(m, Interval{0.5, 0.9, false, true}) == 0.0);
    CHECK(measure_of(m, Interval{0.1, 0.5, true, false}) == 0.0);
    CHECK(measure_of(m, Interval{0.1, 0.5, true, true}) == 0.3);
}

TEST_CASE("measure_of a finite interval union adds the pieces") {
    Measure1D leb = lebesgue(closed_interval(0.0, 1.0));
    IntervalSet s{Interval{0.0, 0.25, true, false}, Interval{0.5, 1.0, true, true}};
    CHECK(measure_of(leb, s) == doctest::Approx(0.75).epsilon(1e-14));
}

TEST_CASE("scale_measure scales density and atoms together") {
    Measure1D m = measure_from_spec(closed_interval(0.0, 1.0), AffineSpec{2.0, 0.0},
                                    {Atom{0.5, 0.3}});
    Measure1D s = scale_measure(m, 0.7);
    CHECK(s.total_mass() == doctest::Approx(0.7 * 1.3).epsilon(1e-13));
    CHECK(measure_of(s, closed_interval(0.4, 0.6)) ==
          doctest::Approx(0.7 * (0.36 - 0.16 + 0.3)).epsilon(1e-12));
}

TEST_CASE("ratio_bounds is exact for monotone density ratios") {
    Measure1D mu = lebesgue(closed_interval(0.0, 1.0));
    RatioBounds same = ratio_bounds(mu, mu, closed_interval(0.2, 0.8));
    CHECK(same.inf == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(same.sup == doctest::Approx(1.0).epsilon(1e-12));

    RatioBounds rb = ratio_bounds(linear_density(), mu, closed_interval(0.25, 0.5));
    CHECK(rb.inf == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(rb.sup == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("an atom of nu at a mu-null point makes the sup infinite") {
    Measure1D mu = lebesgue(closed_interval(0.0, 1.0));
    Measure1D nu = measure_from_spec(closed_interval(0.0, 1.0), AffineSpec{1.0, 0.0},
                                     {Atom{0.5, 0.3}});
    RatioBounds rb = ratio_bounds(nu, mu, closed_interval(0.25, 0.75));
    CHECK(std::isinf(rb.sup));
    CHECK(rb.inf < 1.0);
}

TEST_CASE("level_set_partition of a constant ratio is a single cell") {
    Measure1D mu = lebesgue(closed_interval(0.0, 1.0));
    Measure1D nu = measure_from_spec(closed_interval(0.0, 1.0), AffineSpec{0.0, 0.5});
    IntervalPartition p = level_set_partition(nu, mu, 0.5);
    CHECK(p.cell_count() == 1);
    CHECK(p.breakpoints.front() == 0.0);
    CHECK(p.breakpoints.back() == 1.0);
}

TEST_CASE("level_set_partition places thresholds at eps*ln k for a linear ratio") {
    Measure1D mu = lebesgue(closed_interval(0.0, 1.0));
    IntervalPartition p = level_set_partition(linear_density(), mu, 0.5);
    // ratio r(s) = s, so the band edges eps*ln k land at those same s values
    for (int k = 2; 0.5 * std::log(double(k)) < 1.0; ++k)
        CHECK(contains_breakpoint(p.breakpoints, 0.5 * std::log(double(k)), 1e-9));
    CHECK(p.breakpoints.front() == 0.0);
    CHECK(p.breakpoints.back() == 1.0);
    for (std::size_t i = 0; i + 1 < p.breakpoints.size(); ++i)
        CHECK(p.breakpoints[i] < p.breakpoints[i + 1]);
}

TEST_CASE("halving eps refines the level-set partition") {
    Measure1D mu = lebesgue(closed_interval(0.0, 1.0));
    Measure1D nu = linear_density();
    IntervalPartition coarse = level_set_partition(nu, mu, 0.5);
    IntervalPartition fine = level_set_partition(nu, mu, 0.25);
    CHECK(fine.refines(coarse, 1e-12));
    CHECK_FALSE(coarse.refines(fine, 1e-12));
}

TEST_CASE("dyadic partitions nest and join merges breakpoints") {
    Interval span = closed_interval(-2.0, 2.0);
    IntervalPartition d3 = IntervalPartition::dyadic(span, 3);
    IntervalPartition d5 = IntervalPartition::dyadic(span, 5);
    CHECK(d3.cell_count() == 8);
    CHECK(d5.refines(d3));
    IntervalPartition j = d3.join(IntervalPartition::from_breakpoints({-2.0, 0.3, 2.0}));
    CHECK(j.refines(d3));
    CHECK(contains_breakpoint(j.breakpoints, 0.3, 0.0));
    CHECK(j.find_cell(0.29) + 1 == j.find_cell(0.31));
}

TEST_CASE("approximants of nu=mu are the constant 1 on carrier cells") {
    Measure1D mu = lebesgue(closed_interval(0.0, 1.0));
    ApproximantPair ap = approximants(mu, mu, IntervalPartition::dyadic(mu.support, 3));
    for (std::size_t i = 0; i < ap.partition.cell_count(); ++i) {
        REQUIRE(ap.carrier[i]);
        CHECK(ap.upper[i] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(ap.lower[i] == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("approximants of a linear ratio hit the cell endpoints") {
    Measure1D mu = lebesgue(closed_interval(0.0, 1.0));
    ApproximantPair ap =
        approximants(linear_density(), mu, IntervalPartition::dyadic(mu.support, 3));
    for (std::size_t i = 0; i < 8; ++i) {
        Interval cell = ap.partition.cell(i);
        CHECK(ap.lower[i] == doctest::Approx(cell.lo).epsilon(1e-12));
        CHECK(ap.upper[i] == doctest::Approx(cell.hi).epsilon(1e-12));
    }
    CHECK(ap.eval_upper(0.3) == doctest::Approx(0.375).epsilon(1e-12));
    CHECK(ap.eval_lower(0.3) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(ap.integral_upper_against(mu) ==
          doctest::Approx(0.5 + 0.5 / 8).epsilon(1e-12));
}

TEST_CASE("refining the partition tightens both approximants") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Measure1D mu = lebesgue(closed_interval(0.0, 1.0));
    Measure1D nu = linear_density();
    for (int depth = 1; depth <= 5; ++depth) {
        ApproximantPair coarse =
            approximants(nu, mu, IntervalPartition::dyadic(mu.support, depth));
        ApproximantPair fine =
            approximants(nu, mu, IntervalPartition::dyadic(mu.support, depth + 1));
        for (int t = 0; t < 50; ++t) {
            double s = u(rng);
            CHECK(fine.eval_upper(s) <= coarse.eval_upper(s) + 1e-12);
            CHECK(fine.eval_lower(s) >= coarse.eval_lower(s) - 1e-12);
        }
    }
}

TEST_CASE("lrn_decompose of an absolutely continuous measure has no singular part") {
    Measure1D mu = lebesgue(closed_interval(0.0, 1.0));
    Measure1D nu = measure_from_spec(closed_interval(0.0, 1.0), AffineSpec{-1.0, 1.5});
    LebesgueDecomposition d = lrn_decompose(nu, mu);
    CHECK(d.singular_part.total_mass() <= 1e-6);
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 30; ++t) {
        double a = u(rng), b = u(rng);
        if (a > b) std::swap(a, b);
        Interval iv = closed_interval(a, b);
        CHECK(measure_of(d.ac_part, iv) ==
              doctest::Approx(measure_of(nu, iv)).epsilon(1e-9));
    }
}

TEST_CASE("lrn_decompose splits the seeded atom and recovers the density") {
    Measure1D mu = lebesgue(closed_interval(0.0, 1.0));
    Measure1D nu = measure_from_spec(closed_interval(0.0, 1.0), AffineSpec{1.4, 0.0},
                                     {Atom{0.5, 0.3}});
    LebesgueDecomposition d = lrn_decompose(nu, mu);
    CHECK(d.singular_part.total_mass() == doctest::Approx(0.3).epsilon(1e-6));
    CHECK(d.ac_part.total_mass() == doctest::Approx(0.7).epsilon(1e-6));

    // derivative matches 1.4*s on a grid
    double worst = 0.0;
    for (int i = 1; i < 100; ++i) {
        double s = i / 100.0;
        worst = std::max(worst, std::abs(d.derivative(s) - 1.4 * s));
    }
    CHECK(worst <= 1e-3);

    // the singular part is exactly the atom, off the carrier
    CHECK(d.singular_part.atom_mass_in(closed_interval(0.49, 0.51)) ==
          doctest::Approx(0.3).epsilon(1e-12));
    bool excluded = false;
    for (double p : d.carrier.excluded_points) excluded |= std::abs(p - 0.5) <= 1e-12;
    CHECK(excluded);

    // nu0 + nu1 = nu on test intervals
    for (double a : {0.0, 0.2, 0.45}) {
        Interval iv = closed_interval(a, a + 0.3);
        double sum = measure_of(d.ac_part, iv) + measure_of(d.singular_part, iv);
        CHECK(sum == doctest::Approx(measure_of(nu, iv)).epsilon(1e-9));
    }
}

TEST_CASE("lrn_decompose of nu=mu yields the unit derivative") {
    Measure1D mu = lebesgue(closed_interval(0.0, 1.0));
    LebesgueDecomposition d = lrn_decompose(mu, mu);
    CHECK(d.singular_part.total_mass() == 0.0);
    for (double s : {0.1, 0.5, 0.9})
        CHECK(d.derivative(s) == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("approximant chain is monotone level to level") {
    Measure1D mu = lebesgue(closed_interval(0.0, 1.0));
    Measure1D nu = measure_from_spec(closed_interval(0.0, 1.0), AffineSpec{1.4, 0.0},
                                     {Atom{0.5, 0.3}});
    LebesgueDecomposition d = lrn_decompose(nu, mu);
    REQUIRE(d.approximant_chain.size() >= 2);
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t l = 0; l + 1 < d.approximant_chain.size(); ++l) {
        const ApproximantPair& a = d.approximant_chain[l];
        const ApproximantPair& b = d.approximant_chain[l + 1];
        for (int t = 0; t < 40; ++t) {
            double s = u(rng);
            CHECK(b.eval_upper(s) <= a.eval_upper(s) + 1e-12);
            CHECK(b.eval_lower(s) >= a.eval_lower(s) - 1e-12);
        }
    }
}

TEST_CASE("pair_product_limit recovers analytic pairings") {
    Measure1D mu = lebesgue(closed_interval(0.0, 1.0));
    Measure1D s_density = linear_density();
    Measure1D one_minus_s =
        measure_from_spec(closed_interval(0.0, 1.0), AffineSpec{-1.0, 1.0});

    LimitResult same = pair_product_limit(mu, mu, mu, 1e-6);
    CHECK(same.value == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(same.report.converged);

    LimitResult third = pair_product_limit(s_density, s_density, mu, 1e-5);
    CHECK(std::abs(third.value - 1.0 / 3) <= 1e-4);
    CHECK(third.report.converged);
    CHECK(third.report.levels.size() <= 12);

    LimitResult sixth = pair_product_limit(s_density, one_minus_s, mu, 1e-5);
    CHECK(std::abs(sixth.value - 1.0 / 6) <= 1e-4);
    CHECK(sixth.report.converged);
}

TEST_CASE("pair_product_limit upper brackets are nonincreasing") {
    Measure1D mu = lebesgue(closed_interval(0.0, 1.0));
    Measure1D nu = linear_density();
    LimitResult r = pair_product_limit(nu, nu, mu, 1e-5);
    for (std::size_t i = 0; i + 1 < r.report.levels.size(); ++i) {
        CHECK(r.report.levels[i + 1].upper <= r.report.levels[i].upper + 1e-12);
        CHECK(r.report.levels[i].lower <= r.report.levels[i].upper);
    }
    // brackets actually contain the limit
    CHECK(r.report.levels.back().lower <= 1.0 / 3 + 1e-9);
    CHECK(r.report.levels.back().upper >= 1.0 / 3 - 1e-9);
}

TEST_CASE("pair_product_limit rejects non-integrable ratios") {
    Measure1D mu = lebesgue(closed_interval(0.0, 1.0));
    Measure1D nu = measure_from_spec(closed_interval(0.0, 1.0), AffineSpec{1.0, 0.0},
                                     {Atom{0.5, 0.3}});
    CHECK_THROWS_AS(pair_product_limit(nu, nu, mu, 1e-4), std::domain_error);
}

TEST_CASE("pair_product_limit surfaces the trace when the schedule runs out") {
    Measure1D mu = lebesgue(closed_interval(0.0, 1.0));
    Measure1D nu = linear_density();
    try {
        pair_product_limit(nu, nu, mu, 1e-15);
        FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
        CHECK(e.report.levels.size() == default_eps_schedule().size());
        CHECK_FALSE(e.report.converged);
    }
}

}  // TEST_SUITE
