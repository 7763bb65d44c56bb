#include <cmath>
#include <vector>

#include "doctest.h"

#include "jdist/mc.hpp"
#include "jdist/problang.hpp"

using namespace jdist;

namespace {

const char* kFlagship =
    "x := normal(0, 1);\n"
    "y := normal(x, 1);\n"
    "z := normal(y, 1);\n"
    "observe (z > 0.5);\n"
    "return (x > 1);\n";

McConfig config(std::uint64_t samples, std::uint64_t seed) {
    McConfig c;
    c.samples = samples;
    c.seed = seed;
    return c;
}

}  // namespace

TEST_SUITE("mc") {

TEST_CASE("a symmetric query estimates one half") {
    Program p = parse_program("x := normal(0,1); return (x > 0);");
    McResult r = mc_evaluate(p, config(1000000, 42));
    CHECK(std::abs(r.estimate - 0.5) <= 3.0 * r.std_error);
    CHECK(r.accepted == r.samples);
    CHECK(r.hits <= r.accepted);
    CHECK(r.std_error ==
          doctest::Approx(std::sqrt(r.estimate * (1.0 - r.estimate) / r.accepted))
              .epsilon(1e-12));
}

TEST_CASE("estimates are deterministic in the seed") {
    Program p = parse_program(kFlagship);
    McResult a = mc_evaluate(p, config(200000, 42));
    McResult b = mc_evaluate(p, config(200000, 42));
    CHECK(a.estimate == b.estimate);
    CHECK(a.hits == b.hits);
    CHECK(a.accepted == b.accepted);

    McResult c = mc_evaluate(p, config(200000, 43));
    CHECK(a.estimate != c.estimate);

    CHECK(a.seed == 42);
    CHECK(a.samples == 200000);
    CHECK(a.generator == "splitmix64-boxmuller");
}

TEST_CASE("the flagship estimate matches the conditional gaussian analytics") {
    // ground truth from the bivariate normal with variances 1,3 and covariance 1
    Program p = parse_program(kFlagship);
    McResult r = mc_evaluate(p, config(2000000, 42));
    double truth = 0.3098549891144702;  // orthant quadrature, checked in acceptance
    CHECK(std::abs(r.estimate - truth) <= 3.0 * r.std_error);
}

TEST_CASE("standard error shrinks like one over root two when samples double") {
    Program p = parse_program("x := normal(0,1); y := normal(x,1); "
                              "observe (y > 0); return (x > 0.3);");
    double mean_ratio = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        McResult small = mc_evaluate(p, config(100000, seed));
        McResult big = mc_evaluate(p, config(200000, seed));
        mean_ratio += small.std_error / big.std_error;
    }
    mean_ratio /= 10.0;
    CHECK(mean_ratio >= std::sqrt(2.0) * 0.8);
    CHECK(mean_ratio <= std::sqrt(2.0) * 1.2);
}

TEST_CASE("a single sample is degenerate but well-defined") {
    Program p = parse_program("x := normal(0,1); return (x > 0);");
    McResult r = mc_evaluate(p, config(1, 7));
    CHECK((r.estimate == 0.0 || r.estimate == 1.0));
    CHECK(r.accepted == 1);
}

TEST_CASE("rejecting every sample is an error, not a NaN") {
    Program p = parse_program(
        "x := normal(0,1); y := normal(x,1); observe (y > 50); return (x > 0);");
    CHECK_THROWS_AS(mc_evaluate(p, config(2000, 42)), ZeroMeasureObservationError);
}

TEST_CASE("literal means shift the sampled chain") {
    Program p = parse_program("x := normal(2, 1); return (x > 2);");
    McResult r = mc_evaluate(p, config(500000, 11));
    CHECK(std::abs(r.estimate - 0.5) <= 3.0 * r.std_error);
}

}  // TEST_SUITE
