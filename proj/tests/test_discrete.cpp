#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"

#include "jdist/discrete.hpp"

using namespace jdist;

namespace {

DiscreteKernel kernel(std::size_t r, std::size_t c, std::vector<double> d) {
    DiscreteKernel k{Matrix(r, c, std::move(d))};
    k.validate();
    return k;
}

DiscreteKernel identity_kernel(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return DiscreteKernel{std::move(m)};
}

DiscreteKernel random_kernel(std::mt19937_64& rng, std::size_t r, std::size_t c) {
    std::exponential_distribution<double> exp1(1.0);
    Matrix m(r, c);
    for (std::size_t i = 0; i < r; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            m.at(i, j) = exp1(rng) + 1e-3;
            s += m.at(i, j);
        }
        for (std::size_t j = 0; j < c; ++j) m.at(i, j) /= s;
    }
    return DiscreteKernel{std::move(m)};
}

DiscreteMeasure random_prob(std::mt19937_64& rng, std::size_t n) {
    std::exponential_distribution<double> exp1(1.0);
    std::vector<double> w(n);
    double s = 0.0;
    for (double& v : w) {
        v = exp1(rng) + 1e-3;
        s += v;
    }
    for (double& v : w) v /= s;
    return DiscreteMeasure{std::move(w)};
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    REQUIRE(a.rows == b.rows);
    REQUIRE(a.cols == b.cols);
    double d = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        d = std::max(d, std::abs(a.data[i] - b.data[i]));
    return d;
}

}  // namespace

TEST_SUITE("discrete") {

TEST_CASE("lift of the identity is the diagonal indicator") {
    LiftedKernel lifted = lift_kernel(identity_kernel(2));
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j)
            for (std::size_t k = 0; k < 2; ++k) {
                double expect = (i == j && j == k) ? 1.0 : 0.0;
                CHECK(lifted(i, j, k) == expect);
            }
}

TEST_CASE("lift reads the kernel on the diagonal and vanishes off it") {
    DiscreteKernel a = kernel(2, 2, {0.8, 0.2, 0.4, 0.6});
    LiftedKernel lifted = lift_kernel(a);
    CHECK(lifted(0, 0, 1) == 0.2);
    CHECK(lifted(0, 1, 1) == 0.0);
    CHECK(lifted(1, 1, 0) == 0.4);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t k = 0; k < 2; ++k) CHECK(lifted(i, 1 - i, k) == 0.0);
}

TEST_CASE("j_embed scales rows by the input weights") {
    DiscreteKernel a = kernel(2, 2, {0.8, 0.2, 0.4, 0.6});
    DiscreteJoint j = j_embed(DiscreteMeasure{{1.0, 0.0}}, a);
    CHECK(j.at(0, 0) == 0.8);
    CHECK(j.at(0, 1) == 0.2);
    CHECK(j.at(1, 0) == 0.0);
    CHECK(j.at(1, 1) == 0.0);
}

TEST_CASE("j_embed of the identity kernel is the diagonal of the measure") {
    DiscreteJoint j = j_embed(DiscreteMeasure{{0.5, 0.5}}, identity_kernel(2));
    CHECK(j.at(0, 0) == 0.5);
    CHECK(j.at(1, 1) == 0.5);
    CHECK(j.at(0, 1) == 0.0);
    CHECK(j.at(1, 0) == 0.0);
}

TEST_CASE("j_embed with constant rows spreads the row uniformly") {
    const std::size_t n = 4;
    std::vector<double> row{0.1, 0.2, 0.3, 0.4};
    std::vector<double> data;
    for (std::size_t i = 0; i < n; ++i)
        data.insert(data.end(), row.begin(), row.end());
    DiscreteKernel a = kernel(n, n, std::move(data));
    DiscreteMeasure x{std::vector<double>(n, 1.0 / n)};
    DiscreteJoint j = j_embed(x, a);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k)
            CHECK(j.at(i, k) == doctest::Approx(row[k] / n).epsilon(1e-15));
}

TEST_CASE("marginals of j_embed are x and x^T A") {
    std::mt19937_64 rng(11);
    DiscreteKernel a = random_kernel(rng, 3, 5);
    DiscreteMeasure x = random_prob(rng, 3);
    DiscreteJoint j = j_embed(x, a);
    DiscreteMeasure lm = left_marginal(j);
    DiscreteMeasure rm = right_marginal(j);
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(lm.weights[i] == doctest::Approx(x.weights[i]).epsilon(1e-14));
    for (std::size_t k = 0; k < 5; ++k) {
        double want = 0.0;
        for (std::size_t i = 0; i < 3; ++i) want += x.weights[i] * a.at(i, k);
        CHECK(rm.weights[k] == doctest::Approx(want).epsilon(1e-14));
    }
}

TEST_CASE("composing with an embedded identity is the identity law") {
    std::mt19937_64 rng(7);
    DiscreteKernel a = random_kernel(rng, 4, 4);
    DiscreteMeasure x = random_prob(rng, 4);
    DiscreteJoint alpha = j_embed(x, a);
    DiscreteMeasure y = right_marginal(alpha);

    DiscreteJoint right = compose_joints(alpha, j_embed(y, identity_kernel(4)));
    CHECK(max_abs_diff(right.m, alpha.m) <= 1e-12);

    DiscreteJoint left = compose_joints(j_embed(x, identity_kernel(4)), alpha);
    CHECK(max_abs_diff(left.m, alpha.m) <= 1e-12);
}

TEST_CASE("compose matches the kernel product route on the worked instance") {
    DiscreteMeasure x{{0.5, 0.5}};
    DiscreteKernel a = kernel(2, 2, {0.8, 0.2, 0.4, 0.6});
    DiscreteKernel b = kernel(2, 2, {0.5, 0.5, 0.0, 1.0});
    DiscreteJoint alpha = j_embed(x, a);
    DiscreteJoint beta = j_embed(right_marginal(alpha), b);
    DiscreteJoint composed = compose_joints(alpha, beta);
    DiscreteJoint direct = j_embed(x, kernel_product(a, b));
    CHECK(max_abs_diff(composed.m, direct.m) <= 1e-12);
    CHECK(composed.total() == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("a null mediating column is skipped and mass is conserved") {
    // y_1 = 0: column 1 of alpha and row 1 of beta are dead weight
    DiscreteJoint alpha{Matrix(2, 2, {0.6, 0.0, 0.4, 0.0})};
    DiscreteJoint beta{Matrix(2, 2, {0.3, 0.7, 0.0, 0.0})};
    DiscreteJoint gamma = compose_joints(alpha, beta);
    CHECK(gamma.total() == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(gamma.at(0, 0) == doctest::Approx(0.18).epsilon(1e-13));
    CHECK(gamma.at(1, 1) == doctest::Approx(0.28).epsilon(1e-13));
}

TEST_CASE("compose refuses mismatched marginals and reports the defect") {
    DiscreteJoint alpha{Matrix(2, 2, {0.5, 0.0, 0.5, 0.0})};
    DiscreteJoint beta{Matrix(2, 2, {0.2, 0.3, 0.25, 0.25})};
    // right marginal of alpha = (1, 0); left of beta = (0.5, 0.5)
    CHECK_THROWS_AS(compose_joints(alpha, beta), MarginalMismatchError);
    try {
        compose_joints(alpha, beta);
    } catch (const MarginalMismatchError& e) {
        CHECK(e.max_defect == doctest::Approx(0.5).epsilon(1e-12));
    }
}

TEST_CASE("disintegrate inverts j_embed when all weights are positive") {
    std::mt19937_64 rng(3);
    DiscreteKernel a = random_kernel(rng, 5, 3);
    DiscreteMeasure x = random_prob(rng, 5);
    DiscreteMeasure fill{std::vector<double>(3, 1.0 / 3)};
    DiscreteKernel back = disintegrate(j_embed(x, a), fill);
    CHECK(max_abs_diff(back.m, a.m) <= 1e-12);
}

TEST_CASE("disintegrate of a diagonal joint is the identity for any fill") {
    DiscreteJoint diag{Matrix(2, 2, {0.5, 0.0, 0.0, 0.5})};
    DiscreteKernel k1 = disintegrate(diag, DiscreteMeasure{{1.0, 0.0}});
    DiscreteKernel k2 = disintegrate(diag, DiscreteMeasure{{0.0, 1.0}});
    CHECK(max_abs_diff(k1.m, identity_kernel(2).m) == 0.0);
    CHECK(max_abs_diff(k2.m, identity_kernel(2).m) == 0.0);
}

TEST_CASE("disintegrate uses the fill row exactly on null rows") {
    DiscreteJoint j{Matrix(2, 2, {0.0, 0.0, 0.3, 0.7})};
    DiscreteKernel k = disintegrate(j, DiscreteMeasure{{1.0, 0.0}});
    CHECK(k.at(0, 0) == 1.0);
    CHECK(k.at(0, 1) == 0.0);
    CHECK(k.at(1, 0) == doctest::Approx(0.3).epsilon(1e-14));
}

TEST_CASE("kernel_equiv ignores rows carried by null weights") {
    DiscreteKernel a = kernel(2, 2, {0.8, 0.2, 0.4, 0.6});
    DiscreteKernel b = kernel(2, 2, {0.8, 0.2, 0.9, 0.1});
    CHECK(kernel_equiv(a, a, DiscreteMeasure{{0.5, 0.5}}));
    CHECK(kernel_equiv(a, b, DiscreteMeasure{{1.0, 0.0}}));
    CHECK_FALSE(kernel_equiv(a, b, DiscreteMeasure{{0.5, 0.5}}));
}

TEST_CASE("faithfulness: embeddings agree exactly iff kernels agree a.e.") {
    std::mt19937_64 rng(19);
    for (int t = 0; t < 50; ++t) {
        std::size_t n = 2 + t % 5;
        DiscreteKernel a = random_kernel(rng, n, n);
        DiscreteKernel b = a;
        DiscreteMeasure x = random_prob(rng, n);
        x.weights[t % n] = 0.0;  // plant a null row

        // change only the null row: images identical
        for (std::size_t k = 0; k < n; ++k) b.m.at(t % n, k) = 1.0 / double(n);
        CHECK(max_abs_diff(j_embed(x, a).m, j_embed(x, b).m) <= 1e-12);
        CHECK(kernel_equiv(a, b, x));

        // change a positive-mass row by at least 0.3 in one entry
        std::size_t live = (t % n + 1) % n;
        DiscreteKernel c = a;
        c.m.at(live, 0) = a.at(live, 0) >= 0.5 ? a.at(live, 0) - 0.3
                                               : a.at(live, 0) + 0.3;
        c.m.at(live, 1) = 1.0 - c.at(live, 0);
        for (std::size_t k = 2; k < n; ++k) c.m.at(live, k) = 0.0;
        CHECK(max_abs_diff(j_embed(x, a).m, j_embed(x, c).m) > 1e-12);
        CHECK_FALSE(kernel_equiv(a, c, x));
    }
}

TEST_CASE("dagger transposes the joint") {
    DiscreteJoint j{Matrix(2, 2, {0.1, 0.2, 0.3, 0.4})};
    DiscreteJoint d = dagger(j);
    CHECK(d.at(0, 0) == 0.1);
    CHECK(d.at(0, 1) == 0.3);
    CHECK(d.at(1, 0) == 0.2);
    CHECK(d.at(1, 1) == 0.4);
    CHECK(max_abs_diff(dagger(d).m, j.m) == 0.0);
}

TEST_CASE("dagger of a diagonal joint is itself") {
    DiscreteJoint diag{Matrix(2, 2, {0.5, 0.0, 0.0, 0.5})};
    CHECK(max_abs_diff(dagger(diag).m, diag.m) == 0.0);
}

TEST_CASE("bayes_inverse of the identity is the identity on live rows") {
    DiscreteMeasure x{{0.3, 0.7}};
    DiscreteMeasure fill{{1.0, 0.0}};
    DiscreteKernel b = bayes_inverse(identity_kernel(2), x, fill);
    CHECK(max_abs_diff(b.m, identity_kernel(2).m) <= 1e-14);
}

TEST_CASE("bayes_inverse realizes the dagger of the embedded joint") {
    DiscreteMeasure x{{0.5, 0.5}};
    DiscreteKernel a = kernel(2, 2, {0.8, 0.2, 0.4, 0.6});
    DiscreteJoint alpha = j_embed(x, a);
    DiscreteMeasure y = right_marginal(alpha);
    DiscreteKernel b = bayes_inverse(a, x, DiscreteMeasure{{0.5, 0.5}});
    CHECK(max_abs_diff(j_embed(y, b).m, dagger(alpha).m) <= 1e-14);
}

TEST_CASE("bayes_inverse uses the fill row where the image weight vanishes") {
    // column 1 of A is all zero, so y_1 = 0
    DiscreteKernel a = kernel(2, 2, {1.0, 0.0, 1.0, 0.0});
    DiscreteKernel b =
        bayes_inverse(a, DiscreteMeasure{{0.5, 0.5}}, DiscreteMeasure{{0.0, 1.0}});
    CHECK(b.at(1, 0) == 0.0);
    CHECK(b.at(1, 1) == 1.0);
}

TEST_CASE("marginal preservation and associativity over random instances") {
    std::mt19937_64 rng(101);
    std::uniform_int_distribution<std::size_t> dim(2, 16);
    for (int t = 0; t < 200; ++t) {
        std::size_t n = dim(rng), m = dim(rng), p = dim(rng), q = dim(rng);
        DiscreteMeasure x = random_prob(rng, n);
        DiscreteKernel a = random_kernel(rng, n, m);
        DiscreteKernel b = random_kernel(rng, m, p);
        DiscreteKernel c = random_kernel(rng, p, q);
        DiscreteJoint alpha = j_embed(x, a);
        DiscreteJoint beta = j_embed(right_marginal(alpha), b);
        DiscreteJoint gamma = j_embed(right_marginal(beta), c);

        DiscreteJoint ab = compose_joints(alpha, beta);
        DiscreteMeasure la = left_marginal(alpha), lab = left_marginal(ab);
        DiscreteMeasure rb = right_marginal(beta), rab = right_marginal(ab);
        for (std::size_t i = 0; i < n; ++i)
            CHECK(std::abs(lab.weights[i] - la.weights[i]) <= 1e-10);
        for (std::size_t k = 0; k < p; ++k)
            CHECK(std::abs(rab.weights[k] - rb.weights[k]) <= 1e-10);

        DiscreteJoint lhs = compose_joints(ab, gamma);
        DiscreteJoint rhs = compose_joints(alpha, compose_joints(beta, gamma));
        CHECK(max_abs_diff(lhs.m, rhs.m) <= 1e-9);
    }
}

TEST_CASE("dagger contravariance over random instances") {
    std::mt19937_64 rng(202);
    std::uniform_int_distribution<std::size_t> dim(2, 12);
    for (int t = 0; t < 100; ++t) {
        std::size_t n = dim(rng), m = dim(rng), p = dim(rng);
        DiscreteMeasure x = random_prob(rng, n);
        DiscreteJoint alpha = j_embed(x, random_kernel(rng, n, m));
        DiscreteJoint beta = j_embed(right_marginal(alpha), random_kernel(rng, m, p));
        DiscreteJoint lhs = dagger(compose_joints(alpha, beta));
        DiscreteJoint rhs = compose_joints(dagger(beta), dagger(alpha));
        CHECK(max_abs_diff(lhs.m, rhs.m) <= 1e-10);
    }
}

TEST_CASE("validation rejects malformed inputs") {
    CHECK_THROWS_AS(kernel(2, 2, {0.9, 0.2, 0.5, 0.5}), std::invalid_argument);
    CHECK_THROWS_AS(kernel(2, 2, {1.1, -0.1, 0.5, 0.5}), std::invalid_argument);
    DiscreteMeasure neg{{0.5, -0.5}};
    CHECK_THROWS_AS(neg.validate(), std::invalid_argument);
    CHECK_THROWS_AS(Matrix(2, 2, {1.0, 2.0, 3.0}), std::invalid_argument);
}

}  // TEST_SUITE
