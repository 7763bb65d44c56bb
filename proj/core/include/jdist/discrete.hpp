#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace jdist {

// Tolerances for the finite-state layer. Composition refuses (rather than
// renormalizes) inputs whose shared marginal disagrees beyond the match
// tolerance.
inline constexpr double kRowSumTol = 1e-12;
inline constexpr double kDiscreteMarginalTol = 1e-9;

class MarginalMismatchError : public std::invalid_argument {
public:
    MarginalMismatchError(const std::string& what, double defect)
        : std::invalid_argument(what), max_defect(defect) {}
    double max_defect;
};

// Dense row-major matrix; the shared storage for kernels and joints.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
    Matrix(std::size_t r, std::size_t c, std::vector<double> d);

    double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

// Nonnegative weight vector x; probability measures sum to 1 within 1e-12.
struct DiscreteMeasure {
    std::vector<double> weights;

    std::size_t size() const { return weights.size(); }
    double total() const;
    void validate() const;
};

// Row-stochastic matrix A: entries in [0,1], rows sum to 1 within 1e-12.
struct DiscreteKernel {
    Matrix m;

    std::size_t rows() const { return m.rows; }
    std::size_t cols() const { return m.cols; }
    double at(std::size_t i, std::size_t j) const { return m.at(i, j); }
    void validate() const;
};

// Joint mass matrix; marginals are row and column sums.
struct DiscreteJoint {
    Matrix m;

    std::size_t rows() const { return m.rows; }
    std::size_t cols() const { return m.cols; }
    double at(std::size_t i, std::size_t j) const { return m.at(i, j); }
    double total() const;
    void validate() const;
};

// Indexed view of the lift A': A'(i,j,k) = A(i,k) when i = j, else 0.
struct LiftedKernel {
    DiscreteKernel kernel;

    double operator()(std::size_t i, std::size_t j, std::size_t k) const {
        return i == j ? kernel.at(i, k) : 0.0;
    }
};

LiftedKernel lift_kernel(const DiscreteKernel& A);

// result(i,j) = A(i,j) * x_i; left marginal x, right marginal x^T A.
DiscreteJoint j_embed(const DiscreteMeasure& x, const DiscreteKernel& A);

DiscreteMeasure left_marginal(const DiscreteJoint& a);
DiscreteMeasure right_marginal(const DiscreteJoint& a);

// gamma(i,k) = sum over j with y_j > 0 of alpha(i,j) * beta(j,k) / y_j,
// where y is the right marginal of alpha. Throws MarginalMismatchError when
// y and the left marginal of beta differ beyond kDiscreteMarginalTol.
DiscreteJoint compose_joints(const DiscreteJoint& alpha, const DiscreteJoint& beta);

// A(i,j) = alpha(i,j) / x_i on rows with x_i > 0; `fill` elsewhere. The fill
// row makes the up-to-nullsets freedom explicit and deterministic.
DiscreteKernel disintegrate(const DiscreteJoint& alpha, const DiscreteMeasure& fill);

// true iff rows of A and B agree within 1e-12 wherever x_i > 0.
bool kernel_equiv(const DiscreteKernel& A, const DiscreteKernel& B,
                  const DiscreteMeasure& x);

DiscreteJoint dagger(const DiscreteJoint& a);

// B(j,i) = A(i,j) * x_i / y_j with y = x^T A; fill row where y_j = 0.
// Satisfies j_embed(y, B) = dagger(j_embed(x, A)).
DiscreteKernel bayes_inverse(const DiscreteKernel& A, const DiscreteMeasure& x,
                             const DiscreteMeasure& fill);

// Row-stochastic product A*B with compensated row sums.
DiscreteKernel kernel_product(const DiscreteKernel& A, const DiscreteKernel& B);

}  // namespace jdist
