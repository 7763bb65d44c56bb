#include "jdist/discrete.hpp"

#include <cmath>

#include "jdist/summation.hpp"

namespace jdist {

Matrix::Matrix(std::size_t r, std::size_t c, std::vector<double> d)
    : rows(r), cols(c), data(std::move(d)) {
    if (data.size() != rows * cols)
        throw std::invalid_argument("matrix data size does not match shape");
}

double DiscreteMeasure::total() const { return sum_all(weights); }

void DiscreteMeasure::validate() const {
    for (double w : weights)
        if (!(w >= 0.0) || !std::isfinite(w))
            throw std::invalid_argument("discrete measure weight negative or non-finite");
}

void DiscreteKernel::validate() const {
    for (double v : m.data)
        if (!(v >= 0.0) || v > 1.0 + kRowSumTol || !std::isfinite(v))
            throw std::invalid_argument("kernel entry outside [0,1]");
    for (std::size_t i = 0; i < m.rows; ++i) {
        NeumaierSum s;
        for (std::size_t j = 0; j < m.cols; ++j) s.add(m.at(i, j));
        if (std::fabs(s.value() - 1.0) > kRowSumTol)
            throw std::invalid_argument("kernel row does not sum to 1 within 1e-12");
    }
}

double DiscreteJoint::total() const { return sum_all(m.data); }

void DiscreteJoint::validate() const {
    for (double v : m.data)
        if (!(v >= 0.0) || !std::isfinite(v))
            throw std::invalid_argument("joint cell negative or non-finite");
}

LiftedKernel lift_kernel(const DiscreteKernel& A) {
    A.validate();
    return LiftedKernel{A};
}

DiscreteJoint j_embed(const DiscreteMeasure& x, const DiscreteKernel& A) {
    if (x.size() != A.rows())
        throw std::invalid_argument("j_embed: measure length does not match kernel rows");
    DiscreteJoint r{Matrix(A.rows(), A.cols())};
    for (std::size_t i = 0; i < A.rows(); ++i)
        for (std::size_t j = 0; j < A.cols(); ++j)
            r.m.at(i, j) = A.at(i, j) * x.weights[i];
    return r;
}

DiscreteMeasure left_marginal(const DiscreteJoint& a) {
    DiscreteMeasure r;
    r.weights.resize(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        NeumaierSum s;
        for (std::size_t j = 0; j < a.cols(); ++j) s.add(a.at(i, j));
        r.weights[i] = s.value();
    }
    return r;
}

DiscreteMeasure right_marginal(const DiscreteJoint& a) {
    DiscreteMeasure r;
    r.weights.resize(a.cols());
    for (std::size_t j = 0; j < a.cols(); ++j) {
        NeumaierSum s;
        for (std::size_t i = 0; i < a.rows(); ++i) s.add(a.at(i, j));
        r.weights[j] = s.value();
    }
    return r;
}

DiscreteJoint compose_joints(const DiscreteJoint& alpha, const DiscreteJoint& beta) {
    if (alpha.cols() != beta.rows())
        throw std::invalid_argument("compose_joints: inner dimensions do not match");
    const DiscreteMeasure y = right_marginal(alpha);
    const DiscreteMeasure yl = left_marginal(beta);
    double defect = 0.0;
    for (std::size_t j = 0; j < y.size(); ++j)
        defect = std::max(defect, std::fabs(y.weights[j] - yl.weights[j]));
    if (defect > kDiscreteMarginalTol)
        throw MarginalMismatchError(
            "compose_joints: shared marginal mismatch, max defect " +
                std::to_string(defect),
            defect);

    DiscreteJoint g{Matrix(alpha.rows(), beta.cols())};
    for (std::size_t i = 0; i < alpha.rows(); ++i) {
        for (std::size_t k = 0; k < beta.cols(); ++k) {
            NeumaierSum s;
            for (std::size_t j = 0; j < alpha.cols(); ++j) {
                if (y.weights[j] > 0.0)
                    s.add(alpha.at(i, j) * beta.at(j, k) / y.weights[j]);
            }
            g.m.at(i, k) = s.value();
        }
    }
    return g;
}

DiscreteKernel disintegrate(const DiscreteJoint& alpha, const DiscreteMeasure& fill) {
    if (fill.size() != alpha.cols())
        throw std::invalid_argument("disintegrate: fill length does not match joint columns");
    const DiscreteMeasure x = left_marginal(alpha);
    DiscreteKernel A{Matrix(alpha.rows(), alpha.cols())};
    for (std::size_t i = 0; i < alpha.rows(); ++i) {
        if (x.weights[i] > 0.0) {
            for (std::size_t j = 0; j < alpha.cols(); ++j)
                A.m.at(i, j) = alpha.at(i, j) / x.weights[i];
        } else {
            for (std::size_t j = 0; j < alpha.cols(); ++j)
                A.m.at(i, j) = fill.weights[j];
        }
    }
    return A;
}

bool kernel_equiv(const DiscreteKernel& A, const DiscreteKernel& B,
                  const DiscreteMeasure& x) {
    if (A.rows() != B.rows() || A.cols() != B.cols() || x.size() != A.rows())
        throw std::invalid_argument("kernel_equiv: dimension mismatch");
    for (std::size_t i = 0; i < A.rows(); ++i) {
        if (!(x.weights[i] > 0.0)) continue;
        for (std::size_t j = 0; j < A.cols(); ++j)
            if (std::fabs(A.at(i, j) - B.at(i, j)) > kRowSumTol) return false;
    }
    return true;
}

DiscreteJoint dagger(const DiscreteJoint& a) {
    DiscreteJoint r{Matrix(a.cols(), a.rows())};
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) r.m.at(j, i) = a.at(i, j);
    return r;
}

DiscreteKernel bayes_inverse(const DiscreteKernel& A, const DiscreteMeasure& x,
                             const DiscreteMeasure& fill) {
    if (x.size() != A.rows() || fill.size() != A.rows())
        throw std::invalid_argument("bayes_inverse: dimension mismatch");
    const DiscreteMeasure y = right_marginal(j_embed(x, A));
    DiscreteKernel B{Matrix(A.cols(), A.rows())};
    for (std::size_t j = 0; j < A.cols(); ++j) {
        if (y.weights[j] > 0.0) {
            for (std::size_t i = 0; i < A.rows(); ++i)
                B.m.at(j, i) = A.at(i, j) * x.weights[i] / y.weights[j];
        } else {
            for (std::size_t i = 0; i < A.rows(); ++i)
                B.m.at(j, i) = fill.weights[i];
        }
    }
    return B;
}

DiscreteKernel kernel_product(const DiscreteKernel& A, const DiscreteKernel& B) {
    if (A.cols() != B.rows())
        throw std::invalid_argument("kernel_product: inner dimensions do not match");
    DiscreteKernel r{Matrix(A.rows(), B.cols())};
    for (std::size_t i = 0; i < A.rows(); ++i) {
        for (std::size_t k = 0; k < B.cols(); ++k) {
            NeumaierSum s;
            for (std::size_t j = 0; j < A.cols(); ++j) s.add(A.at(i, j) * B.at(j, k));
            r.m.at(i, k) = s.value();
        }
    }
    return r;
}

}  // namespace jdist
