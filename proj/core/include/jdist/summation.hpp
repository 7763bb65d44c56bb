#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace jdist {

// Neumaier-compensated accumulator. Every sum whose value feeds a tolerance
// contract is accumulated through this type, in a fixed index order, so
// results are identical across platforms and thread counts.
class NeumaierSum {
public:
    void add(double v) {
        double t = sum_ + v;
        if (std::fabs(sum_) >= std::fabs(v)) {
            comp_ += (sum_ - t) + v;
        } else {
            comp_ += (v - t) + sum_;
        }
        sum_ = t;
    }

    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double sum_all(const std::vector<double>& xs) {
    NeumaierSum s;
    for (double x : xs) s.add(x);
    return s.value();
}

}  // namespace jdist
