#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace jdist {

// One refinement level of a limit computation. `epsilon` is meaningful for
// level-set chains (measures1d) and zero for dyadic chains (joint2d).
struct ConvergenceLevel {
    int level = 0;
    double epsilon = 0.0;
    std::size_t cells = 0;
    double value = 0.0;
    double lower = 0.0;
    double upper = 0.0;
};

struct ConvergenceReport {
    std::vector<ConvergenceLevel> levels;
    bool converged = false;
    double achieved = 0.0;  // last successive-level difference
};

class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, ConvergenceReport r)
        : std::runtime_error(what), report(std::move(r)) {}
    ConvergenceReport report;
};

}  // namespace jdist
