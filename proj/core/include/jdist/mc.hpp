#pragma once

#include <cstdint>
#include <string>

#include "jdist/problang.hpp"

namespace jdist {

struct McConfig {
    std::uint64_t samples = 1000000;
    std::uint64_t seed = 42;
    bool report_std_error = true;
};

struct McResult {
    double estimate = 0.0;
    double std_error = 0.0;
    std::uint64_t accepted = 0;  // samples satisfying the observation
    std::uint64_t hits = 0;      // of those, samples satisfying the query
    std::uint64_t samples = 0;
    std::uint64_t seed = 0;
    std::string generator;  // recorded for reproducibility
};

// Forward-samples the gaussian chain by ancestral sampling with a
// counter-based generator (splitmix64 stream, Box-Muller transform), so the
// draw for (sample i, variable j) is a pure function of (seed, i, j).
// estimate = hits/accepted, std_error = sqrt(p(1-p)/accepted) (binomial-ratio
// delta method). Throws ZeroMeasureObservationError when nothing is accepted.
McResult mc_evaluate(const Program& program, const McConfig& cfg);

}  // namespace jdist
