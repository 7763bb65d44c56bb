#include "jdist/mc.hpp"

#include <cmath>
#include <stdexcept>
#include <variant>
#include <vector>

namespace jdist {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// splitmix64 output function applied to a counter stream; draw (seed, c) is a
// pure function, so samples are reproducible and order-free.
std::uint64_t mix(std::uint64_t seed, std::uint64_t counter) {
    std::uint64_t x = seed + (counter + 1) * 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// uniform in the open interval (0,1): 53 bits, offset by half an ulp
double uniform01(std::uint64_t bits) {
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

double standard_normal(std::uint64_t seed, std::uint64_t counter) {
    double u1 = uniform01(mix(seed, 2 * counter));
    double u2 = uniform01(mix(seed, 2 * counter + 1));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

bool holds(const Predicate& p, double v) {
    switch (p.op) {
        case Predicate::Op::Gt: return v > p.threshold;
        case Predicate::Op::Ge: return v >= p.threshold;
        case Predicate::Op::Lt: return v < p.threshold;
        case Predicate::Op::Le: return v <= p.threshold;
    }
    return false;
}

}  // namespace

McResult mc_evaluate(const Program& program, const McConfig& cfg) {
    if (cfg.samples < 1) throw std::invalid_argument("mc: samples must be >= 1");

    const std::size_t n = program.assignments.size();
    // resolve means to either a literal or the index of the parent variable
    std::vector<int> parent(n, -1);
    std::vector<double> literal(n, 0.0), sigma(n, 1.0);
    std::size_t q_idx = n, o_idx = n;
    for (std::size_t j = 0; j < n; ++j) {
        const Assignment& a = program.assignments[j];
        sigma[j] = std::sqrt(a.variance);
        if (const double* lit = std::get_if<double>(&a.mean)) {
            literal[j] = *lit;
        } else {
            const std::string& ref = std::get<std::string>(a.mean);
            for (std::size_t k = 0; k < j; ++k)
                if (program.assignments[k].var == ref) parent[j] = static_cast<int>(k);
        }
        if (a.var == program.query.var) q_idx = j;
        if (program.observation && a.var == program.observation->var) o_idx = j;
    }
    if (q_idx == n) throw std::invalid_argument("mc: query variable not declared");
    const bool conditioned = program.observation.has_value();
    if (conditioned && o_idx == n)
        throw std::invalid_argument("mc: observed variable not declared");

    std::uint64_t accepted = 0, hits = 0;
    std::vector<double> value(n);
    for (std::uint64_t i = 0; i < cfg.samples; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double mean = parent[j] >= 0 ? value[parent[j]] : literal[j];
            value[j] = mean + sigma[j] * standard_normal(cfg.seed, i * n + j);
        }
        bool obs_ok = !conditioned || holds(*program.observation, value[o_idx]);
        if (!obs_ok) continue;
        ++accepted;
        if (holds(program.query, value[q_idx])) ++hits;
    }

    McResult res;
    res.samples = cfg.samples;
    res.seed = cfg.seed;
    res.accepted = accepted;
    res.hits = hits;
    res.generator = "splitmix64-boxmuller";
    if (accepted == 0)
        throw ZeroMeasureObservationError("mc: no sample satisfied the observation",
                                          0.0);
    res.estimate = static_cast<double>(hits) / static_cast<double>(accepted);
    if (cfg.report_std_error) {
        double p = res.estimate;
        res.std_error = std::sqrt(std::max(0.0, p * (1.0 - p)) /
                                  static_cast<double>(accepted));
    }
    return res;
}

}  // namespace jdist
