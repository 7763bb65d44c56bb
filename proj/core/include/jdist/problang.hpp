#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "jdist/joint2d.hpp"
#include "jdist/report.hpp"

namespace jdist {

// Parse failure with source position (1-based line and column).
class ParseError : public std::runtime_error {
  public:
    ParseError(int line, int col, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ", col " +
                             std::to_string(col) + ": " + what),
          line_(line),
          col_(col) {}
    int line() const { return line_; }
    int col() const { return col_; }

  private:
    int line_;
    int col_;
};

// Conditioning on an event of (numerically) zero probability.
class ZeroMeasureObservationError : public std::runtime_error {
  public:
    ZeroMeasureObservationError(const std::string& what, double denominator)
        : std::runtime_error(what), denominator_(denominator) {}
    double denominator() const { return denominator_; }

  private:
    double denominator_;
};

struct Predicate {
    enum class Op { Gt, Ge, Lt, Le };
    std::string var;
    Op op = Op::Gt;
    double threshold = 0.0;
};

struct Assignment {
    std::string var;
    std::variant<double, std::string> mean;  // literal or prior variable
    double variance = 1.0;
};

struct Program {
    std::vector<Assignment> assignments;
    std::optional<Predicate> observation;
    Predicate query;
};

// Grammar:
//   program := assign* observe? ret
//   assign  := ident ":=" "normal" "(" (number | ident) "," number ")" ";"
//   observe := "observe" "(" pred ")" ";"
//   ret     := "return" "(" pred ")" ";"?
//   pred    := ident (">" | ">=" | "<" | "<=") number
// "#" starts a comment running to end of line. A mean identifier must name a
// previously declared variable; a literal mean starts an independent chain.
Program parse_program(const std::string& source);

struct EvalOptions {
    double tol = 1e-3;
    int max_depth = 14;
    int quadrature = 16;
};

struct EvalResult {
    double probability = 0.0;
    double denominator = 1.0;  // P(observation); 1 when unconditioned
    bool conditioned = false;
    ConvergenceReport report;
};

// Joint-composition route: builds the two-variable joint between query and
// observed variable by composing kernel joints along the dependency path
// (using dagger for upward steps), then takes the conditional rectangle
// ratio. Unobserved programs reduce to a pushforward of the root prior.
EvalResult evaluate(const Program& program, const EvalOptions& opts = {});

// Kernel route for the same probability: restrict the conditioning variable's
// marginal with a sub-identity kernel, push forward along the chain, and take
// a mass ratio. Only defined when one of the two variables is an ancestor of
// the other (or they coincide, or there is no observation).
double evaluate_kernel_route(const Program& program, const EvalOptions& opts = {});

}  // namespace jdist
