#pragma once

#include <stdexcept>
#include <string>

#include "jdist/approximants.hpp"
#include "jdist/discrete.hpp"
#include "jdist/joint2d.hpp"
#include "jdist/kernel1d.hpp"
#include "jdist/mc.hpp"
#include "jdist/measure1d.hpp"
#include "jdist/problang.hpp"
#include "jdist/report.hpp"

namespace jdist::io {

// Malformed document or schema violation (CLI exit code 3 territory).
class JsonError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Canonical serialization: sorted keys, no whitespace, doubles printed with
// %.17g (17 significant digits, exact round-trip). canonical_json is a fixed
// point: canonicalizing twice is byte-identical to once.
std::string canonical_json(const std::string& raw);

// ---- matrices (shape/data schema) -----------------------------------------
// {"shape":[n,m],"data":[... row-major ...]} and {"shape":[n],"data":[...]}

std::string to_json(const DiscreteJoint& j);
std::string to_json(const DiscreteKernel& k);
std::string to_json(const DiscreteMeasure& x);
DiscreteJoint discrete_joint_from_json(const std::string& raw);
DiscreteKernel discrete_kernel_from_json(const std::string& raw);
DiscreteMeasure discrete_measure_from_json(const std::string& raw);

// true when the document carries the discrete shape/data schema rather than a
// variant-tagged continuous descriptor.
bool looks_discrete(const std::string& raw);

// ---- continuous descriptors ------------------------------------------------

std::string to_json(const Measure1D& m);  // requires a serializable spec
Measure1D measure_from_json(const std::string& raw);

std::string to_json(const KernelFamily1D& k);
KernelFamily1D kernel_from_json(const std::string& raw);

std::string to_json(const JointMeasure2D& j);  // callable joints not supported
JointMeasure2D joint_from_json(const std::string& raw);

// ---- result payloads --------------------------------------------------------

std::string eval_result_json(const EvalResult& r);
std::string mc_result_json(const McResult& r);
std::string compose_result_json(const JointMeasure2D& joint,
                                const ConvergenceReport& report);
std::string limit_result_json(const LimitResult& r);
std::string decomposition_json(const LebesgueDecomposition& d);

// plot-ready trace: level,epsilon,cells,value,lower,upper
std::string report_csv(const ConvergenceReport& r);
std::string trace_csv(const ConvergenceReport& r);
std::string decomposition_csv(const LebesgueDecomposition& d, const Measure1D& mu,
                              const std::vector<double>& eps_schedule);

}  // namespace jdist::io
