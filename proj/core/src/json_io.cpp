#include "jdist/json_io.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "json.hpp"

#include "jdist/summation.hpp"

namespace jdist::io {

namespace {

using nlohmann::json;

json parse(const std::string& raw) {
    json j = json::parse(raw, nullptr, false);
    if (j.is_discarded()) throw JsonError("malformed JSON document");
    return j;
}

std::string fmt_double(double v) {
    if (!std::isfinite(v)) throw JsonError("non-finite number is not serializable");
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// canonical writer: objects sorted (json's default map order), no spaces,
// every number in %.17g
void write_canonical(const json& j, std::string& out) {
    switch (j.type()) {
        case json::value_t::null:
            out += "null";
            break;
        case json::value_t::boolean:
            out += j.get<bool>() ? "true" : "false";
            break;
        case json::value_t::number_integer:
        case json::value_t::number_unsigned:
        case json::value_t::number_float:
            out += fmt_double(j.get<double>());
            break;
        case json::value_t::string:
            out += json(j.get<std::string>()).dump();
            break;
        case json::value_t::array: {
            out += '[';
            bool first = true;
            for (const json& e : j) {
                if (!first) out += ',';
                first = false;
                write_canonical(e, out);
            }
            out += ']';
            break;
        }
        case json::value_t::object: {
            out += '{';
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) out += ',';
                first = false;
                out += json(it.key()).dump();
                out += ':';
                write_canonical(it.value(), out);
            }
            out += '}';
            break;
        }
        default:
            throw JsonError("unsupported JSON value type");
    }
}

std::string dump_canonical(const json& j) {
    std::string out;
    write_canonical(j, out);
    return out;
}

template <typename T>
T field(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw JsonError(std::string("missing field: ") + key);
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw JsonError(std::string("field has wrong type: ") + key);
    }
}

json interval_json(const Interval& iv) { return json::array({iv.lo, iv.hi}); }

Interval interval_from(const json& j, const char* what) {
    if (!j.is_array() || j.size() != 2)
        throw JsonError(std::string(what) + ": expected [lo,hi]");
    return closed_interval(j[0].get<double>(), j[1].get<double>());
}

json matrix_json(const Matrix& m) {
    return json{{"shape", json::array({m.rows, m.cols})}, {"data", m.data}};
}

Matrix matrix_from(const json& j) {
    auto shape = field<std::vector<std::size_t>>(j, "shape");
    auto data = field<std::vector<double>>(j, "data");
    if (shape.size() != 2) throw JsonError("expected a 2-element shape");
    try {
        return Matrix(shape[0], shape[1], std::move(data));
    } catch (const std::invalid_argument& e) {
        throw JsonError(e.what());
    }
}

json spec_json(const DensitySpec& s) {
    if (std::holds_alternative<ZeroSpec>(s)) return json{{"kind", "zero"}};
    if (const auto* g = std::get_if<GaussianSpec>(&s))
        return json{{"kind", "gaussian"}, {"mean", g->mean}, {"var", g->var}};
    if (const auto* a = std::get_if<AffineSpec>(&s))
        return json{{"kind", "affine"}, {"slope", a->slope}, {"intercept", a->intercept}};
    if (const auto* t = std::get_if<TableSpec>(&s))
        return json{{"kind", "table"},
                    {"breakpoints", t->breakpoints},
                    {"values", t->values}};
    const auto& st = std::get<StepSpec>(s);
    return json{{"kind", "step"}, {"breakpoints", st.breakpoints}, {"values", st.values}};
}

DensitySpec spec_from(const json& j) {
    std::string kind = field<std::string>(j, "kind");
    if (kind == "zero") return ZeroSpec{};
    if (kind == "gaussian")
        return GaussianSpec{field<double>(j, "mean"), field<double>(j, "var")};
    if (kind == "affine")
        return AffineSpec{field<double>(j, "slope"), field<double>(j, "intercept")};
    if (kind == "table")
        return TableSpec{field<std::vector<double>>(j, "breakpoints"),
                         field<std::vector<double>>(j, "values")};
    if (kind == "step")
        return StepSpec{field<std::vector<double>>(j, "breakpoints"),
                        field<std::vector<double>>(j, "values")};
    throw JsonError("unknown density kind: " + kind);
}

json measure_json(const Measure1D& m) {
    if (!m.spec)
        throw JsonError("measure has no serializable density spec");
    json atoms = json::array();
    for (const Atom& a : m.atoms) atoms.push_back(json::array({a.loc, a.mass}));
    return json{{"support", interval_json(m.support)},
                {"density", spec_json(*m.spec)},
                {"atoms", atoms},
                {"quadrature", m.quadrature}};
}

Measure1D measure_from(const json& j) {
    Interval sup = interval_from(j.at("support"), "support");
    DensitySpec spec = j.contains("density") ? spec_from(j.at("density"))
                                             : DensitySpec{ZeroSpec{}};
    std::vector<Atom> atoms;
    if (j.contains("atoms"))
        for (const json& a : j.at("atoms")) {
            if (!a.is_array() || a.size() != 2)
                throw JsonError("atom: expected [location,mass]");
            atoms.push_back(Atom{a[0].get<double>(), a[1].get<double>()});
        }
    int quad = j.contains("quadrature") ? field<int>(j, "quadrature") : 16;
    try {
        return measure_from_spec(sup, std::move(spec), std::move(atoms), quad);
    } catch (const std::invalid_argument& e) {
        throw JsonError(e.what());
    }
}

json kernel_json(const KernelFamily1D& k) {
    json base{{"source", interval_json(k.source)}, {"target", interval_json(k.target)}};
    if (const auto* g = std::get_if<GaussianKernel>(&k.family)) {
        base["kind"] = "gaussian";
        base["mean"] = json{{"slope", g->mean.slope}, {"intercept", g->mean.intercept}};
        base["var"] = g->var;
        return base;
    }
    if (const auto* t = std::get_if<TableKernel>(&k.family)) {
        base["kind"] = "table";
        base["s_grid"] = t->s_grid;
        base["t_grid"] = t->t_grid;
        base["rows"] = t->rows;
        return base;
    }
    const auto& s = std::get<SubidentityKernel>(k.family);
    base["kind"] = "subidentity";
    json keep = json::array();
    for (const Interval& iv : s.keep) keep.push_back(interval_json(iv));
    base["keep"] = keep;
    return base;
}

KernelFamily1D kernel_from(const json& j) {
    Interval source = interval_from(j.at("source"), "source");
    Interval target = interval_from(j.at("target"), "target");
    std::string kind = field<std::string>(j, "kind");
    try {
        if (kind == "gaussian") {
            const json& mean = j.at("mean");
            return gaussian_kernel(source, target,
                                   AffineFn{field<double>(mean, "slope"),
                                            field<double>(mean, "intercept")},
                                   field<double>(j, "var"));
        }
        if (kind == "table") {
            KernelFamily1D k;
            k.source = source;
            k.target = target;
            k.family = TableKernel{field<std::vector<double>>(j, "s_grid"),
                                   field<std::vector<double>>(j, "t_grid"),
                                   field<std::vector<std::vector<double>>>(j, "rows")};
            return k;
        }
        if (kind == "subidentity") {
            IntervalSet keep;
            for (const json& iv : j.at("keep"))
                keep.push_back(interval_from(iv, "keep"));
            return restrict_kernel(keep, source);
        }
    } catch (const std::invalid_argument& e) {
        throw JsonError(e.what());
    }
    throw JsonError("unknown kernel kind: " + kind);
}

json joint_json(const JointMeasure2D& j) {
    json out;
    out["swapped"] = j.swapped;
    if (const auto* g = std::get_if<GridJoint>(&j.value)) {
        out["variant"] = "grid";
        out["x_breaks"] = g->x_breaks;
        out["y_breaks"] = g->y_breaks;
        out["masses"] = g->masses;
        return out;
    }
    if (const auto* k = std::get_if<KernelJointSpec>(&j.value)) {
        out["variant"] = "kernel";
        out["base"] = measure_json(k->base);
        out["kernel"] = kernel_json(k->kernel);
        return out;
    }
    if (const auto* d = std::get_if<DiagonalJoint>(&j.value)) {
        out["variant"] = "diagonal";
        out["base"] = measure_json(d->base);
        return out;
    }
    if (const auto* e = std::get_if<DiscreteEmbedJoint>(&j.value)) {
        out["variant"] = "discrete";
        out["joint"] = matrix_json(e->joint.m);
        out["x_breaks"] = e->x_breaks;
        out["y_breaks"] = e->y_breaks;
        return out;
    }
    throw JsonError("callable joints are not serializable");
}

JointMeasure2D joint_from(const json& j) {
    std::string variant = field<std::string>(j, "variant");
    bool swapped = j.contains("swapped") && field<bool>(j, "swapped");
    JointMeasure2D out;
    try {
        if (variant == "grid") {
            GridJoint g;
            g.x_breaks = field<std::vector<double>>(j, "x_breaks");
            g.y_breaks = field<std::vector<double>>(j, "y_breaks");
            g.masses = field<std::vector<double>>(j, "masses");
            out = make_grid_joint(std::move(g));
        } else if (variant == "kernel") {
            out = make_kernel_joint(measure_from(j.at("base")),
                                    kernel_from(j.at("kernel")));
        } else if (variant == "diagonal") {
            out = make_diagonal_joint(measure_from(j.at("base")));
        } else if (variant == "discrete") {
            DiscreteJoint dj{matrix_from(j.at("joint"))};
            out = make_discrete_embed(std::move(dj),
                                      field<std::vector<double>>(j, "x_breaks"),
                                      field<std::vector<double>>(j, "y_breaks"));
        } else {
            throw JsonError("unknown joint variant: " + variant);
        }
    } catch (const std::invalid_argument& e) {
        throw JsonError(e.what());
    }
    out.swapped = swapped;
    return out;
}

json report_json(const ConvergenceReport& r) {
    json levels = json::array();
    for (const ConvergenceLevel& l : r.levels)
        levels.push_back(json{{"level", l.level},
                              {"epsilon", l.epsilon},
                              {"cells", l.cells},
                              {"value", l.value},
                              {"lower", l.lower},
                              {"upper", l.upper}});
    return json{{"converged", r.converged}, {"achieved", r.achieved}, {"levels", levels}};
}

}  // namespace

std::string canonical_json(const std::string& raw) { return dump_canonical(parse(raw)); }

std::string to_json(const DiscreteJoint& j) { return dump_canonical(matrix_json(j.m)); }
std::string to_json(const DiscreteKernel& k) { return dump_canonical(matrix_json(k.m)); }

std::string to_json(const DiscreteMeasure& x) {
    json j{{"shape", json::array({x.weights.size()})}, {"data", x.weights}};
    return dump_canonical(j);
}

DiscreteJoint discrete_joint_from_json(const std::string& raw) {
    DiscreteJoint j{matrix_from(parse(raw))};
    try {
        j.validate();
    } catch (const std::invalid_argument& e) {
        throw JsonError(e.what());
    }
    return j;
}

DiscreteKernel discrete_kernel_from_json(const std::string& raw) {
    DiscreteKernel k{matrix_from(parse(raw))};
    try {
        k.validate();
    } catch (const std::invalid_argument& e) {
        throw JsonError(e.what());
    }
    return k;
}

DiscreteMeasure discrete_measure_from_json(const std::string& raw) {
    json j = parse(raw);
    auto shape = field<std::vector<std::size_t>>(j, "shape");
    auto data = field<std::vector<double>>(j, "data");
    if (shape.size() != 1 || shape[0] != data.size())
        throw JsonError("measure shape/data mismatch");
    DiscreteMeasure m{std::move(data)};
    try {
        m.validate();
    } catch (const std::invalid_argument& e) {
        throw JsonError(e.what());
    }
    return m;
}

bool looks_discrete(const std::string& raw) {
    json j = parse(raw);
    return j.is_object() && j.contains("shape");
}

std::string to_json(const Measure1D& m) { return dump_canonical(measure_json(m)); }
Measure1D measure_from_json(const std::string& raw) { return measure_from(parse(raw)); }

std::string to_json(const KernelFamily1D& k) { return dump_canonical(kernel_json(k)); }
KernelFamily1D kernel_from_json(const std::string& raw) { return kernel_from(parse(raw)); }

std::string to_json(const JointMeasure2D& j) { return dump_canonical(joint_json(j)); }
JointMeasure2D joint_from_json(const std::string& raw) { return joint_from(parse(raw)); }

std::string eval_result_json(const EvalResult& r) {
    json levels = json::array();
    for (const ConvergenceLevel& l : r.report.levels)
        levels.push_back(json{{"level", l.level},
                              {"cells", l.cells},
                              {"value", l.value},
                              {"lower", l.lower},
                              {"upper", l.upper}});
    json j{{"probability", r.probability},
           {"denominator", r.denominator},
           {"converged", r.report.converged},
           {"levels", levels}};
    return dump_canonical(j);
}

std::string mc_result_json(const McResult& r) {
    json j{{"estimate", r.estimate},
           {"std_error", r.std_error},
           {"accepted", r.accepted},
           {"hits", r.hits},
           {"samples", r.samples},
           {"seed", r.seed},
           {"generator", r.generator}};
    return dump_canonical(j);
}

std::string compose_result_json(const JointMeasure2D& joint,
                                const ConvergenceReport& report) {
    json j{{"joint", joint_json(joint)}, {"report", report_json(report)}};
    return dump_canonical(j);
}

std::string limit_result_json(const LimitResult& r) {
    json j{{"value", r.value}, {"report", report_json(r.report)}};
    return dump_canonical(j);
}

std::string decomposition_json(const LebesgueDecomposition& d) {
    json carrier = json::array();
    for (const Interval& iv : d.carrier.intervals) carrier.push_back(interval_json(iv));
    json j{{"ac_part", measure_json(d.ac_part)},
           {"singular_part", measure_json(d.singular_part)},
           {"ac_mass", d.ac_part.total_mass()},
           {"singular_mass", d.singular_part.total_mass()},
           {"carrier", carrier},
           {"excluded_points", d.carrier.excluded_points},
           {"chain_levels", d.approximant_chain.size()}};
    return dump_canonical(j);
}

std::string report_csv(const ConvergenceReport& r) {
    std::ostringstream out;
    out << "level,cells,value,lower,upper\n";
    for (const ConvergenceLevel& l : r.levels)
        out << l.level << ',' << l.cells << ',' << fmt_double(l.value) << ','
            << fmt_double(l.lower) << ',' << fmt_double(l.upper) << '\n';
    return out.str();
}

std::string trace_csv(const ConvergenceReport& r) {
    std::ostringstream out;
    out << "level,epsilon,cells,partial_sum,lower_bracket,upper_bracket\n";
    for (const ConvergenceLevel& l : r.levels)
        out << l.level << ',' << fmt_double(l.epsilon) << ',' << l.cells << ','
            << fmt_double(l.value) << ',' << fmt_double(l.lower) << ','
            << fmt_double(l.upper) << '\n';
    return out.str();
}

std::string decomposition_csv(const LebesgueDecomposition& d, const Measure1D& mu,
                              const std::vector<double>& eps_schedule) {
    std::ostringstream out;
    out << "level,epsilon,cells,partial_sum,lower_bracket,upper_bracket\n";
    for (std::size_t level = 0; level < d.approximant_chain.size(); ++level) {
        const ApproximantPair& p = d.approximant_chain[level];
        NeumaierSum lo, hi;
        for (std::size_t i = 0; i + 1 < p.partition.breakpoints.size(); ++i) {
            if (!p.carrier[i]) continue;
            double mass = measure_of(mu, p.partition.cell(i));
            lo.add(p.lower[i] * mass);
            hi.add(p.upper[i] * mass);
        }
        double eps = level < eps_schedule.size() ? eps_schedule[level] : 0.0;
        out << level + 1 << ',' << fmt_double(eps) << ','
            << p.partition.breakpoints.size() - 1 << ','
            << fmt_double(0.5 * (lo.value() + hi.value())) << ','
            << fmt_double(lo.value()) << ',' << fmt_double(hi.value()) << '\n';
    }
    return out.str();
}

}  // namespace jdist::io
