#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "jdist/approximants.hpp"
#include "jdist/discrete.hpp"
#include "jdist/joint2d.hpp"
#include "jdist/json_io.hpp"
#include "jdist/mc.hpp"
#include "jdist/problang.hpp"

namespace {

class UsageError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

std::string read_input(const std::string& path) {
    std::ostringstream ss;
    if (path == "-") {
        ss << std::cin.rdbuf();
        return ss.str();
    }
    std::ifstream f(path, std::ios::binary);
    if (!f) throw UsageError("cannot open " + path);
    ss << f.rdbuf();
    return ss.str();
}

int env_max_depth() {
    const char* raw = std::getenv("JDIST_MAX_DEPTH");
    if (!raw || !*raw) return 14;
    char* end = nullptr;
    long v = std::strtol(raw, &end, 10);
    if (end == raw || *end != '\0' || v < 1 || v > 24)
        throw UsageError("JDIST_MAX_DEPTH must be an integer in [1,24]");
    return static_cast<int>(v);
}

struct CommonOpts {
    double tol = 1e-3;
    int max_depth = 0;  // resolved after parsing: flag > env > default
    int quadrature = 16;
    std::string format = "json";
    bool max_depth_set = false;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--tol", o.tol, "convergence tolerance")->check(CLI::PositiveNumber);
    cmd->add_option("--max-depth", o.max_depth, "dyadic refinement depth cap")
        ->check(CLI::Range(1, 24))
        ->each([&o](const std::string&) { o.max_depth_set = true; });
    cmd->add_option("--quadrature", o.quadrature, "Gauss-Legendre nodes per cell")
        ->check(CLI::Range(1, 256));
    cmd->add_option("--format", o.format, "output format")
        ->check(CLI::IsMember({"json", "csv"}));
}

int resolve_depth(const CommonOpts& o) {
    return o.max_depth_set ? o.max_depth : env_max_depth();
}

void emit(const std::string& s) {
    std::cout << s;
    if (s.empty() || s.back() != '\n') std::cout << '\n';
}

int cmd_run(const std::string& path, const CommonOpts& o) {
    jdist::Program prog = jdist::parse_program(read_input(path));
    jdist::EvalOptions opts;
    opts.tol = o.tol;
    opts.max_depth = resolve_depth(o);
    opts.quadrature = o.quadrature;
    jdist::EvalResult res = jdist::evaluate(prog, opts);
    emit(o.format == "csv" ? jdist::io::report_csv(res.report)
                           : jdist::io::eval_result_json(res));
    return 0;
}

int cmd_mc(const std::string& path, std::uint64_t samples, std::uint64_t seed) {
    jdist::Program prog = jdist::parse_program(read_input(path));
    jdist::McConfig cfg;
    cfg.samples = samples;
    cfg.seed = seed;
    jdist::McResult res = jdist::mc_evaluate(prog, cfg);
    emit(jdist::io::mc_result_json(res));
    return 0;
}

int cmd_compose(const std::string& left, const std::string& right,
                const CommonOpts& o) {
    std::string lraw = read_input(left), rraw = read_input(right);
    if (jdist::io::looks_discrete(lraw) != jdist::io::looks_discrete(rraw))
        throw UsageError("compose: cannot mix discrete and continuous joints");
    if (jdist::io::looks_discrete(lraw)) {
        jdist::DiscreteJoint a = jdist::io::discrete_joint_from_json(lraw);
        jdist::DiscreteJoint b = jdist::io::discrete_joint_from_json(rraw);
        emit(jdist::io::to_json(jdist::compose_joints(a, b)));
        return 0;
    }
    jdist::JointMeasure2D a = jdist::io::joint_from_json(lraw);
    jdist::JointMeasure2D b = jdist::io::joint_from_json(rraw);
    jdist::ComposeResult res = jdist::compose(a, b, o.tol, resolve_depth(o));
    emit(o.format == "csv" ? jdist::io::report_csv(res.report)
                           : jdist::io::compose_result_json(res.joint, res.report));
    return 0;
}

int cmd_dagger(const std::string& path) {
    std::string raw = read_input(path);
    if (jdist::io::looks_discrete(raw)) {
        emit(jdist::io::to_json(jdist::dagger(jdist::io::discrete_joint_from_json(raw))));
        return 0;
    }
    emit(jdist::io::to_json(jdist::dagger(jdist::io::joint_from_json(raw))));
    return 0;
}

int cmd_rn(const std::string& nu_path, const std::string& mu_path,
           const CommonOpts& o) {
    jdist::Measure1D nu = jdist::io::measure_from_json(read_input(nu_path));
    jdist::Measure1D mu = jdist::io::measure_from_json(read_input(mu_path));
    std::vector<double> schedule = jdist::default_eps_schedule();
    jdist::LebesgueDecomposition dec = jdist::lrn_decompose(nu, mu, schedule);
    emit(o.format == "csv" ? jdist::io::decomposition_csv(dec, mu, schedule)
                           : jdist::io::decomposition_json(dec));
    return 0;
}

int cmd_limit(const std::string& nu_path, const std::string& xi_path,
              const std::string& mu_path, const CommonOpts& o) {
    jdist::Measure1D nu = jdist::io::measure_from_json(read_input(nu_path));
    jdist::Measure1D xi = jdist::io::measure_from_json(read_input(xi_path));
    jdist::Measure1D mu = jdist::io::measure_from_json(read_input(mu_path));
    jdist::LimitResult res = jdist::pair_product_limit(nu, xi, mu, o.tol);
    emit(o.format == "csv" ? jdist::io::trace_csv(res.report)
                           : jdist::io::limit_result_json(res));
    return 0;
}

int cmd_disintegrate(const std::string& path) {
    jdist::DiscreteJoint j = jdist::io::discrete_joint_from_json(read_input(path));
    if (j.cols() == 0) throw UsageError("disintegrate: joint has no columns");
    jdist::DiscreteMeasure fill{std::vector<double>(
        j.cols(), 1.0 / static_cast<double>(j.cols()))};
    emit(jdist::io::to_json(jdist::disintegrate(j, fill)));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"jdist: joint-measure composition toolkit"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string prog_path, left, right, nu_path, xi_path, mu_path, joint_path;
    std::uint64_t samples = 1000000, seed = 42;

    CLI::App* run = app.add_subcommand("run", "evaluate a chain program");
    run->add_option("program", prog_path, "program file ('-' for stdin)")->required();
    add_common(run, opts);

    CLI::App* mc = app.add_subcommand("mc", "Monte-Carlo oracle for a chain program");
    mc->add_option("program", prog_path, "program file ('-' for stdin)")->required();
    mc->add_option("--samples", samples, "sample count")
        ->check(CLI::PositiveNumber);
    mc->add_option("--seed", seed, "generator seed");

    CLI::App* compose = app.add_subcommand("compose", "compose two joints");
    compose->add_option("left", left, "left joint JSON")->required();
    compose->add_option("right", right, "right joint JSON")->required();
    add_common(compose, opts);

    CLI::App* dag = app.add_subcommand("dagger", "transpose a joint");
    dag->add_option("joint", joint_path, "joint JSON ('-' for stdin)")->required();

    CLI::App* rn = app.add_subcommand(
        "rn", "Lebesgue decomposition and Radon-Nikodym approximants");
    rn->add_option("nu", nu_path, "numerator measure JSON")->required();
    rn->add_option("mu", mu_path, "reference measure JSON")->required();
    add_common(rn, opts);

    CLI::App* limit = app.add_subcommand("limit", "pairing limit of two densities");
    limit->add_option("nu", nu_path, "first measure JSON")->required();
    limit->add_option("xi", xi_path, "second measure JSON")->required();
    limit->add_option("mu", mu_path, "reference measure JSON")->required();
    add_common(limit, opts);

    CLI::App* dis = app.add_subcommand("disintegrate", "discrete joint to kernel");
    dis->add_option("joint", joint_path, "joint JSON ('-' for stdin)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }

    try {
        if (run->parsed()) return cmd_run(prog_path, opts);
        if (mc->parsed()) return cmd_mc(prog_path, samples, seed);
        if (compose->parsed()) return cmd_compose(left, right, opts);
        if (dag->parsed()) return cmd_dagger(joint_path);
        if (rn->parsed()) return cmd_rn(nu_path, mu_path, opts);
        if (limit->parsed()) return cmd_limit(nu_path, xi_path, mu_path, opts);
        if (dis->parsed()) return cmd_disintegrate(joint_path);
        std::cerr << "no subcommand\n";
        return 1;
    } catch (const jdist::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 3;
    } catch (const jdist::io::JsonError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 3;
    } catch (const jdist::ZeroMeasureObservationError& e) {
        std::cerr << "conditioning failed: " << e.what() << "\n";
        return 2;
    } catch (const jdist::ConvergenceError& e) {
        std::cerr << "did not converge: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const jdist::MarginalMismatchError& e) {
        std::cerr << "marginal mismatch: " << e.what()
                  << " (max defect " << e.max_defect << ")\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
