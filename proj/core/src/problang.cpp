#include "jdist/problang.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <map>
#include <set>

#include "jdist/kernel1d.hpp"
#include "jdist/measure1d.hpp"

namespace jdist {

namespace {

// ---------------------------------------------------------------- lexer ---

enum class Tok { Ident, Number, Assign, LParen, RParen, Comma, Semi, Op, End };

struct Token {
    Tok kind = Tok::End;
    std::string text;
    double num = 0.0;
    Predicate::Op op = Predicate::Op::Gt;
    int line = 1;
    int col = 1;
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::vector<Token> lex(const std::string& src) {
    std::vector<Token> out;
    std::size_t pos = 0;
    int line = 1, col = 1;
    auto step = [&](std::size_t n) {
        for (std::size_t k = 0; k < n; ++k) {
            if (src[pos + k] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        pos += n;
    };
    while (pos < src.size()) {
        char c = src[pos];
        if (c == '#') {
            while (pos < src.size() && src[pos] != '\n') step(1);
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            step(1);
            continue;
        }
        Token t;
        t.line = line;
        t.col = col;
        if (ident_start(c)) {
            std::size_t end = pos;
            while (end < src.size() && ident_char(src[end])) ++end;
            t.kind = Tok::Ident;
            t.text = src.substr(pos, end - pos);
            step(end - pos);
        } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '.' ||
                   ((c == '-' || c == '+') && pos + 1 < src.size() &&
                    (std::isdigit(static_cast<unsigned char>(src[pos + 1])) ||
                     src[pos + 1] == '.'))) {
            const char* begin = src.c_str() + pos;
            char* end = nullptr;
            t.num = std::strtod(begin, &end);
            if (end == begin) throw ParseError(line, col, "malformed number");
            t.kind = Tok::Number;
            step(static_cast<std::size_t>(end - begin));
        } else if (c == ':' && pos + 1 < src.size() && src[pos + 1] == '=') {
            t.kind = Tok::Assign;
            step(2);
        } else if (c == '(') {
            t.kind = Tok::LParen;
            step(1);
        } else if (c == ')') {
            t.kind = Tok::RParen;
            step(1);
        } else if (c == ',') {
            t.kind = Tok::Comma;
            step(1);
        } else if (c == ';') {
            t.kind = Tok::Semi;
            step(1);
        } else if (c == '>' || c == '<') {
            bool eq = pos + 1 < src.size() && src[pos + 1] == '=';
            t.kind = Tok::Op;
            t.op = c == '>' ? (eq ? Predicate::Op::Ge : Predicate::Op::Gt)
                            : (eq ? Predicate::Op::Le : Predicate::Op::Lt);
            step(eq ? 2 : 1);
        } else {
            throw ParseError(line, col, std::string("unexpected character '") + c + "'");
        }
        out.push_back(std::move(t));
    }
    Token end;
    end.kind = Tok::End;
    end.line = line;
    end.col = col;
    out.push_back(end);
    return out;
}

// --------------------------------------------------------------- parser ---

struct Parser {
    std::vector<Token> toks;
    std::size_t i = 0;

    const Token& peek() const { return toks[i]; }
    const Token& advance() { return toks[i++]; }

    [[noreturn]] static void fail(const Token& t, const std::string& msg) {
        throw ParseError(t.line, t.col, msg);
    }

    const Token& expect(Tok kind, const char* what) {
        if (peek().kind != kind) fail(peek(), std::string("expected ") + what);
        return advance();
    }

    static bool is_keyword(const std::string& s) {
        return s == "normal" || s == "observe" || s == "return";
    }

    Predicate parse_predicate(const std::set<std::string>& declared) {
        const Token& v = expect(Tok::Ident, "variable name");
        if (is_keyword(v.text)) fail(v, "'" + v.text + "' is a reserved word");
        if (!declared.count(v.text)) fail(v, "undeclared variable '" + v.text + "'");
        const Token& op = peek();
        if (op.kind != Tok::Op) fail(op, "expected comparison operator");
        advance();
        const Token& n = expect(Tok::Number, "threshold");
        Predicate p;
        p.var = v.text;
        p.op = op.op;
        p.threshold = n.num;
        return p;
    }

    Program parse() {
        Program prog;
        std::set<std::string> declared;
        bool have_return = false;
        while (peek().kind != Tok::End) {
            const Token& head = peek();
            if (head.kind != Tok::Ident) fail(head, "expected a statement");
            if (head.text == "observe") {
                if (prog.observation) fail(head, "at most one observe statement");
                advance();
                expect(Tok::LParen, "'('");
                prog.observation = parse_predicate(declared);
                expect(Tok::RParen, "')'");
                expect(Tok::Semi, "';'");
                continue;
            }
            if (head.text == "return") {
                advance();
                expect(Tok::LParen, "'('");
                prog.query = parse_predicate(declared);
                expect(Tok::RParen, "')'");
                if (peek().kind == Tok::Semi) advance();  // final ';' optional
                have_return = true;
                if (peek().kind != Tok::End)
                    fail(peek(), "unexpected input after return statement");
                break;
            }
            // assignment
            if (is_keyword(head.text)) fail(head, "'" + head.text + "' is a reserved word");
            if (prog.observation)
                fail(head, "assignments must precede the observe statement");
            advance();
            if (declared.count(head.text))
                fail(head, "variable '" + head.text + "' redeclared");
            expect(Tok::Assign, "':='");
            const Token& kw = expect(Tok::Ident, "'normal'");
            if (kw.text != "normal") fail(kw, "only 'normal' distributions are supported");
            expect(Tok::LParen, "'('");
            Assignment a;
            a.var = head.text;
            const Token& mean = peek();
            if (mean.kind == Tok::Number) {
                a.mean = mean.num;
                advance();
            } else if (mean.kind == Tok::Ident) {
                if (is_keyword(mean.text)) fail(mean, "'" + mean.text + "' is a reserved word");
                if (!declared.count(mean.text))
                    fail(mean, "mean refers to undeclared variable '" + mean.text + "'");
                a.mean = mean.text;
                advance();
            } else {
                fail(mean, "expected a number or variable as the mean");
            }
            expect(Tok::Comma, "','");
            const Token& var_tok = expect(Tok::Number, "variance");
            if (!(var_tok.num > 0.0)) fail(var_tok, "variance must be positive");
            a.variance = var_tok.num;
            expect(Tok::RParen, "')'");
            expect(Tok::Semi, "';'");
            declared.insert(a.var);
            prog.assignments.push_back(std::move(a));
        }
        if (!have_return) {
            const Token& t = toks.back();
            throw ParseError(t.line, t.col, "program must end with a return statement");
        }
        return prog;
    }
};

// ----------------------------------------------------------- evaluation ---

constexpr double kSigmaSpan = 8.0;

struct VarInfo {
    int parent = -1;       // index of mean variable, -1 for a literal mean
    double mean = 0.0;     // chain mean (shared along a chain)
    double step_var = 1.0; // variance of this assignment
    double cum_var = 1.0;  // marginal variance
    Interval support;
};

struct Model {
    std::vector<VarInfo> vars;
    std::map<std::string, int> index;
    int quadrature = 16;

    int at(const std::string& name) const { return index.at(name); }

    Measure1D marginal(int v) const {
        const VarInfo& i = vars[v];
        return gaussian_measure(i.support, i.mean, i.cum_var, quadrature);
    }

    KernelFamily1D edge_kernel(int child) const {
        const VarInfo& c = vars[child];
        return gaussian_kernel(vars[c.parent].support, c.support, AffineFn{1.0, 0.0},
                               c.step_var);
    }

    // Path from the root of v's chain down to v, as variable indices.
    std::vector<int> root_path(int v) const {
        std::vector<int> up;
        for (int w = v; w >= 0; w = vars[w].parent) up.push_back(w);
        std::reverse(up.begin(), up.end());
        return up;
    }

    Measure1D marginal_by_pushforward(int v) const {
        std::vector<int> path = root_path(v);
        Measure1D m = marginal(path.front());
        for (std::size_t k = 1; k < path.size(); ++k)
            m = pushforward(m, edge_kernel(path[k]));
        return m;
    }
};

Model build_model(const Program& prog, int quadrature) {
    Model model;
    model.quadrature = quadrature;
    for (const Assignment& a : prog.assignments) {
        VarInfo v;
        v.step_var = a.variance;
        if (const double* lit = std::get_if<double>(&a.mean)) {
            v.mean = *lit;
            v.cum_var = a.variance;
        } else {
            v.parent = model.index.at(std::get<std::string>(a.mean));
            v.mean = model.vars[v.parent].mean;
            v.cum_var = model.vars[v.parent].cum_var + a.variance;
        }
        double half = kSigmaSpan * std::sqrt(v.cum_var);
        v.support = closed_interval(v.mean - half, v.mean + half);
        model.index.emplace(a.var, static_cast<int>(model.vars.size()));
        model.vars.push_back(v);
    }
    return model;
}

IntervalSet pred_set(const Model& model, const Predicate& p) {
    const Interval sup = model.vars[model.at(p.var)].support;
    Interval h;
    switch (p.op) {
        case Predicate::Op::Gt:
            h = Interval{p.threshold, sup.hi, false, true};
            break;
        case Predicate::Op::Ge:
            h = Interval{p.threshold, sup.hi, true, true};
            break;
        case Predicate::Op::Lt:
            h = Interval{sup.lo, p.threshold, true, false};
            break;
        case Predicate::Op::Le:
            h = Interval{sup.lo, p.threshold, true, true};
            break;
    }
    Interval clipped = intersect(h, sup);
    if (clipped.is_empty()) return {};
    return {clipped};
}

// Undirected tree path q .. o, or empty when the chains are independent.
std::vector<int> tree_path(const Model& model, int q, int o) {
    std::vector<int> aq;
    std::map<int, std::size_t> depth;
    for (int w = q;; w = model.vars[w].parent) {
        depth[w] = aq.size();
        aq.push_back(w);
        if (model.vars[w].parent < 0) break;
    }
    std::vector<int> down;
    for (int w = o;; w = model.vars[w].parent) {
        auto hit = depth.find(w);
        if (hit != depth.end()) {
            std::vector<int> path(aq.begin(), aq.begin() + hit->second + 1);
            path.insert(path.end(), down.rbegin(), down.rend());
            return path;
        }
        down.push_back(w);
        if (model.vars[w].parent < 0) break;
    }
    return {};
}

JointMeasure2D step_joint(const Model& model, int a, int b) {
    if (model.vars[b].parent == a)
        return make_kernel_joint(model.marginal(a), model.edge_kernel(b));
    return dagger(make_kernel_joint(model.marginal(b), model.edge_kernel(a)));
}

ConvergenceReport single_level_report(double value) {
    ConvergenceReport r;
    r.levels.push_back(ConvergenceLevel{0, 0.0, 0, value, value, value});
    r.converged = true;
    r.achieved = 0.0;
    return r;
}

void check_denominator(double den, double tol) {
    if (!(den > 10.0 * tol))
        throw ZeroMeasureObservationError(
            "observation has (numerically) zero probability: " + std::to_string(den),
            den);
}

double clamp01(double p) { return std::clamp(p, 0.0, 1.0); }

}  // namespace

Program parse_program(const std::string& source) {
    Parser parser;
    parser.toks = lex(source);
    return parser.parse();
}

EvalResult evaluate(const Program& program, const EvalOptions& opts) {
    Model model = build_model(program, opts.quadrature);
    const int q = model.at(program.query.var);
    IntervalSet qset = pred_set(model, program.query);
    EvalResult res;

    if (!program.observation) {
        Measure1D m = model.marginal_by_pushforward(q);
        double p = clamp01(measure_of(m, qset) / m.total_mass());
        res.probability = p;
        res.report = single_level_report(p);
        return res;
    }

    if (program.observation->var != program.assignments.back().var)
        throw std::invalid_argument(
            "observation must be on the last-assigned variable");
    const int o = model.at(program.observation->var);
    if (q > o)
        throw std::invalid_argument(
            "query variable must be bound no later than the observed variable");
    IntervalSet oset = pred_set(model, *program.observation);
    res.conditioned = true;

    if (q == o) {
        Measure1D m = model.marginal_by_pushforward(q);
        double den = measure_of(m, oset) / m.total_mass();
        check_denominator(den, opts.tol);
        IntervalSet both;
        for (const Interval& a : qset)
            for (const Interval& b : oset) {
                Interval x = intersect(a, b);
                if (!x.is_empty()) both.push_back(x);
            }
        double num = measure_of(m, both) / m.total_mass();
        res.denominator = den;
        res.probability = clamp01(num / den);
        res.report = single_level_report(res.probability);
        return res;
    }

    std::vector<int> path = tree_path(model, q, o);
    if (path.empty()) {
        // independent chains: conditioning drops out, but the observation must
        // still be a positive-probability event
        Measure1D mo = model.marginal_by_pushforward(o);
        double den = measure_of(mo, oset) / mo.total_mass();
        check_denominator(den, opts.tol);
        Measure1D mq = model.marginal_by_pushforward(q);
        res.denominator = den;
        res.probability = clamp01(measure_of(mq, qset) / mq.total_mass());
        res.report = single_level_report(res.probability);
        return res;
    }

    JointMeasure2D zeta = step_joint(model, path[0], path[1]);
    bool composed = false;
    for (std::size_t k = 2; k < path.size(); ++k) {
        ComposeResult cr = compose(zeta, step_joint(model, path[k - 1], path[k]),
                                   opts.tol, opts.max_depth);
        zeta = std::move(cr.joint);
        res.report = std::move(cr.report);
        composed = true;
    }

    // condition on the transposed joint: P(q in Q | o in O) = zeta'(O x Q) / zeta'(O x all)
    JointMeasure2D flipped = dagger(zeta);
    double num = rect_measure(flipped, oset, qset);
    double den = rect_measure(flipped, oset, IntervalSet{flipped.y_support()});
    check_denominator(den, opts.tol);
    res.denominator = den;
    res.probability = clamp01(num / den);
    if (!composed) res.report = single_level_report(res.probability);
    return res;
}

double evaluate_kernel_route(const Program& program, const EvalOptions& opts) {
    Model model = build_model(program, opts.quadrature);
    const int q = model.at(program.query.var);
    IntervalSet qset = pred_set(model, program.query);

    if (!program.observation) {
        Measure1D m = model.marginal_by_pushforward(q);
        return clamp01(measure_of(m, qset) / m.total_mass());
    }

    const int o = model.at(program.observation->var);
    IntervalSet oset = pred_set(model, *program.observation);

    if (q == o) {
        Measure1D m = model.marginal_by_pushforward(q);
        double den = measure_of(m, oset) / m.total_mass();
        check_denominator(den, opts.tol);
        IntervalSet both;
        for (const Interval& a : qset)
            for (const Interval& b : oset) {
                Interval x = intersect(a, b);
                if (!x.is_empty()) both.push_back(x);
            }
        return clamp01(measure_of(m, both) / den / m.total_mass());
    }

    auto descend_path = [&](int top, int bottom) {
        // bottom must be a descendant of top; returns top..bottom
        std::vector<int> rev;
        for (int w = bottom; w != top; w = model.vars[w].parent) rev.push_back(w);
        rev.push_back(top);
        std::reverse(rev.begin(), rev.end());
        return rev;
    };
    auto is_ancestor = [&](int anc, int v) {
        for (int w = v; w >= 0; w = model.vars[w].parent)
            if (w == anc) return true;
        return false;
    };

    if (is_ancestor(o, q)) {
        // numerator: restrict at o, push down to q
        Measure1D mo = model.marginal_by_pushforward(o);
        double den_mass = measure_of(mo, oset);
        check_denominator(den_mass / mo.total_mass(), opts.tol);
        Measure1D restricted =
            pushforward(mo, restrict_kernel(oset, model.vars[o].support));
        std::vector<int> path = descend_path(o, q);
        Measure1D m = restricted;
        for (std::size_t k = 1; k < path.size(); ++k)
            m = pushforward(m, model.edge_kernel(path[k]));
        return clamp01(measure_of(m, qset) / den_mass);
    }
    if (is_ancestor(q, o)) {
        Measure1D mq = model.marginal_by_pushforward(q);
        Measure1D restricted =
            pushforward(mq, restrict_kernel(qset, model.vars[q].support));
        std::vector<int> path = descend_path(q, o);
        Measure1D joint_part = restricted;
        Measure1D full = mq;
        for (std::size_t k = 1; k < path.size(); ++k) {
            const KernelFamily1D kern = model.edge_kernel(path[k]);
            joint_part = pushforward(joint_part, kern);
            full = pushforward(full, kern);
        }
        double den = measure_of(full, oset);
        check_denominator(den / full.total_mass(), opts.tol);
        return clamp01(measure_of(joint_part, oset) / den);
    }
    throw std::invalid_argument(
        "kernel route requires the query and observed variables to be related "
        "by ancestry");
}

}  // namespace jdist
