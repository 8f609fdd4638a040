#include "floquet/app.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "floquet/kernels.hpp"

namespace floquet::app {

namespace {

// ---------------------------------------------------------------------------
// config parsing

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError(where + " must be an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, _] : obj.items()) {
        if (!ok.count(key)) throw ConfigError("unknown key \"" + key + "\" in " + where);
    }
}

double number_field(const json& obj, const std::string& key, const std::string& where) {
    const auto it = obj.find(key);
    if (it == obj.end()) throw ConfigError(where + "." + key + " is required");
    if (!it->is_number()) throw ConfigError(where + "." + key + " must be a number");
    const double v = it->get<double>();
    if (!std::isfinite(v)) throw ConfigError(where + "." + key + " must be finite");
    return v;
}

double optional_number(const json& obj, const std::string& key, const std::string& where, double fallback) {
    return obj.contains(key) ? number_field(obj, key, where) : fallback;
}

std::size_t count_field(const json& obj, const std::string& key, const std::string& where, std::size_t fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 2) throw ConfigError(where + "." + key + " must be an integer >= 2");
    return static_cast<std::size_t>(v.get<long long>());
}

std::string string_field(const json& obj, const std::string& key, const std::string& where) {
    const auto it = obj.find(key);
    if (it == obj.end()) throw ConfigError(where + "." + key + " is required");
    if (!it->is_string()) throw ConfigError(where + "." + key + " must be a string");
    return it->get<std::string>();
}

// a number, or a constant expression such as "2*pi"
double period_value(const json& v) {
    if (v.is_number()) return v.get<double>();
    if (!v.is_string()) throw ConfigError("period must be a number or a constant expression");
    try {
        const Expr e = parse(v.get<std::string>());
        const double at0 = eval(e, 0.0);
        if (eval(e, 1.0) != at0) throw ConfigError("period expression must not depend on t");
        return at0;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& ex) {
        throw ConfigError(std::string("period: ") + ex.what());
    }
}

Kind kind_from(const std::string& s) {
    if (s == "planar") return Kind::planar;
    if (s == "riccati") return Kind::riccati;
    if (s == "cholera") return Kind::cholera;
    if (s == "example41") return Kind::example41;
    throw ConfigError("kind must be one of planar, riccati, cholera, example41 (got \"" + s + "\")");
}

Method method_from(const std::string& s) {
    if (s == "monodromy") return Method::monodromy;
    if (s == "thm_T1") return Method::thm_T1;
    if (s == "thm_T3") return Method::thm_T3;
    if (s == "all") return Method::all;
    throw ConfigError("method must be one of monodromy, thm_T1, thm_T3, all (got \"" + s + "\")");
}

std::vector<std::string> coefficient_names(Kind k) {
    switch (k) {
        case Kind::planar:
        case Kind::example41: return {"p11", "p12", "p21", "p22"};
        case Kind::riccati: return {"a", "b", "c"};
        case Kind::cholera: return {"d", "e", "m"};
    }
    return {};
}

PeriodicFn coefficient(const AnalysisConfig& cfg, const std::string& name) {
    return PeriodicFn::parse(cfg.coefficients.at(name), cfg.period);
}

// Builds every coefficient once so expression and periodicity errors surface
// as configuration errors rather than mid-analysis.
void validate_coefficients(const AnalysisConfig& cfg) {
    for (const auto& name : coefficient_names(cfg.kind)) {
        try {
            coefficient(cfg, name);
        } catch (const ParseError& e) {  // includes unknown identifiers
            throw ConfigError("coefficient " + name + ": " + e.what());
        } catch (const PeriodicityError& e) {
            throw ConfigError("coefficient " + name + ": " + e.what());
        } catch (const EvalError& e) {
            throw ConfigError("coefficient " + name + ": " + e.what());
        }
    }
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// report pieces

json num(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

json absent(const std::string& reason) { return json{{"value", nullptr}, {"reason", reason}}; }

json complex_json(Complex z) { return json{{"re", num(z.real())}, {"im", num(z.imag())}, {"modulus", num(std::abs(z))}}; }

json pair_json(const MultiplierPair& p) {
    json j{{"method", to_string(p.method)},
           {"first", complex_json(p.first)},
           {"second", complex_json(p.second)},
           {"product_defect", num(p.product_defect)}};
    j["sigma_multiplier"] =
        p.sigma_multiplier ? complex_json(*p.sigma_multiplier) : absent("only the thm_T1 route carries sigma");
    return j;
}

json ledger_json(const ConditionLedger& l) {
    json conds = json::array();
    for (const auto& c : l.conditions) {
        conds.push_back(json{{"name", c.name},
                             {"relation", c.relation},
                             {"lhs", num(c.lhs)},
                             {"rhs", num(c.rhs)},
                             {"pass", c.pass},
                             {"borderline", c.borderline},
                             {"slack", num(c.slack())},
                             {"note", c.note}});
    }
    json values = json::object();
    for (const auto& [k, v] : l.values) values[k] = num(v);
    return json{{"all_pass", l.all_pass()}, {"conditions", conds}, {"values", values}};
}

json certificate_json(const PeriodicSolutionCertificate& c) {
    json j{{"x0", num(c.x0)},
           {"source", to_string(c.source)},
           {"residual", num(c.residual)},
           {"periodicity_defect", num(c.periodicity_defect)},
           {"orthogonality_defect", num(c.orthogonality_defect())},
           {"a_moment", num(c.a_moment)},
           {"c_orthogonality_defect", num(c.c_orthogonality_defect())},
           {"c_moment", num(c.c_moment)},
           {"sup_norm", num(c.sup_norm)},
           {"stability_exponent", num(c.stability_exponent)},
           {"residual_tolerance", num(c.residual_tolerance)},
           {"periodicity_tolerance", num(c.periodicity_tolerance)},
           {"verified", c.verified()},
           {"warnings", c.warnings}};
    j["membership_defect"] =
        c.membership_defect ? num(*c.membership_defect) : absent("Green kernel undefined (int b = 0), no psi or N");
    return j;
}

json verdict_json(const StabilityVerdict& v) {
    json moduli = json::array();
    for (double m : v.moduli) moduli.push_back(num(m));
    return json{{"verdict", to_string(v.verdict)}, {"rationale", v.rationale}, {"moduli", moduli}};
}

double relative_delta(const MultiplierPair& p, const MultiplierPair& ref) {
    return std::max(std::abs(p.first - ref.first) / std::abs(ref.first),
                    std::abs(p.second - ref.second) / std::abs(ref.second));
}

json constants_json(const SchauderConstants& k) {
    return json{{"M", num(k.M)},
                {"N", num(k.N)},
                {"M_upper", num(k.M_upper)},
                {"N_upper", num(k.N_upper)},
                {"psi_residual", num(k.psi_residual)},
                {"b_integral", num(k.b_integral)}};
}

json picard_error_json(const PicardError& e) {
    const char* kind = e.kind() == PicardError::Kind::escaped         ? "escaped"
                       : e.kind() == PicardError::Kind::not_converged ? "not_converged"
                                                                      : "residual";
    return json{{"value", nullptr},
                {"reason", e.what()},
                {"kind", kind},
                {"iterations", e.iterations()},
                {"last_change", num(e.last_change())}};
}

json shooting_json(const ShootingResult& r, double lo, double hi) {
    json sols = json::array();
    for (const auto& c : r.solutions) sols.push_back(certificate_json(c));
    std::size_t escaped_forward = 0;
    std::size_t escaped_backward = 0;
    for (const auto& p : r.scan) {
        if (!p.forward_gap) ++escaped_forward;
        if (!p.backward_gap) ++escaped_backward;
    }
    return json{{"interval", {num(lo), num(hi)}},
                {"grid", r.scan.size()},
                {"escaped_forward", escaped_forward},
                {"escaped_backward", escaped_backward},
                {"solutions", sols},
                {"note", r.note}};
}

std::pair<double, double> shooting_interval(const AnalysisConfig& cfg, const RiccatiProblem& prob) {
    auto [lo, hi] = default_shooting_interval(prob);
    if (cfg.shooting.lo) lo = *cfg.shooting.lo;
    if (cfg.shooting.hi) hi = *cfg.shooting.hi;
    return {lo, hi};
}

ShootingResult run_shooting(const AnalysisConfig& cfg, const RiccatiProblem& prob, double lo, double hi) {
    ShootingOptions so;
    so.lo = lo;
    so.hi = hi;
    so.grid = cfg.shooting.grid;
    return shooting_solve(prob, so);
}

// ---------------------------------------------------------------------------
// analyses

RunOutcome run_planar(const AnalysisConfig& cfg, const RunOptions& opts) {
    const PlanarPeriodicSystem sys(coefficient(cfg, "p11"), coefficient(cfg, "p12"), coefficient(cfg, "p21"),
                                   coefficient(cfg, "p22"));
    RunOutcome out;
    json& rep = out.report;
    json multipliers = json::object();
    json cross = json::object();
    json ledgers = json::object();

    const MultiplierPair mono = monodromy_multipliers(sys, cfg.tol);
    multipliers["monodromy"] = pair_json(mono);
    rep["liouville_product_defect"] = num(mono.product_defect);
    const StabilityVerdict verdict = classify_stability(mono, cfg.tau);
    rep["stability"] = verdict_json(verdict);
    rep["verdict"] = to_string(verdict.verdict);

    const bool want_t1 = cfg.method == Method::thm_T1 || cfg.method == Method::all;
    const bool want_t3 = cfg.method == Method::thm_T3 || cfg.method == Method::all;

    if (want_t1) {
        const ConditionLedger ledger = check_thm_T1(sys);
        ledgers["thm_T1"] = ledger_json(ledger);
        const RiccatiProblem prob = riccati_from_planar(sys);
        json section = json::object();
        std::vector<PeriodicSolutionCertificate> certs;

        if (ledger.at("i_b_integral_nonzero").pass) {
            try {
                PicardResult pr = picard_solve(prob);
                section["picard"] = json{{"iterations", pr.iterations},
                                         {"last_change", num(pr.last_change)},
                                         {"schauder_condition_holds", pr.schauder_condition_holds},
                                         {"constants", constants_json(pr.constants)},
                                         {"certificate", certificate_json(pr.certificate)}};
                certs.push_back(pr.certificate);
            } catch (const PicardError& e) {
                section["picard"] = picard_error_json(e);
            }
        } else {
            section["picard"] = absent("condition (i) fails: the Green kernel is undefined");
        }

        if (certs.empty()) {
            const auto [lo, hi] = shooting_interval(cfg, prob);
            const ShootingResult sr = run_shooting(cfg, prob, lo, hi);
            section["shooting"] = shooting_json(sr, lo, hi);
            for (const auto& c : sr.solutions) {
                if (c.verified()) certs.push_back(c);
            }
        } else {
            section["shooting"] = absent("not needed: Picard iteration produced a certified solution");
        }

        json pairs = json::array();
        json deltas = json::array();
        for (const auto& c : certs) {
            const MultiplierPair p = multipliers_thm_T1(sys, c);
            json pj = pair_json(p);
            pj["x0"] = num(c.x0);
            pairs.push_back(pj);
            deltas.push_back(num(relative_delta(p, mono)));
        }
        section["pairs"] = pairs;
        if (certs.size() > 1) {
            section["ambiguity"] = "several periodic Riccati solutions; multipliers reported for each";
        } else {
            section["ambiguity"] = absent("at most one certified solution");
        }
        if (certs.empty()) {
            multipliers["thm_T1"] = absent("no certified periodic Riccati solution");
            cross["thm_T1_vs_monodromy"] = absent("no thm_T1 multipliers");
        } else {
            multipliers["thm_T1"] = pairs.front();
            cross["thm_T1_vs_monodromy"] = deltas.size() == 1 ? deltas.front() : deltas;
        }
        rep["thm_T1"] = section;

        if (opts.csv_path && !certs.empty()) {
            const NormalSolution ns = normal_solution_from_sigma(sys, certs.front().sigma, 0.0, 257, 1);
            out.columns = {"t", "u", "v"};
            for (std::size_t i = 0; i < ns.times.size(); ++i) out.rows.push_back({ns.times[i], ns.u[i], ns.v[i]});
        }
    } else {
        multipliers["thm_T1"] = absent("method selection excludes thm_T1");
    }

    const MultiplierPair explicit_pair = explicit_formula_multipliers(sys);
    if (want_t3) {
        const ConditionLedger ledger = check_thm_T3(sys);
        ledgers["thm_T3"] = ledger_json(ledger);
        if (ledger.all_pass()) {
            const MultiplierPair p = multipliers_thm_T3(sys);
            multipliers["thm_T3"] = pair_json(p);
            cross["thm_T3_vs_monodromy"] = num(relative_delta(p, mono));
        } else {
            multipliers["thm_T3"] = absent("explicit-multiplier hypotheses fail; see ledgers.thm_T3");
            cross["thm_T3_vs_monodromy"] = absent("thm_T3 hypotheses fail");
        }
        multipliers["explicit_formula_unchecked"] = pair_json(explicit_pair);
        cross["explicit_formula_vs_monodromy"] = num(relative_delta(explicit_pair, mono));
    } else {
        multipliers["thm_T3"] = absent("method selection excludes thm_T3");
    }

    rep["multipliers"] = multipliers;
    rep["cross_validation"] = cross;
    rep["ledgers"] = ledgers;

    if (opts.csv_path && out.rows.empty()) {
        // no normal solution available: tabulate the fundamental matrix instead
        const double T = sys.period();
        IvpSpec spec;
        spec.dimension = 4;
        spec.t1 = T;
        spec.tol = cfg.tol;
        spec.blowup_norm = std::numeric_limits<double>::max();
        spec.initial = {1.0, 0.0, 0.0, 1.0};
        const std::size_t points = 257;
        for (std::size_t i = 1; i + 1 < points; ++i) spec.stops.push_back(T * static_cast<double>(i) / (points - 1));
        spec.rhs = [&sys](double t, std::span<const double> x, std::span<double> dx) {
            const Eigen::Matrix2d p = sys.at(t);
            dx[0] = p(0, 0) * x[0] + p(0, 1) * x[2];
            dx[1] = p(0, 0) * x[1] + p(0, 1) * x[3];
            dx[2] = p(1, 0) * x[0] + p(1, 1) * x[2];
            dx[3] = p(1, 0) * x[1] + p(1, 1) * x[3];
        };
        const Trajectory traj = integrate(spec);
        out.columns = {"t", "phi11", "phi12", "phi21", "phi22"};
        for (std::size_t i = 0; i < points; ++i) {
            const double t = i + 1 == points ? T : T * static_cast<double>(i) / (points - 1);
            const State& x = i == 0 ? traj.states().front() : traj.states()[*traj.index_of(t)];
            out.rows.push_back({t, x[0], x[1], x[2], x[3]});
        }
    }
    return out;
}

RunOutcome run_riccati(const AnalysisConfig& cfg, const RunOptions& opts) {
    const RiccatiProblem prob(coefficient(cfg, "a"), coefficient(cfg, "b"), coefficient(cfg, "c"));
    RunOutcome out;
    json& rep = out.report;
    rep["ledgers"] = json{{"thm_A", ledger_json(check_thm_A(prob))}};
    rep["verdict"] = absent("a scalar Riccati analysis has no Floquet stability verdict");

    try {
        rep["schauder_constants"] = constants_json(schauder_constants(prob));
    } catch (const KernelUndefinedError& e) {
        rep["schauder_constants"] = absent(e.what());
    }
    try {
        const PicardResult pr = picard_solve(prob);
        rep["picard"] = json{{"iterations", pr.iterations},
                             {"last_change", num(pr.last_change)},
                             {"schauder_condition_holds", pr.schauder_condition_holds},
                             {"certificate", certificate_json(pr.certificate)}};
    } catch (const PicardError& e) {
        rep["picard"] = picard_error_json(e);
    } catch (const KernelUndefinedError& e) {
        rep["picard"] = absent(e.what());
    }

    const auto [lo, hi] = shooting_interval(cfg, prob);
    const ShootingResult sr = run_shooting(cfg, prob, lo, hi);
    rep["shooting"] = shooting_json(sr, lo, hi);

    if (opts.csv_path && !sr.solutions.empty()) {
        const auto& sigma = sr.solutions.front().sigma;
        out.columns = {"t", "sigma"};
        const std::size_t points = 257;
        for (std::size_t i = 0; i < points; ++i) {
            const double t = prob.period() * static_cast<double>(i) / (points - 1);
            out.rows.push_back({t, sigma(t)});
        }
    }
    return out;
}

CholeraParams cholera_params(const AnalysisConfig& cfg) {
    return CholeraParams(cfg.cholera, coefficient(cfg, "d"), coefficient(cfg, "e"), coefficient(cfg, "m"));
}

RunOutcome run_cholera(const AnalysisConfig& cfg, const RunOptions& opts) {
    const CholeraParams p = cholera_params(cfg);
    RunOutcome out;
    json& rep = out.report;

    DfeOptions dopts;
    dopts.tau = cfg.tau;
    const DfeStabilityReport d = dfe_stability(p, dopts);
    rep["ledgers"] = json{{"seasonal", ledger_json(d.ledger)}};

    json multipliers{{"monodromy", pair_json(d.monodromy)},
                     {"demography", complex_json(d.demography_multiplier)},
                     {"phage", complex_json(d.phage_multiplier)}};
    multipliers["thm_T1"] = d.thm_T1 ? pair_json(*d.thm_T1) : absent(d.thm_T1_reason);
    rep["multipliers"] = multipliers;
    json all = json::array();
    for (const auto& z : d.multipliers) all.push_back(complex_json(z));
    rep["all_multipliers"] = all;
    rep["cross_validation"] = json{{"thm_T1_vs_monodromy", d.thm_T1 ? num(relative_delta(*d.thm_T1, d.monodromy))
                                                                     : absent(d.thm_T1_reason)}};
    rep["certificate"] = d.certificate ? certificate_json(*d.certificate) : absent(d.thm_T1_reason);
    json checks = json::array();
    for (const auto& c : d.certificate_checks) {
        ConditionLedger one;
        one.conditions.push_back(c);
        checks.push_back(ledger_json(one)["conditions"][0]);
    }
    rep["certificate_checks"] = checks;
    rep["stability"] = json{{"linear", verdict_json(d.linear)}, {"nonlinear", verdict_json(d.verdict)}};
    rep["verdict"] = to_string(d.verdict.verdict);

    if (!opts.simulate) {
        rep["simulation"] = absent("not requested (use --simulate)");
        return out;
    }
    const auto& k = p.constants();
    const double m1 = d.ledger.value("m1");
    const std::array<double, 4> initial =
        cfg.simulation.initial.value_or(std::array<double, 4>{0.99 * k.H, 0.01 * k.H, 0.01, 0.001});
    const double slowest = std::min({k.n, k.gamma, k.nu, m1});
    if (!cfg.simulation.horizon && !(slowest > 0.0)) {
        throw ConfigError("simulation.horizon is required when n, gamma, nu or min m is 0");
    }
    const double horizon = cfg.simulation.horizon.value_or(60.0 / slowest);
    SimulationOptions so;
    so.output_points = cfg.simulation.output_points;
    const Simulation sim = simulate(p, initial, horizon, so);

    const CholeraState& last = sim.states.back();
    const double distance = std::max({std::fabs(last[0] - k.H), std::fabs(last[1]), std::fabs(last[2]), std::fabs(last[3])});
    double max_I = 0.0;
    for (const auto& s : sim.states) max_I = std::max(max_I, s[1]);
    rep["simulation"] = json{{"initial", {num(initial[0]), num(initial[1]), num(initial[2]), num(initial[3])}},
                             {"horizon", num(horizon)},
                             {"output_points", sim.times.size()},
                             {"final_state", {num(last[0]), num(last[1]), num(last[2]), num(last[3])}},
                             {"distance_to_dfe", num(distance)},
                             {"max_I", num(max_I)},
                             {"I_growth_ratio", initial[1] > 0.0 ? num(max_I / initial[1]) : absent("I(0) = 0")},
                             {"min_component", num(sim.min_component)},
                             {"max_population_excess", num(sim.max_population_excess)},
                             {"invariant_region_holds", sim.invariant_region_holds()},
                             {"warnings", sim.warnings}};
    out.columns = {"t", "S", "I", "B", "P"};
    for (std::size_t i = 0; i < sim.times.size(); ++i) {
        const auto& s = sim.states[i];
        out.rows.push_back({sim.times[i], s[0], s[1], s[2], s[3]});
    }
    return out;
}

void dump_value(const json& j, std::string& out, int indent) {
    const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
    const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
    switch (j.type()) {
        case json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            bool first = true;
            for (const auto& [key, value] : j.items()) {  // std::map: sorted keys
                if (!first) out += ",\n";
                first = false;
                out += inner + json(key).dump() + ": ";
                dump_value(value, out, indent + 1);
            }
            out += "\n" + pad + "}";
            return;
        }
        case json::value_t::array: {
            if (j.empty()) {
                out += "[]";
                return;
            }
            out += "[\n";
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i > 0) out += ",\n";
                out += inner;
                dump_value(j[i], out, indent + 1);
            }
            out += "\n" + pad + "]";
            return;
        }
        case json::value_t::number_float: {
            const double v = j.get<double>();
            out += std::isfinite(v) ? fmt(v) : num(v).dump();
            return;
        }
        default: out += j.dump(); return;
    }
}

json run_block(bool reproducible, double seconds) {
    json run{{"tool", tool_name}, {"version", tool_version}, {"reproducible", reproducible}};
    if (reproducible) {
        run["wall_clock_seconds"] = absent("excluded by --reproducible");
        run["timestamp"] = absent("excluded by --reproducible");
    } else {
        run["wall_clock_seconds"] = num(seconds);
        const std::time_t now = std::time(nullptr);
        char buf[32];
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        run["timestamp"] = buf;
    }
    return run;
}

}  // namespace

std::string to_string(Kind k) {
    switch (k) {
        case Kind::planar: return "planar";
        case Kind::riccati: return "riccati";
        case Kind::cholera: return "cholera";
        case Kind::example41: return "example41";
    }
    return "planar";
}

std::string to_string(Method m) {
    switch (m) {
        case Method::monodromy: return "monodromy";
        case Method::thm_T1: return "thm_T1";
        case Method::thm_T3: return "thm_T3";
        case Method::all: return "all";
    }
    return "all";
}

AnalysisConfig emit_example41(double A, double B, double alpha, double beta, const std::string& m) {
    if (!(beta > 1.0)) throw ConfigError("example41: beta > 1 is required so that beta + cos(t) never vanishes");
    if (!(A - B > 0.0)) throw ConfigError("example41: A - B > 0 is required");
    AnalysisConfig cfg;
    cfg.kind = Kind::example41;
    cfg.period = 2.0 * std::numbers::pi;
    cfg.example41 = Example41Params{A, B, alpha, beta, m};
    cfg.coefficients = {{"p11", "(" + m + ")-(" + fmt(A) + ")"},
                        {"p12", "sin(t)"},
                        {"p21", "(" + fmt(alpha) + "+1)*sin(t)/(" + fmt(beta) + "+cos(t))"},
                        {"p22", "(" + m + ")-(" + fmt(B) + ")"}};
    cfg.source = json{{"kind", "example41"},
                      {"example41", {{"A", A}, {"B", B}, {"alpha", alpha}, {"beta", beta}, {"m", m}}},
                      {"method", "all"}};
    validate_coefficients(cfg);
    return cfg;
}

AnalysisConfig parse_config(const json& j) {
    check_keys(j, "config",
               {"kind", "description", "period", "coefficients", "method", "tolerances", "example41", "constants",
                "shooting", "simulation", "output"});
    AnalysisConfig cfg;
    cfg.kind = kind_from(string_field(j, "kind", "config"));

    if (cfg.kind == Kind::example41) {
        const json ex = j.value("example41", json::object());
        check_keys(ex, "example41", {"A", "B", "alpha", "beta", "m"});
        Example41Params d;
        const std::string m = ex.contains("m") ? string_field(ex, "m", "example41") : d.m;
        cfg = emit_example41(optional_number(ex, "A", "example41", d.A), optional_number(ex, "B", "example41", d.B),
                             optional_number(ex, "alpha", "example41", d.alpha),
                             optional_number(ex, "beta", "example41", d.beta), m);
        if (j.contains("period") && std::fabs(period_value(j.at("period")) - cfg.period) > 1e-12) {
            throw ConfigError("example41 has period 2*pi; a different period was given");
        }
        if (j.contains("coefficients")) throw ConfigError("example41 builds its own coefficients; remove \"coefficients\"");
    } else {
        if (!j.contains("period")) throw ConfigError("config.period is required");
        cfg.period = period_value(j.at("period"));
        if (!(cfg.period > 0.0) || !std::isfinite(cfg.period)) throw ConfigError("period must be positive and finite");
        if (!j.contains("coefficients")) throw ConfigError("config.coefficients is required");
        const json& co = j.at("coefficients");
        const auto names = coefficient_names(cfg.kind);
        if (!co.is_object()) throw ConfigError("coefficients must be an object");
        for (const auto& [key, _] : co.items()) {
            if (std::find(names.begin(), names.end(), key) == names.end()) {
                throw ConfigError("unknown coefficient \"" + key + "\" for kind " + to_string(cfg.kind));
            }
        }
        for (const auto& name : names) cfg.coefficients[name] = string_field(co, name, "coefficients");
        validate_coefficients(cfg);
    }

    if (j.contains("method")) cfg.method = method_from(string_field(j, "method", "config"));

    if (j.contains("tolerances")) {
        const json& t = j.at("tolerances");
        check_keys(t, "tolerances", {"rel", "abs", "tau"});
        cfg.tol.rel = optional_number(t, "rel", "tolerances", cfg.tol.rel);
        cfg.tol.abs = optional_number(t, "abs", "tolerances", cfg.tol.abs);
        cfg.tau = optional_number(t, "tau", "tolerances", cfg.tau);
        if (!(cfg.tol.rel > 0.0) || !(cfg.tol.abs > 0.0) || !(cfg.tau > 0.0)) {
            throw ConfigError("tolerances must be positive");
        }
    }

    if (j.contains("constants")) {
        if (cfg.kind != Kind::cholera) throw ConfigError("constants only apply to kind cholera");
        const json& c = j.at("constants");
        check_keys(c, "constants", {"H", "n", "gamma", "K", "K_tilde", "delta", "kappa", "xi", "nu"});
        CholeraConstants& k = cfg.cholera;
        for (auto [name, field] : {std::pair{"H", &k.H}, {"n", &k.n}, {"gamma", &k.gamma}, {"K", &k.K},
                                   {"K_tilde", &k.K_tilde}, {"delta", &k.delta}, {"kappa", &k.kappa},
                                   {"xi", &k.xi}, {"nu", &k.nu}}) {
            *field = number_field(c, name, "constants");
        }
    } else if (cfg.kind == Kind::cholera) {
        throw ConfigError("config.constants is required for kind cholera");
    }
    if (cfg.kind == Kind::cholera) {
        try {
            cholera_params(cfg);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }

    if (j.contains("shooting")) {
        const json& s = j.at("shooting");
        check_keys(s, "shooting", {"lo", "hi", "grid"});
        if (s.contains("lo")) cfg.shooting.lo = number_field(s, "lo", "shooting");
        if (s.contains("hi")) cfg.shooting.hi = number_field(s, "hi", "shooting");
        cfg.shooting.grid = count_field(s, "grid", "shooting", cfg.shooting.grid);
        if (cfg.shooting.lo.has_value() != cfg.shooting.hi.has_value()) {
            throw ConfigError("shooting.lo and shooting.hi must be given together");
        }
        if (cfg.shooting.lo && !(*cfg.shooting.lo < *cfg.shooting.hi)) throw ConfigError("shooting.lo must be < shooting.hi");
    }

    if (j.contains("simulation")) {
        if (cfg.kind != Kind::cholera) throw ConfigError("simulation only applies to kind cholera");
        const json& s = j.at("simulation");
        check_keys(s, "simulation", {"initial", "horizon", "output_points"});
        if (s.contains("initial")) {
            const json& init = s.at("initial");
            if (!init.is_array() || init.size() != 4) throw ConfigError("simulation.initial must be [S, I, B, P]");
            std::array<double, 4> x{};
            for (std::size_t i = 0; i < 4; ++i) {
                if (!init[i].is_number()) throw ConfigError("simulation.initial entries must be numbers");
                x[i] = init[i].get<double>();
                if (!(x[i] >= 0.0)) throw ConfigError("simulation.initial must be nonnegative");
            }
            if (x[0] > cfg.cholera.H) throw ConfigError("simulation.initial S must not exceed H");
            cfg.simulation.initial = x;
        }
        if (s.contains("horizon")) {
            cfg.simulation.horizon = number_field(s, "horizon", "simulation");
            if (!(*cfg.simulation.horizon > 0.0)) throw ConfigError("simulation.horizon must be positive");
        }
        cfg.simulation.output_points = count_field(s, "output_points", "simulation", cfg.simulation.output_points);
    }

    if (j.contains("output")) {
        const json& o = j.at("output");
        check_keys(o, "output", {"report", "trajectory"});
        if (o.contains("report")) cfg.report_path = string_field(o, "report", "output");
        if (o.contains("trajectory")) cfg.trajectory_path = string_field(o, "trajectory", "output");
    }
    cfg.source = j;
    return cfg;
}

AnalysisConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return parse_config(j);
}

RunOutcome run_analysis(const AnalysisConfig& cfg, const RunOptions& opts) {
    const auto start = std::chrono::steady_clock::now();
    RunOutcome out;
    switch (cfg.kind) {
        case Kind::planar:
        case Kind::example41: out = run_planar(cfg, opts); break;
        case Kind::riccati: out = run_riccati(cfg, opts); break;
        case Kind::cholera: out = run_cholera(cfg, opts); break;
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    json echo = cfg.source;
    echo["resolved"] = json{{"kind", to_string(cfg.kind)},
                            {"period", num(cfg.period)},
                            {"coefficients", cfg.coefficients},
                            {"method", to_string(cfg.method)},
                            {"tolerances", {{"rel", num(cfg.tol.rel)}, {"abs", num(cfg.tol.abs)}, {"tau", num(cfg.tau)}}}};
    out.report["config"] = echo;
    out.report["run"] = run_block(opts.reproducible, seconds);
    return out;
}

std::string serialize(const json& j) {
    std::string out;
    dump_value(j, out, 0);
    out += "\n";
    return out;
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    for (std::size_t i = 0; i < columns.size(); ++i) f << (i ? "," : "") << columns[i];
    f << "\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) f << (i ? "," : "") << fmt(row[i]);
        f << "\n";
    }
}

std::filesystem::path write_gnuplot_script(const std::filesystem::path& csv, const std::vector<std::string>& columns) {
    std::filesystem::path script = csv;
    script.replace_extension(".gp");
    std::ofstream f(script, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + script.string());
    f << "# plot with: gnuplot -p " << script.filename().string() << "\n";
    f << "set datafile separator ','\n";
    f << "set key autotitle columnhead\n";
    f << "set xlabel 't'\n";
    f << "set grid\n";
    f << "plot";
    for (std::size_t i = 1; i < columns.size(); ++i) {
        f << (i > 1 ? ", \\\n    ''" : " '" + csv.filename().string() + "'") << " using 1:" << (i + 1)
          << " with lines";
    }
    f << "\n";
    return script;
}

CommandResult run_config_file(const std::filesystem::path& config, const RunOptions& opts,
                              const std::optional<std::string>& report_override) {
    CommandResult res;
    try {
        const AnalysisConfig cfg = load_config(config);
        RunOptions eff = opts;
        if (!eff.csv_path && cfg.trajectory_path) eff.csv_path = cfg.trajectory_path;
        RunOutcome out = run_analysis(cfg, eff);
        res.report = std::move(out.report);

        if (eff.csv_path) {
            if (out.rows.empty()) {
                res.report["trajectory"] = absent("this analysis produced no trajectory");
            } else {
                write_csv(*eff.csv_path, out.columns, out.rows);
                json t{{"csv", *eff.csv_path}, {"columns", out.columns}, {"rows", out.rows.size()}};
                if (eff.gnuplot_script) t["gnuplot_script"] = write_gnuplot_script(*eff.csv_path, out.columns).string();
                res.report["trajectory"] = t;
            }
        } else {
            res.report["trajectory"] = absent("no CSV path requested");
        }

        const std::optional<std::string> report_path = report_override ? report_override : cfg.report_path;
        if (report_path) {
            std::ofstream f(*report_path, std::ios::binary);
            if (!f) throw std::runtime_error("cannot write " + *report_path);
            f << serialize(res.report);
        }
    } catch (const ConfigError& e) {
        res.exit_code = 2;
        res.error = std::string("config error: ") + e.what();
    } catch (const std::exception& e) {
        res.exit_code = 3;
        res.error = std::string("numeric failure: ") + e.what();
    }
    return res;
}

CommandResult run_sweep(const std::vector<std::filesystem::path>& configs, const RunOptions& opts) {
    const auto start = std::chrono::steady_clock::now();
    RunOptions each = opts;
    each.csv_path.reset();  // per-config trajectories come from each config's output block
    const auto results = kernels::map_indexed<CommandResult>(
        configs.size(), [&](std::size_t i) { return run_config_file(configs[i], each, std::nullopt); },
        kernels::Exec::parallel);

    CommandResult agg;
    json entries = json::array();
    bool any_config = false;
    bool any_numeric = false;
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        json e{{"config", configs[i].string()}, {"exit_code", r.exit_code}};
        e["report"] = r.report.is_null() ? absent(r.error) : r.report;
        e["error"] = r.error.empty() ? absent("run succeeded") : json(r.error);
        entries.push_back(e);
        any_config = any_config || r.exit_code == 2;
        any_numeric = any_numeric || r.exit_code == 3;
        if (!r.error.empty()) agg.error += configs[i].string() + ": " + r.error + "\n";
    }
    agg.exit_code = any_config ? 2 : any_numeric ? 3 : 0;
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    agg.report = json{{"sweep", entries}, {"run", run_block(opts.reproducible, seconds)}};
    return agg;
}

}  // namespace floquet::app
