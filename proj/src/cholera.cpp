#include "floquet/cholera.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace floquet {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

PeriodicFn scaled(const PeriodicFn& f, double factor) {
    return PeriodicFn(f.expr() * constant(factor), f.period());
}

PeriodicFn constant_fn(double v, double T) { return PeriodicFn::constant(v, T); }

Condition condition(std::string name, std::string relation, double lhs, double rhs, std::string note = {}) {
    Condition c;
    c.name = std::move(name);
    c.relation = std::move(relation);
    c.lhs = lhs;
    c.rhs = rhs;
    c.note = std::move(note);
    if (c.relation == "<=") {
        c.pass = lhs <= rhs;
    } else if (c.relation == "<") {
        c.pass = lhs < rhs;
    } else {
        c.pass = lhs > rhs;
    }
    c.borderline = !c.pass && std::isfinite(rhs) && std::fabs(lhs - rhs) <= 1e-6 * std::fabs(rhs);
    return c;
}

Condition failed(std::string name, std::string relation, std::string note) {
    Condition c;
    c.name = std::move(name);
    c.relation = std::move(relation);
    c.note = std::move(note);
    return c;
}

void check_state(const CholeraState& x, double t) {
    for (double v : x) {
        if (v < negative_state_error) {
            std::ostringstream msg;
            msg << "state component " << v << " below " << negative_state_error << " at t=" << t;
            throw NegativeStateError(msg.str());
        }
    }
}

}  // namespace

CholeraParams::CholeraParams(CholeraConstants constants, PeriodicFn d, PeriodicFn e, PeriodicFn m)
    : k_(constants), d_(std::move(d)), e_(std::move(e)), m_(std::move(m)) {
    // H, K and K~ divide; the rates may vanish (n = 0 removes demography)
    const std::pair<const char*, double> scales[] = {{"H", k_.H}, {"K", k_.K}, {"K_tilde", k_.K_tilde}};
    for (const auto& [name, v] : scales) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw std::invalid_argument(std::string("cholera constant ") + name + " must be positive and finite");
        }
    }
    const std::pair<const char*, double> rates[] = {{"n", k_.n},         {"gamma", k_.gamma}, {"delta", k_.delta},
                                                    {"kappa", k_.kappa}, {"xi", k_.xi},       {"nu", k_.nu}};
    for (const auto& [name, v] : rates) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw std::invalid_argument(std::string("cholera rate ") + name + " must be nonnegative and finite");
        }
    }
    if (e_.period() != d_.period() || m_.period() != d_.period()) {
        throw PeriodicityError("d, e and m must share one period");
    }
    const std::pair<const char*, const PeriodicFn*> seasonal[] = {{"d", &d_}, {"e", &e_}, {"m", &m_}};
    for (const auto& [name, f] : seasonal) {
        for (double v : f->grid_values()) {
            if (!(v > 0.0)) throw std::invalid_argument(std::string("seasonal rate ") + name + " must be positive");
        }
    }
}

CholeraState rhs_full(const CholeraParams& p, const CholeraState& x, double t) {
    check_state(x, t);
    const auto& k = p.constants();
    const auto [S, I, B, P] = x;
    const double contact = p.d()(t) * B / (k.K + B) * S;
    const double predation = B / (k.K_tilde + B) * P;
    return {k.n * (k.H - S) - contact, contact - p.r() * I, p.e()(t) * I - p.m()(t) * B - k.delta * predation,
            k.xi * I + k.kappa * predation - k.nu * P};
}

PeriodicMatrix linearization_matrix(const CholeraParams& p) {
    const auto& k = p.constants();
    const double T = p.period();
    const PeriodicFn zero = constant_fn(0.0, T);
    const PeriodicFn dHK = scaled(p.d(), k.H / k.K);
    return PeriodicMatrix(4, {constant_fn(-k.n, T), zero, dHK, zero,
                              zero, constant_fn(-p.r(), T), dHK, zero,
                              zero, p.e(), PeriodicFn(-p.m().expr(), T), zero,
                              zero, constant_fn(k.xi, T), zero, constant_fn(-k.nu, T)});
}

PlanarPeriodicSystem subsystem(const CholeraParams& p) {
    const auto& k = p.constants();
    const double T = p.period();
    return PlanarPeriodicSystem(constant_fn(-p.r(), T), scaled(p.d(), k.H / k.K), p.e(),
                                PeriodicFn(-p.m().expr(), T));
}

ConditionLedger check_seasonal_conditions(const CholeraParams& p) {
    const auto& k = p.constants();
    const double T = p.period();
    const double r = p.r();
    ConditionLedger ledger;

    const double A = max_on_period(p.d());
    const double E = max_on_period(p.e());
    const double m1 = min_on_period(p.m());
    const double mean_m = p.m().mean();
    const double int_e = p.e().period_integral();
    ledger.set("A", A);
    ledger.set("E", E);
    ledger.set("m1", m1);
    ledger.set("mean_m", mean_m);
    ledger.set("r", r);
    ledger.set("int_e", int_e);

    ledger.add(condition("mean_condition", ">", std::fabs(r - mean_m), 1e-9 * std::max(r, std::fabs(mean_m)),
                         "r != (1/T) int m, relative tolerance 1e-9"));

    const PlanarPeriodicSystem sub = subsystem(p);
    const RiccatiProblem prob = riccati_from_planar(sub);
    const double int_b = prob.b.period_integral();
    ledger.set("int_b", int_b);

    std::optional<SchauderConstants> kc;
    if (ledger.at("mean_condition").pass) {
        try {
            kc = schauder_constants(prob);
        } catch (const KernelUndefinedError&) {
        }
    }
    const double threshold = std::min(m1, r);
    ledger.set("min_m1_r", threshold);
    if (!kc) {
        ledger.add(failed("sigma_bound_condition", "<", "M undefined: int b = int m - rT vanishes"));
        ledger.add(failed("schauder_condition", "<=", "M and N undefined: int b = int m - rT vanishes"));
        return ledger;
    }

    // the kernel works for either sign of int b; record which one this is
    ledger.set("b_integral_positive", int_b > 0.0 ? 1.0 : 0.0);
    const std::string regime = int_b > 0.0 ? "int b > 0 (mean m > r)" : "int b < 0 (mean m < r)";

    ledger.set("M", kc->M);
    ledger.set("N", kc->N);
    ledger.set("M_upper", kc->M_upper);
    ledger.set("N_upper", kc->N_upper);
    const double sigma_bound = 2.0 * E * kc->M_upper * A * T * k.H / k.K;
    ledger.set("sigma_bound", 2.0 * kc->M_upper * A * T * k.H / k.K);
    ledger.set("sigma_bound_lhs", sigma_bound);
    ledger.add(condition("sigma_bound_condition", "<", sigma_bound, threshold, "2 E M A T H/K < min(m1, r); " + regime));

    const double bound = kc->N_upper > 0.0 ? 1.0 / (4.0 * kc->M_upper * kc->N_upper) : inf;
    ledger.set("schauder_bound", bound);
    ledger.add(condition("schauder_condition", "<=", int_e, bound, "int e <= 1/(4 M N); " + regime));
    return ledger;
}

DfeStabilityReport dfe_stability(const CholeraParams& p, const DfeOptions& opts) {
    const auto& k = p.constants();
    const double T = p.period();
    DfeStabilityReport rep;
    rep.ledger = check_seasonal_conditions(p);
    const PlanarPeriodicSystem sub = subsystem(p);
    rep.monodromy = monodromy_multipliers(sub, opts.tol);
    rep.demography_multiplier = std::exp(-k.n * T);
    rep.phage_multiplier = std::exp(-k.nu * T);

    const bool path = rep.ledger.at("mean_condition").pass && rep.ledger.at("schauder_condition").pass;
    if (!path) {
        rep.thm_T1_reason = "ledger fails the mean condition or the Schauder condition; monodromy only";
    } else {
        const RiccatiProblem prob = riccati_from_planar(sub);
        try {
            rep.certificate = picard_solve(prob).certificate;
        } catch (const PicardError& e) {
            ShootingOptions so;
            const auto [lo, hi] = default_shooting_interval(prob);
            so.lo = lo;
            so.hi = hi;
            ShootingResult sr = shooting_solve(prob, so);
            const auto best = std::min_element(sr.solutions.begin(), sr.solutions.end(), [](const auto& a, const auto& b) {
                return a.membership_defect.value_or(inf) < b.membership_defect.value_or(inf);
            });
            if (best != sr.solutions.end()) {
                rep.certificate = *best;
                rep.certificate->warnings.push_back(std::string("Picard failed (") + e.what() + "); shooting root used");
            } else {
                rep.thm_T1_reason = std::string("Picard failed (") + e.what() + ") and " + sr.note;
            }
        }
    }

    if (rep.certificate) {
        const auto& cert = *rep.certificate;
        const TrigSeries& sigma = cert.sigma;
        const double bound = rep.ledger.value("sigma_bound");
        rep.certificate_checks.push_back(condition("sigma_sup_bound", "<=", cert.sup_norm, bound, "|sigma| <= 2 M A T H/K"));

        double worst1 = -inf;
        double worst2 = -inf;
        const std::size_t points = 2 * sigma.size();
        for (std::size_t i = 0; i < points; ++i) {
            const double t = T * static_cast<double>(i) / static_cast<double>(points);
            const double es = p.e()(t) * sigma(t);
            worst1 = std::max(worst1, -p.r() - es);
            worst2 = std::max(worst2, -p.m()(t) + es);
        }
        rep.certificate_checks.push_back(condition("sign_lambda1", "<", worst1, 0.0, "max over grid of -r - e sigma"));
        rep.certificate_checks.push_back(condition("sign_lambda2", "<", worst2, 0.0, "max over grid of -m + e sigma"));

        if (cert.verified()) {
            rep.thm_T1 = multipliers_thm_T1(sub, cert);
        } else {
            rep.thm_T1_reason = "periodic Riccati solution failed verification";
        }
    }

    rep.multipliers = {rep.demography_multiplier, rep.phage_multiplier, rep.monodromy.first, rep.monodromy.second};
    rep.linear = classify_stability(rep.multipliers, opts.tau);
    rep.verdict = classify_nonlinear_dfe(rep.linear);
    return rep;
}

Simulation simulate(const CholeraParams& p, const CholeraState& initial, double horizon, const SimulationOptions& opts) {
    const double H = p.constants().H;
    for (double v : initial) {
        if (!(v >= 0.0)) throw std::invalid_argument("initial state must be nonnegative");
    }
    if (initial[0] > H) throw std::invalid_argument("initial S must not exceed H");
    if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
    if (opts.output_points < 2) throw std::invalid_argument("need at least two output points");

    Simulation sim;
    sim.times.resize(opts.output_points);
    for (std::size_t i = 0; i < opts.output_points; ++i) {
        sim.times[i] = horizon * static_cast<double>(i) / static_cast<double>(opts.output_points - 1);
    }
    sim.times.back() = horizon;

    IvpSpec spec;
    spec.dimension = 4;
    spec.t0 = 0.0;
    spec.t1 = horizon;
    spec.tol = opts.tol;
    spec.initial.assign(initial.begin(), initial.end());
    spec.stops.assign(sim.times.begin() + 1, sim.times.end() - 1);
    spec.rhs = [&p](double t, std::span<const double> x, std::span<double> dx) {
        const CholeraState d = rhs_full(p, {x[0], x[1], x[2], x[3]}, t);
        std::copy(d.begin(), d.end(), dx.begin());
    };
    const Trajectory traj = integrate(spec);

    bool warned = false;
    for (std::size_t i = 0; i < traj.times().size(); ++i) {
        const State& x = traj.states()[i];
        for (double v : x) sim.min_component = std::min(sim.min_component, v);
        sim.max_population_excess = std::max(sim.max_population_excess, x[0] + x[1] - H);
        if (!warned && *std::min_element(x.begin(), x.end()) < negative_state_warning) {
            std::ostringstream msg;
            msg << "negative state component at t=" << traj.times()[i];
            sim.warnings.push_back(msg.str());
            warned = true;
        }
    }
    sim.states.reserve(sim.times.size());
    for (double t : sim.times) {
        const State& x = t == 0.0 ? traj.states().front() : traj.states()[*traj.index_of(t)];
        sim.states.push_back({x[0], x[1], x[2], x[3]});
    }
    return sim;
}

}  // namespace floquet
