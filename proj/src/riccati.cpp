#include "floquet/riccati.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace floquet {

namespace {

constexpr double kernel_threshold = 1e-9;
constexpr double inf = std::numeric_limits<double>::infinity();

Condition make_condition(std::string name, std::string relation, double lhs, double rhs, std::string note = {}) {
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

std::vector<double> node_times(std::size_t n, double T) {
    std::vector<double> t(n);
    for (std::size_t j = 0; j < n; ++j) t[j] = T * static_cast<double>(j) / static_cast<double>(n);
    return t;
}

double max_abs_diff(std::span<const double> x, std::span<const double> y) {
    double m = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::fabs(x[i] - y[i]));
    return m;
}

double max_abs(std::span<const double> x) {
    double m = 0.0;
    for (double v : x) m = std::max(m, std::fabs(v));
    return m;
}

double period_quadrature(const ScalarFn& f, double T, double scale) {
    return integrate_adaptive(f, 0.0, T, 1e-13 * T * (1.0 + scale));
}

OdeRhs riccati_rhs(const RiccatiProblem& prob, bool backward) {
    const double T = prob.period();
    if (backward) {
        // y(s) = x(T - s)
        return [&prob, T](double s, std::span<const double> y, std::span<double> dy) {
            dy[0] = -prob.rhs(T - s, y[0]);
        };
    }
    return [&prob](double t, std::span<const double> x, std::span<double> dx) { dx[0] = prob.rhs(t, x[0]); };
}

struct PeriodTrace {
    std::vector<double> at_nodes;
    double end = 0.0;  // x(T) going forward, x(0) going backward
};

// One period from x0, sampled at the n equispaced nodes. Throws DivergenceError.
PeriodTrace trace_period(const RiccatiProblem& prob, double x0, std::size_t n, const OdeTolerances& tol,
                         bool backward) {
    const double T = prob.period();
    const auto nodes = node_times(n, T);
    IvpSpec spec;
    spec.dimension = 1;
    spec.t0 = 0.0;
    spec.t1 = T;
    spec.tol = tol;
    spec.initial = {x0};
    spec.rhs = riccati_rhs(prob, backward);
    std::vector<double> lookup(n);
    if (backward) {
        for (std::size_t j = n - 1; j >= 1; --j) spec.stops.push_back(T - nodes[j]);
        for (std::size_t j = 1; j < n; ++j) lookup[j] = T - nodes[j];
    } else {
        for (std::size_t j = 1; j < n; ++j) spec.stops.push_back(nodes[j]);
        lookup = nodes;
    }
    const Trajectory traj = integrate(spec);

    PeriodTrace out;
    out.at_nodes.resize(n);
    out.at_nodes[0] = x0;
    for (std::size_t j = 1; j < n; ++j) out.at_nodes[j] = traj.states()[*traj.index_of(lookup[j])][0];
    out.end = traj.final_state()[0];
    return out;
}

// Newton steps on the collocation equations sigma'(t_j) = rhs(t_j, sigma_j):
// delta' = (b + 2 a sigma) delta - R, solved with the periodic kernel of the
// linearisation. Needs a hyperbolic solution (nonzero stability exponent).
std::vector<double> newton_polish(const RiccatiProblem& prob, std::vector<double> x) {
    const double T = prob.period();
    const std::size_t n = x.size();
    const auto nodes = node_times(n, T);
    std::vector<double> a_at(n), b_at(n), c_at(n);
    for (std::size_t j = 0; j < n; ++j) {
        a_at[j] = prob.a(nodes[j]);
        b_at[j] = prob.b(nodes[j]);
        c_at[j] = prob.c(nodes[j]);
    }
    const auto residual = [&](const std::vector<double>& v) {
        const TrigSeries s(v, T);
        std::vector<double> r(n);
        for (std::size_t j = 0; j < n; ++j) r[j] = s.derivative(nodes[j]) - c_at[j] - b_at[j] * v[j] - a_at[j] * v[j] * v[j];
        return r;
    };
    std::vector<double> r = residual(x);
    double size = max_abs(r);
    for (int iter = 0; iter < 4 && size > 0.0; ++iter) {
        std::vector<double> q(n), minus_r(n);
        for (std::size_t j = 0; j < n; ++j) {
            q[j] = b_at[j] + 2.0 * a_at[j] * x[j];
            minus_r[j] = -r[j];
        }
        std::vector<double> delta;
        try {
            delta = GreenKernel::from_samples(std::move(q), T).solve_periodic(minus_r);
        } catch (const KernelUndefinedError&) {
            break;
        }
        std::vector<double> trial(n);
        for (std::size_t j = 0; j < n; ++j) trial[j] = x[j] + delta[j];
        std::vector<double> r_trial = residual(trial);
        const double trial_size = max_abs(r_trial);
        if (!(trial_size < size)) break;
        x = std::move(trial);
        r = std::move(r_trial);
        size = trial_size;
    }
    return x;
}

std::optional<double> poincare(const RiccatiProblem& prob, double x0, const OdeTolerances& tol, bool backward) {
    IvpSpec spec;
    spec.dimension = 1;
    spec.t0 = 0.0;
    spec.t1 = prob.period();
    spec.tol = tol;
    spec.initial = {x0};
    spec.rhs = riccati_rhs(prob, backward);
    try {
        return integrate(spec).final_state()[0];
    } catch (const DivergenceError&) {
        return std::nullopt;
    } catch (const StepLimitError&) {
        return std::nullopt;
    }
}

// Everything in the certificate except the periodicity defect.
void fill_certificate(PeriodicSolutionCertificate& cert, const RiccatiProblem& prob, std::size_t nodes,
                      const SchauderConstants* constants) {
    const double T = prob.period();
    const TrigSeries& sigma = cert.sigma;
    cert.residual = riccati_residual(prob, sigma, 2 * nodes);
    cert.sup_norm = extremum_on_period(sigma.as_function(), T, 2 * nodes, Extremum::max_abs);

    const double a_scale = sup_abs(prob.a);
    const double c_scale = sup_abs(prob.c);
    const double b_scale = sup_abs(prob.b);
    cert.a_moment = period_quadrature([&](double t) { return prob.a(t) * sigma(t); }, T, a_scale * cert.sup_norm);
    cert.c_moment = period_quadrature([&](double t) { return prob.c(t) * sigma(t); }, T, c_scale * cert.sup_norm);
    cert.stability_exponent = period_quadrature([&](double t) { return prob.b(t) + 2.0 * prob.a(t) * sigma(t); }, T,
                                                b_scale + 2.0 * a_scale * cert.sup_norm);

    if (constants != nullptr) {
        const TrigSeries& psi = constants->psi;
        const double dist = extremum_on_period([&](double t) { return sigma(t) - psi(t); }, T, 2 * nodes,
                                               Extremum::max_abs);
        cert.membership_defect = std::max(0.0, dist - constants->N);
    }
}

std::optional<SchauderConstants> try_constants(const RiccatiProblem& prob, std::size_t nodes) {
    try {
        return schauder_constants(prob, nodes);
    } catch (const KernelUndefinedError&) {
        return std::nullopt;
    }
}

SchauderConstants constants_from_kernel(const GreenKernel& kernel, const RiccatiProblem& prob) {
    const double T = prob.period();
    SchauderConstants k;
    k.b_integral = kernel.b_integral();
    k.M = kernel.sup_abs(prob.b.sample_count());

    const std::size_t n = kernel.nodes();
    const auto nodes = node_times(n, T);
    std::vector<double> c_at(n);
    for (std::size_t j = 0; j < n; ++j) c_at[j] = prob.c(nodes[j]);
    k.psi = TrigSeries(kernel.solve_periodic(c_at), T);
    k.N = extremum_on_period(k.psi.as_function(), T, prob.c.sample_count(), Extremum::max_abs);
    k.M_upper = k.M * (1.0 + 1e-6);
    k.N_upper = k.N * (1.0 + 1e-6);

    const std::size_t points = 2 * n;
    double worst = 0.0;
    for (std::size_t i = 0; i < points; ++i) {
        const double t = T * static_cast<double>(i) / static_cast<double>(points);
        worst = std::max(worst, std::fabs(k.psi.derivative(t) - prob.b(t) * k.psi(t) - prob.c(t)));
    }
    k.psi_residual = worst;
    return k;
}

double schauder_bound(double M_upper, double N_upper) {
    if (N_upper == 0.0 || M_upper == 0.0) return inf;
    return 1.0 / (4.0 * M_upper * N_upper);
}

}  // namespace

RiccatiProblem::RiccatiProblem(PeriodicFn a_, PeriodicFn b_, PeriodicFn c_)
    : a(std::move(a_)), b(std::move(b_)), c(std::move(c_)) {
    if (b.period() != a.period() || c.period() != a.period()) {
        throw PeriodicityError("Riccati coefficients must share one period");
    }
}

RiccatiProblem riccati_from_planar(const PlanarPeriodicSystem& sys) {
    const double T = sys.period();
    return RiccatiProblem(PeriodicFn(-sys.p21().expr(), T), PeriodicFn(sys.p11().expr() - sys.p22().expr(), T),
                          sys.p12());
}

// ---------------------------------------------------------------------------

GreenKernel::GreenKernel(const PeriodicFn& b, std::size_t nodes) : period_(b.period()), integral_(b.period_integral()) {
    if (nodes % 2 == 0 || nodes < 3) throw std::invalid_argument("GreenKernel needs an odd node count >= 3");
    const auto t = node_times(nodes, period_);
    std::vector<double> b_at(nodes);
    for (std::size_t j = 0; j < nodes; ++j) b_at[j] = b(t[j]);
    init(std::move(b_at));
}

GreenKernel GreenKernel::from_samples(std::vector<double> b_at_nodes, double period) {
    const std::size_t n = b_at_nodes.size();
    if (n % 2 == 0 || n < 3) throw std::invalid_argument("GreenKernel needs an odd node count >= 3");
    GreenKernel k;
    k.period_ = period;
    double sum = 0.0;
    for (double v : b_at_nodes) sum += v;
    k.integral_ = period * sum / static_cast<double>(n);
    k.init(std::move(b_at_nodes));
    return k;
}

void GreenKernel::init(std::vector<double> b_at_nodes) {
    if (!(std::fabs(integral_) > kernel_threshold)) {
        std::ostringstream msg;
        msg << "Green kernel undefined: integral of b over a period is " << integral_ << ", need |.| > "
            << kernel_threshold;
        throw KernelUndefinedError(msg.str());
    }
    mean_ = integral_ / period_;
    growth_ = std::exp(integral_);
    tilde_ = TrigSeries(std::move(b_at_nodes), period_).antiderivative_periodic_part();
    tilde_at_nodes_ = tilde_.samples();
}

double GreenKernel::primitive(double t) const { return mean_ * t + tilde_(t); }

double GreenKernel::operator()(double t, double s) const {
    const double rise = std::exp(primitive(t) - primitive(s));
    const double denom = 1.0 - growth_;
    return s <= t ? rise / denom : growth_ * rise / denom;
}

std::vector<double> GreenKernel::solve_periodic(std::span<const double> f_at_nodes) const {
    const std::size_t n = nodes();
    if (f_at_nodes.size() != n) throw std::invalid_argument("solve_periodic: expected one value per kernel node");
    // x = exp(B~) y turns x' = b x + f into y' = mean y + exp(-B~) f
    std::vector<double> g(n);
    for (std::size_t j = 0; j < n; ++j) g[j] = std::exp(-tilde_at_nodes_[j]) * f_at_nodes[j];
    auto spectrum = rfft(g);
    const double omega = 2.0 * std::numbers::pi / period_;
    for (std::size_t k = 0; k < spectrum.size(); ++k) {
        spectrum[k] /= std::complex<double>(-mean_, omega * static_cast<double>(k));
    }
    auto y = irfft(spectrum, n);
    for (std::size_t j = 0; j < n; ++j) y[j] *= std::exp(tilde_at_nodes_[j]);
    return y;
}

std::vector<double> GreenKernel::apply_direct(const ScalarFn& f, std::span<const double> times,
                                              kernels::Exec exec) const {
    const double T = period_;
    const double scale = extremum_on_period(f, T, 512, Extremum::max_abs);
    const double denom = 1.0 - growth_;
    return kernels::map_indexed<double>(
        times.size(),
        [&](std::size_t i) {
            const double t = times[i];
            const double bt = primitive(t);
            const ScalarFn integrand = [&](double s) { return std::exp(bt - primitive(s)) * f(s); };
            const double tol = 1e-14 * T * (1.0 + scale);
            const double lower = t > 0.0 ? integrate_adaptive(integrand, 0.0, t, tol) : 0.0;
            const double upper = t < T ? integrate_adaptive(integrand, t, T, tol) : 0.0;
            return lower / denom + growth_ * upper / denom;
        },
        exec);
}

double GreenKernel::sup_abs(std::size_t samples, kernels::Exec exec) const {
    const double step = period_ / static_cast<double>(samples);
    auto B = kernels::sample([this](double t) { return primitive(t); }, 0.0, step, samples + 1, exec);
    B.back() = primitive(period_);
    const auto rise = kernels::green_exponent_rise(B, exec);
    const double denom = std::fabs(1.0 - growth_);
    return std::max(std::exp(rise.lower) / denom, growth_ * std::exp(rise.upper) / denom);
}

SchauderConstants schauder_constants(const RiccatiProblem& prob, std::size_t nodes) {
    return constants_from_kernel(GreenKernel(prob.b, nodes), prob);
}

double zero_integral_tolerance(const PeriodicFn& f) { return 1e-9 * f.period() * (1.0 + sup_abs(f)); }

// ---------------------------------------------------------------------------

ConditionLedger check_thm_T1(const PlanarPeriodicSystem& sys) {
    const RiccatiProblem prob = riccati_from_planar(sys);
    const double T = sys.period();
    ConditionLedger ledger;

    const double int_b = prob.b.period_integral();
    const double tol_b = std::max(kernel_threshold, zero_integral_tolerance(prob.b));
    ledger.set("int_b", int_b);
    ledger.add(make_condition("i_b_integral_nonzero", ">", std::fabs(int_b), tol_b,
                              "|int (p11 - p22)| against the zero-integral tolerance"));

    const double a_scale = sup_abs(sys.p21());
    const double int_abs_p21 = period_quadrature([&sys](double t) { return std::fabs(sys.p21()(t)); }, T, a_scale);
    ledger.set("int_abs_p21", int_abs_p21);

    if (!ledger.at("i_b_integral_nonzero").pass) {
        Condition c = make_condition("ii_schauder", "<=", int_abs_p21, 0.0);
        c.pass = false;
        c.borderline = false;
        c.note = "M and N undefined: the Green kernel needs condition (i)";
        ledger.add(c);
        return ledger;
    }

    const SchauderConstants k = schauder_constants(prob);
    const double bound = schauder_bound(k.M_upper, k.N_upper);
    ledger.set("M", k.M);
    ledger.set("N", k.N);
    ledger.set("M_upper", k.M_upper);
    ledger.set("N_upper", k.N_upper);
    ledger.set("schauder_bound", bound);
    ledger.add(make_condition("ii_schauder", "<=", int_abs_p21, bound,
                              k.N == 0.0 ? "N = 0, bound is infinite" : "int |p21| <= 1/(4 M N), M and N rounded up"));
    return ledger;
}

ConditionLedger check_thm_A(const RiccatiProblem& prob) {
    ConditionLedger ledger;
    const double int_a = prob.a.period_integral();
    const double int_c = prob.c.period_integral();
    ledger.set("int_a", int_a);
    ledger.set("int_c", int_c);
    ledger.add(make_condition("a_integral_zero", "<=", std::fabs(int_a), zero_integral_tolerance(prob.a)));

    const double A = sup_abs(prob.a);
    const double b_lower = min_on_period(prob.b);
    ledger.set("A", A);
    ledger.set("b_lower", b_lower);
    ledger.add(make_condition("b_lower_positive", ">", b_lower, 0.0, "min of b over a period"));
    ledger.add(make_condition("c_integral_zero", "<=", std::fabs(int_c), zero_integral_tolerance(prob.c)));

    const double radius = A > 0.0 ? b_lower / (2.0 * A) : inf;
    ledger.set("radius", radius);
    if (A == 0.0) {
        Condition& c = ledger.add(make_condition("radius_finite", "<", radius, inf));
        c.pass = true;
        c.note = "a vanishes identically; the ball radius is unconstrained";
    }
    return ledger;
}

ConditionLedger check_thm_T3(const PlanarPeriodicSystem& sys) {
    const double T = sys.period();
    ConditionLedger ledger;
    const double int_p21 = sys.p21().period_integral();
    const double int_p12 = sys.p12().period_integral();
    ledger.set("int_p21", int_p21);
    ledger.set("int_p12", int_p12);
    ledger.add(make_condition("i_p21_integral_zero", "<=", std::fabs(int_p21), zero_integral_tolerance(sys.p21())));
    ledger.add(make_condition("i_p12_integral_zero", "<=", std::fabs(int_p12), zero_integral_tolerance(sys.p12())));

    const PeriodicFn diff(sys.p11().expr() - sys.p22().expr(), T);
    const double b_lower = min_on_period(diff);
    ledger.set("A", sup_abs(sys.p21()));
    ledger.set("b_lower", b_lower);
    ledger.add(make_condition("ii_b_lower_positive", ">", b_lower, 0.0, "min of p11 - p22 over a period"));
    return ledger;
}

// ---------------------------------------------------------------------------

std::string to_string(SolutionSource s) { return s == SolutionSource::picard ? "picard" : "shooting"; }

double riccati_residual(const RiccatiProblem& prob, const TrigSeries& sigma, std::size_t points, kernels::Exec exec) {
    const double T = prob.period();
    const auto r = kernels::map_indexed<double>(
        points,
        [&](std::size_t i) {
            const double t = T * static_cast<double>(i) / static_cast<double>(points);
            const double x = sigma(t);
            return sigma.derivative(t) - prob.rhs(t, x);
        },
        exec);
    return kernels::arg_max(r, exec).value;
}

PeriodicSolutionCertificate certify_periodic_solution(const RiccatiProblem& prob, double x0, SolutionSource source,
                                                      const CertifyOptions& opts) {
    const std::size_t n = opts.nodes;
    PeriodTrace trace;
    bool backward = false;
    try {
        trace = trace_period(prob, x0, n, opts.tol, false);
    } catch (const DivergenceError&) {
        backward = true;
        trace = trace_period(prob, x0, n, opts.tol, true);
    }

    PeriodicSolutionCertificate cert;
    cert.x0 = x0;
    cert.source = source;
    cert.residual_tolerance = opts.residual_tolerance;
    cert.periodicity_tolerance = opts.periodicity_tolerance;

    std::optional<SchauderConstants> owned;
    const SchauderConstants* constants = opts.constants;
    if (constants == nullptr) {
        owned = try_constants(prob, n);
        if (owned) constants = &*owned;
    }

    // the integrated samples carry the step-error noise; a few Newton steps on
    // the collocation equations remove it before the spectral derivative sees it
    const double T = prob.period();
    cert.sigma = TrigSeries(newton_polish(prob, trace.at_nodes), T);
    fill_certificate(cert, prob, n, constants);
    if (!backward && cert.stability_exponent > 0.0) {
        // repelling forward in time: the backward pass is the well-conditioned one
        try {
            PeriodTrace back = trace_period(prob, x0, n, opts.tol, true);
            trace = std::move(back);
            backward = true;
            cert.sigma = TrigSeries(newton_polish(prob, trace.at_nodes), T);
            fill_certificate(cert, prob, n, constants);
        } catch (const DivergenceError&) {
            cert.warnings.push_back("backward pass diverged; kept the forward trace of a repelling solution");
        }
    }
    cert.periodicity_defect = std::fabs(trace.end - x0);
    return cert;
}

// ---------------------------------------------------------------------------

PicardError::PicardError(Kind kind, std::size_t iterations, double last_change, const std::string& detail)
    : std::runtime_error(detail), kind_(kind), iterations_(iterations), last_change_(last_change) {}

PicardResult picard_solve(const RiccatiProblem& prob, const PicardOptions& opts) {
    const double T = prob.period();
    const GreenKernel kernel(prob.b, opts.nodes);
    PicardResult result;
    result.constants = constants_from_kernel(kernel, prob);
    const SchauderConstants& k = result.constants;

    const double a_scale = sup_abs(prob.a);
    const double int_abs_a = period_quadrature([&prob](double t) { return std::fabs(prob.a(t)); }, T, a_scale);
    result.schauder_condition_holds = int_abs_a <= schauder_bound(k.M_upper, k.N_upper);

    const std::size_t n = kernel.nodes();
    const auto nodes = node_times(n, T);
    std::vector<double> a_at(n), c_at(n);
    for (std::size_t j = 0; j < n; ++j) {
        a_at[j] = prob.a(nodes[j]);
        c_at[j] = prob.c(nodes[j]);
    }
    const std::vector<double>& psi = k.psi.samples();
    std::vector<double> phi = psi;
    std::vector<double> f(n);
    const double eps = std::numeric_limits<double>::epsilon();

    bool converged = false;
    double change = inf;
    std::size_t iter = 0;
    while (iter < opts.max_iter) {
        ++iter;
        for (std::size_t j = 0; j < n; ++j) f[j] = a_at[j] * phi[j] * phi[j] + c_at[j];
        std::vector<double> next = kernel.solve_periodic(f);
        change = max_abs_diff(next, phi);
        const double dist = max_abs_diff(next, psi);
        phi = std::move(next);
        if (!std::isfinite(change) || dist > opts.escape_factor * k.N + 64.0 * eps * (1.0 + k.N)) {
            std::ostringstream msg;
            msg << "Picard iterate left the ball around psi after " << iter << " iterations: |phi - psi| = " << dist
                << " > " << opts.escape_factor << " * N = " << opts.escape_factor * k.N;
            throw PicardError(PicardError::Kind::escaped, iter, change, msg.str());
        }
        if (change <= std::max(1e-3 * opts.tol, 64.0 * eps * (1.0 + max_abs(phi)))) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        std::ostringstream msg;
        msg << "Picard iteration did not converge in " << opts.max_iter << " iterations; last sup change " << change;
        throw PicardError(PicardError::Kind::not_converged, iter, change, msg.str());
    }

    PeriodicSolutionCertificate& cert = result.certificate;
    cert.source = SolutionSource::picard;
    cert.residual_tolerance = opts.tol;
    cert.periodicity_tolerance = opts.tol;
    cert.sigma = TrigSeries(phi, T);
    cert.x0 = cert.sigma(0.0);
    fill_certificate(cert, prob, n, &k);
    try {
        const PeriodTrace trace = trace_period(prob, cert.x0, n, {1e-12, 1e-14}, cert.stability_exponent > 0.0);
        cert.periodicity_defect = std::fabs(trace.end - cert.x0);
    } catch (const DivergenceError& e) {
        cert.periodicity_defect = inf;
        cert.warnings.push_back(std::string("periodicity check diverged: ") + e.what());
    }
    if (!result.schauder_condition_holds) {
        std::ostringstream msg;
        msg << "int |a| = " << int_abs_a << " exceeds 1/(4MN) = " << schauder_bound(k.M_upper, k.N_upper)
            << "; convergence is not guaranteed by the fixed-point argument";
        cert.warnings.push_back(msg.str());
    }
    result.iterations = iter;
    result.last_change = change;
    if (!cert.verified()) {
        std::ostringstream msg;
        msg << "Picard fixed point fails verification: residual " << cert.residual << ", periodicity defect "
            << cert.periodicity_defect << ", tolerance " << opts.tol;
        throw PicardError(PicardError::Kind::residual, iter, change, msg.str());
    }
    return result;
}

// ---------------------------------------------------------------------------

std::optional<double> poincare_forward(const RiccatiProblem& prob, double x0, const OdeTolerances& tol) {
    return poincare(prob, x0, tol, false);
}

std::optional<double> poincare_backward(const RiccatiProblem& prob, double x0, const OdeTolerances& tol) {
    return poincare(prob, x0, tol, true);
}

std::pair<double, double> default_shooting_interval(const RiccatiProblem& prob) {
    const ConditionLedger ledger = check_thm_A(prob);
    const double r = ledger.value("radius");
    if (ledger.all_pass() && std::isfinite(r) && r > 0.0) return {-r, r};
    return {-10.0, 10.0};
}

namespace {

using GapFn = std::function<std::optional<double>(double)>;

// Bisection on a bracket with g(lo), g(hi) of opposite sign. Returns the best
// point seen, or nothing when an escaped point shows up inside the bracket.
std::optional<double> bisect(const GapFn& g, double lo, double glo, double hi, double ghi, double root_tol) {
    if (glo == 0.0) return lo;
    if (ghi == 0.0) return hi;
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const auto gm = g(mid);
        if (!gm) return std::nullopt;
        if (std::fabs(*gm) <= root_tol) return mid;
        if (std::signbit(*gm) == std::signbit(glo)) {
            lo = mid;
            glo = *gm;
        } else {
            hi = mid;
            ghi = *gm;
        }
    }
    return std::fabs(glo) <= std::fabs(ghi) ? lo : hi;
}

}  // namespace

ShootingResult shooting_solve(const RiccatiProblem& prob, const ShootingOptions& opts) {
    if (!(opts.lo < opts.hi)) throw std::invalid_argument("shooting interval needs lo < hi");
    if (opts.grid < 2) throw std::invalid_argument("shooting grid needs at least two points");

    const GapFn forward = [&](double x) -> std::optional<double> {
        const auto p = poincare_forward(prob, x, opts.tol);
        if (!p) return std::nullopt;
        return *p - x;
    };
    const GapFn backward = [&](double x) -> std::optional<double> {
        const auto p = poincare_backward(prob, x, opts.tol);
        if (!p) return std::nullopt;
        return *p - x;
    };

    ShootingResult result;
    const double step = (opts.hi - opts.lo) / static_cast<double>(opts.grid - 1);
    result.scan = kernels::map_indexed<ShootingScanPoint>(
        opts.grid,
        [&](std::size_t i) {
            ShootingScanPoint p;
            p.x0 = i + 1 == opts.grid ? opts.hi : opts.lo + step * static_cast<double>(i);
            p.forward_gap = forward(p.x0);
            p.backward_gap = backward(p.x0);
            return p;
        },
        opts.exec);

    struct Bracket {
        const GapFn* g;
        double lo, glo, hi, ghi;
    };
    std::vector<Bracket> brackets;
    for (std::size_t i = 0; i + 1 < result.scan.size(); ++i) {
        const auto& l = result.scan[i];
        const auto& r = result.scan[i + 1];
        if (l.forward_gap && r.forward_gap && *l.forward_gap * *r.forward_gap <= 0.0) {
            brackets.push_back({&forward, l.x0, *l.forward_gap, r.x0, *r.forward_gap});
        }
        if (l.backward_gap && r.backward_gap && *l.backward_gap * *r.backward_gap <= 0.0) {
            brackets.push_back({&backward, l.x0, *l.backward_gap, r.x0, *r.backward_gap});
        }
    }

    const auto roots = kernels::map_indexed<std::optional<double>>(
        brackets.size(),
        [&](std::size_t i) -> std::optional<double> {
            const Bracket& b = brackets[i];
            const auto x = bisect(*b.g, b.lo, b.glo, b.hi, b.ghi, opts.root_tol);
            if (!x) return std::nullopt;
            // A sign change across a pole of the map also brackets; a true
            // fixed point has a small gap in at least one direction.
            const auto gf = forward(*x);
            const auto gb = backward(*x);
            const bool ok = (gf && std::fabs(*gf) <= opts.root_tol) || (gb && std::fabs(*gb) <= opts.root_tol);
            if (!ok) return std::nullopt;
            return x;
        },
        opts.exec);

    std::vector<double> xs;
    for (const auto& r : roots) {
        if (r) xs.push_back(*r);
    }
    std::sort(xs.begin(), xs.end());

    const std::optional<SchauderConstants> constants = try_constants(prob, opts.nodes);
    CertifyOptions copts;
    copts.nodes = opts.nodes;
    copts.tol = opts.tol;
    copts.constants = constants ? &*constants : nullptr;

    std::vector<PeriodicSolutionCertificate> certs;
    std::size_t failed = 0;
    for (double x : xs) {
        try {
            certs.push_back(certify_periodic_solution(prob, x, SolutionSource::shooting, copts));
        } catch (const DivergenceError&) {
            ++failed;
        }
    }

    // merge roots closer than dedup_spacing, keeping the best certified one
    const auto quality = [](const PeriodicSolutionCertificate& c) { return c.residual + c.periodicity_defect; };
    for (auto& c : certs) {
        if (!result.solutions.empty() && c.x0 - result.solutions.back().x0 <= opts.dedup_spacing) {
            if (quality(c) < quality(result.solutions.back())) result.solutions.back() = std::move(c);
            continue;
        }
        result.solutions.push_back(std::move(c));
    }

    std::ostringstream note;
    if (result.solutions.empty()) {
        note << "no periodic solution found in interval [" << opts.lo << ", " << opts.hi << "]";
    } else {
        note << result.solutions.size() << " periodic solution(s) found in [" << opts.lo << ", " << opts.hi << "]";
    }
    if (failed > 0) note << "; " << failed << " candidate root(s) could not be integrated over a period";
    result.note = note.str();
    return result;
}

// ---------------------------------------------------------------------------

MultiplierPair multipliers_thm_T1(const PlanarPeriodicSystem& sys, const PeriodicSolutionCertificate& cert) {
    if (!cert.verified()) {
        std::ostringstream msg;
        msg << "certificate not verified (residual " << cert.residual << ", periodicity defect "
            << cert.periodicity_defect << ")";
        throw std::invalid_argument(msg.str());
    }
    const RiccatiProblem prob = riccati_from_planar(sys);
    const double fresh = riccati_residual(prob, cert.sigma, 2 * cert.sigma.size());
    if (fresh > 10.0 * cert.residual_tolerance) {
        std::ostringstream msg;
        msg << "certificate does not solve the Riccati equation of this system (residual " << fresh << ")";
        throw std::invalid_argument(msg.str());
    }

    const double T = sys.period();
    const TrigSeries& sigma = cert.sigma;
    const double scale = sup_abs(sys.p21()) * cert.sup_norm;
    const double coupling = period_quadrature([&](double t) { return sys.p21()(t) * sigma(t); }, T, scale);
    const Complex l1 = std::exp(sys.p22().period_integral() + coupling);
    const Complex l2 = std::exp(sys.p11().period_integral() - coupling);
    const auto [first, second] = sort_multipliers(l1, l2);
    MultiplierPair pair{first, second, MultiplierMethod::thm_T1, 0.0, l1, sigma, std::nullopt};
    pair.product_defect = liouville_product_check(sys, pair);
    return pair;
}

MultiplierPair explicit_formula_multipliers(const PlanarPeriodicSystem& sys) {
    const auto [first, second] =
        sort_multipliers(std::exp(sys.p11().period_integral()), std::exp(sys.p22().period_integral()));
    MultiplierPair pair{first, second, MultiplierMethod::thm_T3, 0.0, std::nullopt, std::nullopt, std::nullopt};
    pair.product_defect = liouville_product_check(sys, pair);
    return pair;
}

MultiplierPair multipliers_thm_T3(const PlanarPeriodicSystem& sys) {
    ConditionLedger ledger = check_thm_T3(sys);
    if (!ledger.all_pass()) {
        std::string failed;
        for (const auto& c : ledger.conditions) {
            if (!c.pass) failed += (failed.empty() ? "" : ", ") + c.name;
        }
        throw HypothesisError("explicit multiplier hypotheses fail: " + failed, std::move(ledger));
    }
    return explicit_formula_multipliers(sys);
}

}  // namespace floquet
