#include "floquet/floquet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace floquet {

namespace {

double chunk_integral(const ScalarFn& g, double a, double b, double scale) {
    return integrate_adaptive(g, a, b, 1e-13 * (b - a) * (1.0 + scale));
}

}  // namespace

PlanarPeriodicSystem::PlanarPeriodicSystem(PeriodicFn p11, PeriodicFn p12, PeriodicFn p21, PeriodicFn p22)
    : p11_(std::move(p11)), p12_(std::move(p12)), p21_(std::move(p21)), p22_(std::move(p22)), period_(p11_.period()) {
    if (p12_.period() != period_ || p21_.period() != period_ || p22_.period() != period_) {
        throw PeriodicityError("planar system entries must share one period");
    }
}

PlanarPeriodicSystem PlanarPeriodicSystem::parse(const std::string& p11, const std::string& p12,
                                                 const std::string& p21, const std::string& p22, double period) {
    return PlanarPeriodicSystem(PeriodicFn::parse(p11, period), PeriodicFn::parse(p12, period),
                                PeriodicFn::parse(p21, period), PeriodicFn::parse(p22, period));
}

Eigen::Matrix2d PlanarPeriodicSystem::at(double t) const {
    Eigen::Matrix2d m;
    m << p11_(t), p12_(t), p21_(t), p22_(t);
    return m;
}

PeriodicMatrix PlanarPeriodicSystem::as_matrix() const { return PeriodicMatrix(2, {p11_, p12_, p21_, p22_}); }

double PlanarPeriodicSystem::trace_integral() const { return p11_.period_integral() + p22_.period_integral(); }

std::string to_string(MultiplierMethod m) {
    switch (m) {
        case MultiplierMethod::monodromy: return "monodromy";
        case MultiplierMethod::thm_T1: return "thm_T1";
        case MultiplierMethod::thm_T3: return "thm_T3";
    }
    return "unknown";
}

std::pair<Complex, Complex> sort_multipliers(Complex a, Complex b) {
    const double ma = std::abs(a);
    const double mb = std::abs(b);
    if (mb > ma || (mb == ma && b.real() > a.real())) return {b, a};
    return {a, b};
}

std::pair<Complex, Complex> eigenvalues_2x2(const Eigen::Matrix2d& m) {
    const double tr = m.trace();
    const double det = m.determinant();
    const double half = 0.5 * tr;
    const double disc = half * half - det;
    if (disc >= 0.0) {
        // larger-magnitude root first, the other from det/q to avoid cancellation
        const double q = half + std::copysign(std::sqrt(disc), half);
        if (q == 0.0) return sort_multipliers(0.0, 0.0);
        return sort_multipliers(q, det / q);
    }
    const double im = std::sqrt(-disc);
    return sort_multipliers({half, im}, {half, -im});
}

// Continuous QR: Phi = Q(theta) R with R = e^{rho1} [[1, z], [0, e^{rho2 - rho1}]].
// With B = Q^T P Q: theta' = B21, rho1' = B11, rho2' = B22, z' = (B12 + B21) e^{rho2 - rho1}.
// Forming Phi(T) entrywise loses eps |Phi|^2 / det in the small multiplier; in
// this form det is e^{rho1 + rho2} and the small root comes out as e^{rho2} / q.
MultiplierPair monodromy_multipliers(const PlanarPeriodicSystem& sys, const OdeTolerances& tol) {
    IvpSpec spec;
    spec.dimension = 4;
    spec.t1 = sys.period();
    spec.tol = tol;
    spec.initial = {0.0, 0.0, 0.0, 0.0};  // theta, rho1, rho2, z
    spec.blowup_norm = std::numeric_limits<double>::max();
    spec.rhs = [&sys](double t, std::span<const double> x, std::span<double> dx) {
        const double c = std::cos(x[0]);
        const double s = std::sin(x[0]);
        const Eigen::Matrix2d p = sys.at(t);
        Eigen::Matrix2d q;
        q << c, -s, s, c;
        const Eigen::Matrix2d b = q.transpose() * p * q;
        dx[0] = b(1, 0);
        dx[1] = b(0, 0);
        dx[2] = b(1, 1);
        dx[3] = (b(0, 1) + b(1, 0)) * std::exp(x[2] - x[1]);
    };
    const State end = integrate(spec).final_state();
    const double c = std::cos(end[0]);
    const double s = std::sin(end[0]);
    const double rho1 = end[1];
    const double rho2 = end[2];
    const double z = end[3];
    const double delta = std::exp(rho2 - rho1);

    Eigen::Matrix2d scaled;  // Phi(T) / e^{rho1}, determinant e^{rho2 - rho1}
    scaled << c, c * z - s * delta, s, s * z + c * delta;
    const double half = 0.5 * scaled.trace();
    const double disc = half * half - delta;
    const double g = std::exp(rho1);
    Complex l1, l2;
    if (disc >= 0.0) {
        const double q = half + std::copysign(std::sqrt(disc), half);
        l1 = g * q;
        l2 = q == 0.0 ? Complex(0.0) : Complex(std::exp(rho2) / q);
    } else {
        const double im = std::sqrt(-disc);
        l1 = g * Complex(half, im);
        l2 = g * Complex(half, -im);
    }
    if (!std::isfinite(std::abs(l1)) || !std::isfinite(std::abs(l2)))
        throw DivergenceError(sys.period(), "monodromy multiplier overflows double precision");
    const auto [first, second] = sort_multipliers(l1, l2);
    MultiplierPair pair{first, second, MultiplierMethod::monodromy, 0.0, std::nullopt, std::nullopt,
                        Eigen::Matrix2d(g * scaled)};
    pair.product_defect = liouville_product_check(sys, pair);
    return pair;
}

double liouville_product_check(const PlanarPeriodicSystem& sys, const MultiplierPair& pair) {
    const double expected = std::exp(sys.trace_integral());
    return std::abs(pair.first * pair.second - expected) / expected;
}

NormalSolution normal_solution_from_sigma(const PlanarPeriodicSystem& sys, const TrigSeries& sigma, double k,
                                          std::size_t points, int periods) {
    if (points < 2) throw std::invalid_argument("normal solution needs at least two sample points");
    if (periods < 1) throw std::invalid_argument("normal solution needs at least one period");
    const double T = sys.period();
    const ScalarFn g = [&](double t) { return sys.p21()(t) * sigma(t) + sys.p22()(t); };
    const double scale = extremum_on_period(g, T, 256, Extremum::max_abs);

    NormalSolution out;
    const double span = T * periods;
    out.times.resize(points);
    out.u.resize(points);
    out.v.resize(points);
    double cumulative = 0.0;
    for (std::size_t i = 0; i < points; ++i) {
        const double t = k + span * static_cast<double>(i) / static_cast<double>(points - 1);
        if (i > 0) cumulative += chunk_integral(g, out.times[i - 1], t, scale);
        out.times[i] = t;
        out.v[i] = std::exp(cumulative);
        out.u[i] = sigma(t) * out.v[i];

        const double gv = g(t) * out.v[i];
        const double du = sigma.derivative(t) * out.v[i] + sigma(t) * gv;
        const double r1 = du - sys.p11()(t) * out.u[i] - sys.p12()(t) * out.v[i];
        const double r2 = gv - sys.p21()(t) * out.u[i] - sys.p22()(t) * out.v[i];
        const double norm = std::hypot(out.u[i], out.v[i]);
        out.residual = std::max(out.residual, std::hypot(r1, r2) / (1.0 + norm));
    }
    out.multiplier = std::exp(chunk_integral(g, k, k + T, scale));
    return out;
}

double normal_recurrence_defect(const PlanarPeriodicSystem& sys, const TrigSeries& sigma, Complex lambda,
                                std::size_t samples, const OdeTolerances& tol) {
    // phi(t) is proportional to (sigma(t), 1), so each sample starts its own
    // one-period run: a single long run would let the dominant direction swamp
    // a subdominant normal solution.
    const double T = sys.period();
    double worst = 0.0;
    for (std::size_t i = 0; i < samples; ++i) {
        const double t = T * static_cast<double>(i) / static_cast<double>(samples);
        IvpSpec spec;
        spec.dimension = 2;
        spec.t0 = t;
        spec.t1 = t + T;
        spec.tol = tol;
        spec.initial = {sigma(t), 1.0};
        spec.blowup_norm = std::numeric_limits<double>::max();
        spec.rhs = [&sys](double s, std::span<const double> x, std::span<double> dx) {
            const Eigen::Matrix2d p = sys.at(s);
            dx[0] = p(0, 0) * x[0] + p(0, 1) * x[1];
            dx[1] = p(1, 0) * x[0] + p(1, 1) * x[1];
        };
        const State b = integrate(spec).final_state();
        const Complex d0 = b[0] - lambda * spec.initial[0];
        const Complex d1 = b[1] - lambda * spec.initial[1];
        const double denom = std::abs(lambda) * std::hypot(spec.initial[0], spec.initial[1]);
        worst = std::max(worst, std::sqrt(std::norm(d0) + std::norm(d1)) / denom);
    }
    return worst;
}

double ratio_riccati_defect(const PlanarPeriodicSystem& sys, double u0, double v0, std::size_t samples,
                            const OdeTolerances& tol) {
    if (v0 == 0.0) throw std::invalid_argument("v0 must be nonzero");
    const double T = sys.period();
    std::vector<double> stops;
    for (std::size_t i = 1; i < samples; ++i) stops.push_back(T * static_cast<double>(i) / static_cast<double>(samples));

    IvpSpec planar;
    planar.dimension = 2;
    planar.t1 = T;
    planar.tol = tol;
    planar.initial = {u0, v0};
    planar.stops = stops;
    planar.rhs = [&sys](double t, std::span<const double> x, std::span<double> dx) {
        const Eigen::Matrix2d p = sys.at(t);
        dx[0] = p(0, 0) * x[0] + p(0, 1) * x[1];
        dx[1] = p(1, 0) * x[0] + p(1, 1) * x[1];
    };
    const Trajectory uv = integrate(planar);

    IvpSpec ric;
    ric.dimension = 1;
    ric.t1 = T;
    ric.tol = tol;
    ric.initial = {u0 / v0};
    ric.stops = stops;
    ric.rhs = [&sys](double t, std::span<const double> x, std::span<double> dx) {
        const double b = sys.p11()(t) - sys.p22()(t);
        dx[0] = sys.p12()(t) + b * x[0] - sys.p21()(t) * x[0] * x[0];
    };
    const Trajectory xr = integrate(ric);

    double worst = 0.0;
    stops.insert(stops.begin(), 0.0);
    stops.push_back(T);
    for (double t : stops) {
        const State& s = uv.states()[*uv.index_of(t)];
        if (std::fabs(s[1]) < 1e-8 * (1.0 + std::fabs(s[0]))) {
            throw std::domain_error("v vanishes along the planar solution; u/v is undefined");
        }
        const double x = xr.states()[*xr.index_of(t)][0];
        worst = std::max(worst, std::fabs(s[0] / s[1] - x) / (1.0 + std::fabs(x)));
    }
    return worst;
}

std::string to_string(Stability s) {
    switch (s) {
        case Stability::uniformly_asymptotically_stable: return "uniformly_asymptotically_stable";
        case Stability::uniformly_stable: return "uniformly_stable";
        case Stability::unstable: return "unstable";
        case Stability::indeterminate: return "indeterminate";
    }
    return "indeterminate";
}

StabilityVerdict classify_stability(std::span<const Complex> multipliers, double tau) {
    std::vector<double> moduli;
    std::vector<int> multiplicity;
    for (const Complex& l : multipliers) {
        moduli.push_back(std::abs(l));
        int count = 0;
        for (const Complex& other : multipliers) {
            if (std::abs(l - other) <= tau) ++count;
        }
        multiplicity.push_back(count);
    }
    return classify_stability(moduli, multiplicity, tau);
}

StabilityVerdict classify_stability(std::span<const double> moduli, std::span<const int> multiplicities, double tau) {
    if (moduli.size() != multiplicities.size()) throw std::invalid_argument("moduli and multiplicities differ in length");
    StabilityVerdict v;
    v.moduli.assign(moduli.begin(), moduli.end());
    std::sort(v.moduli.begin(), v.moduli.end(), std::greater<>());

    std::ostringstream why;
    why.precision(10);
    const double largest = v.moduli.empty() ? 0.0 : v.moduli.front();
    if (largest > 1.0 + tau) {
        v.verdict = Stability::unstable;
        why << "largest modulus " << largest << " > 1 + " << tau;
    } else if (largest < 1.0 - tau) {
        v.verdict = Stability::uniformly_asymptotically_stable;
        why << "all moduli < 1 - " << tau << " (largest " << largest << ")";
    } else {
        bool all_simple = true;
        for (std::size_t i = 0; i < moduli.size(); ++i) {
            if (std::fabs(moduli[i] - 1.0) <= tau && multiplicities[i] > 1) all_simple = false;
        }
        if (all_simple) {
            v.verdict = Stability::uniformly_stable;
            why << "all moduli <= 1 + " << tau << "; those within " << tau << " of 1 are simple";
        } else {
            v.verdict = Stability::indeterminate;
            why << "a modulus within " << tau << " of 1 has multiplicity > 1";
        }
    }
    v.rationale = why.str();
    return v;
}

StabilityVerdict classify_stability(const MultiplierPair& pair, double tau) {
    const Complex both[] = {pair.first, pair.second};
    if (!pair.matrix || std::abs(pair.first - pair.second) > tau) return classify_stability(both, tau);
    const Complex mean = 0.5 * (pair.first + pair.second);
    const Eigen::Matrix2d& m = *pair.matrix;
    const double off = std::max({std::fabs(m(0, 0) - mean.real()), std::fabs(m(1, 1) - mean.real()),
                                 std::fabs(m(0, 1)), std::fabs(m(1, 0)), std::fabs(mean.imag())});
    if (off > tau * std::max(1.0, std::abs(mean))) return classify_stability(both, tau);
    const double moduli[] = {std::abs(pair.first), std::abs(pair.second)};
    const int simple[] = {1, 1};
    StabilityVerdict v = classify_stability(moduli, simple, tau);
    v.rationale += " (double multiplier, Phi(T) semisimple)";
    return v;
}

StabilityVerdict classify_nonlinear_dfe(const StabilityVerdict& linear) {
    StabilityVerdict v = linear;
    switch (linear.verdict) {
        case Stability::uniformly_asymptotically_stable:
            v.rationale = "linearization uniformly asymptotically stable; carries over to the nonlinear system";
            break;
        case Stability::unstable:
            v.rationale = "linearization unstable; carries over to the nonlinear system";
            break;
        default:
            v.verdict = Stability::indeterminate;
            v.rationale = "linearization is " + to_string(linear.verdict) + "; no conclusion for the nonlinear system";
            break;
    }
    return v;
}

}  // namespace floquet
