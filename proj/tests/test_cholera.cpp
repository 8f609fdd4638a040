#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cfloat>
#include <cstring>

#include "floquet/cholera.hpp"
#include "support.hpp"

using namespace floquet;
using testing_support::fn;
using testing_support::Gen;
using testing_support::lit;
using testing_support::rel_err;
using testing_support::two_pi;

namespace {

CholeraParams scenario(double d_scale, double e_scale = 0.05, CholeraConstants k = {}) {
    return CholeraParams(k, fn(lit(d_scale) + "*(1+0.5*cos(t))"), fn(lit(e_scale) + "*(1+0.5*sin(t))"),
                         fn("2+0.2*sin(t)"));
}

CholeraParams passing() { return scenario(0.05); }
CholeraParams failing() { return scenario(100.0); }

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST_CASE("rhs_full examples") {
    const CholeraParams p = passing();
    const auto& k = p.constants();
    for (double t : {0.0, 1.0, 4.0}) {
        const CholeraState d = rhs_full(p, {k.H, 0, 0, 0}, t);
        for (double v : d) CHECK(v == 0.0);
    }
    // saturation: B = 1e10 K
    const double t = 0.9;
    const double S = 0.6;
    const CholeraState big = rhs_full(p, {S, 0.1, 1e10 * k.K, 0.2}, t);
    const double limit = k.n * (k.H - S) - p.d()(t) * S;
    CHECK(big[0] == doctest::Approx(limit).epsilon(1e-6));

    Gen g(71);
    for (int i = 0; i < 100; ++i) {
        const CholeraState x{g.uniform(0, 1), g.uniform(0, 1), g.uniform(0, 3), g.uniform(0, 3)};
        const double tt = g.uniform(0, 10);
        const CholeraState d = rhs_full(p, x, tt);
        const double want = k.n * k.H - k.n * x[0] - p.r() * x[1];
        CHECK(std::fabs(d[0] + d[1] - want) <= 4 * DBL_EPSILON * (1 + std::fabs(want) + std::fabs(d[0])));
    }
}

TEST_CASE("negative states: tolerated down to the error threshold") {
    const CholeraParams p = passing();
    CHECK_NOTHROW(rhs_full(p, {1.0, -5e-7, 0.0, 0.0}, 0.0));
    CHECK_THROWS_AS(rhs_full(p, {1.0, 0.0, -2e-6, 0.0}, 0.0), NegativeStateError);
}

TEST_CASE("constructor validation") {
    CholeraConstants k;
    k.K = 0.0;
    CHECK_THROWS_AS(scenario(0.05, 0.05, k), std::invalid_argument);
    CHECK_THROWS_AS(CholeraParams({}, fn("sin(t)"), fn("1"), fn("1")), std::invalid_argument);
    CHECK_THROWS_AS(CholeraParams({}, fn("1"), fn("1", 1.0), fn("1")), PeriodicityError);
}

TEST_CASE("linearization: entries, zero pattern and a finite-difference Jacobian") {
    const CholeraParams p = passing();
    const auto& k = p.constants();
    const PeriodicMatrix A = linearization_matrix(p);
    const double t = 1.3;
    const Eigen::MatrixXd m = A.at(t);
    CHECK(m(0, 2) == doctest::Approx(p.d()(t) * k.H / k.K));
    CHECK(m(0, 1) == 0.0);
    CHECK(m(1, 0) == 0.0);
    CHECK(m(3, 2) == 0.0);

    // y = (H - S, I, B, P); forward differences of the translated field at 0
    auto field = [&](const Eigen::Vector4d& y) {
        const CholeraState d = rhs_full(p, {k.H - y[0], y[1], y[2], y[3]}, t);
        return Eigen::Vector4d(-d[0], d[1], d[2], d[3]);
    };
    const double h = 1e-6;
    Eigen::Matrix4d J;
    for (int j = 0; j < 4; ++j) {
        Eigen::Vector4d y = Eigen::Vector4d::Zero();
        y[j] = h;
        J.col(j) = (field(y) - field(Eigen::Vector4d::Zero())) / h;
    }
    CHECK((J - m).cwiseAbs().maxCoeff() <= 1e-5);
}

TEST_CASE("subsystem and its Riccati association") {
    const CholeraParams p = passing();
    const auto& k = p.constants();
    const PlanarPeriodicSystem s = subsystem(p);
    const RiccatiProblem r = riccati_from_planar(s);
    for (double t : {0.0, 2.2, 5.1}) {
        CHECK(s.p11()(t) == -p.r());
        CHECK(r.a(t) == doctest::Approx(-p.e()(t)));
        CHECK(r.b(t) == doctest::Approx(-p.r() + p.m()(t)));
        CHECK(r.c(t) == doctest::Approx(p.d()(t) * k.H / k.K));
    }
    CHECK(r.b.period_integral() == doctest::Approx(p.m().period_integral() - p.r() * two_pi).epsilon(1e-12));
}

TEST_CASE("seasonal ledger: constant coefficients reproduce the closed forms") {
    const double d = 0.02, e = 0.03, m = 1.5;
    const CholeraParams p({}, fn(lit(d)), fn(lit(e)), fn(lit(m)));
    const ConditionLedger l = check_seasonal_conditions(p);
    const double b = m - p.r();
    const double E = std::exp(std::fabs(b) * two_pi);
    CHECK(l.value("M") == doctest::Approx(E / (E - 1)).epsilon(1e-9));
    CHECK(l.value("N") == doctest::Approx(d / std::fabs(b)).epsilon(1e-9));  // psi = -c/b
    CHECK(l.value("A") == doctest::Approx(d).epsilon(1e-12));
    CHECK(l.value("E") == doctest::Approx(e).epsilon(1e-12));
    CHECK(l.value("m1") == doctest::Approx(m).epsilon(1e-12));
    CHECK(l.at("mean_condition").pass);
    CHECK(l.all_pass());
}

TEST_CASE("seasonal ledger: passing fixture and e scaled up") {
    const ConditionLedger ok = check_seasonal_conditions(passing());
    CHECK(ok.all_pass());
    CHECK(ok.value("sigma_bound_lhs") == doctest::Approx(0.0708).epsilon(1e-2));
    const ConditionLedger bad = check_seasonal_conditions(scenario(0.05, 5.0));
    CHECK_FALSE(bad.at("schauder_condition").pass);
    CHECK(bad.at("schauder_condition").slack() < 0.0);
}

TEST_CASE("DFE stability verdicts") {
    const DfeStabilityReport ok = dfe_stability(passing());
    CHECK(ok.verdict.verdict == Stability::uniformly_asymptotically_stable);
    for (double m : ok.verdict.moduli) CHECK(m < 1.0);
    REQUIRE(ok.thm_T1.has_value());
    CHECK(rel_err(ok.thm_T1->first, ok.monodromy.first) <= 1e-6);
    CHECK(rel_err(ok.thm_T1->second, ok.monodromy.second) <= 1e-6);
    for (const auto& c : ok.certificate_checks) CHECK_MESSAGE(c.pass, c.name);

    CholeraConstants k;
    k.n = 0.0;
    const DfeStabilityReport flat = dfe_stability(scenario(0.05, 0.05, k));
    CHECK(std::abs(flat.demography_multiplier) == 1.0);
    CHECK(flat.verdict.verdict != Stability::uniformly_asymptotically_stable);

    const DfeStabilityReport bad = dfe_stability(failing());
    CHECK(bad.linear.verdict == Stability::unstable);
    CHECK(bad.verdict.verdict == Stability::unstable);
    CHECK(std::abs(bad.monodromy.first) > 1.0);
}

TEST_CASE("block spectrum of the 4-D monodromy") {
    const CholeraParams p = passing();
    const Eigen::MatrixXd phi = fundamental_matrix(linearization_matrix(p), two_pi, {1e-12, 1e-14});
    const Eigen::VectorXcd ev = Eigen::EigenSolver<Eigen::MatrixXd>(phi).eigenvalues();
    std::vector<Complex> rest(ev.data(), ev.data() + 4);
    auto take = [&](Complex want) {
        auto it = std::min_element(rest.begin(), rest.end(),
                                   [&](Complex a, Complex b) { return std::abs(a - want) < std::abs(b - want); });
        const double err = rel_err(*it, want);
        rest.erase(it);
        return err;
    };
    const auto& k = p.constants();
    CHECK(take(Complex(std::exp(-k.n * two_pi))) <= 1e-7);
    CHECK(take(Complex(std::exp(-k.nu * two_pi))) <= 1e-7);
    const MultiplierPair sub = monodromy_multipliers(subsystem(p), {1e-12, 1e-14});
    CHECK(take(sub.first) <= 1e-7);
    CHECK(take(sub.second) <= 1e-7);
}

TEST_CASE("delta, kappa and K~ leave the linear report bit-identical; xi leaves the moduli") {
    const DfeStabilityReport base = dfe_stability(passing());
    CholeraConstants k;
    k.delta = 3.0;
    k.kappa = 0.7;
    k.K_tilde = 9.0;
    const DfeStabilityReport moved = dfe_stability(scenario(0.05, 0.05, k));
    REQUIRE(base.multipliers.size() == moved.multipliers.size());
    for (std::size_t i = 0; i < base.multipliers.size(); ++i) {
        CHECK(same_bits(base.multipliers[i].real(), moved.multipliers[i].real()));
        CHECK(same_bits(base.multipliers[i].imag(), moved.multipliers[i].imag()));
    }
    CHECK(base.verdict.rationale == moved.verdict.rationale);

    CholeraConstants x;
    x.xi = 5.0;
    const DfeStabilityReport xi = dfe_stability(scenario(0.05, 0.05, x));
    for (std::size_t i = 0; i < base.verdict.moduli.size(); ++i) {
        CHECK(same_bits(base.verdict.moduli[i], xi.verdict.moduli[i]));
    }
}

TEST_CASE("property: a passing ledger implies a UAS verdict with the sign conditions") {
    Gen g(72);
    int passing_count = 0;
    for (int i = 0; i < 25; ++i) {
        const CholeraParams p({}, fn(lit(g.uniform(0.005, 0.2)) + "*(1+" + lit(g.uniform(-0.5, 0.5)) + "*cos(t))"),
                              fn(lit(g.uniform(0.005, 0.2)) + "*(1+" + lit(g.uniform(-0.5, 0.5)) + "*sin(t))"),
                              fn(lit(g.uniform(1.2, 3.0)) + "+" + lit(g.uniform(-0.2, 0.2)) + "*sin(t)"));
        const DfeStabilityReport rep = dfe_stability(p);
        if (!rep.ledger.all_pass()) continue;
        ++passing_count;
        CHECK(rep.verdict.verdict == Stability::uniformly_asymptotically_stable);
        if (rep.certificate) {
            for (const auto& c : rep.certificate_checks) CHECK_MESSAGE(c.pass, c.name);
        }
    }
    CHECK(passing_count >= 10);
}

TEST_CASE("simulation: DFE is fixed, passing scenario returns, failing scenario grows") {
    const CholeraParams p = passing();
    const auto& k = p.constants();
    const Simulation still = simulate(p, {k.H, 0, 0, 0}, 10 * two_pi);
    for (const auto& s : still.states) {
        CHECK(std::fabs(s[0] - k.H) <= 1e-9);
        CHECK(std::max({s[1], s[2], s[3]}) <= 1e-9);
    }

    const double m1 = min_on_period(p.m());
    const double horizon = 60.0 / std::min({k.n, k.gamma, k.nu, m1});
    const Simulation back = simulate(p, {0.99 * k.H, 0.01 * k.H, 0.01, 0.001}, horizon);
    const CholeraState& last = back.states.back();
    CHECK(back.times.back() == horizon);
    CHECK(std::max({std::fabs(last[0] - k.H), last[1], last[2], last[3]}) <= 1e-4);
    CHECK(back.invariant_region_holds());

    const Simulation up = simulate(failing(), {0.99 * k.H, 0.01 * k.H, 0.01, 0.001}, horizon);
    double peak = 0.0;
    for (const auto& s : up.states) peak = std::max(peak, s[1]);
    CHECK(peak > 10 * 0.01 * k.H);

    CHECK_THROWS_AS(simulate(p, {1.5 * k.H, 0, 0, 0}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(simulate(p, {0.5, -0.1, 0, 0}, 1.0), std::invalid_argument);
}

TEST_CASE("property: invariant region over ten periods") {
    Gen g(73);
    const CholeraParams ps[] = {passing(), failing()};
    for (int i = 0; i < 50; ++i) {
        const double H = 1.0;
        const double S = g.uniform(0.0, H);
        const CholeraState x0{S, g.uniform(0.0, H - S), g.uniform(0.0, 5.0), g.uniform(0.0, 5.0)};
        SimulationOptions so;
        so.output_points = 201;
        const Simulation sim = simulate(ps[i % 2], x0, 10 * two_pi, so);
        CHECK(sim.min_component >= -1e-8);
        CHECK(sim.max_population_excess <= 1e-8);
    }
}
