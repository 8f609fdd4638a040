#include <doctest.h>

#include <cmath>
#include <numbers>

#include "floquet/riccati.hpp"
#include "support.hpp"

using namespace floquet;
using testing_support::fn;
using testing_support::Gen;
using testing_support::lit;
using testing_support::rel_err;
using testing_support::two_pi;

namespace {

const double e2pi = std::exp(two_pi);

PlanarPeriodicSystem example41(double A = 1.0, double B = 0.5) {
    return PlanarPeriodicSystem::parse("0.1+0.2*cos(t)-" + lit(A), "sin(t)", "(0+1)*sin(t)/(2+cos(t))",
                                       "0.1+0.2*cos(t)-" + lit(B), two_pi);
}

// planar system whose Riccati association is (a, b, c): p11 = b, p22 = 0
PlanarPeriodicSystem planar_for(const std::string& a, const std::string& b, const std::string& c) {
    return PlanarPeriodicSystem::parse(b, c, "-(" + a + ")", "0", two_pi);
}

double sup_diff(const TrigSeries& s, const std::function<double(double)>& f) {
    double worst = 0.0;
    for (int i = 0; i < 2000; ++i) {
        const double t = two_pi * i / 2000.0;
        worst = std::max(worst, std::fabs(s(t) - f(t)));
    }
    return worst;
}

// A generated Picard instance: b > 0, zero-mean-free c, and a scaled so that
// int|a| is `margin` times below the Schauder bound.
struct Generated {
    RiccatiProblem prob;
    PlanarPeriodicSystem sys;
};

Generated generate(Gen& g, double margin) {
    const std::string b = "1+" + lit(g.uniform(-0.3, 0.3)) + "*cos(t)+" + lit(g.uniform(-0.3, 0.3)) + "*sin(2*t)";
    const std::string c = g.trig_poly(g.integer(1, 3), 1.0);
    const std::string raw = g.trig_poly(g.integer(0, 2), 1.0);
    const SchauderConstants k = schauder_constants(RiccatiProblem(fn("0"), fn(b), fn(c)));
    const PeriodicFn r = fn(raw);
    const double int_abs = integrate_adaptive([&](double t) { return std::fabs(r(t)); }, 0.0, two_pi, 1e-12);
    const double scale = 1.0 / (4.0 * k.M_upper * k.N_upper) / margin / int_abs;
    const std::string a = lit(scale) + "*(" + raw + ")";
    return {RiccatiProblem(fn(a), fn(b), fn(c)), planar_for(a, b, c)};
}

}  // namespace

TEST_CASE("riccati_from_planar mapping") {
    const auto sys = PlanarPeriodicSystem::parse("-1", "sin(t)", "0.3*(1+0.5*sin(t))", "-(2+0.2*sin(t))", two_pi);
    const RiccatiProblem p = riccati_from_planar(sys);
    for (double t : {0.0, 0.7, 2.5, 5.9}) {
        CHECK(p.a(t) == doctest::Approx(-0.3 * (1 + 0.5 * std::sin(t))));
        CHECK(p.b(t) == doctest::Approx(-1 + 2 + 0.2 * std::sin(t)));
        CHECK(p.c(t) == doctest::Approx(std::sin(t)));
    }
    const RiccatiProblem lin = riccati_from_planar(PlanarPeriodicSystem::parse("1", "cos(t)", "0", "0", two_pi));
    CHECK(lin.a(1.3) == 0.0);

    // example41: a = -(alpha+1) sin/(beta+cos), b = p11 - p22 = B - A
    const RiccatiProblem ex = riccati_from_planar(example41());
    for (double t : {0.4, 3.0}) {
        CHECK(ex.a(t) == doctest::Approx(-std::sin(t) / (2 + std::cos(t))));
        CHECK(ex.b(t) == doctest::Approx(-0.5));
        CHECK(ex.c(t) == doctest::Approx(std::sin(t)));
    }
    CHECK_THROWS_AS(RiccatiProblem(fn("sin(t)"), fn("1", 1.0), fn("0")), std::invalid_argument);
}

TEST_CASE("Green kernel: constant-b closed form and the unit jump") {
    const double beta = 0.7;
    const GreenKernel k(fn(lit(beta)));
    const double E = std::exp(beta * two_pi);
    for (double t : {0.5, 2.0, 6.0}) {
        for (double s : {0.1, 1.9, 4.4, 6.2}) {
            const double want = s <= t ? std::exp(beta * (t - s)) / (1 - E) : E * std::exp(beta * (t - s)) / (1 - E);
            CHECK(k(t, s) == doctest::Approx(want).epsilon(1e-10));
        }
    }
    const GreenKernel v(fn("0.3+sin(t)+0.5*cos(2*t)"));
    for (int i = 0; i < 64; ++i) {
        const double t = two_pi * i / 64.0;
        CHECK(std::fabs(v(t, t) - v(t, std::nextafter(t, INFINITY)) - 1.0) <= 1e-8);
    }
    CHECK_THROWS_AS(GreenKernel(fn("sin(t)")), KernelUndefinedError);
    CHECK_THROWS_AS(GreenKernel(fn("0")), KernelUndefinedError);
}

TEST_CASE("Green kernel: spectral solve agrees with quadrature and solves the ODE") {
    const PeriodicFn b = fn("-0.4+0.5*sin(t)");
    const PeriodicFn f = fn("cos(t)+0.3*sin(3*t)+0.1");
    const GreenKernel k(b);
    std::vector<double> f_at(k.nodes()), times(k.nodes());
    for (std::size_t j = 0; j < k.nodes(); ++j) {
        times[j] = k.node(j);
        f_at[j] = f(times[j]);
    }
    const std::vector<double> x = k.solve_periodic(f_at);
    std::vector<double> probe;
    for (std::size_t j = 0; j < k.nodes(); j += 37) probe.push_back(times[j]);
    const std::vector<double> direct = k.apply_direct(f.as_function(), probe);
    for (std::size_t i = 0; i < probe.size(); ++i) CHECK(direct[i] == doctest::Approx(x[37 * i]).epsilon(1e-9));
    const TrigSeries xs(x, two_pi);
    for (double t : {0.2, 1.5, 4.0}) CHECK(std::fabs(xs.derivative(t) - b(t) * xs(t) - f(t)) <= 1e-9);
}

TEST_CASE("Schauder constants: closed forms") {
    const SchauderConstants k = schauder_constants(RiccatiProblem(fn("0"), fn("1"), fn("sin(t)")));
    CHECK(k.M == doctest::Approx(e2pi / (e2pi - 1)).epsilon(1e-9));
    CHECK(k.N == doctest::Approx(std::sqrt(2.0) / 2).epsilon(1e-9));
    CHECK(sup_diff(k.psi, [](double t) { return -(std::sin(t) + std::cos(t)) / 2; }) <= 1e-9);
    CHECK(k.psi_residual <= 1e-9);
    CHECK(k.M_upper == doctest::Approx(k.M * (1 + 1e-6)).epsilon(1e-15));

    // dense-grid supremum of the closed-form kernel as an independent oracle
    double grid = 0.0;
    for (int i = 0; i <= 400; ++i) {
        for (int j = 0; j <= 400; ++j) {
            const double t = two_pi * i / 400, s = two_pi * j / 400;
            const double g = s <= t ? std::exp(t - s) / (1 - e2pi) : e2pi * std::exp(t - s) / (1 - e2pi);
            grid = std::max(grid, std::fabs(g));
        }
    }
    CHECK(k.M == doctest::Approx(grid).epsilon(1e-9));

    const SchauderConstants z = schauder_constants(RiccatiProblem(fn("sin(t)"), fn("1"), fn("0")));
    CHECK(z.N == 0.0);
    CHECK(sup_diff(z.psi, [](double) { return 0.0; }) == 0.0);
}

TEST_CASE("thm_T1 ledger examples") {
    const ConditionLedger tri = check_thm_T1(PlanarPeriodicSystem::parse("1", "sin(t)", "0", "0", two_pi));
    CHECK(tri.at("ii_schauder").pass);
    CHECK(tri.value("int_abs_p21") == 0.0);

    const double bound = 1.0 / (4.0 * (e2pi / (e2pi - 1)) * (std::sqrt(2.0) / 2));
    CHECK(bound == doctest::Approx(0.3528).epsilon(1e-3));
    const ConditionLedger small = check_thm_T1(planar_for("0.01", "1", "sin(t)"));
    CHECK(small.all_pass());
    CHECK(small.value("schauder_bound") == doctest::Approx(bound).epsilon(1e-5));
    const ConditionLedger big = check_thm_T1(planar_for("0.1", "1", "sin(t)"));
    CHECK_FALSE(big.at("ii_schauder").pass);
    CHECK(big.at("ii_schauder").slack() < 0);

    const ConditionLedger ab = check_thm_T1(example41(0.5, 0.5));
    CHECK_FALSE(ab.at("i_b_integral_nonzero").pass);
}

TEST_CASE("thm_A ledger examples") {
    const ConditionLedger ok = check_thm_A(RiccatiProblem(fn("sin(t)"), fn("1"), fn("sin(t)")));
    CHECK(ok.all_pass());
    CHECK(ok.value("A") == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(ok.value("radius") == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(default_shooting_interval(RiccatiProblem(fn("sin(t)"), fn("1"), fn("sin(t)"))).second ==
          doctest::Approx(0.5).epsilon(1e-6));

    CHECK_FALSE(check_thm_A(RiccatiProblem(fn("sin(t)"), fn("cos(t)"), fn("sin(t)"))).at("b_lower_positive").pass);
    CHECK_FALSE(check_thm_A(RiccatiProblem(fn("sin(t)"), fn("1"), fn("0.1"))).at("c_integral_zero").pass);
}

TEST_CASE("Picard examples") {
    const RiccatiProblem lin(fn("0"), fn("1"), fn("sin(t)"));
    const PicardResult r0 = picard_solve(lin);
    CHECK(r0.iterations == 1);
    CHECK(r0.schauder_condition_holds);
    CHECK(sup_diff(r0.certificate.sigma, [](double t) { return -(std::sin(t) + std::cos(t)) / 2; }) <= 1e-12);

    const PicardResult r = picard_solve(RiccatiProblem(fn("0.01"), fn("1"), fn("sin(t)")));
    CHECK(r.certificate.verified());
    CHECK(r.certificate.residual <= 1e-9);
    REQUIRE(r.certificate.membership_defect.has_value());
    CHECK(*r.certificate.membership_defect == 0.0);
    CHECK(r.certificate.source == SolutionSource::picard);

    // a = 1 violates the condition about 18x: the outcome is recorded, not asserted
    try {
        const PicardResult big = picard_solve(RiccatiProblem(fn("1"), fn("1"), fn("sin(t)")));
        CHECK_FALSE(big.schauder_condition_holds);
        CHECK_FALSE(big.certificate.warnings.empty());
        MESSAGE("a = 1: converged anyway in " << big.iterations << " iterations");
    } catch (const PicardError& e) {
        MESSAGE("a = 1: " << std::string(e.what()));
    }
    CHECK_THROWS_AS(picard_solve(RiccatiProblem(fn("1"), fn("sin(t)"), fn("1"))), KernelUndefinedError);
}

TEST_CASE("shooting examples") {
    ShootingOptions so;
    so.lo = -2.0;
    so.hi = 2.0;
    const ShootingResult zero = shooting_solve(RiccatiProblem(fn("cos(t)"), fn("1+0.5*sin(t)"), fn("0")), so);
    bool found_zero = false;
    for (const auto& c : zero.solutions) found_zero = found_zero || (std::fabs(c.x0) <= 1e-9 && c.verified());
    CHECK(found_zero);

    // manufactured sigma = sin t
    const RiccatiProblem man(fn("sin(t)"), fn("1"), fn("cos(t)-sin(t)-sin(t)^3"));
    const ShootingResult m = shooting_solve(man, so);
    REQUIRE(m.solutions.size() >= 1);
    const auto& c = m.solutions.front();
    CHECK(std::fabs(c.x0) <= 1e-9);
    CHECK(sup_diff(c.sigma, [](double t) { return std::sin(t); }) <= 1e-7);
    CHECK(c.orthogonality_defect() == doctest::Approx(std::numbers::pi).epsilon(1e-9));
    CHECK(c.verified());

    ShootingOptions empty = so;
    empty.lo = 5.0;
    empty.hi = 6.0;
    CHECK(shooting_solve(man, empty).note.find("no periodic solution found") != std::string::npos);
}

// The only bounded periodic solution has int a sigma = -0.6772278 (see the
// decisions log); the orthogonality bound of the example cannot hold.
TEST_CASE("example41 Riccati: a certificate with orthogonality defect <= 1e-6" * doctest::should_fail()) {
    ShootingOptions so;
    so.lo = -10.0;
    so.hi = 10.0;
    const ShootingResult r = shooting_solve(riccati_from_planar(example41()), so);
    REQUIRE_FALSE(r.solutions.empty());
    bool any = false;
    for (const auto& c : r.solutions) any = any || (c.verified() && c.orthogonality_defect() <= 1e-6);
    CHECK(any);
}

TEST_CASE("example41 Riccati: the certified solution and its moment") {
    ShootingOptions so;
    so.lo = -10.0;
    so.hi = 10.0;
    const ShootingResult r = shooting_solve(riccati_from_planar(example41()), so);
    REQUIRE(r.solutions.size() == 1);
    CHECK(r.solutions[0].x0 == doctest::Approx(-0.70211004).epsilon(1e-7));
    CHECK(r.solutions[0].a_moment == doctest::Approx(-0.6772278).epsilon(1e-6));
}

TEST_CASE("multipliers_thm_T1 examples") {
    const auto tri = PlanarPeriodicSystem::parse("0.3+cos(t)", "sin(t)", "0", "-0.2", two_pi);
    const PicardResult pr = picard_solve(riccati_from_planar(tri));
    const MultiplierPair p = multipliers_thm_T1(tri, pr.certificate);
    CHECK(rel_err(p.first, Complex(std::exp(0.3 * two_pi))) <= 1e-10);
    CHECK(rel_err(p.second, Complex(std::exp(-0.2 * two_pi))) <= 1e-10);

    const auto sys = example41();
    ShootingOptions so;
    so.lo = -10.0;
    so.hi = 10.0;
    const ShootingResult r = shooting_solve(riccati_from_planar(sys), so);
    REQUIRE_FALSE(r.solutions.empty());
    const MultiplierPair t1 = multipliers_thm_T1(sys, r.solutions.front());
    const MultiplierPair mono = monodromy_multipliers(sys, {1e-12, 1e-14});
    CHECK(rel_err(t1.first, mono.first) <= 1e-6);
    CHECK(rel_err(t1.second, mono.second) <= 1e-6);
    CHECK(std::abs(t1.first * t1.second - std::exp(sys.trace_integral())) <= 1e-12 * std::exp(sys.trace_integral()));

    PeriodicSolutionCertificate bad = r.solutions.front();
    bad.residual = 1.0;
    CHECK_THROWS_AS(multipliers_thm_T1(sys, bad), std::invalid_argument);
}

TEST_CASE("multipliers_thm_T3 gate and formula") {
    CHECK_THROWS_AS(multipliers_thm_T3(PlanarPeriodicSystem::parse("cos(t)", "sin(t)", "sin(t)", "cos(t)", two_pi)),
                    HypothesisError);
    // example41 as written: b = B - A < 0 fails hypothesis (ii)
    try {
        multipliers_thm_T3(example41());
        FAIL("expected HypothesisError");
    } catch (const HypothesisError& e) {
        CHECK_FALSE(e.ledger().at("ii_b_lower_positive").pass);
        CHECK(e.ledger().at("i_p21_integral_zero").pass);
        CHECK(e.ledger().at("i_p12_integral_zero").pass);
    }
    const MultiplierPair f = explicit_formula_multipliers(example41());
    CHECK(rel_err(f.first, Complex(std::exp(-0.8 * std::numbers::pi))) <= 1e-10);
    CHECK(rel_err(f.second, Complex(std::exp(-1.8 * std::numbers::pi))) <= 1e-10);
    CHECK(std::abs(f.first) == doctest::Approx(8.096e-2).epsilon(1e-3));
    CHECK(std::abs(f.second) == doctest::Approx(3.504e-3).epsilon(1e-3));
}

TEST_CASE("property: Picard iterates stay in the ball and agree with monodromy (margin 2x)") {
    Gen g(61);
    for (int i = 0; i < 20; ++i) {
        const Generated inst = generate(g, 2.0);
        REQUIRE(check_thm_T1(inst.sys).all_pass());
        PicardResult r;
        REQUIRE_NOTHROW(r = picard_solve(inst.prob));
        CHECK(r.schauder_condition_holds);
        REQUIRE(r.certificate.membership_defect.has_value());
        CHECK(*r.certificate.membership_defect == 0.0);
        CHECK(r.certificate.residual <= 1e-9);
        const MultiplierPair t1 = multipliers_thm_T1(inst.sys, r.certificate);
        const MultiplierPair mono = monodromy_multipliers(inst.sys, {1e-12, 1e-14});
        CHECK(rel_err(t1.first, mono.first) <= 1e-6);
        CHECK(rel_err(t1.second, mono.second) <= 1e-6);
    }
}

TEST_CASE("property: stored certificate residual matches a fresh recomputation within 10x") {
    Gen g(62);
    for (int i = 0; i < 20; ++i) {
        const Generated inst = generate(g, 1.5);
        const PicardResult r = picard_solve(inst.prob);
        const auto& c = r.certificate;
        const double fresh = riccati_residual(inst.prob, c.sigma, 2 * c.sigma.size());
        const double floor = 1e-13;
        CHECK(std::max(fresh, floor) <= 10.0 * std::max(c.residual, floor));
        CHECK(std::max(c.residual, floor) <= 10.0 * std::max(fresh, floor));
    }
}

TEST_CASE("property: u/v of a planar solution solves the associated Riccati equation") {
    Gen g(63);
    int tested = 0;
    for (int i = 0; i < 40; ++i) {
        const auto sys = g.planar(2, 0.5);
        const double x0 = g.uniform(-1.0, 1.0);
        const double v0 = g.uniform(1.0, 2.0);
        double defect = 0.0;
        try {
            defect = ratio_riccati_defect(sys, x0, v0);
        } catch (const std::exception&) {
            continue;  // v vanished or the Riccati solution escaped: not a round-trip instance
        }
        CHECK(defect <= 1e-7);
        ++tested;
    }
    CHECK(tested >= 20);
}

// The explicit formula needs the orthogonal solution of the existence theorem,
// which generally does not exist (see the decisions log). Kept visible.
TEST_CASE("property: thm_T3 multipliers agree with monodromy on ledger-passing instances" * doctest::should_fail()) {
    Gen g(64);
    int tested = 0;
    for (int i = 0; i < 20; ++i) {
        const std::string p11 = "1+" + g.trig_poly(1, 0.3);
        const auto sys = PlanarPeriodicSystem::parse(p11, g.trig_poly(2, 1.0, true), g.trig_poly(2, 1.0, true),
                                                     g.trig_poly(1, 0.2), two_pi);
        if (!check_thm_T3(sys).all_pass()) continue;
        ++tested;
        const MultiplierPair t3 = multipliers_thm_T3(sys);
        const MultiplierPair mono = monodromy_multipliers(sys, {1e-12, 1e-14});
        CHECK(rel_err(t3.first, mono.first) <= 1e-6);
        CHECK(rel_err(t3.second, mono.second) <= 1e-6);
    }
    REQUIRE(tested > 0);
}
