#include <doctest.h>

#include <algorithm>
#include <cfloat>
#include <cmath>

#include "floquet/floquet.hpp"
#include "floquet/riccati.hpp"
#include "support.hpp"

using namespace floquet;
using testing_support::fn;
using testing_support::Gen;
using testing_support::rel_err;
using testing_support::two_pi;

namespace {

PlanarPeriodicSystem example41() {
    return PlanarPeriodicSystem::parse("0.1+0.2*cos(t)-1", "sin(t)", "(0+1)*sin(t)/(2+cos(t))", "0.1+0.2*cos(t)-0.5",
                                       two_pi);
}

PeriodicSolutionCertificate example41_sigma() {
    ShootingOptions so;
    so.lo = -10.0;
    so.hi = 10.0;
    const ShootingResult r = shooting_solve(riccati_from_planar(example41()), so);
    REQUIRE(r.solutions.size() == 1);
    REQUIRE(r.solutions.front().verified());
    return r.solutions.front();
}

}  // namespace

TEST_CASE("monodromy examples") {
    const auto diag = PlanarPeriodicSystem::parse("-1", "0", "0", "-2", 1.0);
    const MultiplierPair d = monodromy_multipliers(diag);
    CHECK(rel_err(d.first, Complex(std::exp(-1.0))) <= 1e-9);
    CHECK(rel_err(d.second, Complex(std::exp(-2.0))) <= 1e-9);
    CHECK(liouville_product_check(diag, d) <= 1e-10);

    const auto rot = PlanarPeriodicSystem::parse("0", "1", "-1", "0", two_pi);
    const MultiplierPair r = monodromy_multipliers(rot);
    CHECK(std::abs(r.first - 1.0) <= 1e-8);
    CHECK(std::abs(r.second - 1.0) <= 1e-8);
    CHECK(liouville_product_check(rot, r) <= 1e-10);
    REQUIRE(r.matrix.has_value());
    CHECK(classify_stability(r).verdict == Stability::uniformly_stable);
}

// The closed form (e^{-1.8 pi}, e^{-0.8 pi}) disagrees with the integrated
// monodromy (0.159447, 0.001778); the Liouville product agrees. Kept as a
// visible known failure.
TEST_CASE("example41 monodromy matches the closed form" * doctest::should_fail()) {
    const MultiplierPair p = monodromy_multipliers(example41(), {1e-12, 1e-14});
    CHECK(rel_err(p.first, Complex(std::exp(-0.8 * std::numbers::pi))) <= 1e-6);
    CHECK(rel_err(p.second, Complex(std::exp(-1.8 * std::numbers::pi))) <= 1e-6);
}

TEST_CASE("example41 monodromy: values reproduced by an independent integrator, Liouville exact") {
    const MultiplierPair p = monodromy_multipliers(example41(), {1e-12, 1e-14});
    // scipy DOP853 at rtol 1e-13
    CHECK(rel_err(p.first, Complex(0.15944658)) <= 1e-7);
    CHECK(rel_err(p.second, Complex(0.00177831)) <= 1e-5);
    CHECK(rel_err(p.first * p.second, Complex(std::exp(-2.6 * std::numbers::pi))) <= 1e-9);
}

TEST_CASE("property: randomized Liouville defect") {
    Gen g(51);
    for (int i = 0; i < 100; ++i) {
        const auto sys = g.planar();
        const MultiplierPair p = monodromy_multipliers(sys, {1e-10, 1e-12});
        CHECK(liouville_product_check(sys, p) <= 1e-8);
        CHECK(std::abs(p.first) >= std::abs(p.second));
    }
}

TEST_CASE("property: 2x2 eigenvalues reproduce trace and determinant") {
    Gen g(52);
    for (int i = 0; i < 1000; ++i) {
        Eigen::Matrix2d m;
        m << g.uniform(-5, 5), g.uniform(-5, 5), g.uniform(-5, 5), g.uniform(-5, 5);
        const auto [l1, l2] = eigenvalues_2x2(m);
        const double scale = m.cwiseAbs().maxCoeff();
        CHECK(std::abs(l1 + l2 - m.trace()) <= 8 * DBL_EPSILON * scale);
        CHECK(std::abs(l1 * l2 - m.determinant()) <= 32 * DBL_EPSILON * scale * scale);
        CHECK(std::abs(l1) >= std::abs(l2));
    }
}

TEST_CASE("normal solution: triangular case") {
    // p21 = 0, p11 - p22 = -1: sigma' = sin t - sigma, periodic solution (sin t - cos t)/2; v = exp(sin t)
    const auto sys = PlanarPeriodicSystem::parse("cos(t)-1", "sin(t)", "0", "cos(t)", two_pi);
    std::vector<double> samples(511);
    for (std::size_t j = 0; j < samples.size(); ++j) {
        const double t = two_pi * static_cast<double>(j) / 511.0;
        samples[j] = 0.5 * (std::sin(t) - std::cos(t));
    }
    const TrigSeries sigma(samples, two_pi);
    const NormalSolution ns = normal_solution_from_sigma(sys, sigma);
    for (std::size_t i = 0; i < ns.times.size(); ++i) {
        CHECK(ns.v[i] == doctest::Approx(std::exp(std::sin(ns.times[i]))).epsilon(1e-10));
        CHECK(ns.u[i] == doctest::Approx(sigma(ns.times[i]) * ns.v[i]).epsilon(1e-10));
    }
    CHECK(ns.residual <= 1e-8);
    CHECK(ns.multiplier == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("normal solution from the shooting sigma on example41") {
    const auto sys = example41();
    const PeriodicSolutionCertificate cert = example41_sigma();
    const MultiplierPair mono = monodromy_multipliers(sys, {1e-12, 1e-14});
    const MultiplierPair t1 = multipliers_thm_T1(sys, cert);
    REQUIRE(t1.sigma_multiplier.has_value());
    // the normal solution's multiplier is one of the monodromy pair
    const Complex lam = *t1.sigma_multiplier;
    CHECK(std::min(rel_err(lam, mono.first), rel_err(lam, mono.second)) <= 1e-6);
    CHECK(normal_recurrence_defect(sys, cert.sigma, lam) <= 1e-6);

    const NormalSolution ns = normal_solution_from_sigma(sys, cert.sigma);
    double worst = 0.0;
    for (std::size_t i = 0; i < ns.times.size(); ++i) {
        worst = std::max(worst, std::fabs(ns.u[i] / ns.v[i] - cert.sigma(ns.times[i])));
    }
    CHECK(worst <= 1e-8);
}

TEST_CASE("classify_stability examples") {
    auto verdict = [](std::vector<double> m, std::vector<int> mult) {
        return classify_stability(m, mult, 1e-7).verdict;
    };
    CHECK(verdict({0.3, 0.5}, {1, 1}) == Stability::uniformly_asymptotically_stable);
    CHECK(verdict({1.0, 0.4}, {1, 1}) == Stability::uniformly_stable);
    CHECK(verdict({1.3, 0.2}, {1, 1}) == Stability::unstable);
    CHECK(verdict({1.0, 1.0}, {2, 2}) == Stability::indeterminate);
    CHECK(verdict({1.0 + 5e-8, 0.4}, {1, 1}) == Stability::uniformly_stable);
    CHECK_THROWS_AS(verdict({1.0}, {1, 1}), std::invalid_argument);

    const Complex pair[] = {Complex(1.0, 0.0), Complex(1.0, 0.0)};
    CHECK(classify_stability(pair).verdict == Stability::indeterminate);
    const Complex rot[] = {std::polar(1.0, 0.3), std::polar(1.0, -0.3)};
    CHECK(classify_stability(rot).verdict == Stability::uniformly_stable);

    // Jordan block: double multiplier 1 that is not semisimple stays indeterminate
    MultiplierPair jordan{Complex(1.0), Complex(1.0), MultiplierMethod::monodromy, 0.0, std::nullopt, std::nullopt,
                          Eigen::Matrix2d{{1.0, 1.0}, {0.0, 1.0}}};
    CHECK(classify_stability(jordan).verdict == Stability::indeterminate);
}

TEST_CASE("property: classify_stability ignores the order of its input") {
    Gen g(53);
    const double pool[] = {0.2, 0.9999999, 1.0, 1.00000005, 1.0000002, 1.5, 0.5};
    for (int i = 0; i < 300; ++i) {
        std::vector<double> m(g.integer(1, 4));
        std::vector<int> k(m.size());
        for (std::size_t j = 0; j < m.size(); ++j) {
            m[j] = pool[g.integer(0, 6)];
            k[j] = g.integer(1, 2);
        }
        const Stability base = classify_stability(m, k).verdict;
        std::vector<std::size_t> idx(m.size());
        for (std::size_t j = 0; j < idx.size(); ++j) idx[j] = j;
        std::shuffle(idx.begin(), idx.end(), g.engine());
        std::vector<double> m2;
        std::vector<int> k2;
        for (auto j : idx) {
            m2.push_back(m[j]);
            k2.push_back(k[j]);
        }
        CHECK(classify_stability(m2, k2).verdict == base);
    }
}

TEST_CASE("nonlinear lift") {
    StabilityVerdict v;
    v.verdict = Stability::uniformly_asymptotically_stable;
    CHECK(classify_nonlinear_dfe(v).verdict == Stability::uniformly_asymptotically_stable);
    v.verdict = Stability::unstable;
    CHECK(classify_nonlinear_dfe(v).verdict == Stability::unstable);
    v.verdict = Stability::uniformly_stable;
    CHECK(classify_nonlinear_dfe(v).verdict == Stability::indeterminate);
    v.verdict = Stability::indeterminate;
    CHECK(classify_nonlinear_dfe(v).verdict == Stability::indeterminate);
}
