#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "floquet/floquet.hpp"
#include "floquet/kernels.hpp"
#include "floquet/ledger.hpp"
#include "floquet/ode.hpp"
#include "floquet/periodic.hpp"

namespace floquet {

/// Number of equispaced nodes used to carry periodic Riccati solutions
/// (odd, so the trigonometric interpolant has no Nyquist term).
inline constexpr std::size_t default_solution_nodes = 511;

/// x' = c(t) + b(t) x + a(t) x^2
struct RiccatiProblem {
    RiccatiProblem(PeriodicFn a, PeriodicFn b, PeriodicFn c);

    PeriodicFn a, b, c;

    double period() const { return a.period(); }
    double rhs(double t, double x) const { return c(t) + b(t) * x + a(t) * x * x; }
};

/// a = -p21, b = p11 - p22, c = p12.
RiccatiProblem riccati_from_planar(const PlanarPeriodicSystem& sys);

class KernelUndefinedError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Periodic Green kernel of x' - b(t) x:
///   G(t,s) = exp(B(t) - B(s)) / (1 - E)      for 0 <= s <= t <= T
///   G(t,s) = E exp(B(t) - B(s)) / (1 - E)    for 0 <= t <  s <= T
/// with B(t) = integral of b over [0,t] and E = exp(B(T)).
///
/// B is carried as mean*t plus a trigonometric series for the periodic part,
/// which also makes the kernel diagonal in Fourier space after the gauge change
/// x = exp(B~) y; solve_periodic uses that form.
class GreenKernel {
public:
    explicit GreenKernel(const PeriodicFn& b, std::size_t nodes = default_solution_nodes);
    /// Kernel for b known only at the equispaced nodes (odd count).
    static GreenKernel from_samples(std::vector<double> b_at_nodes, double period);

    double operator()(double t, double s) const;
    double primitive(double t) const;
    double growth() const { return growth_; }
    double b_integral() const { return integral_; }
    double period() const { return period_; }
    std::size_t nodes() const { return tilde_.size(); }
    double node(std::size_t j) const { return tilde_.node(j); }

    /// Periodic solution of x' = b x + f, f given at the kernel nodes.
    std::vector<double> solve_periodic(std::span<const double> f_at_nodes) const;

    /// psi(t) = integral of G(t,s) f(s) ds by adaptive quadrature on [0,t] and
    /// [t,T] separately, at each requested time.
    std::vector<double> apply_direct(const ScalarFn& f, std::span<const double> times,
                                     kernels::Exec exec = kernels::default_exec) const;

    /// Raw grid supremum of |G| over a (samples+1)^2 grid including both ends.
    double sup_abs(std::size_t samples, kernels::Exec exec = kernels::default_exec) const;

private:
    GreenKernel() = default;
    void init(std::vector<double> b_at_nodes);

    double period_ = 0.0;
    double integral_ = 0.0;
    double mean_ = 0.0;
    double growth_ = 0.0;
    TrigSeries tilde_;
    std::vector<double> tilde_at_nodes_;
};

struct SchauderConstants {
    double M = 0.0;        // raw grid supremum of |G|
    double N = 0.0;        // sup |psi|
    double M_upper = 0.0;  // M * (1 + 1e-6)
    double N_upper = 0.0;  // N * (1 + 1e-6)
    TrigSeries psi;
    /// sup |psi' - b psi - c| on a doubled grid
    double psi_residual = 0.0;
    double b_integral = 0.0;
};

SchauderConstants schauder_constants(const RiccatiProblem& prob, std::size_t nodes = default_solution_nodes);

/// thm_T1 hypotheses: (i) int(p11 - p22) != 0, (ii) int|p21| <= 1/(4MN).
ConditionLedger check_thm_T1(const PlanarPeriodicSystem& sys);

/// Existence hypotheses for the orthogonal periodic solution: int a = 0,
/// |a| <= A, 0 < b_lower <= b(t), int c = 0. Reports the ball radius b_lower/(2A).
ConditionLedger check_thm_A(const RiccatiProblem& prob);

/// Explicit-multiplier hypotheses: int p21 = int p12 = 0, |p21| <= A,
/// p11 - p22 >= b_lower > 0.
ConditionLedger check_thm_T3(const PlanarPeriodicSystem& sys);

/// Zero-integral tolerance 1e-9 * T * (1 + sup|f|).
double zero_integral_tolerance(const PeriodicFn& f);

enum class SolutionSource { picard, shooting };
std::string to_string(SolutionSource s);

struct PeriodicSolutionCertificate {
    TrigSeries sigma;
    double x0 = 0.0;
    SolutionSource source = SolutionSource::shooting;

    double residual = 0.0;             // sup |sigma' - c - b sigma - a sigma^2| on a doubled grid
    double periodicity_defect = 0.0;   // |x(T) - x(0)| from one integrated period
    std::optional<double> membership_defect;  // max(0, |sigma - psi| - N), when the kernel exists
    double a_moment = 0.0;             // int a sigma
    double c_moment = 0.0;             // int c sigma
    double sup_norm = 0.0;
    /// int (b + 2 a sigma); the Poincare map has derivative exp(this) at x0.
    double stability_exponent = 0.0;

    double residual_tolerance = 1e-9;
    double periodicity_tolerance = 1e-9;
    std::vector<std::string> warnings;

    double orthogonality_defect() const { return std::abs(a_moment); }
    double c_orthogonality_defect() const { return std::abs(c_moment); }
    bool verified() const { return residual <= residual_tolerance && periodicity_defect <= periodicity_tolerance; }
};

struct CertifyOptions {
    std::size_t nodes = default_solution_nodes;
    OdeTolerances tol{1e-12, 1e-14};
    double residual_tolerance = 1e-9;
    double periodicity_tolerance = 1e-9;
    /// Supplies psi and N for the membership defect; computed when absent.
    const SchauderConstants* constants = nullptr;
};

/// Residual of a candidate sigma against prob on `points` equispaced times.
double riccati_residual(const RiccatiProblem& prob, const TrigSeries& sigma, std::size_t points,
                        kernels::Exec exec = kernels::default_exec);

/// Integrates from x0 over one period in the direction where the solution is
/// attracting and builds the certificate from the sampled trajectory.
PeriodicSolutionCertificate certify_periodic_solution(const RiccatiProblem& prob, double x0, SolutionSource source,
                                                      const CertifyOptions& opts = {});

struct PicardOptions {
    std::size_t max_iter = 200;
    double tol = 1e-9;
    std::size_t nodes = default_solution_nodes;
    /// Iterates farther than this multiple of N from psi count as escaped.
    double escape_factor = 1.1;
};

class PicardError : public std::runtime_error {
public:
    enum class Kind { not_converged, escaped, residual };
    PicardError(Kind kind, std::size_t iterations, double last_change, const std::string& detail);
    Kind kind() const noexcept { return kind_; }
    std::size_t iterations() const noexcept { return iterations_; }
    double last_change() const noexcept { return last_change_; }

private:
    Kind kind_;
    std::size_t iterations_;
    double last_change_;
};

struct PicardResult {
    PeriodicSolutionCertificate certificate;
    std::size_t iterations = 0;
    double last_change = 0.0;
    /// int |a| <= 1/(4 M N) with the upward-rounded constants.
    bool schauder_condition_holds = false;
    SchauderConstants constants;
};

/// phi_{k+1}(t) = int G(t,s) [a(s) phi_k(s)^2 + c(s)] ds from phi_0 = psi.
PicardResult picard_solve(const RiccatiProblem& prob, const PicardOptions& opts = {});

struct ShootingOptions {
    double lo = -10.0;
    double hi = 10.0;
    std::size_t grid = 64;
    double root_tol = 1e-10;
    double dedup_spacing = 1e-6;
    OdeTolerances tol{1e-12, 1e-14};
    std::size_t nodes = default_solution_nodes;
    kernels::Exec exec = kernels::default_exec;
};

/// One grid point of the scan. Gaps are x(T; x0) - x0 for the forward map and
/// x(0; x(T) = x0) - x0 for the backward map; empty when the solution escaped.
struct ShootingScanPoint {
    double x0 = 0.0;
    std::optional<double> forward_gap;
    std::optional<double> backward_gap;
};

struct ShootingResult {
    std::vector<PeriodicSolutionCertificate> solutions;  // ascending x0
    std::vector<ShootingScanPoint> scan;
    std::string note;
};

/// Interval [-r, r] with r = b_lower/(2A) when the existence hypotheses give
/// one, else [-10, 10].
std::pair<double, double> default_shooting_interval(const RiccatiProblem& prob);

/// Scans the forward and backward Poincare maps on a grid; blow-up marks a
/// point as escaped. Every sign change between non-escaped neighbours is
/// refined by bisection and certified. Roots closer than dedup_spacing merge.
ShootingResult shooting_solve(const RiccatiProblem& prob, const ShootingOptions& opts = {});

/// Forward Poincare map x0 -> x(T; x0); empty on blow-up.
std::optional<double> poincare_forward(const RiccatiProblem& prob, double x0, const OdeTolerances& tol);
/// Backward map: x(T) = x0 -> x(0); empty on blow-up.
std::optional<double> poincare_backward(const RiccatiProblem& prob, double x0, const OdeTolerances& tol);

/// l1 = exp int (p22 + p21 sigma), l2 = exp int (p11 - p21 sigma).
MultiplierPair multipliers_thm_T1(const PlanarPeriodicSystem& sys, const PeriodicSolutionCertificate& cert);

/// exp int p11 and exp int p22; throws HypothesisError when check_thm_T3 fails.
MultiplierPair multipliers_thm_T3(const PlanarPeriodicSystem& sys);

/// The same explicit formula without the hypothesis gate, for reporting how far
/// it lands from the monodromy multipliers on instances that fail the ledger.
MultiplierPair explicit_formula_multipliers(const PlanarPeriodicSystem& sys);

}  // namespace floquet
