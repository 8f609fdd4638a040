#pragma once

#include <Eigen/Dense>

#include <complex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "floquet/ode.hpp"
#include "floquet/periodic.hpp"

namespace floquet {

using Complex = std::complex<double>;

/// u' = p11 u + p12 v,  v' = p21 u + p22 v, all entries sharing one period.
class PlanarPeriodicSystem {
public:
    PlanarPeriodicSystem(PeriodicFn p11, PeriodicFn p12, PeriodicFn p21, PeriodicFn p22);

    static PlanarPeriodicSystem parse(const std::string& p11, const std::string& p12, const std::string& p21,
                                      const std::string& p22, double period);

    const PeriodicFn& p11() const { return p11_; }
    const PeriodicFn& p12() const { return p12_; }
    const PeriodicFn& p21() const { return p21_; }
    const PeriodicFn& p22() const { return p22_; }
    double period() const { return period_; }

    Eigen::Matrix2d at(double t) const;
    PeriodicMatrix as_matrix() const;
    /// Integral of p11 + p22 over one period.
    double trace_integral() const;

private:
    PeriodicFn p11_, p12_, p21_, p22_;
    double period_;
};

enum class MultiplierMethod { monodromy, thm_T1, thm_T3 };
std::string to_string(MultiplierMethod m);

struct MultiplierPair {
    Complex first;   // larger modulus
    Complex second;
    MultiplierMethod method = MultiplierMethod::monodromy;
    /// Relative defect of first*second against exp(integral of trace).
    double product_defect = 0.0;
    /// thm_T1 only: the multiplier carried by the normal solution built from sigma.
    std::optional<Complex> sigma_multiplier;
    /// thm_T1 only: the periodic Riccati solution the pair was computed from.
    std::optional<TrigSeries> sigma;
    /// monodromy only: Phi(T) itself, so a double multiplier can be tested for semisimplicity.
    std::optional<Eigen::Matrix2d> matrix;
};

/// Sorted by descending modulus, ties by descending real part.
std::pair<Complex, Complex> sort_multipliers(Complex a, Complex b);

/// Closed-form 2x2 eigenvalues from trace and determinant, sorted.
std::pair<Complex, Complex> eigenvalues_2x2(const Eigen::Matrix2d& m);

/// Eigenvalues of the numerically integrated monodromy matrix Phi(T).
MultiplierPair monodromy_multipliers(const PlanarPeriodicSystem& sys, const OdeTolerances& tol = {});

/// |l1*l2 - exp(int trace)| / |exp(int trace)|
double liouville_product_check(const PlanarPeriodicSystem& sys, const MultiplierPair& pair);

/// Normal solution u = sigma*v, v = exp(int_k^t p21 sigma + p22), sampled on
/// `points` equispaced times over [k, k + periods*T].
struct NormalSolution {
    std::vector<double> times;
    std::vector<double> u;
    std::vector<double> v;
    /// v(k+T) / v(k)
    double multiplier = 0.0;
    /// max over samples of the planar-system residual divided by (1 + |state|)
    double residual = 0.0;
};

NormalSolution normal_solution_from_sigma(const PlanarPeriodicSystem& sys, const TrigSeries& sigma, double k = 0.0,
                                          std::size_t points = 257, int periods = 1);

/// Integrates the planar system over one period from (sigma(t_i), 1) at each sample and returns
/// max_i |phi(t_i + T) - lambda phi(t_i)| / |lambda phi(t_i)| over `samples` points in [0, T).
double normal_recurrence_defect(const PlanarPeriodicSystem& sys, const TrigSeries& sigma, Complex lambda,
                                std::size_t samples = 16, const OdeTolerances& tol = {1e-12, 1e-14});

/// Integrates the planar system from (u0, v0) and, independently, the
/// associated Riccati equation from u0/v0; returns max |u/v - x| at `samples`
/// points of [0, T]. Throws if v vanishes on the way.
double ratio_riccati_defect(const PlanarPeriodicSystem& sys, double u0, double v0, std::size_t samples = 64,
                            const OdeTolerances& tol = {1e-12, 1e-14});

enum class Stability { uniformly_asymptotically_stable, uniformly_stable, unstable, indeterminate };
std::string to_string(Stability s);

struct StabilityVerdict {
    Stability verdict = Stability::indeterminate;
    std::string rationale;
    std::vector<double> moduli;
};

/// Moduli compared against 1 with band tau. Multiplicity of a unit-modulus
/// multiplier is the number of entries within tau of it.
StabilityVerdict classify_stability(std::span<const Complex> multipliers, double tau = 1e-7);
StabilityVerdict classify_stability(std::span<const double> moduli, std::span<const int> multiplicities,
                                    double tau = 1e-7);

/// Verdict for a planar pair. A double multiplier whose Phi(T) is within tau of
/// a multiple of the identity is semisimple (two Jordan blocks of size 1) and
/// counts as simple; otherwise falls back to the proximity rule above.
StabilityVerdict classify_stability(const MultiplierPair& pair, double tau = 1e-7);

/// Lifts a verdict for X' = A(t)X to X' = A(t)X + F(t,X) with F = o(|X|)
/// uniformly in t. Only asymptotic stability and instability carry over.
StabilityVerdict classify_nonlinear_dfe(const StabilityVerdict& linear);

}  // namespace floquet
