#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "floquet/floquet.hpp"
#include "floquet/ledger.hpp"
#include "floquet/riccati.hpp"

namespace floquet {

/// Constant rates of the SIRB + phage model. r = n + gamma.
struct CholeraConstants {
    double H = 1.0;        // total human population
    double n = 0.1;        // birth/death rate
    double gamma = 0.9;    // recovery rate
    double K = 1.0;        // vibrio half saturation, human contact
    double K_tilde = 1.0;  // vibrio half saturation, phage
    double delta = 0.5;    // vibrio death by phage predation
    double kappa = 0.1;    // phage growth from feeding
    double xi = 0.1;       // human phage shedding
    double nu = 0.2;       // phage death
};

/// Constants plus the seasonal contact d(t), shedding e(t) and vibrio death m(t).
class CholeraParams {
public:
    CholeraParams(CholeraConstants constants, PeriodicFn d, PeriodicFn e, PeriodicFn m);

    const CholeraConstants& constants() const { return k_; }
    const PeriodicFn& d() const { return d_; }
    const PeriodicFn& e() const { return e_; }
    const PeriodicFn& m() const { return m_; }
    double r() const { return k_.n + k_.gamma; }
    double period() const { return d_.period(); }

private:
    CholeraConstants k_;
    PeriodicFn d_, e_, m_;
};

class NegativeStateError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

using CholeraState = std::array<double, 4>;  // S, I, B, P

/// Components below this are reported; below negative_state_error the rhs throws.
inline constexpr double negative_state_warning = -1e-9;
inline constexpr double negative_state_error = -1e-6;

/// dS = n(H - S) - d B/(K + B) S
/// dI = d B/(K + B) S - r I
/// dB = e I - m B - delta B/(K~ + B) P
/// dP = xi I + kappa B/(K~ + B) P - nu P
CholeraState rhs_full(const CholeraParams& p, const CholeraState& x, double t);

/// Linearisation at the DFE in (H - S, I, B, P).
PeriodicMatrix linearization_matrix(const CholeraParams& p);

/// The (I, B) block: [[-r, d H/K], [e, -m]].
PlanarPeriodicSystem subsystem(const CholeraParams& p);

/// A = max d, E = max e, m1 = min m, M and N of the subsystem kernel,
/// 2 E M A T H/K < min(m1, r), int e <= 1/(4MN), r != mean(m).
ConditionLedger check_seasonal_conditions(const CholeraParams& p);

struct DfeStabilityReport {
    ConditionLedger ledger;
    MultiplierPair monodromy;
    std::optional<MultiplierPair> thm_T1;
    std::string thm_T1_reason;  // why thm_T1 is absent, if it is
    std::optional<PeriodicSolutionCertificate> certificate;
    /// |sigma| <= 2 M A T H/K, and the two pointwise sign conditions on
    /// -r - e sigma and -m + e sigma; present with the certificate.
    std::vector<Condition> certificate_checks;
    Complex demography_multiplier;  // exp(-n T)
    Complex phage_multiplier;       // exp(-nu T)
    std::vector<Complex> multipliers;  // all four, monodromy pair for the block
    StabilityVerdict linear;
    StabilityVerdict verdict;  // after the nonlinear lift
};

struct DfeOptions {
    OdeTolerances tol{1e-11, 1e-13};
    double tau = 1e-7;
};

DfeStabilityReport dfe_stability(const CholeraParams& p, const DfeOptions& opts = {});

struct SimulationOptions {
    /// Equispaced output times over [0, horizon], inclusive.
    std::size_t output_points = 1001;
    OdeTolerances tol{1e-10, 1e-12};
};

struct Simulation {
    std::vector<double> times;
    std::vector<CholeraState> states;
    /// Most negative component seen at any accepted step.
    double min_component = 0.0;
    /// Largest S + I - H seen at any accepted step.
    double max_population_excess = 0.0;
    std::vector<std::string> warnings;

    bool invariant_region_holds(double slack = 1e-8) const {
        return min_component >= -slack && max_population_excess <= slack;
    }
};

/// Requires a nonnegative initial state with S <= H.
Simulation simulate(const CholeraParams& p, const CholeraState& initial, double horizon,
                    const SimulationOptions& opts = {});

}  // namespace floquet
