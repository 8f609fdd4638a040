#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "floquet/periodic.hpp"

namespace floquet {

using State = std::vector<double>;
using OdeRhs = std::function<void(double t, std::span<const double> x, std::span<double> dxdt)>;

struct OdeTolerances {
    double rel = 1e-10;
    double abs = 1e-12;
};

struct IvpSpec {
    std::size_t dimension = 0;
    OdeRhs rhs;
    double t0 = 0.0;
    double t1 = 0.0;
    State initial;
    OdeTolerances tol{};
    std::size_t max_step_count = 10'000'000;
    bool dense_output = false;
    /// Times in (t0, t1) the step sequence must land on exactly.
    std::vector<double> stops;
    /// Infinity-norm threshold treated as finite-time blow-up.
    double blowup_norm = 1e12;
};

/// State norm crossed the blow-up threshold (or went non-finite).
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(double escape_time, const std::string& detail);
    double escape_time() const noexcept { return escape_time_; }

private:
    double escape_time_;
};

class StepLimitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Accepted steps of one integration. times() is strictly increasing with
/// times().front() == t0 and times().back() == t1.
class Trajectory {
public:
    const std::vector<double>& times() const { return times_; }
    const std::vector<State>& states() const { return states_; }
    std::size_t dimension() const { return dimension_; }
    bool has_dense_output() const { return !dense_.empty(); }

    const State& final_state() const { return states_.back(); }

    /// Grid index whose time equals t exactly, if any.
    std::optional<std::size_t> index_of(double t) const;

    /// Continuous extension of the 5(4) pair (order 4). Requires dense output.
    State at(double t) const;

private:
    friend Trajectory integrate(const IvpSpec& spec);
    std::size_t dimension_ = 0;
    std::vector<double> times_;
    std::vector<State> states_;
    std::vector<double> dense_;  // 5 * dimension coefficients per step
};

/// Dormand-Prince 5(4) with PI step-size control. Deterministic: the same
/// spec produces the same step sequence and bit-identical states.
Trajectory integrate(const IvpSpec& spec);

/// Square matrix of T-periodic entries, row-major.
class PeriodicMatrix {
public:
    PeriodicMatrix(std::size_t n, std::vector<PeriodicFn> entries);

    std::size_t size() const { return n_; }
    double period() const { return period_; }
    const PeriodicFn& operator()(std::size_t i, std::size_t j) const { return entries_[i * n_ + j]; }
    Eigen::MatrixXd at(double t) const;
    /// trace P(t) as a single periodic function.
    PeriodicFn trace() const;

private:
    std::size_t n_;
    double period_;
    std::vector<PeriodicFn> entries_;
};

/// Phi(T) for Phi' = P(t) Phi, Phi(0) = I, integrated as one n*n system so all
/// columns share a step sequence.
Eigen::MatrixXd fundamental_matrix(const PeriodicMatrix& P, double T, const OdeTolerances& tol = {});

}  // namespace floquet
