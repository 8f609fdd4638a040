#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "floquet/expr.hpp"

namespace floquet {

using ScalarFn = std::function<double(double)>;

class PeriodicityError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Non-finite integrand sample during quadrature.
class QuadratureError : public std::runtime_error {
public:
    QuadratureError(double t, const std::string& detail);
    double location() const noexcept { return location_; }

private:
    double location_;
};

/// An expression together with a declared period T.
///
/// The constructor checks the declaration on a 512-point grid:
/// max |f(t+T) - f(t)| <= 1e-9 * (1 + max |f|), and rejects aperiodic input.
/// The whole-period integral is computed once and shared between copies;
/// concurrent first calls are safe.
class PeriodicFn {
public:
    static constexpr std::size_t default_sample_count = 4096;

    PeriodicFn(Expr expr, double period, std::size_t sample_count = default_sample_count);

    static PeriodicFn parse(std::string_view source, double period,
                            std::size_t sample_count = default_sample_count);
    static PeriodicFn constant(double value, double period);

    double operator()(double t) const { return eval(expr_, t); }
    const Expr& expr() const { return expr_; }
    double period() const { return period_; }
    std::size_t sample_count() const { return sample_count_; }

    /// Integral over one full period, cached.
    double period_integral() const;
    double mean() const { return period_integral() / period_; }

    /// Samples at t_i = i*T/sample_count, i in [0, sample_count).
    std::vector<double> grid_values() const;

    ScalarFn as_function() const;

private:
    struct IntegralCache;

    Expr expr_;
    double period_;
    std::size_t sample_count_;
    std::shared_ptr<IntegralCache> cache_;
};

/// Composite Gauss-Legendre rule with a fixed number of equal panels.
double integrate_fixed(const ScalarFn& f, double a, double b, std::size_t panels);

/// Adaptive composite Gauss-Legendre. Panels are bisected until the coarse and
/// refined estimates agree to the panel's share of `abs_tol`.
double integrate_adaptive(const ScalarFn& f, double a, double b, double abs_tol);

/// Integral of f over [from, to], from <= to. Whole periods use the cached
/// period integral; the remainder goes through integrate_adaptive with target
/// 1e-12 * (to - from) * (1 + max |f|).
double integrate_period(const PeriodicFn& f, double from, double to);

/// Grid scan plus golden-section polish around the grid optimum. The result is
/// never smaller than the grid optimum, so sup_abs(f) >= |f(t_i)| holds exactly
/// on the grid.
enum class Extremum { max_abs, max, min };
double extremum_on_period(const ScalarFn& f, double period, std::size_t samples, Extremum which);

double sup_abs(const PeriodicFn& f);
/// sup_abs scaled up by (1 + 1e-6), for sufficient conditions where
/// overestimating is the safe direction.
double sup_abs_upper(const PeriodicFn& f);
double max_on_period(const PeriodicFn& f);
double min_on_period(const PeriodicFn& f);

/// Trigonometric interpolant of an odd number N of equispaced samples of a
/// T-periodic function: t_j = j*T/N. Evaluation and derivative are exact for
/// trigonometric polynomials of degree <= (N-1)/2.
class TrigSeries {
public:
    /// Empty series; only useful as a placeholder to assign into.
    TrigSeries() = default;
    TrigSeries(std::vector<double> samples, double period);

    /// Builds from mean value and nonnegative-frequency coefficients directly.
    static TrigSeries from_coefficients(std::vector<std::complex<double>> coeffs, double period);

    double operator()(double t) const;
    double derivative(double t) const;
    /// Zero-mean antiderivative part: integral of (f - mean) from 0 to t.
    TrigSeries antiderivative_periodic_part() const;

    double mean() const { return coeffs_[0].real(); }
    double period() const { return period_; }
    std::size_t size() const { return samples_.size(); }
    const std::vector<double>& samples() const { return samples_; }
    const std::vector<std::complex<double>>& coefficients() const { return coeffs_; }
    double node(std::size_t j) const { return period_ * static_cast<double>(j) / static_cast<double>(size()); }

    ScalarFn as_function() const;

private:
    std::vector<double> samples_;
    std::vector<std::complex<double>> coeffs_;  // c_0 .. c_K, K = (N-1)/2
    double period_ = 0.0;
};

/// Real-input FFT helpers (unnormalised forward, normalised inverse).
std::vector<std::complex<double>> rfft(std::span<const double> x);
std::vector<double> irfft(std::span<const std::complex<double>> X, std::size_t n);

}  // namespace floquet
