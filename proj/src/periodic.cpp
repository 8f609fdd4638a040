#include "floquet/periodic.hpp"

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <string>

#include "floquet/kernels.hpp"

namespace floquet {

namespace {

constexpr std::size_t kGaussPoints = 10;

struct GaussRule {
    std::array<double, kGaussPoints> nodes{};
    std::array<double, kGaussPoints> weights{};
};

// Newton iteration on P_n from Chebyshev initial guesses.
GaussRule make_gauss_rule() {
    GaussRule rule;
    constexpr std::size_t n = kGaussPoints;
    for (std::size_t i = 0; i < n; ++i) {
        double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
            for (std::size_t k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
                p0 = p1;
                p1 = p2;
            }
            dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::fabs(dx) < 1e-16) break;
        }
        rule.nodes[i] = x;
        rule.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return rule;
}

const GaussRule& gauss_rule() {
    static const GaussRule rule = make_gauss_rule();
    return rule;
}

double gauss_panel(const ScalarFn& f, double a, double b) {
    const auto& rule = gauss_rule();
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    double sum = 0.0;
    for (std::size_t i = 0; i < kGaussPoints; ++i) {
        const double t = mid + half * rule.nodes[i];
        const double v = f(t);
        if (!std::isfinite(v)) throw QuadratureError(t, "non-finite integrand");
        sum += rule.weights[i] * v;
    }
    return half * sum;
}

double adapt(const ScalarFn& f, double a, double b, double coarse, double tol, int depth) {
    const double mid = 0.5 * (a + b);
    const double left = gauss_panel(f, a, mid);
    const double right = gauss_panel(f, mid, b);
    const double fine = left + right;
    const double floor = 64.0 * std::numeric_limits<double>::epsilon() * (std::fabs(left) + std::fabs(right));
    if (std::fabs(fine - coarse) <= std::max(tol, floor) || depth >= 48 || mid <= a || mid >= b) {
        return fine;
    }
    return adapt(f, a, mid, left, 0.5 * tol, depth + 1) + adapt(f, mid, b, right, 0.5 * tol, depth + 1);
}

double rough_scale(const ScalarFn& f, double a, double b) {
    double m = 0.0;
    constexpr int n = 64;
    for (int i = 0; i <= n; ++i) {
        const double t = a + (b - a) * static_cast<double>(i) / n;
        const double v = f(t);
        if (!std::isfinite(v)) throw QuadratureError(t, "non-finite integrand");
        m = std::max(m, std::fabs(v));
    }
    return m;
}

double golden_polish(const ScalarFn& objective, double lo, double hi) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - inv_phi * (hi - lo);
    double x2 = lo + inv_phi * (hi - lo);
    double f1 = objective(x1);
    double f2 = objective(x2);
    for (int i = 0; i < 80 && hi - lo > 1e-15 * (1.0 + std::fabs(lo)); ++i) {
        if (f1 >= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = objective(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = objective(x2);
        }
    }
    return std::max(f1, f2);
}

std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace

QuadratureError::QuadratureError(double t, const std::string& detail)
    : std::runtime_error(detail + " at t=" + std::to_string(t)), location_(t) {}

struct PeriodicFn::IntegralCache {
    std::once_flag once;
    double integral = 0.0;
    double scale = 0.0;
};

PeriodicFn::PeriodicFn(Expr expr, double period, std::size_t sample_count)
    : expr_(std::move(expr)), period_(period), sample_count_(sample_count), cache_(std::make_shared<IntegralCache>()) {
    if (!(period > 0.0) || !std::isfinite(period)) {
        throw PeriodicityError("period must be positive and finite");
    }
    if (sample_count == 0) throw PeriodicityError("sample_count must be positive");

    constexpr int check_points = 512;
    double defect = 0.0;
    double magnitude = 0.0;
    for (int i = 0; i < check_points; ++i) {
        const double t = period * static_cast<double>(i) / check_points;
        const double v = eval(expr_, t);
        const double shifted = eval(expr_, t + period);
        defect = std::max(defect, std::fabs(shifted - v));
        magnitude = std::max(magnitude, std::fabs(v));
    }
    if (defect > 1e-9 * (1.0 + magnitude)) {
        throw PeriodicityError("expression " + to_string(expr_) + " is not " + std::to_string(period) +
                               "-periodic (max |f(t+T)-f(t)| = " + std::to_string(defect) + ")");
    }
}

PeriodicFn PeriodicFn::parse(std::string_view source, double period, std::size_t sample_count) {
    return PeriodicFn(floquet::parse(source), period, sample_count);
}

PeriodicFn PeriodicFn::constant(double value, double period) { return PeriodicFn(floquet::constant(value), period); }

double PeriodicFn::period_integral() const {
    std::call_once(cache_->once, [this] {
        const ScalarFn f = as_function();
        cache_->scale = rough_scale(f, 0.0, period_);
        cache_->integral = integrate_adaptive(f, 0.0, period_, 1e-12 * period_ * (1.0 + cache_->scale));
    });
    return cache_->integral;
}

std::vector<double> PeriodicFn::grid_values() const {
    return kernels::sample(as_function(), 0.0, period_ / static_cast<double>(sample_count_), sample_count_,
                           kernels::default_exec);
}

ScalarFn PeriodicFn::as_function() const {
    return [e = expr_](double t) { return eval(e, t); };
}

double integrate_fixed(const ScalarFn& f, double a, double b, std::size_t panels) {
    const double h = (b - a) / static_cast<double>(panels);
    double sum = 0.0;
    for (std::size_t i = 0; i < panels; ++i) {
        const double lo = a + h * static_cast<double>(i);
        const double hi = (i + 1 == panels) ? b : lo + h;
        sum += gauss_panel(f, lo, hi);
    }
    return sum;
}

double integrate_adaptive(const ScalarFn& f, double a, double b, double abs_tol) {
    if (a == b) return 0.0;
    if (b < a) return -integrate_adaptive(f, b, a, abs_tol);
    constexpr int initial_panels = 8;
    const double h = (b - a) / initial_panels;
    double sum = 0.0;
    for (int i = 0; i < initial_panels; ++i) {
        const double lo = a + h * i;
        const double hi = (i + 1 == initial_panels) ? b : lo + h;
        sum += adapt(f, lo, hi, gauss_panel(f, lo, hi), abs_tol / initial_panels, 0);
    }
    return sum;
}

double integrate_period(const PeriodicFn& f, double from, double to) {
    if (to < from) throw std::invalid_argument("integrate_period requires from <= to");
    const double T = f.period();
    const double length = to - from;
    const double whole = std::floor(length / T);
    double result = 0.0;
    double start = from;
    if (whole >= 1.0) {
        result += whole * f.period_integral();
        start = from + whole * T;
    }
    if (to > start) {
        const ScalarFn g = f.as_function();
        const double scale = rough_scale(g, start, to);
        result += integrate_adaptive(g, start, to, 1e-12 * (to - from) * (1.0 + scale));
    }
    return result;
}

double extremum_on_period(const ScalarFn& f, double period, std::size_t samples, Extremum which) {
    const double step = period / static_cast<double>(samples);
    const auto values = kernels::sample(f, 0.0, step, samples, kernels::default_exec);

    ScalarFn objective;
    switch (which) {
        case Extremum::max_abs: objective = [&f](double t) { return std::fabs(f(t)); }; break;
        case Extremum::max: objective = f; break;
        case Extremum::min: objective = [&f](double t) { return -f(t); }; break;
    }
    std::size_t best_index = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < samples; ++i) {
        const double v = which == Extremum::max_abs ? std::fabs(values[i]) : which == Extremum::max ? values[i] : -values[i];
        if (v > best) {
            best = v;
            best_index = i;
        }
    }
    const double centre = step * static_cast<double>(best_index);
    const double polished = golden_polish(objective, centre - step, centre + step);
    const double result = std::max(best, polished);
    return which == Extremum::min ? -result : result;
}

double sup_abs(const PeriodicFn& f) {
    return extremum_on_period(f.as_function(), f.period(), f.sample_count(), Extremum::max_abs);
}

double sup_abs_upper(const PeriodicFn& f) { return sup_abs(f) * (1.0 + 1e-6); }

double max_on_period(const PeriodicFn& f) {
    return extremum_on_period(f.as_function(), f.period(), f.sample_count(), Extremum::max);
}

double min_on_period(const PeriodicFn& f) {
    return extremum_on_period(f.as_function(), f.period(), f.sample_count(), Extremum::min);
}

// ---------------------------------------------------------------------------

std::vector<std::complex<double>> rfft(std::span<const double> x) {
    const std::size_t n = x.size();
    std::vector<double> in(x.begin(), x.end());
    std::vector<std::complex<double>> out(n / 2 + 1);
    std::lock_guard lock(fftw_planner_mutex());
    fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(),
                                          reinterpret_cast<fftw_complex*>(out.data()), FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
    return out;
}

std::vector<double> irfft(std::span<const std::complex<double>> X, std::size_t n) {
    if (X.size() != n / 2 + 1) throw std::invalid_argument("irfft: spectrum length mismatch");
    std::vector<std::complex<double>> in(X.begin(), X.end());
    std::vector<double> out(n);
    {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_plan plan = fftw_plan_dft_c2r_1d(static_cast<int>(n), reinterpret_cast<fftw_complex*>(in.data()),
                                              out.data(), FFTW_ESTIMATE);
        fftw_execute(plan);
        fftw_destroy_plan(plan);
    }
    const double scale = 1.0 / static_cast<double>(n);
    for (double& v : out) v *= scale;
    return out;
}

TrigSeries::TrigSeries(std::vector<double> samples, double period) : samples_(std::move(samples)), period_(period) {
    if (samples_.size() % 2 == 0 || samples_.empty()) {
        throw std::invalid_argument("TrigSeries needs an odd number of samples");
    }
    if (!(period > 0.0)) throw std::invalid_argument("TrigSeries period must be positive");
    coeffs_ = rfft(samples_);
    const double scale = 1.0 / static_cast<double>(samples_.size());
    for (auto& c : coeffs_) c *= scale;
}

TrigSeries TrigSeries::from_coefficients(std::vector<std::complex<double>> coeffs, double period) {
    TrigSeries s;
    const std::size_t n = 2 * coeffs.size() - 1;
    coeffs[0] = coeffs[0].real();
    std::vector<std::complex<double>> spectrum(coeffs.size());
    for (std::size_t k = 0; k < coeffs.size(); ++k) spectrum[k] = coeffs[k] * static_cast<double>(n);
    s.samples_ = irfft(spectrum, n);
    s.coeffs_ = std::move(coeffs);
    s.period_ = period;
    return s;
}

double TrigSeries::operator()(double t) const {
    const double omega = 2.0 * std::numbers::pi / period_;
    const std::complex<double> z = std::polar(1.0, omega * std::fmod(t, period_));
    std::complex<double> zk = 1.0;
    double sum = 0.0;
    for (std::size_t k = 1; k < coeffs_.size(); ++k) {
        zk *= z;
        sum += (coeffs_[k] * zk).real();
    }
    return coeffs_[0].real() + 2.0 * sum;
}

double TrigSeries::derivative(double t) const {
    const double omega = 2.0 * std::numbers::pi / period_;
    const std::complex<double> z = std::polar(1.0, omega * std::fmod(t, period_));
    std::complex<double> zk = 1.0;
    double sum = 0.0;
    for (std::size_t k = 1; k < coeffs_.size(); ++k) {
        zk *= z;
        sum += (std::complex<double>(0.0, omega * static_cast<double>(k)) * coeffs_[k] * zk).real();
    }
    return 2.0 * sum;
}

TrigSeries TrigSeries::antiderivative_periodic_part() const {
    const double omega = 2.0 * std::numbers::pi / period_;
    std::vector<std::complex<double>> d(coeffs_.size());
    double at_zero = 0.0;
    for (std::size_t k = 1; k < coeffs_.size(); ++k) {
        d[k] = coeffs_[k] / std::complex<double>(0.0, omega * static_cast<double>(k));
        at_zero += 2.0 * d[k].real();
    }
    d[0] = -at_zero;
    return from_coefficients(std::move(d), period_);
}

ScalarFn TrigSeries::as_function() const {
    return [self = *this](double t) { return self(t); };
}

}  // namespace floquet
