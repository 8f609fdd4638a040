#include "floquet/ode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace floquet {

namespace {

// Dormand-Prince 5(4) tableau and dense-output weights (Hairer, Norsett, Wanner).
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200, e6 = 22.0 / 525,
                 e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

constexpr double kSafety = 0.9;
constexpr double kBeta = 0.04;
constexpr double kMinShrink = 0.2;
constexpr double kMaxGrow = 10.0;

double scaled_norm(std::span<const double> v, std::span<const double> y0, std::span<const double> y1,
                   const OdeTolerances& tol) {
    double sum = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double sk = tol.abs + tol.rel * std::max(std::fabs(y0[i]), std::fabs(y1[i]));
        const double r = v[i] / sk;
        sum += r * r;
    }
    return std::sqrt(sum / static_cast<double>(v.size()));
}

double inf_norm(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) {
        if (!std::isfinite(x)) return std::numeric_limits<double>::infinity();
        m = std::max(m, std::fabs(x));
    }
    return m;
}

double initial_step(const IvpSpec& spec, std::span<const double> y0, std::span<const double> f0) {
    const std::size_t n = spec.dimension;
    const double d0 = scaled_norm(y0, y0, y0, spec.tol);
    const double d1n = scaled_norm(f0, y0, y0, spec.tol);
    double h0 = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
    h0 = std::min(h0, spec.t1 - spec.t0);

    State y1(n), f1(n), diff(n);
    for (std::size_t i = 0; i < n; ++i) y1[i] = y0[i] + h0 * f0[i];
    spec.rhs(spec.t0 + h0, y1, f1);
    for (std::size_t i = 0; i < n; ++i) diff[i] = f1[i] - f0[i];
    const double d2 = scaled_norm(diff, y0, y0, spec.tol) / h0;
    const double dm = std::max(d1n, d2);
    const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 0.2);
    // a tiny but nonzero state makes the heuristic collapse; the controller
    // shrinks an oversized first step anyway
    const double span = spec.t1 - spec.t0;
    return std::max(std::min({100.0 * h0, h1, span}), 1e-8 * span);
}

}  // namespace

DivergenceError::DivergenceError(double escape_time, const std::string& detail)
    : std::runtime_error(detail + " (escape time " + std::to_string(escape_time) + ")"), escape_time_(escape_time) {}

std::optional<std::size_t> Trajectory::index_of(double t) const {
    auto it = std::lower_bound(times_.begin(), times_.end(), t);
    if (it != times_.end() && *it == t) return static_cast<std::size_t>(it - times_.begin());
    return std::nullopt;
}

State Trajectory::at(double t) const {
    if (dense_.empty()) throw std::logic_error("trajectory has no dense output");
    if (t < times_.front() || t > times_.back()) throw std::out_of_range("time outside trajectory");
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    std::size_t step = it == times_.end() ? times_.size() - 2 : static_cast<std::size_t>(it - times_.begin()) - 1;
    step = std::min(step, times_.size() - 2);
    const double h = times_[step + 1] - times_[step];
    const double theta = (t - times_[step]) / h;
    const double theta1 = 1.0 - theta;
    const std::size_t n = dimension_;
    const double* r = dense_.data() + step * 5 * n;
    State out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = r[i] + theta * (r[n + i] + theta1 * (r[2 * n + i] + theta * (r[3 * n + i] + theta1 * r[4 * n + i])));
    }
    return out;
}

Trajectory integrate(const IvpSpec& spec) {
    const std::size_t n = spec.dimension;
    if (n == 0) throw std::invalid_argument("IVP dimension must be at least 1");
    if (spec.initial.size() != n) throw std::invalid_argument("initial state has wrong dimension");
    if (!(spec.t0 < spec.t1)) throw std::invalid_argument("IVP requires t0 < t1");
    if (!(spec.tol.rel > 0.0) || !(spec.tol.abs > 0.0)) throw std::invalid_argument("tolerances must be positive");
    if (!spec.rhs) throw std::invalid_argument("IVP right-hand side is empty");

    std::vector<double> stops;
    for (double s : spec.stops) {
        if (s > spec.t0 && s < spec.t1) stops.push_back(s);
    }
    std::sort(stops.begin(), stops.end());
    stops.erase(std::unique(stops.begin(), stops.end()), stops.end());
    stops.push_back(spec.t1);
    std::size_t next_stop = 0;

    Trajectory traj;
    traj.dimension_ = n;
    traj.times_.push_back(spec.t0);
    traj.states_.push_back(spec.initial);
    if (inf_norm(spec.initial) > spec.blowup_norm) throw DivergenceError(spec.t0, "initial state beyond blow-up threshold");

    State y = spec.initial;
    State k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), ynew(n), err(n);
    spec.rhs(spec.t0, y, k1);

    double t = spec.t0;
    double h = initial_step(spec, y, k1);
    double facold = 1e-4;
    bool last_rejected = false;
    const double expo1 = 0.2 - kBeta * 0.75;

    for (std::size_t step = 0;; ++step) {
        if (step >= spec.max_step_count) {
            throw StepLimitError("step count exhausted at t=" + std::to_string(t));
        }
        const double target = stops[next_stop];
        bool hits_stop = false;
        if (t + h >= target || target - (t + h) < 1e-12 * std::max(1.0, std::fabs(target))) {
            h = target - t;
            hits_stop = true;
        }
        if (h <= 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::fabs(t))) {
            throw DivergenceError(t, "step size underflow");
        }

        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * a21 * k1[i];
        spec.rhs(t + c2 * h, tmp, k2);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        spec.rhs(t + c3 * h, tmp, k3);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        spec.rhs(t + c4 * h, tmp, k4);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        spec.rhs(t + c5 * h, tmp, k5);
        for (std::size_t i = 0; i < n; ++i) {
            tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        }
        const double t_new = hits_stop ? target : t + h;
        spec.rhs(t_new, tmp, k6);
        for (std::size_t i = 0; i < n; ++i) {
            ynew[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
        }
        spec.rhs(t_new, ynew, k7);
        for (std::size_t i = 0; i < n; ++i) {
            err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
        }

        double error = scaled_norm(err, y, ynew, spec.tol);
        if (!std::isfinite(error)) error = 1e10;
        const double fac11 = std::pow(error, expo1);

        if (error <= 1.0) {
            facold = std::max(error, 1e-4);
            double fac = fac11 / std::pow(facold, kBeta);
            fac = std::clamp(fac / kSafety, 1.0 / kMaxGrow, 1.0 / kMinShrink);
            double hnew = h / fac;
            if (last_rejected) hnew = std::min(hnew, h);

            if (spec.dense_output) {
                const std::size_t base = traj.dense_.size();
                traj.dense_.resize(base + 5 * n);
                double* r = traj.dense_.data() + base;
                for (std::size_t i = 0; i < n; ++i) {
                    const double dy = ynew[i] - y[i];
                    const double bspl = h * k1[i] - dy;
                    r[i] = y[i];
                    r[n + i] = dy;
                    r[2 * n + i] = bspl;
                    r[3 * n + i] = dy - h * k7[i] - bspl;
                    r[4 * n + i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
                }
            }

            t = t_new;
            y.swap(ynew);
            k1.swap(k7);
            traj.times_.push_back(t);
            traj.states_.push_back(y);

            if (inf_norm(y) > spec.blowup_norm) throw DivergenceError(t, "state norm exceeded blow-up threshold");

            if (hits_stop) {
                if (next_stop + 1 == stops.size()) break;
                ++next_stop;
            }
            h = hnew;
            last_rejected = false;
        } else {
            h /= std::min(1.0 / kMinShrink, fac11 / kSafety);
            last_rejected = true;
        }
    }
    return traj;
}

PeriodicMatrix::PeriodicMatrix(std::size_t n, std::vector<PeriodicFn> entries)
    : n_(n), period_(0.0), entries_(std::move(entries)) {
    if (n == 0 || entries_.size() != n * n) throw std::invalid_argument("PeriodicMatrix needs n*n entries");
    period_ = entries_.front().period();
    for (const auto& e : entries_) {
        if (e.period() != period_) throw PeriodicityError("matrix entries must share one period");
    }
}

Eigen::MatrixXd PeriodicMatrix::at(double t) const {
    Eigen::MatrixXd m(n_, n_);
    for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t j = 0; j < n_; ++j) m(i, j) = entries_[i * n_ + j](t);
    }
    return m;
}

PeriodicFn PeriodicMatrix::trace() const {
    Expr sum = entries_[0].expr();
    for (std::size_t i = 1; i < n_; ++i) sum = sum + entries_[i * n_ + i].expr();
    return PeriodicFn(sum, period_, entries_[0].sample_count());
}

Eigen::MatrixXd fundamental_matrix(const PeriodicMatrix& P, double T, const OdeTolerances& tol) {
    const std::size_t n = P.size();
    IvpSpec spec;
    spec.dimension = n * n;
    spec.t0 = 0.0;
    spec.t1 = T;
    spec.tol = tol;
    // linear: no finite-time blow-up, only overflow is a failure
    spec.blowup_norm = std::numeric_limits<double>::max();
    spec.initial.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) spec.initial[i * n + i] = 1.0;
    // state is Phi in row-major order: x[i*n + j] = Phi(i, j)
    spec.rhs = [&P, n](double t, std::span<const double> x, std::span<double> dx) {
        std::vector<double> row(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < n; ++k) row[k] = P(i, k)(t);
            for (std::size_t j = 0; j < n; ++j) {
                double s = 0.0;
                for (std::size_t k = 0; k < n; ++k) s += row[k] * x[k * n + j];
                dx[i * n + j] = s;
            }
        }
    };
    const Trajectory traj = integrate(spec);
    Eigen::MatrixXd phi(n, n);
    const State& y = traj.final_state();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) phi(i, j) = y[i * n + j];
    }
    return phi;
}

}  // namespace floquet
