#include "floquet/kernels.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace floquet::kernels {

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

std::vector<double> sample(const std::function<double(double)>& f, double t0, double step,
                           std::size_t count, Exec exec) {
    std::vector<double> out(count);
    const auto n = static_cast<std::ptrdiff_t>(count);
    if (exec == Exec::serial) {
        for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = f(t0 + static_cast<double>(i) * step);
        return out;
    }
    // exceptions may not escape the parallel region
    std::vector<std::exception_ptr> errors(count);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            out[i] = f(t0 + static_cast<double>(i) * step);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

KernelRise green_exponent_rise(std::span<const double> primitive, Exec exec) {
    const auto n = static_cast<std::ptrdiff_t>(primitive.size());
    const double* B = primitive.data();
    double lower = -std::numeric_limits<double>::infinity();
    double upper = -std::numeric_limits<double>::infinity();

    if (exec == Exec::serial) {
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            for (std::ptrdiff_t j = 0; j <= i; ++j) lower = std::max(lower, B[i] - B[j]);
            for (std::ptrdiff_t j = i; j < n; ++j) upper = std::max(upper, B[i] - B[j]);
        }
        return {lower, upper};
    }

#pragma omp parallel for schedule(dynamic, 16) reduction(max : lower, upper)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        double lo = -std::numeric_limits<double>::infinity();
        double up = -std::numeric_limits<double>::infinity();
        for (std::ptrdiff_t j = 0; j <= i; ++j) lo = std::max(lo, B[i] - B[j]);
        for (std::ptrdiff_t j = i; j < n; ++j) up = std::max(up, B[i] - B[j]);
        lower = std::max(lower, lo);
        upper = std::max(upper, up);
    }
    return {lower, upper};
}

ArgMax arg_max(std::span<const double> values, Exec exec) {
    ArgMax best{-1.0, 0};
    const auto n = static_cast<std::ptrdiff_t>(values.size());
    if (exec == Exec::serial) {
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            const double v = std::fabs(values[i]);
            if (v > best.value) best = {v, static_cast<std::size_t>(i)};
        }
        return best;
    }
#pragma omp parallel
    {
        ArgMax local{-1.0, 0};
#pragma omp for schedule(static) nowait
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            const double v = std::fabs(values[i]);
            if (v > local.value) local = {v, static_cast<std::size_t>(i)};
        }
#pragma omp critical
        {
            if (local.value > best.value || (local.value == best.value && local.index < best.index)) {
                best = local;
            }
        }
    }
    return best;
}

}  // namespace floquet::kernels
