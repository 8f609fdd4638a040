#pragma once

// Data-parallel inner loops. Every kernel takes an Exec tag: `serial` is the
// reference loop kept for tests and benchmarks, `parallel` is the OpenMP
// version. Both must produce bit-identical results for identical input.

#include <cstddef>
#include <exception>
#include <functional>
#include <span>
#include <vector>

namespace floquet::kernels {

enum class Exec { serial, parallel };

/// Default policy used by the library entry points.
inline constexpr Exec default_exec = Exec::parallel;

int max_threads();

/// out[i] = fn(i) for i in [0, count). If any call throws, the exception from
/// the lowest failing index is rethrown after the loop, so the failure seen by
/// the caller does not depend on thread scheduling.
template <typename T, typename Fn>
std::vector<T> map_indexed(std::size_t count, Fn&& fn, Exec exec);

/// f sampled at t0 + i * step, i in [0, count).
std::vector<double> sample(const std::function<double(double)>& f, double t0, double step,
                           std::size_t count, Exec exec);

/// Largest exponents of the periodic Green kernel on a tabulated primitive B:
///   lower = max_{j <= i} (B[i] - B[j]),  upper = max_{j >= i} (B[i] - B[j]).
/// Brute force over all pairs; sup |G| follows from these two numbers.
struct KernelRise {
    double lower;
    double upper;
};
KernelRise green_exponent_rise(std::span<const double> primitive, Exec exec);

/// max_i |values[i]| with its index (first index on ties).
struct ArgMax {
    double value;
    std::size_t index;
};
ArgMax arg_max(std::span<const double> values, Exec exec);

}  // namespace floquet::kernels

#include "floquet/kernels_impl.hpp"
