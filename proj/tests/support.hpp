#pragma once

// Shared helpers for the test binaries: a seeded generator for random
// coefficient functions and a few closed-form oracles.

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <string>

#include "floquet/floquet.hpp"

namespace testing_support {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

inline std::string lit(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return v < 0 ? "(" + std::string(buf) + ")" : std::string(buf);
}

class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    bool coin() { return integer(0, 1) == 1; }

    /// c0 + sum_{k<=harmonics} a_k cos(k t) + b_k sin(k t), every amplitude in [-amp, amp].
    std::string trig_poly(int harmonics, double amp, bool zero_mean = false) {
        std::string s = lit(zero_mean ? 0.0 : uniform(-amp, amp));
        for (int k = 1; k <= harmonics; ++k) {
            s += "+" + lit(uniform(-amp, amp)) + "*cos(" + std::to_string(k) + "*t)";
            s += "+" + lit(uniform(-amp, amp)) + "*sin(" + std::to_string(k) + "*t)";
        }
        return s;
    }

    floquet::PlanarPeriodicSystem planar(int max_harmonics = 3, double amp = 2.0) {
        auto one = [&] { return trig_poly(integer(0, max_harmonics), amp); };
        return floquet::PlanarPeriodicSystem::parse(one(), one(), one(), one(), two_pi);
    }

    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
};

inline double rel_err(double got, double want) { return std::fabs(got - want) / std::fabs(want); }
inline double rel_err(floquet::Complex got, floquet::Complex want) { return std::abs(got - want) / std::abs(want); }

inline floquet::PeriodicFn fn(const std::string& s, double period = two_pi) {
    return floquet::PeriodicFn::parse(s, period);
}

}  // namespace testing_support
