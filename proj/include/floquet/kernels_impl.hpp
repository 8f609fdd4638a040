#pragma once

#include <limits>
#include <optional>

namespace floquet::kernels {

template <typename T, typename Fn>
std::vector<T> map_indexed(std::size_t count, Fn&& fn, Exec exec) {
    std::vector<std::optional<T>> slots(count);
    std::vector<std::exception_ptr> errors(count);
    const auto n = static_cast<std::ptrdiff_t>(count);

    if (exec == Exec::serial) {
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            try {
                slots[i].emplace(fn(static_cast<std::size_t>(i)));
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    } else {
#pragma omp parallel for schedule(dynamic, 1)
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            try {
                slots[i].emplace(fn(static_cast<std::size_t>(i)));
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    }

    std::vector<T> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        if (errors[i]) std::rethrow_exception(errors[i]);
        out.push_back(std::move(*slots[i]));
    }
    return out;
}

}  // namespace floquet::kernels
