#pragma once

#include "missgan/rng.hpp"
#include "missgan/tensor.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <unistd.h>

namespace testutil {

template <typename T>
missgan::TensorT<T> random_tensor(missgan::Rng& rng, std::vector<int> shape, T scale = T(1)) {
    missgan::TensorT<T> t(std::move(shape));
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = static_cast<T>(rng.normal()) * scale;
    return t;
}

// Values bounded away from zero, for ops with a kink at the origin.
template <typename T>
missgan::TensorT<T> random_tensor_offzero(missgan::Rng& rng, std::vector<int> shape,
                                          T min_abs = T(0.05)) {
    missgan::TensorT<T> t(std::move(shape));
    for (int64_t i = 0; i < t.numel(); ++i) {
        T v = static_cast<T>(rng.normal());
        if (std::fabs(v) < min_abs) v = v < T(0) ? -min_abs : min_abs;
        t[i] = v;
    }
    return t;
}

template <typename T>
void check_tensor_near(const missgan::TensorT<T>& got, const missgan::TensorT<T>& want,
                       double tol) {
    REQUIRE(got.shape() == want.shape());
    for (int64_t i = 0; i < got.numel(); ++i) {
        INFO("element ", i);
        if (tol <= 0.0)
            CHECK(got[i] == want[i]);
        else
            CHECK(static_cast<double>(got[i]) ==
                  doctest::Approx(static_cast<double>(want[i])).epsilon(tol).scale(1.0));
    }
}

template <typename T>
double max_abs_diff(const missgan::TensorT<T>& a, const missgan::TensorT<T>& b) {
    REQUIRE(a.shape() == b.shape());
    double m = 0.0;
    for (int64_t i = 0; i < a.numel(); ++i)
        m = std::max(m, std::fabs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
    return m;
}

template <typename T>
bool all_zero(const missgan::TensorT<T>& t) {
    for (int64_t i = 0; i < t.numel(); ++i)
        if (t[i] != T(0)) return false;
    return true;
}

template <typename T>
double max_abs(const missgan::TensorT<T>& t) {
    double m = 0.0;
    for (int64_t i = 0; i < t.numel(); ++i) m = std::max(m, std::fabs(static_cast<double>(t[i])));
    return m;
}

inline std::filesystem::path fresh_temp_dir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() /
               ("missgan_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace testutil
