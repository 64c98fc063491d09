#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace veldt {

// Dense NCHW tensor.
template <typename T>
struct Tensor4 {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<T> v;

    Tensor4() = default;
    Tensor4(int n_, int c_, int h_, int w_)
        : n(n_), c(c_), h(h_), w(w_), v(static_cast<std::size_t>(n_) * c_ * h_ * w_, T(0)) {}

    std::size_t size() const { return v.size(); }
    std::size_t idx(int ni, int ci, int yi, int xi) const {
        return ((static_cast<std::size_t>(ni) * c + ci) * h + yi) * w + xi;
    }
    T& at(int ni, int ci, int yi, int xi) { return v[idx(ni, ci, yi, xi)]; }
    const T& at(int ni, int ci, int yi, int xi) const { return v[idx(ni, ci, yi, xi)]; }

    T* slice(int ni) { return v.data() + static_cast<std::size_t>(ni) * c * h * w; }
    const T* slice(int ni) const { return v.data() + static_cast<std::size_t>(ni) * c * h * w; }

    bool same_shape(const Tensor4& o) const { return n == o.n && c == o.c && h == o.h && w == o.w; }

    std::string shape_str() const {
        return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
               std::to_string(w) + ")";
    }

    void assert_finite(const std::string& where) const {
        for (const T& x : v)
            if (!std::isfinite(static_cast<double>(x)))
                throw std::runtime_error("non-finite value after " + where);
    }
};

// Per-cell class grid accompanying a logit tensor (0 = empty, 1/2 = classes).
struct ClassGrid {
    int n = 0, h = 0, w = 0;
    std::vector<uint8_t> v;

    ClassGrid() = default;
    ClassGrid(int n_, int h_, int w_) : n(n_), h(h_), w(w_), v(static_cast<std::size_t>(n_) * h_ * w_, 0) {}

    std::size_t idx(int ni, int yi, int xi) const {
        return (static_cast<std::size_t>(ni) * h + yi) * w + xi;
    }
    uint8_t& at(int ni, int yi, int xi) { return v[idx(ni, yi, xi)]; }
    const uint8_t& at(int ni, int yi, int xi) const { return v[idx(ni, yi, xi)]; }
};

}  // namespace veldt
