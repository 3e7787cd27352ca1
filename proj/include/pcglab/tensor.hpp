#pragma once

#include <cstddef>
#include <vector>

namespace pcglab {

// Minimal row-major matrix. Plain storage; all heavy math goes through the
// kernels so serial/parallel behavior stays in one place.
template <typename T>
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<T> v;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), v(static_cast<size_t>(r) * c, T(0)) {}

    void assign(int r, int c) {
        rows = r;
        cols = c;
        v.assign(static_cast<size_t>(r) * c, T(0));
    }
    void zero() { std::fill(v.begin(), v.end(), T(0)); }

    T* data() { return v.data(); }
    const T* data() const { return v.data(); }
    T* row(int i) { return v.data() + static_cast<size_t>(i) * cols; }
    const T* row(int i) const { return v.data() + static_cast<size_t>(i) * cols; }
    T& at(int i, int j) { return v[static_cast<size_t>(i) * cols + j]; }
    const T& at(int i, int j) const { return v[static_cast<size_t>(i) * cols + j]; }
    size_t size() const { return v.size(); }
};

} // namespace pcglab
