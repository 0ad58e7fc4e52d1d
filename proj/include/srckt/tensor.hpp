#pragma once

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

#include "srckt/simd/kernels.hpp"

namespace srckt {

// Row-major dense matrix of doubles. Vectors are 1 x n matrices.
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> v;

    Mat() = default;
    Mat(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), v(r * c, fill) {}

    std::size_t size() const { return v.size(); }
    bool empty() const { return v.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return v[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return v[r * cols + c]; }

    double* row(std::size_t r) { return v.data() + r * cols; }
    const double* row(std::size_t r) const { return v.data() + r * cols; }
    std::span<const double> row_span(std::size_t r) const { return {row(r), cols}; }

    double* data() { return v.data(); }
    const double* data() const { return v.data(); }

    void fill(double x) { std::fill(v.begin(), v.end(), x); }
    bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }

    friend bool operator==(const Mat&, const Mat&) = default;
};

// out = a * b
inline Mat matmul(const Mat& a, const Mat& b) {
    assert(a.cols == b.rows);
    Mat out(a.rows, b.cols);
    simd::kernels().gemm_nn(a.data(), b.data(), out.data(), a.rows, a.cols, b.cols, false);
    return out;
}

// out = a * b^T
inline Mat matmul_nt(const Mat& a, const Mat& b) {
    assert(a.cols == b.cols);
    Mat out(a.rows, b.rows);
    simd::kernels().gemm_nt(a.data(), b.data(), out.data(), a.rows, a.cols, b.rows, false);
    return out;
}

// acc += a^T * b
inline void accumulate_tn(const Mat& a, const Mat& b, Mat& acc) {
    assert(a.rows == b.rows && acc.rows == a.cols && acc.cols == b.cols);
    simd::kernels().gemm_tn(a.data(), b.data(), acc.data(), a.cols, a.rows, b.cols, true);
}

inline void add_inplace(Mat& dst, const Mat& src) {
    assert(dst.same_shape(src));
    simd::kernels().axpy(1.0, src.data(), dst.data(), dst.size());
}

inline void add_scaled(Mat& dst, double alpha, const Mat& src) {
    assert(dst.same_shape(src));
    simd::kernels().axpy(alpha, src.data(), dst.data(), dst.size());
}

} // namespace srckt
