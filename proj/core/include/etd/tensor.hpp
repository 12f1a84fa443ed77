#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace etd {

using Vec = std::vector<double>;

// Dense row-major matrix. Sized for d<=256 working dimensions; all ops are
// plain loops so results are bit-reproducible across runs.
struct Matrix {
    size_t rows = 0;
    size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(size_t r, size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& operator()(size_t r, size_t c) { return data[r * cols + c]; }
    double operator()(size_t r, size_t c) const { return data[r * cols + c]; }
    size_t size() const { return data.size(); }
};

inline void check_dim(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument("shape mismatch: " + what);
}

inline double dot(const Vec& a, const Vec& b) {
    check_dim(a.size() == b.size(), "dot");
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// y = M x, M is rows x cols, x has cols entries
inline Vec matvec(const Matrix& m, const Vec& x) {
    check_dim(m.cols == x.size(), "matvec");
    Vec y(m.rows, 0.0);
    for (size_t r = 0; r < m.rows; ++r) {
        const double* row = m.data.data() + r * m.cols;
        double s = 0.0;
        for (size_t c = 0; c < m.cols; ++c) s += row[c] * x[c];
        y[r] = s;
    }
    return y;
}

// y = M^T x, x has rows entries, result has cols entries
inline Vec matvec_transposed(const Matrix& m, const Vec& x) {
    check_dim(m.rows == x.size(), "matvec_transposed");
    Vec y(m.cols, 0.0);
    for (size_t r = 0; r < m.rows; ++r) {
        const double* row = m.data.data() + r * m.cols;
        const double xr = x[r];
        for (size_t c = 0; c < m.cols; ++c) y[c] += row[c] * xr;
    }
    return y;
}

inline Vec hadamard(const Vec& a, const Vec& b) {
    check_dim(a.size() == b.size(), "hadamard");
    Vec y(a.size());
    for (size_t i = 0; i < a.size(); ++i) y[i] = a[i] * b[i];
    return y;
}

// y += a * x
inline void axpy(double a, const Vec& x, Vec& y) {
    check_dim(x.size() == y.size(), "axpy");
    for (size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

// M += u v^T
inline void add_outer(Matrix& m, const Vec& u, const Vec& v) {
    check_dim(m.rows == u.size() && m.cols == v.size(), "add_outer");
    for (size_t r = 0; r < m.rows; ++r) {
        double* row = m.data.data() + r * m.cols;
        const double ur = u[r];
        for (size_t c = 0; c < m.cols; ++c) row[c] += ur * v[c];
    }
}

inline Vec relu(const Vec& x) {
    Vec y(x.size());
    for (size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
    return y;
}

inline Vec concat(const Vec& a, const Vec& b) {
    Vec y;
    y.reserve(a.size() + b.size());
    y.insert(y.end(), a.begin(), a.end());
    y.insert(y.end(), b.begin(), b.end());
    return y;
}

inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// max-subtracted softmax; a singleton input yields exactly 1.0
inline std::vector<double> softmax(const std::vector<double>& logits) {
    std::vector<double> p(logits.size());
    if (logits.empty()) return p;
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    double sum = 0.0;
    for (size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - mx);
        sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
}

inline double l2_norm(const Vec& x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

inline bool all_finite(const Vec& x) {
    for (double v : x) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

} // namespace etd
