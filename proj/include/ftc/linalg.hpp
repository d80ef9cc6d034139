#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>

#include "ftc/error.hpp"

// Minimal fixed-size linear algebra for the 3DOF control stack.
// Only the handful of shapes the simulator needs: 3-vectors, 3x3, 3x4,
// 4x3, 3x2 and the 4x4 diagonals (kept as 4-vectors by their owners).
// Everything is value-semantic and allocation-free.

namespace ftc {

template <std::size_t R, std::size_t C>
struct Mat {
    std::array<double, R * C> a{};

    static constexpr std::size_t rows = R;
    static constexpr std::size_t cols = C;

    constexpr double& operator()(std::size_t r, std::size_t c) { return a[r * C + c]; }
    constexpr double operator()(std::size_t r, std::size_t c) const { return a[r * C + c]; }

    // Vector-style access, valid for single-column matrices.
    constexpr double& operator[](std::size_t i)
        requires(C == 1)
    {
        return a[i];
    }
    constexpr double operator[](std::size_t i) const
        requires(C == 1)
    {
        return a[i];
    }

    static constexpr Mat zero() { return Mat{}; }

    static constexpr Mat identity()
        requires(R == C)
    {
        Mat m{};
        for (std::size_t i = 0; i < R; ++i) m(i, i) = 1.0;
        return m;
    }

    constexpr Mat<C, R> transposed() const {
        Mat<C, R> t{};
        for (std::size_t r = 0; r < R; ++r)
            for (std::size_t c = 0; c < C; ++c) t(c, r) = (*this)(r, c);
        return t;
    }

    constexpr Mat& operator+=(const Mat& o) {
        for (std::size_t i = 0; i < R * C; ++i) a[i] += o.a[i];
        return *this;
    }
    constexpr Mat& operator-=(const Mat& o) {
        for (std::size_t i = 0; i < R * C; ++i) a[i] -= o.a[i];
        return *this;
    }
    constexpr Mat& operator*=(double s) {
        for (std::size_t i = 0; i < R * C; ++i) a[i] *= s;
        return *this;
    }

    friend constexpr Mat operator+(Mat l, const Mat& r) { return l += r; }
    friend constexpr Mat operator-(Mat l, const Mat& r) { return l -= r; }
    friend constexpr Mat operator*(Mat l, double s) { return l *= s; }
    friend constexpr Mat operator*(double s, Mat r) { return r *= s; }
    friend constexpr Mat operator-(const Mat& m) { return m * -1.0; }

    constexpr bool finite() const {
        for (double v : a)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

using Vec3 = Mat<3, 1>;
using Vec4 = Mat<4, 1>;
using Mat3 = Mat<3, 3>;
using Mat34 = Mat<3, 4>;
using Mat43 = Mat<4, 3>;
using Mat32 = Mat<3, 2>;

constexpr Vec3 vec3(double x, double y, double z) { return Vec3{{x, y, z}}; }
constexpr Vec4 vec4(double a, double b, double c, double d) { return Vec4{{a, b, c, d}}; }

template <std::size_t R, std::size_t K, std::size_t C>
constexpr Mat<R, C> operator*(const Mat<R, K>& l, const Mat<K, C>& r) {
    Mat<R, C> out{};
    for (std::size_t i = 0; i < R; ++i)
        for (std::size_t k = 0; k < K; ++k) {
            const double lik = l(i, k);
            for (std::size_t j = 0; j < C; ++j) out(i, j) += lik * r(k, j);
        }
    return out;
}

template <std::size_t N>
constexpr double dot(const Mat<N, 1>& a, const Mat<N, 1>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < N; ++i) s += a[i] * b[i];
    return s;
}

template <std::size_t N>
inline double norm(const Mat<N, 1>& v) {
    return std::sqrt(dot(v, v));
}

template <std::size_t R, std::size_t C>
inline double max_abs(const Mat<R, C>& m) {
    double s = 0.0;
    for (double v : m.a) s = std::max(s, std::abs(v));
    return s;
}

// Hadamard-style helpers for diagonal matrices stored as vectors.
template <std::size_t N>
constexpr Mat<N, 1> cwise_mul(const Mat<N, 1>& a, const Mat<N, 1>& b) {
    Mat<N, 1> out{};
    for (std::size_t i = 0; i < N; ++i) out[i] = a[i] * b[i];
    return out;
}

template <std::size_t N>
constexpr Mat<N, N> diag(const Mat<N, 1>& d) {
    Mat<N, N> m{};
    for (std::size_t i = 0; i < N; ++i) m(i, i) = d[i];
    return m;
}

inline double det3(const Mat3& m) {
    return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
           m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
           m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
}

inline Mat3 inverse3(const Mat3& m) {
    const double d = det3(m);
    if (std::abs(d) < 1e-300) throw numeric_error("inverse3: singular matrix");
    const double id = 1.0 / d;
    Mat3 inv;
    inv(0, 0) = (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) * id;
    inv(0, 1) = (m(0, 2) * m(2, 1) - m(0, 1) * m(2, 2)) * id;
    inv(0, 2) = (m(0, 1) * m(1, 2) - m(0, 2) * m(1, 1)) * id;
    inv(1, 0) = (m(1, 2) * m(2, 0) - m(1, 0) * m(2, 2)) * id;
    inv(1, 1) = (m(0, 0) * m(2, 2) - m(0, 2) * m(2, 0)) * id;
    inv(1, 2) = (m(0, 2) * m(1, 0) - m(0, 0) * m(1, 2)) * id;
    inv(2, 0) = (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0)) * id;
    inv(2, 1) = (m(0, 1) * m(2, 0) - m(0, 0) * m(2, 1)) * id;
    inv(2, 2) = (m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0)) * id;
    return inv;
}

inline Mat<2, 2> inverse2(const Mat<2, 2>& m) {
    const double d = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    if (std::abs(d) < 1e-300) throw numeric_error("inverse2: singular matrix");
    return Mat<2, 2>{{m(1, 1) / d, -m(0, 1) / d, -m(1, 0) / d, m(0, 0) / d}};
}

// Cyclic Jacobi eigen-solver for small symmetric matrices. Deterministic,
// no pivot heuristics; plenty for the 2x2..4x4 Gram matrices used here.
template <std::size_t N>
inline std::array<double, N> sym_eigenvalues(Mat<N, N> m) {
    for (int sweep = 0; sweep < 50; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < N; ++p)
            for (std::size_t q = p + 1; q < N; ++q) off += m(p, q) * m(p, q);
        if (off < 1e-300) break;
        for (std::size_t p = 0; p < N; ++p) {
            for (std::size_t q = p + 1; q < N; ++q) {
                if (std::abs(m(p, q)) < 1e-300) continue;
                const double theta = (m(q, q) - m(p, p)) / (2.0 * m(p, q));
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < N; ++k) {
                    const double mkp = m(k, p), mkq = m(k, q);
                    m(k, p) = c * mkp - s * mkq;
                    m(k, q) = s * mkp + c * mkq;
                }
                for (std::size_t k = 0; k < N; ++k) {
                    const double mpk = m(p, k), mqk = m(q, k);
                    m(p, k) = c * mpk - s * mqk;
                    m(q, k) = s * mpk + c * mqk;
                }
            }
        }
    }
    std::array<double, N> ev{};
    for (std::size_t i = 0; i < N; ++i) ev[i] = m(i, i);
    // insertion sort, descending
    for (std::size_t i = 1; i < N; ++i) {
        double v = ev[i];
        std::size_t j = i;
        while (j > 0 && ev[j - 1] < v) {
            ev[j] = ev[j - 1];
            --j;
        }
        ev[j] = v;
    }
    return ev;
}

namespace detail {

// Condition number of a symmetric positive semi-definite Gram matrix.
template <std::size_t N>
inline double gram_condition(const Mat<N, N>& g) {
    const auto ev = sym_eigenvalues(g);
    const double lmax = ev.front();
    const double lmin = ev.back();
    if (lmin <= 0.0) return std::numeric_limits<double>::infinity();
    return lmax / lmin;
}

inline constexpr double kPinvConditionLimit = 1e12;

}  // namespace detail

// Moore-Penrose pseudo-inverse via normal equations. Shapes used in this
// project are tiny and well conditioned in normal operation; a Gram
// condition estimate (Jacobi eigenvalues) guards the degenerate-signature
// path and raises instead of returning garbage.
template <std::size_t R, std::size_t C>
inline Mat<C, R> pinv(const Mat<R, C>& m) {
    if (!m.finite()) throw numeric_error("pinv: non-finite input");
    if constexpr (R == C) {
        static_assert(R == 3, "square pinv only provided for 3x3");
        const Mat3 g = m.transposed() * m;
        if (detail::gram_condition(g) > detail::kPinvConditionLimit)
            throw numeric_error("pinv: near-singular 3x3 matrix");
        return inverse3(m);
    } else if constexpr (R < C) {
        // wide, full row rank: m^T (m m^T)^-1
        static_assert(R == 3, "wide pinv only provided for 3 rows");
        const Mat3 g = m * m.transposed();
        if (detail::gram_condition(g) > detail::kPinvConditionLimit)
            throw numeric_error("pinv: rank-deficient wide matrix (Gram condition exceeded)");
        return m.transposed() * inverse3(g);
    } else {
        // tall, full column rank: (m^T m)^-1 m^T
        const Mat<C, C> g = m.transposed() * m;
        if (detail::gram_condition(g) > detail::kPinvConditionLimit)
            throw numeric_error("pinv: rank-deficient tall matrix (Gram condition exceeded)");
        if constexpr (C == 1) {
            Mat<1, 1> gi{};
            gi(0, 0) = 1.0 / g(0, 0);
            return gi * m.transposed();
        } else if constexpr (C == 2) {
            return inverse2(g) * m.transposed();
        } else {
            return inverse3(g) * m.transposed();
        }
    }
}

// Numerical rank from singular values (sqrt of Gram eigenvalues):
// count of sigma_i > tol * sigma_max.
inline int rank3(const Mat34& m, double tol = 1e-8) {
    if (tol <= 0.0) throw numeric_error("rank3: tolerance must be positive");
    const auto ev = sym_eigenvalues<3>(m * m.transposed());
    const double smax = std::sqrt(std::max(ev[0], 0.0));
    if (smax == 0.0) return 0;
    int r = 0;
    for (double l : ev)
        if (std::sqrt(std::max(l, 0.0)) > tol * smax) ++r;
    return r;
}

// Root mean square of a 3-vector residual.
inline double rmse3(const Vec3& r) {
    return std::sqrt((r[0] * r[0] + r[1] * r[1] + r[2] * r[2]) / 3.0);
}

}  // namespace ftc
