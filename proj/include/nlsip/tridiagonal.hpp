#ifndef NLSIP_TRIDIAGONAL_HPP
#define NLSIP_TRIDIAGONAL_HPP

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "error.hpp"

namespace nlsip {

/// Tridiagonal matrix: lower[i] couples row i+1 to column i, upper[i] row i to column i+1.
template <typename T>
struct Tridiagonal {
    std::vector<T> lower;
    std::vector<T> diag;
    std::vector<T> upper;

    explicit Tridiagonal(std::size_t n = 0) : lower(n ? n - 1 : 0), diag(n), upper(n ? n - 1 : 0) {}

    std::size_t size() const { return diag.size(); }

    template <typename V>
    std::vector<V> multiply(const std::vector<V>& x) const {
        const std::size_t n = size();
        std::vector<V> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            V acc = diag[i] * x[i];
            if (i > 0) acc += lower[i - 1] * x[i - 1];
            if (i + 1 < n) acc += upper[i] * x[i + 1];
            y[i] = acc;
        }
        return y;
    }
};

/// Thomas algorithm without pivoting. Callers use it on matrices whose
/// Hermitian part is definite (Newton Jacobians near a nondegenerate root are
/// the exception and are checked for zero pivots).
template <typename T, typename V>
std::vector<V> solve(const Tridiagonal<T>& m, std::vector<V> rhs) {
    const std::size_t n = m.size();
    require(rhs.size() == n, errc::consistency, "tridiagonal size mismatch");
    std::vector<T> c(n);
    T pivot = m.diag[0];
    require(std::abs(pivot) > 0.0, errc::numerical, "zero pivot in tridiagonal solve");
    c[0] = n > 1 ? m.upper[0] / pivot : T{};
    rhs[0] /= pivot;
    for (std::size_t i = 1; i < n; ++i) {
        pivot = m.diag[i] - m.lower[i - 1] * c[i - 1];
        require(std::abs(pivot) > 0.0, errc::numerical, "zero pivot in tridiagonal solve");
        c[i] = i + 1 < n ? m.upper[i] / pivot : T{};
        rhs[i] = (rhs[i] - m.lower[i - 1] * rhs[i - 1]) / pivot;
    }
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= c[i] * rhs[i + 1];
    return rhs;
}

/// Gaussian elimination with partial pivoting for real tridiagonal systems
/// (the LAPACK gtsv scheme). Used for indefinite Newton Jacobians.
inline std::vector<double> solve_pivoted(const Tridiagonal<double>& m, std::vector<double> b) {
    const std::size_t n = m.size();
    require(b.size() == n, errc::consistency, "tridiagonal size mismatch");
    std::vector<double> dl(m.lower), d(m.diag), du(m.upper), du2(n > 2 ? n - 2 : 0, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (std::abs(d[i]) >= std::abs(dl[i])) {
            require(d[i] != 0.0, errc::numerical, "singular tridiagonal matrix");
            const double f = dl[i] / d[i];
            d[i + 1] -= f * du[i];
            b[i + 1] -= f * b[i];
            dl[i] = 0.0;
        } else {
            const double f = d[i] / dl[i];
            d[i] = dl[i];
            const double tmp = d[i + 1];
            d[i + 1] = du[i] - f * tmp;
            if (i + 2 < n) {
                du2[i] = du[i + 1];
                du[i + 1] = -f * du2[i];
            }
            du[i] = tmp;
            std::swap(b[i], b[i + 1]);
            b[i + 1] -= f * b[i];
        }
    }
    require(d[n - 1] != 0.0, errc::numerical, "singular tridiagonal matrix");
    b[n - 1] /= d[n - 1];
    if (n > 1) b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
    for (std::size_t i = n >= 2 ? n - 2 : 0; i-- > 0;) b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / d[i];
    return b;
}

} // namespace nlsip

#endif
