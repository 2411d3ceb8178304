#ifndef NLSIP_RADIAL_OPERATOR_HPP
#define NLSIP_RADIAL_OPERATOR_HPP

#include <cstddef>
#include <vector>

#include "radial_grid.hpp"
#include "tridiagonal.hpp"

namespace nlsip {

/// Symmetric matrix W (Δ_h + c r^{-2}) with W = diag(weights), including the
/// core-ball term of graded grids. Its quadratic form is -(gradient_sq - c hardy).
inline Tridiagonal<double> weighted_operator(const RadialGrid& g, double c) {
    const std::size_t n = g.size();
    const auto& f = g.flux();
    Tridiagonal<double> m(n);
    for (std::size_t j = 0; j < n; ++j) {
        m.diag[j] = -(f[j] + f[j + 1]) + c * g.weight(j) / (g.node(j) * g.node(j));
        if (j + 1 < n) {
            m.upper[j] = f[j + 1];
            m.lower[j] = f[j + 1];
        }
    }
    const double sigma = g.core_sigma();
    m.diag[0] -= (sigma * sigma - c) * g.core_coefficient();
    return m;
}

/// (Δ_h + c r^{-2}) u at the nodes.
template <typename V>
std::vector<V> apply_operator(const RadialGrid& g, double c, const std::vector<V>& u) {
    auto y = weighted_operator(g, c).multiply(u);
    for (std::size_t j = 0; j < y.size(); ++j) y[j] /= g.weight(j);
    return y;
}

} // namespace nlsip

#endif
