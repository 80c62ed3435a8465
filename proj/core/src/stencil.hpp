#pragma once

#include <array>

namespace geolp::detail {

/// Five-point first-derivative stencil on a uniform grid of n ≥ 5 points;
/// weights are to be divided by 12h.
struct Stencil
{
    int start;
    std::array<double, 5> w;
};

inline Stencil derivative_stencil(int i, int n)
{
    if (i >= 2 && i <= n - 3) return {i - 2, {1.0, -8.0, 0.0, 8.0, -1.0}};
    if (i == 0) return {0, {-25.0, 48.0, -36.0, 16.0, -3.0}};
    if (i == 1) return {0, {-3.0, -10.0, 18.0, -6.0, 1.0}};
    if (i == n - 2) return {n - 5, {-1.0, 6.0, -18.0, 10.0, 3.0}};
    return {n - 5, {3.0, -16.0, 36.0, -48.0, 25.0}};
}

template <class T, class Get>
T derivative_at(int i, int n, double h, Get get)
{
    const Stencil st = derivative_stencil(i, n);
    T out = (st.w[0] / (12.0 * h)) * get(st.start);
    for (int j = 1; j < 5; ++j) {
        if (st.w[j] != 0.0) out = out + (st.w[j] / (12.0 * h)) * get(st.start + j);
    }
    return out;
}

} // namespace geolp::detail
