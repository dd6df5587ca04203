#pragma once

#include <cmath>
#include <span>

#include "crd/matrix.hpp"

namespace crd {

inline constexpr double kLn2 = 0.693147180559945309417232121458176568;

/// Shannon entropy in bits; zero-probability entries contribute nothing.
inline double entropy_bits(std::span<const double> pmf) noexcept
{
    double h = 0.0;
    for (double p : pmf)
        if (p > 0.0) h -= p * std::log2(p);
    return h;
}

/// h(p) = -p log2 p - (1-p) log2 (1-p).
inline double binary_entropy(double p) noexcept
{
    const double q[2] = {p, 1.0 - p};
    return entropy_bits(q);
}

/// Output marginal sum_x p(x) W(.|x).
inline std::vector<double> output_marginal(std::span<const double> px, const Matrix& channel)
{
    std::vector<double> q(channel.cols(), 0.0);
    for (std::size_t x = 0; x < channel.rows(); ++x) {
        if (px[x] <= 0.0) continue;
        auto w = channel.row(x);
        for (std::size_t y = 0; y < q.size(); ++y) q[y] += px[x] * w[y];
    }
    return q;
}

/// I(X;Y) in bits for input pmf `px` and channel rows W(.|x).
inline double mutual_information(std::span<const double> px, const Matrix& channel)
{
    const auto q = output_marginal(px, channel);
    double info = 0.0;
    for (std::size_t x = 0; x < channel.rows(); ++x) {
        if (px[x] <= 0.0) continue;
        auto w = channel.row(x);
        for (std::size_t y = 0; y < q.size(); ++y)
            if (w[y] > 0.0) info += px[x] * w[y] * std::log2(w[y] / q[y]);
    }
    return info > 0.0 ? info : 0.0;
}

/// E[d(X,Y)] under input pmf `px` and channel W.
inline double expected_distortion(std::span<const double> px, const Matrix& channel, const Matrix& d)
{
    double total = 0.0;
    for (std::size_t x = 0; x < channel.rows(); ++x) {
        if (px[x] <= 0.0) continue;
        auto w = channel.row(x);
        auto dr = d.row(x);
        double acc = 0.0;
        for (std::size_t y = 0; y < w.size(); ++y) acc += w[y] * dr[y];
        total += px[x] * acc;
    }
    return total;
}

} // namespace crd
