#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "mapereg/error.hpp"

namespace mapereg {

/// Closed set of minimizers of m -> sum_i w_i rho_tau(v_i - m).
struct QuantileInterval {
    double lower;
    double upper;

    /// Midpoint of the argmin interval; the tie-breaking convention.
    double midpoint() const noexcept { return lower + 0.5 * (upper - lower); }
};

namespace detail {

/// Relative slack under which a cumulative weight counts as hitting tau * W.
/// Without it, 0.3 + 0.2 + 0.1 style sums miss exact ties by one ulp.
inline constexpr double kTieTolerance = 1e-12;

}  // namespace detail

/// Argmin interval of the weighted check loss, found with one sorted sweep.
///
/// The right derivative at m is L(m) - tau*W, where L(m) is the weight of
/// values <= m, so the lower end is the first sorted value whose cumulative
/// weight reaches tau*W, and the interval extends to the next value on an
/// exact tie. For tau = 0 or 1 the set is a half-line; its finite end is
/// returned as both bounds.
inline QuantileInterval weighted_quantile_interval(std::span<const double> values,
                                                   std::span<const double> weights, double tau) {
    detail::require(!values.empty(), "weighted quantile of an empty sample");
    detail::require(values.size() == weights.size(), "values and weights differ in length");
    detail::require(tau >= 0.0 && tau <= 1.0, "tau must lie in [0, 1]");

    double total = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        detail::require(!std::isnan(values[i]), "weighted quantile of NaN values");
        detail::require(weights[i] > 0.0 && std::isfinite(weights[i]), "weights must be positive and finite");
        total += weights[i];
    }

    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const double target = tau * total;
    const double slack = detail::kTieTolerance * total;

    if (target <= slack) return {values[order.front()], values[order.front()]};
    if (target >= total - slack) return {values[order.back()], values[order.back()]};

    // Sweep distinct values so that repeated values pool their weight.
    double cumulative = 0.0;
    std::size_t k = 0;
    while (k < order.size()) {
        const double value = values[order[k]];
        while (k < order.size() && values[order[k]] == value) cumulative += weights[order[k++]];
        if (cumulative >= target - slack) {
            if (std::abs(cumulative - target) <= slack && k < order.size()) return {value, values[order[k]]};
            return {value, value};
        }
    }
    return {values[order.back()], values[order.back()]};
}

/// A minimizer of sum_i w_i rho_tau(v_i - m); the midpoint when the argmin is an interval.
inline double weighted_quantile(std::span<const double> values, std::span<const double> weights, double tau) {
    return weighted_quantile_interval(values, weights, tau).midpoint();
}

/// Plain median with the same midpoint convention.
inline double median(std::span<const double> values) {
    const std::vector<double> unit(values.size(), 1.0);
    return weighted_quantile(values, unit, 0.5);
}

}  // namespace mapereg
