#pragma once

// Finite-K look at whether J(m) = E(|m - T|/|T|) can be finite away from 0.
//
// J is finite everywhere iff P(T = 0) = 0 and both series
//   sum_k k * P(T in (1/(k+1), 1/k])   and   sum_k k * P(T in [-1/k, -1/(k+1)))
// converge. Convergence of an infinite series cannot be decided from K terms,
// so the verdict below is a heuristic: it fits the log-log slope of the last
// K/2 terms and calls the series finite when the terms decay faster than 1/k.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mapereg/error.hpp"

namespace mapereg {

enum class FinitenessVerdict { Finite, LikelyDivergent, ZeroMass };

inline std::string_view to_string(FinitenessVerdict v) {
    switch (v) {
        case FinitenessVerdict::Finite: return "Finite";
        case FinitenessVerdict::LikelyDivergent: return "LikelyDivergent";
        case FinitenessVerdict::ZeroMass: return "ZeroMass";
    }
    return "unknown";
}

/// eps -> P(0 < T <= eps) or eps -> P(-eps <= T < 0).
using TailCdf = std::function<double(double)>;

struct SeriesSide {
    std::vector<double> terms;         // k * [F(1/k) - F(1/(k+1))], k = 1..K
    std::vector<double> partial_sums;  // running sums of terms
    double tail_slope = 0.0;           // fitted log-log slope over the tail half; NaN if undefined
    bool decays_fast = true;
};

struct FinitenessReport {
    SeriesSide positive;
    SeriesSide negative;
    double mass_at_zero = 0.0;
    FinitenessVerdict verdict = FinitenessVerdict::Finite;

    static constexpr double slope_threshold = -1.0;
    static constexpr std::string_view note =
        "heuristic: Finite when the fitted log-log slope of the last K/2 terms is below -1 on both sides";
};

namespace detail {

inline SeriesSide series_side(const TailCdf& cdf, std::size_t k_max, const char* side) {
    SeriesSide out;
    out.terms.reserve(k_max);
    out.partial_sums.reserve(k_max);

    double upper = cdf(1.0);
    double sum = 0.0;
    for (std::size_t k = 1; k <= k_max; ++k) {
        const double lower = cdf(1.0 / static_cast<double>(k + 1));
        if (!(lower <= upper) || lower < 0.0)
            throw input_error(std::string(side) + " tail cdf is not monotone at k=" + std::to_string(k));
        const double term = static_cast<double>(k) * (upper - lower);
        sum += term;
        out.terms.push_back(term);
        out.partial_sums.push_back(sum);
        upper = lower;
    }

    // Least-squares slope of log(term) on log(k) over the positive tail terms.
    const std::size_t first = k_max - k_max / 2;  // zero-based start of the last K/2 terms
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    std::size_t count = 0;
    bool any_positive = false;
    for (std::size_t i = first; i < k_max; ++i) {
        if (out.terms[i] <= 0.0) continue;
        any_positive = true;
        const double x = std::log(static_cast<double>(i + 1));
        const double y = std::log(out.terms[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++count;
    }
    if (count >= 2) {
        const double n = static_cast<double>(count);
        out.tail_slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        out.decays_fast = out.tail_slope < FinitenessReport::slope_threshold;
    } else {
        // Too few terms to fit: vanishing tails count as finite, anything else is not trusted.
        out.tail_slope = std::nan("");
        out.decays_fast = !any_positive;
    }
    return out;
}

}  // namespace detail

inline FinitenessReport finiteness_diagnostic(const TailCdf& positive_tail, const TailCdf& negative_tail,
                                              double mass_at_zero, std::size_t k_max) {
    detail::require(k_max >= 1, "K must be at least 1");
    detail::require(mass_at_zero >= 0.0 && mass_at_zero <= 1.0, "mass at zero must be a probability");

    FinitenessReport report;
    report.mass_at_zero = mass_at_zero;
    report.positive = detail::series_side(positive_tail, k_max, "positive");
    report.negative = detail::series_side(negative_tail, k_max, "negative");

    if (mass_at_zero > 0.0)
        report.verdict = FinitenessVerdict::ZeroMass;
    else if (report.positive.decays_fast && report.negative.decays_fast)
        report.verdict = FinitenessVerdict::Finite;
    else
        report.verdict = FinitenessVerdict::LikelyDivergent;
    return report;
}

/// Tail of T ~ U(0, 1]: P(0 < T <= eps) = eps on (0, 1].
inline double linear_tail(double eps) { return eps <= 0.0 ? 0.0 : (eps >= 1.0 ? 1.0 : eps); }

/// Tail of T = sqrt(U): P(0 < T <= eps) = eps^2 on (0, 1].
inline double quadratic_tail(double eps) { return eps <= 0.0 ? 0.0 : (eps >= 1.0 ? 1.0 : eps * eps); }

inline double empty_tail(double) { return 0.0; }

/// Tail cdf through the points (eps_k, F_k): linear between points, through
/// (0, 0) below the first and flat after the last. eps must be strictly
/// increasing and positive, F nondecreasing in [0, 1].
inline TailCdf tabulated_tail(std::vector<double> eps, std::vector<double> cdf) {
    detail::require(!eps.empty(), "tabulated tail needs at least one point");
    detail::require(eps.size() == cdf.size(), "tabulated tail: eps and cdf differ in length");
    for (std::size_t k = 0; k < eps.size(); ++k) {
        detail::require(eps[k] > 0.0 && std::isfinite(eps[k]), "tabulated tail: eps must be positive");
        detail::require(cdf[k] >= 0.0 && cdf[k] <= 1.0, "tabulated tail: cdf values must lie in [0, 1]");
        if (k > 0) {
            detail::require(eps[k] > eps[k - 1], "tabulated tail: eps must be strictly increasing");
            detail::require(cdf[k] >= cdf[k - 1], "tabulated tail: cdf must be nondecreasing");
        }
    }
    auto points = std::make_shared<const std::pair<std::vector<double>, std::vector<double>>>(std::move(eps),
                                                                                               std::move(cdf));
    return [points](double e) {
        const auto& [xs, fs] = *points;
        if (e <= 0.0) return 0.0;
        if (e >= xs.back()) return fs.back();
        const auto k = static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), e) - xs.begin());
        const double x0 = k == 0 ? 0.0 : xs[k - 1];
        const double f0 = k == 0 ? 0.0 : fs[k - 1];
        return f0 + (fs[k] - f0) * (e - x0) / (xs[k] - x0);
    };
}

}  // namespace mapereg
