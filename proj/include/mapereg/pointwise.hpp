#pragma once

// MAPE-optimal point estimate for a discrete random variable T:
// minimize J(m) = E(|m - T| / |T|).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "mapereg/error.hpp"
#include "mapereg/loss.hpp"
#include "mapereg/quantile.hpp"

namespace mapereg {

/// Finite distribution on the real line. Atoms are sorted and merged on
/// construction; zero-mass atoms are dropped.
class DiscreteDistribution {
public:
    DiscreteDistribution(std::span<const double> atoms, std::span<const double> masses) {
        detail::require(!atoms.empty(), "distribution needs at least one atom");
        detail::require(atoms.size() == masses.size(), "atoms and masses differ in length");

        std::vector<std::size_t> order(atoms.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        double total = 0.0;
        for (std::size_t i = 0; i < atoms.size(); ++i) {
            detail::require(std::isfinite(atoms[i]), "atoms must be finite");
            detail::require(masses[i] >= 0.0 && std::isfinite(masses[i]), "masses must be nonnegative");
            total += masses[i];
        }
        detail::require(std::abs(total - 1.0) <= 1e-12, "masses must sum to 1");
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return atoms[a] < atoms[b]; });

        for (std::size_t i : order) {
            if (masses[i] == 0.0) continue;
            if (!atoms_.empty() && atoms_.back() == atoms[i]) {
                masses_.back() += masses[i];
            } else {
                atoms_.push_back(atoms[i]);
                masses_.push_back(masses[i]);
            }
        }
    }

    std::span<const double> atoms() const noexcept { return atoms_; }
    std::span<const double> masses() const noexcept { return masses_; }

    double mass_at(double t) const noexcept {
        const auto it = std::lower_bound(atoms_.begin(), atoms_.end(), t);
        return (it != atoms_.end() && *it == t) ? masses_[static_cast<std::size_t>(it - atoms_.begin())] : 0.0;
    }

private:
    std::vector<double> atoms_;
    std::vector<double> masses_;
};

/// J(m) = sum_k p_k |m - t_k| / |t_k|, with a/0 = inf and 0/0 = 1.
inline double mape_objective(const DiscreteDistribution& dist, double m) {
    const auto atoms = dist.atoms();
    const auto masses = dist.masses();
    double j = 0.0;
    for (std::size_t k = 0; k < atoms.size(); ++k) j += masses[k] * absolute_percentage_error(m, atoms[k]);
    return j;
}

struct PointwiseMinimum {
    double m_star;
    double j_star;
    QuantileInterval argmin;  // closed set of all minimizers
};

/// Minimizer of J, taking the midpoint when the argmin is an interval.
///
/// J is the weighted absolute loss with weights p_k/|t_k|, so its minimizers
/// are the weighted medians of the atoms. A positive mass at zero makes J
/// infinite away from 0, which forces m* = 0.
inline PointwiseMinimum pointwise_mape_minimizer(const DiscreteDistribution& dist) {
    if (dist.mass_at(0.0) > 0.0) return {0.0, mape_objective(dist, 0.0), {0.0, 0.0}};

    const auto atoms = dist.atoms();
    const auto masses = dist.masses();
    std::vector<double> weights(atoms.size());
    for (std::size_t k = 0; k < atoms.size(); ++k) weights[k] = masses[k] / std::abs(atoms[k]);

    const QuantileInterval argmin = weighted_quantile_interval(atoms, weights, 0.5);
    const double m = argmin.midpoint();
    return {m, mape_objective(dist, m), argmin};
}

}  // namespace mapereg
