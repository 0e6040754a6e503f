#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mapereg/error.hpp"

namespace mapereg {

enum class LossKind { Mape, Mae, Pinball };

inline std::string_view to_string(LossKind kind) {
    switch (kind) {
        case LossKind::Mape: return "mape";
        case LossKind::Mae: return "mae";
        case LossKind::Pinball: return "pinball";
    }
    return "unknown";
}

inline LossKind parse_loss_kind(std::string_view name) {
    if (name == "mape") return LossKind::Mape;
    if (name == "mae") return LossKind::Mae;
    if (name == "pinball") return LossKind::Pinball;
    throw input_error("unknown loss '" + std::string(name) + "' (expected mape, mae or pinball)");
}

/// Which loss to evaluate or fit, with its quantile level and optional
/// per-sample weights.
///
/// `tau` only changes `loss_value` for the pinball loss. When fitting, every
/// kind uses `tau` as the quantile level of the dual box, so a MAPE spec with
/// tau != 0.5 fits a "relative quantile".
struct LossSpec {
    LossKind kind = LossKind::Mape;
    double tau = 0.5;
    std::vector<double> sample_weights;  // empty means unit weights

    static LossSpec mape(double tau = 0.5) { return {LossKind::Mape, tau, {}}; }
    static LossSpec mae() { return {LossKind::Mae, 0.5, {}}; }
    static LossSpec pinball(double tau) { return {LossKind::Pinball, tau, {}}; }

    bool weighted() const noexcept { return !sample_weights.empty(); }

    void validate() const {
        detail::require(tau >= 0.0 && tau <= 1.0, "tau must lie in [0, 1]");
        for (std::size_t i = 0; i < sample_weights.size(); ++i) {
            const double w = sample_weights[i];
            if (!(w > 0.0) || !std::isfinite(w))
                throw input_error("sample weight " + std::to_string(i) + " must be positive and finite", i);
        }
    }
};

/// Check function rho_tau(xi): tau*xi for xi >= 0, (tau-1)*xi otherwise.
constexpr double pinball(double residual, double tau) noexcept {
    return residual >= 0.0 ? tau * residual : (tau - 1.0) * residual;
}

/// |p - y| / |y| with a/0 = +inf for a != 0 and 0/0 = 1.
inline double absolute_percentage_error(double prediction, double target) noexcept {
    const double num = std::abs(prediction - target);
    if (target == 0.0) return num == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
    return num / std::abs(target);
}

inline double loss_value(double prediction, double target, const LossSpec& spec) noexcept {
    switch (spec.kind) {
        case LossKind::Mape: return absolute_percentage_error(prediction, target);
        case LossKind::Mae: return std::abs(prediction - target);
        case LossKind::Pinball: return pinball(target - prediction, spec.tau);
    }
    return std::numeric_limits<double>::quiet_NaN();
}

/// (1/n) sum_i w_i * loss(p_i, y_i). Infinite terms propagate.
inline double empirical_risk(std::span<const double> predictions, std::span<const double> targets,
                             const LossSpec& spec) {
    detail::require(predictions.size() == targets.size(), "predictions and targets differ in length");
    detail::require(!targets.empty(), "empirical risk of an empty sample");
    detail::require(!spec.weighted() || spec.sample_weights.size() == targets.size(),
                    "sample weights and targets differ in length");
    double total = 0.0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const double l = loss_value(predictions[i], targets[i], spec);
        total += spec.weighted() ? spec.sample_weights[i] * l : l;
    }
    return total / static_cast<double>(targets.size());
}

}  // namespace mapereg
