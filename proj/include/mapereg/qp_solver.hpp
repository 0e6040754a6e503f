#pragma once

// Dual of weighted pinball-loss kernel regression:
//
//   maximize   a'y - 1/2 a'Ka
//   subject to sum_i a_i = 0,  lower_i <= a_i <= upper_i
//
// solved by sequential minimal optimization (pairwise coordinate ascent).
// For quantile level tau the box is [C(tau-1) s_i, C tau s_i], with s_i = 1
// for the absolute/pinball loss and s_i = 1/|y_i|^2 for the MAPE dual.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "mapereg/error.hpp"
#include "mapereg/kernel.hpp"
#include "mapereg/loss.hpp"
#include "mapereg/quantile.hpp"

namespace mapereg {

struct BoxBounds {
    Vector lower;
    Vector upper;

    Eigen::Index size() const noexcept { return lower.size(); }

    void validate() const {
        detail::require(lower.size() == upper.size(), "box bounds differ in length");
        for (Eigen::Index i = 0; i < lower.size(); ++i) {
            if (!(lower(i) <= 0.0 && 0.0 <= upper(i) && lower(i) < upper(i)) || !std::isfinite(lower(i)) ||
                !std::isfinite(upper(i)))
                throw input_error("box " + std::to_string(i) + " must be finite and contain 0 with lower < upper",
                                  static_cast<std::size_t>(i));
        }
    }

    /// Per-sample cost scale c_i = upper_i - lower_i; the primal charges c_i * rho(r_i).
    Vector cost_scale() const { return upper - lower; }
};

/// Box constraints of the dual for the given loss. Pinball uses the MAE box.
/// Optional per-sample weights scale each box.
inline BoxBounds make_bounds(std::span<const double> targets, double C, double tau, LossKind kind,
                             std::span<const double> weights = {}) {
    detail::require(C > 0.0 && std::isfinite(C), "C must be positive and finite");
    detail::require(tau >= 0.0 && tau <= 1.0, "tau must lie in [0, 1]");
    detail::require(weights.empty() || weights.size() == targets.size(), "weights and targets differ in length");
    const auto n = static_cast<Eigen::Index>(targets.size());
    BoxBounds box{Vector(n), Vector(n)};
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        double scale = C;
        if (kind == LossKind::Mape) {
            const double y = std::abs(targets[k]);
            if (!(y > 0.0)) throw input_error("MAPE dual bounds undefined for target 0 at row " + std::to_string(k), k);
            scale = C / (y * y);
        }
        if (!weights.empty()) scale *= weights[k];
        box.lower(i) = (tau - 1.0) * scale;
        box.upper(i) = tau * scale;
    }
    return box;
}

enum class WorkingSetSelection {
    MaxViolatingPair,  // i = argmax g over I_up, j = argmin g over I_low
    SecondOrder,       // same i, j maximizing the guaranteed objective gain
};

struct SolverOptions {
    double tol = 1e-6;
    std::optional<std::size_t> max_iter;  // default 100 * n^2 pair updates
    WorkingSetSelection selection = WorkingSetSelection::SecondOrder;
    /// Interleave a Newton step on the free variables every `subspace_interval`
    /// pair updates (0 means n). Disabled gives plain SMO.
    bool subspace_steps = true;
    std::size_t subspace_interval = 0;
    /// Feasible starting point; empty means alpha = 0.
    Vector initial_alpha;
    /// Called with (update count, objective) after every pair update.
    std::function<void(std::size_t, double)> observer;
};

struct DualSolution {
    Vector alpha;
    double intercept = 0.0;
    double objective = 0.0;
    std::size_t iterations = 0;  // pair updates
    std::size_t subspace_steps = 0;
    double max_kkt_violation = 0.0;
    double threshold = 0.0;  // gap accepted as converged: max(tol, gradient rounding floor)
    bool converged = false;
    std::vector<std::string> warnings;
};

/// a'y - 1/2 a'Ka.
inline double dual_objective(const Vector& alpha, const Matrix& K, const Vector& targets) {
    return alpha.dot(targets) - 0.5 * alpha.dot(K * alpha);
}

namespace detail {

/// max_{I_up} g - min_{I_low} g, clamped at 0, for gradient g = y - K alpha.
inline double violating_pair_gap(const Vector& alpha, const Vector& grad, const BoxBounds& box) {
    double gmax = -std::numeric_limits<double>::infinity();
    double gmin = std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < alpha.size(); ++t) {
        if (alpha(t) < box.upper(t)) gmax = std::max(gmax, grad(t));
        if (alpha(t) > box.lower(t)) gmin = std::min(gmin, grad(t));
    }
    if (!std::isfinite(gmax) || !std::isfinite(gmin)) return 0.0;
    return std::max(0.0, gmax - gmin);
}

inline void check_dual_inputs(const Matrix& K, const Vector& targets, const BoxBounds& box) {
    require(K.rows() == K.cols(), "gram matrix must be square");
    require(K.rows() == targets.size(), "gram matrix and targets differ in size");
    require(box.size() == targets.size(), "box bounds and targets differ in size");
    box.validate();
}

}  // namespace detail

/// Optimality gap of a feasible alpha; zero certifies a maximizer.
inline double kkt_violation(const Vector& alpha, const Matrix& K, const Vector& targets, const BoxBounds& box) {
    detail::check_dual_inputs(K, targets, box);
    detail::require(alpha.size() == targets.size(), "alpha and targets differ in size");
    const Vector grad = targets - K * alpha;
    return detail::violating_pair_gap(alpha, grad, box);
}

namespace detail {

/// Rounding error scale of g = y - K alpha: 10 eps max_i sum_j |K_ij alpha_j|.
inline double gradient_noise_floor(const Matrix& K, const Vector& alpha) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < K.rows(); ++i) {
        double row = 0.0;
        for (Eigen::Index j = 0; j < K.cols(); ++j) row += std::abs(K(j, i) * alpha(j));
        worst = std::max(worst, row);
    }
    return 10.0 * std::numeric_limits<double>::epsilon() * worst;
}

/// Lower Cholesky factor L (M = L L') that supports dropping a row/column.
class CholeskyFactor {
public:
    explicit CholeskyFactor(const Matrix& M) {
        const Eigen::LLT<Matrix> llt(M);
        ok_ = llt.info() == Eigen::Success;
        if (ok_) L_ = llt.matrixL();
    }

    bool ok() const noexcept { return ok_; }
    Eigen::Index size() const noexcept { return L_.rows(); }

    Vector solve(const Vector& b) const {
        Vector x = L_.triangularView<Eigen::Lower>().solve(b);
        L_.triangularView<Eigen::Lower>().transpose().solveInPlace(x);
        return x;
    }

    /// Factor of M with row and column k removed: drop row k of L, then fold
    /// the orphaned column L(k+1:, k) back in with a rank-one update.
    void remove(Eigen::Index k) {
        const Eigen::Index m = L_.rows();
        const Eigen::Index tail = m - k - 1;
        Vector x = L_.col(k).tail(tail);
        Matrix next = Matrix::Zero(m - 1, m - 1);
        next.topLeftCorner(k, k) = L_.topLeftCorner(k, k);
        next.bottomLeftCorner(tail, k) = L_.bottomLeftCorner(tail, k);
        next.bottomRightCorner(tail, tail) = L_.bottomRightCorner(tail, tail);
        for (Eigen::Index c = 0; c < tail; ++c) {
            const Eigen::Index cc = k + c;
            const double lkk = next(cc, cc);
            const double r = std::hypot(lkk, x(c));
            const double cos = r / lkk;
            const double sin = x(c) / lkk;
            next(cc, cc) = r;
            for (Eigen::Index i = c + 1; i < tail; ++i) {
                const double updated = (next(k + i, cc) + sin * x(i)) / cos;
                x(i) = cos * x(i) - sin * updated;
                next(k + i, cc) = updated;
            }
        }
        L_ = std::move(next);
    }

private:
    Matrix L_;
    bool ok_ = false;
};

/// Active-set refinement on the free variables F.
///
/// Repeats the equality-constrained Newton step
///
///   maximize g_F'd - 1/2 d'(K_FF + eps I)d  subject to  sum(d) = 0
///
/// with an exact line search on the true objective. When a box bound cuts the
/// step short, the blocking variable is pinned to that bound and dropped from
/// F (a Cholesky downdate, not a refactorization). The tiny ridge eps keeps
/// near-singular Gram blocks factorizable but shortens steps along directions
/// of near-zero curvature, so unblocked steps are repeated on the same factor
/// until they stop paying off. Returns the objective gain.
inline double active_set_refine(const Matrix& K, const BoxBounds& box, Vector& alpha, Vector& grad) {
    std::vector<Eigen::Index> free;
    for (Eigen::Index t = 0; t < alpha.size(); ++t)
        if (alpha(t) > box.lower(t) && alpha(t) < box.upper(t)) free.push_back(t);
    if (free.size() < 2) return 0.0;

    Matrix K_ff = K(free, free);
    Matrix M = K_ff;
    M.diagonal().array() += 1e-10 * std::max(K_ff.diagonal().maxCoeff(), 1e-300);
    CholeskyFactor factor(M);
    if (!factor.ok()) return 0.0;

    constexpr double kRelativeGain = 1e-6;
    constexpr int kMaxUnblockedSteps = 100;
    int unblocked_steps = 0;
    double total_gain = 0.0;
    while (free.size() >= 2) {
        const auto m = static_cast<Eigen::Index>(free.size());
        const Vector g_f = grad(free);
        const Vector u = factor.solve(g_f);
        const Vector v = factor.solve(Vector::Ones(m));
        Vector d = u - (u.sum() / v.sum()) * v;
        d.array() -= d.mean();
        const double gd = g_f.dot(d);
        if (!(gd > 0.0)) break;
        const double curvature = d.dot(K_ff.selfadjointView<Eigen::Lower>() * d);

        double t_box = std::numeric_limits<double>::infinity();
        Eigen::Index blocking = -1;
        for (Eigen::Index k = 0; k < m; ++k) {
            const Eigen::Index t = free[static_cast<std::size_t>(k)];
            double limit = std::numeric_limits<double>::infinity();
            if (d(k) > 0.0)
                limit = (box.upper(t) - alpha(t)) / d(k);
            else if (d(k) < 0.0)
                limit = (box.lower(t) - alpha(t)) / d(k);
            if (limit < t_box) {
                t_box = limit;
                blocking = k;
            }
        }
        const double t_star = curvature > 0.0 ? gd / curvature : std::numeric_limits<double>::infinity();
        const double step = std::min(t_star, t_box);
        if (!(step > 0.0) || !std::isfinite(step)) break;
        const double gain = step * gd - 0.5 * step * step * curvature;
        if (!(gain > 0.0)) break;

        const bool blocked = t_box <= t_star;
        for (Eigen::Index k = 0; k < m; ++k) {
            const Eigen::Index t = free[static_cast<std::size_t>(k)];
            if (blocked && k == blocking)
                alpha(t) = d(k) > 0.0 ? box.upper(t) : box.lower(t);
            else
                alpha(t) = std::clamp(alpha(t) + step * d(k), box.lower(t), box.upper(t));
        }
        grad.noalias() -= K(Eigen::all, free) * (step * d);
        total_gain += gain;
        if (!blocked) {
            if (gain <= kRelativeGain * total_gain || ++unblocked_steps >= kMaxUnblockedSteps) break;
            continue;
        }

        free.erase(free.begin() + blocking);
        factor.remove(blocking);
        const Eigen::Index tail = m - blocking - 1;
        Matrix shrunk(m - 1, m - 1);
        shrunk.topLeftCorner(blocking, blocking) = K_ff.topLeftCorner(blocking, blocking);
        shrunk.bottomLeftCorner(tail, blocking) = K_ff.bottomLeftCorner(tail, blocking);
        shrunk.topRightCorner(blocking, tail) = K_ff.topRightCorner(blocking, tail);
        shrunk.bottomRightCorner(tail, tail) = K_ff.bottomRightCorner(tail, tail);
        K_ff = std::move(shrunk);
    }
    return total_gain;
}

}  // namespace detail

/// SMO from alpha = 0. Each step moves alpha_i up and alpha_j down by the
/// same amount, so sum(alpha) = 0 is kept, and the step is clipped to both
/// boxes. Steps maximize the objective along the pair direction, so the
/// objective never decreases when K is PSD. The periodic active-set steps
/// (see active_set_refine) share both properties.
inline DualSolution solve_dual(const Matrix& K, const Vector& targets, const BoxBounds& box,
                               const SolverOptions& options = {}) {
    detail::check_dual_inputs(K, targets, box);
    detail::require(options.tol > 0.0, "solver tolerance must be positive");
    const Eigen::Index n = targets.size();
    const std::size_t max_iter =
        options.max_iter.value_or(100 * static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
    detail::require(max_iter > 0, "max_iter must be positive");

    DualSolution sol;
    sol.alpha = Vector::Zero(n);
    if (options.initial_alpha.size() > 0) {
        const Vector& a0 = options.initial_alpha;
        detail::require(a0.size() == n, "initial alpha has the wrong size");
        detail::require(((a0 - box.lower).array() >= 0.0).all() && ((box.upper - a0).array() >= 0.0).all(),
                        "initial alpha violates the box");
        detail::require(std::abs(a0.sum()) <= 1e-9 * (a0.cwiseAbs().sum() + 1.0), "initial alpha must sum to 0");
        sol.alpha = a0;
    }
    Vector& alpha = sol.alpha;
    Vector grad = targets - K * alpha;
    double objective = 0.5 * alpha.dot(targets + grad);
    constexpr double kTinyCurvature = 1e-12;
    bool non_psd = false;

    const std::size_t interval =
        options.subspace_interval > 0 ? options.subspace_interval : static_cast<std::size_t>(n);
    std::size_t last_subspace = 0;

    // The gap cannot be resolved below the rounding error of grad, so the
    // stopping threshold is raised to that floor when it exceeds tol.
    double threshold = options.tol;
    const auto refresh = [&] {
        grad = targets - K * alpha;
        threshold = std::max(options.tol, detail::gradient_noise_floor(K, alpha));
    };

    std::size_t iter = 0;
    for (;;) {
        // i: largest gradient among coordinates that may still increase.
        Eigen::Index i = -1;
        double gmax = -std::numeric_limits<double>::infinity();
        double gmin = std::numeric_limits<double>::infinity();
        for (Eigen::Index t = 0; t < n; ++t) {
            if (alpha(t) < box.upper(t) && grad(t) > gmax) {
                gmax = grad(t);
                i = t;
            }
            if (alpha(t) > box.lower(t)) gmin = std::min(gmin, grad(t));
        }
        const double gap = (i < 0 || !std::isfinite(gmin)) ? 0.0 : gmax - gmin;

        if (gap <= threshold) {
            // Confirm against a freshly computed gradient; incremental updates drift.
            refresh();
            if (detail::violating_pair_gap(alpha, grad, box) <= threshold) {
                sol.converged = true;
                break;
            }
            continue;
        }
        if (iter >= max_iter) break;

        // j: partner that may decrease, chosen by the selection rule.
        Eigen::Index j = -1;
        const auto Ki = K.col(i);
        if (options.selection == WorkingSetSelection::MaxViolatingPair) {
            for (Eigen::Index t = 0; t < n; ++t)
                if (alpha(t) > box.lower(t) && grad(t) == gmin) {
                    j = t;
                    break;
                }
        } else {
            double best = -std::numeric_limits<double>::infinity();
            for (Eigen::Index t = 0; t < n; ++t) {
                if (!(alpha(t) > box.lower(t))) continue;
                const double diff = gmax - grad(t);
                if (diff <= 0.0) continue;
                double eta = K(i, i) + K(t, t) - 2.0 * Ki(t);
                if (eta <= kTinyCurvature) eta = kTinyCurvature;
                const double gain = diff * diff / eta;
                if (gain > best) {
                    best = gain;
                    j = t;
                }
            }
        }

        const double diff = grad(i) - grad(j);
        const double eta = K(i, i) + K(j, j) - 2.0 * K(i, j);
        if (eta < -kTinyCurvature) non_psd = true;

        const double room_i = box.upper(i) - alpha(i);
        const double room_j = alpha(j) - box.lower(j);
        double delta = std::min(room_i, room_j);
        if (eta > kTinyCurvature) delta = std::min(delta, diff / eta);

        if (delta == room_i)
            alpha(i) = box.upper(i);
        else
            alpha(i) += delta;
        if (delta == room_j)
            alpha(j) = box.lower(j);
        else
            alpha(j) -= delta;

        grad.noalias() -= delta * (Ki - K.col(j));
        objective += delta * diff - 0.5 * delta * delta * eta;
        ++iter;
        if (options.observer) options.observer(iter, objective);

        if (iter - last_subspace >= interval) {
            last_subspace = iter;
            if (options.subspace_steps) {
                const double gain = detail::active_set_refine(K, box, alpha, grad);
                if (gain > 0.0) {
                    objective += gain;
                    ++sol.subspace_steps;
                    if (options.observer) options.observer(iter, objective);
                }
            }
            refresh();
        }
    }

    sol.iterations = iter;
    sol.objective = 0.5 * alpha.dot(targets + grad);  // equals a'y - 1/2 a'Ka for grad = y - Ka
    sol.max_kkt_violation = detail::violating_pair_gap(alpha, targets - K * alpha, box);
    if (non_psd) sol.warnings.emplace_back("negative curvature seen on a working pair: K is not PSD");
    sol.threshold = threshold;
    if (!sol.converged)
        sol.warnings.emplace_back("stopped at max_iter with KKT gap " + std::to_string(sol.max_kkt_violation));
    else if (threshold > options.tol)
        sol.warnings.emplace_back("KKT tolerance raised to " + std::to_string(threshold) +
                                  " by the rounding error of the gradient");
    return sol;
}

/// Intercept from a dual solution.
///
/// Free samples (strictly inside their box) have zero primal residual at the
/// optimum, so b is the median of y_i - f_i over them. Without free samples
/// any b in the weighted quantile interval of the residuals is optimal; the
/// midpoint is taken.
inline double recover_intercept(const Vector& alpha, const Matrix& K, const Vector& targets, const BoxBounds& box,
                                double tau, std::span<const double> weights) {
    detail::check_dual_inputs(K, targets, box);
    detail::require(alpha.size() == targets.size(), "alpha and targets differ in size");
    detail::require(weights.size() == static_cast<std::size_t>(targets.size()), "weights and targets differ in size");

    const Vector residual = targets - K * alpha;
    std::vector<double> free_residuals;
    for (Eigen::Index i = 0; i < alpha.size(); ++i) {
        const double margin = 1e-8 * (box.upper(i) - box.lower(i));
        if (alpha(i) > box.lower(i) + margin && alpha(i) < box.upper(i) - margin) free_residuals.push_back(residual(i));
    }
    if (!free_residuals.empty()) return median(free_residuals);
    return weighted_quantile(std::span<const double>(residual.data(), static_cast<std::size_t>(residual.size())),
                             weights, tau);
}

/// sum_i c_i rho_{tau_i}(y_i - f_i - b) + 1/2 a'Ka with c_i = upper_i - lower_i
/// and tau_i = upper_i / c_i: the primal whose dual has this box.
inline double primal_objective(const Vector& alpha, const Matrix& K, const Vector& targets, const BoxBounds& box,
                               double intercept) {
    const Vector f = K * alpha;
    double cost = 0.5 * alpha.dot(f);
    for (Eigen::Index i = 0; i < alpha.size(); ++i) {
        const double c = box.upper(i) - box.lower(i);
        cost += c * pinball(targets(i) - f(i) - intercept, box.upper(i) / c);
    }
    return cost;
}

}  // namespace mapereg
