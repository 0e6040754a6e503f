#pragma once

// Kernel regression under the MAPE, absolute or pinball loss:
//
//   min_{f, b}  C sum_i c_i rho_tau(y_i - f(x_i) - b) + 1/2 |f|^2
//
// fitted through its dual (see qp_solver.hpp), plus k-fold selection of C.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "mapereg/error.hpp"
#include "mapereg/kernel.hpp"
#include "mapereg/loss.hpp"
#include "mapereg/qp_solver.hpp"
#include "mapereg/quantile.hpp"
#include "mapereg/random.hpp"

namespace mapereg {

/// Features (one sample per row) and targets.
struct Dataset {
    Matrix X;
    Vector y;

    Eigen::Index size() const noexcept { return y.size(); }
    Eigen::Index dim() const noexcept { return X.cols(); }

    void validate() const {
        detail::require(X.rows() == y.size(), "feature rows and targets differ in count");
        for (Eigen::Index i = 0; i < y.size(); ++i)
            if (!std::isfinite(y(i)) || !X.row(i).allFinite())
                throw input_error("non-finite value in row " + std::to_string(i), static_cast<std::size_t>(i));
    }

    Dataset subset(std::span<const Eigen::Index> rows) const {
        Dataset out{Matrix(static_cast<Eigen::Index>(rows.size()), X.cols()),
                    Vector(static_cast<Eigen::Index>(rows.size()))};
        for (std::size_t k = 0; k < rows.size(); ++k) {
            out.X.row(static_cast<Eigen::Index>(k)) = X.row(rows[k]);
            out.y(static_cast<Eigen::Index>(k)) = y(rows[k]);
        }
        return out;
    }
};

struct FitOptions {
    SolverOptions solver;
    double y_min = 1e-8;  // MAPE fits reject |y_i| below this
};

struct FitDiagnostics {
    std::size_t iterations = 0;
    double objective = 0.0;
    double max_kkt_violation = 0.0;
    bool converged = false;
    std::vector<std::string> warnings;
};

/// Immutable fitted model: f(x) = sum_j alpha_j k(x_j, x) + b.
class TrainedModel {
public:
    TrainedModel(Matrix support_points, Vector alpha, double intercept, KernelSpec kernel, LossSpec loss,
                 double regularization_C, FitDiagnostics diagnostics = {})
        : support_(std::move(support_points)),
          alpha_(std::move(alpha)),
          intercept_(intercept),
          kernel_(kernel),
          loss_(std::move(loss)),
          C_(regularization_C),
          diagnostics_(std::move(diagnostics)) {
        detail::require(alpha_.size() == support_.rows(), "alpha length must equal the number of support points");
        kernel_.validate();
    }

    const Matrix& support_points() const noexcept { return support_; }
    const Vector& alpha() const noexcept { return alpha_; }
    double intercept() const noexcept { return intercept_; }
    const KernelSpec& kernel() const noexcept { return kernel_; }
    const LossSpec& loss() const noexcept { return loss_; }
    double regularization_C() const noexcept { return C_; }
    const FitDiagnostics& diagnostics() const noexcept { return diagnostics_; }
    Eigen::Index dim() const noexcept { return support_.cols(); }

private:
    Matrix support_;
    Vector alpha_;
    double intercept_;
    KernelSpec kernel_;
    LossSpec loss_;
    double C_;
    FitDiagnostics diagnostics_;
};

namespace detail {

inline void check_mape_targets(const Vector& y, double y_min) {
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (std::abs(y(i)) >= y_min) continue;
        std::ostringstream msg;
        msg << "MAPE fit needs |y| >= " << y_min << " but row " << i << " has y = " << y(i);
        throw input_error(msg.str(), static_cast<std::size_t>(i));
    }
}

inline std::span<const double> as_span(const Vector& v) {
    return {v.data(), static_cast<std::size_t>(v.size())};
}

/// Dual solve plus intercept on a precomputed Gram matrix.
inline DualSolution fit_on_gram(const Matrix& K, const Vector& y, const LossSpec& loss,
                                std::span<const double> weights, double C, const FitOptions& options) {
    if (loss.kind == LossKind::Mape) check_mape_targets(y, options.y_min);
    const BoxBounds box = make_bounds(as_span(y), C, loss.tau, loss.kind, weights);
    DualSolution sol = solve_dual(K, y, box, options.solver);
    const Vector scale = box.cost_scale();
    sol.intercept = recover_intercept(sol.alpha, K, y, box, loss.tau, as_span(scale));
    return sol;
}

inline void check_fit_inputs(const Dataset& data, const LossSpec& loss, const KernelSpec& kernel, double C) {
    data.validate();
    loss.validate();
    kernel.validate();
    require(data.size() >= 2, "fitting needs at least 2 samples");
    require(C > 0.0 && std::isfinite(C), "C must be positive and finite");
    require(!loss.weighted() || loss.sample_weights.size() == static_cast<std::size_t>(data.size()),
            "sample weights and targets differ in length");
}

}  // namespace detail

inline TrainedModel fit(const Dataset& data, const LossSpec& loss, const KernelSpec& kernel, double C,
                        const FitOptions& options = {}) {
    detail::check_fit_inputs(data, loss, kernel, C);
    const Matrix K = gram_matrix(data.X, kernel);
    DualSolution sol = detail::fit_on_gram(K, data.y, loss, loss.sample_weights, C, options);
    FitDiagnostics diag{sol.iterations, sol.objective, sol.max_kkt_violation, sol.converged, std::move(sol.warnings)};
    return TrainedModel(data.X, std::move(sol.alpha), sol.intercept, kernel, loss, C, std::move(diag));
}

inline Vector predict(const TrainedModel& model, const Matrix& X) {
    detail::require(X.cols() == model.dim(), "prediction inputs have " + std::to_string(X.cols()) +
                                                 " features, model expects " + std::to_string(model.dim()));
    const Matrix& S = model.support_points();
    const Vector& alpha = model.alpha();
    Vector out(X.rows());
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
        double f = 0.0;
        for (Eigen::Index j = 0; j < S.rows(); ++j) {
            if (alpha(j) != 0.0) f += alpha(j) * kernel_eval(S.row(j), X.row(r), model.kernel());
        }
        out(r) = f + model.intercept();
    }
    return out;
}

/// Outcome of a grid search over C.
struct CvReport {
    std::vector<double> grid;
    Matrix fold_scores;  // grid.size() x folds validation risks
    std::vector<double> mean_scores;
    std::size_t best_index = 0;
    double best_C = 0.0;
    int folds = 0;
    std::uint64_t seed = 0;
};

/// C values searched by default: powers of ten and 5 * 10^k from 0.01 to 1e5.
inline std::vector<double> default_c_grid() { return {0.01, 0.05, 0.1, 0.5, 1, 5, 10, 100, 1000, 1e4, 1e5}; }

/// Fold of each sample: indices shuffled with the seeded generator, then cut
/// into contiguous blocks (the first n % folds blocks get one extra sample).
inline std::vector<std::vector<Eigen::Index>> fold_assignment(Eigen::Index n, int folds, std::uint64_t seed) {
    detail::require(folds >= 2, "cross-validation needs at least 2 folds");
    detail::require(n >= folds, "cross-validation needs at least as many samples as folds");
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    Rng rng(seed);
    rng.shuffle(std::span<Eigen::Index>(order));

    std::vector<std::vector<Eigen::Index>> out(static_cast<std::size_t>(folds));
    const auto base = static_cast<std::size_t>(n) / static_cast<std::size_t>(folds);
    const auto extra = static_cast<std::size_t>(n) % static_cast<std::size_t>(folds);
    std::size_t pos = 0;
    for (std::size_t f = 0; f < out.size(); ++f) {
        const std::size_t len = base + (f < extra ? 1 : 0);
        out[f].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                      order.begin() + static_cast<std::ptrdiff_t>(pos + len));
        std::sort(out[f].begin(), out[f].end());
        pos += len;
    }
    return out;
}

/// k-fold validation risk of each C under the loss being fitted; the best C
/// has the smallest mean risk, ties going to the smaller C.
inline CvReport cross_validate(const Dataset& data, const LossSpec& loss, const KernelSpec& kernel,
                               std::span<const double> c_grid, int folds, std::uint64_t seed,
                               const FitOptions& options = {}) {
    detail::require(!c_grid.empty(), "empty C grid");
    for (double c : c_grid) detail::check_fit_inputs(data, loss, kernel, c);
    if (loss.kind == LossKind::Mape) detail::check_mape_targets(data.y, options.y_min);

    const auto partition = fold_assignment(data.size(), folds, seed);
    const Matrix K = gram_matrix(data.X, kernel);

    CvReport report;
    report.grid.assign(c_grid.begin(), c_grid.end());
    report.folds = folds;
    report.seed = seed;
    report.fold_scores.resize(static_cast<Eigen::Index>(c_grid.size()), folds);

    for (int f = 0; f < folds; ++f) {
        const auto& val = partition[static_cast<std::size_t>(f)];
        std::vector<Eigen::Index> train;
        for (int g = 0; g < folds; ++g)
            if (g != f) train.insert(train.end(), partition[static_cast<std::size_t>(g)].begin(),
                                     partition[static_cast<std::size_t>(g)].end());
        std::sort(train.begin(), train.end());

        const Matrix K_train = K(train, train);
        const Matrix K_val = K(val, train);
        const Vector y_train = data.y(train);
        const Vector y_val = data.y(val);
        std::vector<double> w_train, w_val;
        LossSpec val_loss = loss;
        if (loss.weighted()) {
            for (auto i : train) w_train.push_back(loss.sample_weights[static_cast<std::size_t>(i)]);
            for (auto i : val) w_val.push_back(loss.sample_weights[static_cast<std::size_t>(i)]);
            val_loss.sample_weights = w_val;
        }

        for (std::size_t c = 0; c < c_grid.size(); ++c) {
            const DualSolution sol = detail::fit_on_gram(K_train, y_train, loss, w_train, c_grid[c], options);
            const Vector pred = (K_val * sol.alpha).array() + sol.intercept;
            report.fold_scores(static_cast<Eigen::Index>(c), f) =
                empirical_risk(detail::as_span(pred), detail::as_span(y_val), val_loss);
        }
    }

    auto score_of = [](double mean) { return std::isnan(mean) ? std::numeric_limits<double>::infinity() : mean; };
    for (std::size_t c = 0; c < c_grid.size(); ++c) {
        const double mean = report.fold_scores.row(static_cast<Eigen::Index>(c)).mean();
        report.mean_scores.push_back(mean);
        const double best = score_of(report.mean_scores[report.best_index]);
        if (score_of(mean) < best || (score_of(mean) == best && c_grid[c] < c_grid[report.best_index]))
            report.best_index = c;
    }
    report.best_C = c_grid[report.best_index];
    return report;
}

}  // namespace mapereg
