#pragma once

// Translated-sinc simulation study: MAE-fitted versus MAPE-fitted kernel
// regression as the targets move away from zero.
//
//   Y = a + sin(2 pi X) / (2 pi X) + eps,  X ~ U[-1, 1],
//   eps ~ N(0, (0.1 exp(1 - X))^2)

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "mapereg/error.hpp"
#include "mapereg/kernel.hpp"
#include "mapereg/loss.hpp"
#include "mapereg/random.hpp"
#include "mapereg/regressor.hpp"

namespace mapereg {

/// a + sin(2 pi x) / (2 pi x), continuous at x = 0.
inline double sinc_translated(double x, double a) {
    const double u = 2.0 * std::numbers::pi * x;
    return a + (u == 0.0 ? 1.0 : std::sin(u) / u);
}

inline double noise_scale(double x) { return 0.1 * std::exp(1.0 - x); }

inline Dataset generate_dataset(double a, Eigen::Index n, std::uint64_t seed) {
    detail::require(n >= 1, "dataset size must be positive");
    Dataset data{Matrix(n, 1), Vector(n)};
    Rng rng(seed);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double x = rng.uniform(-1.0, 1.0);
        data.X(i, 0) = x;
        data.y(i) = sinc_translated(x, a) + noise_scale(x) * rng.normal();
    }
    return data;
}

/// Bandwidth used by the simulation unless overridden. Picked once by
/// cross-validated MAPE on a = 1 data over {0.1, 1, 10} (tools/pilot_gamma.cpp,
/// seed 42: 0.699, 0.523, 0.502).
inline constexpr double kDefaultSimulationGamma = 10.0;

/// MAPE floor of the companion column reported next to the raw test MAPE.
inline constexpr double kCompanionMapeFloor = 1e-3;

struct SimConfig {
    std::vector<double> a_values{0.0, 0.1, 0.5, 1.0, 2.5, 5.0, 10.0, 25.0, 50.0, 100.0};
    Eigen::Index n_train = 1000;
    Eigen::Index n_test = 1000;
    std::uint64_t seed = 42;
    std::vector<double> c_grid = default_c_grid();
    int folds = 5;
    double gamma = kDefaultSimulationGamma;
    double mape_floor = 0.0;  // test points with |y| below this are left out of the MAPE
    std::size_t curve_points = 512;
    FitOptions fit;

    void validate() const {
        detail::require(!a_values.empty(), "no values of a to simulate");
        detail::require(folds >= 2, "cross-validation needs at least 2 folds");
        detail::require(n_train >= folds, "n_train must be at least the number of folds");
        detail::require(n_test >= folds, "n_test must be at least the number of folds");
        detail::require(!c_grid.empty(), "empty C grid");
        for (double c : c_grid) detail::require(c > 0.0 && std::isfinite(c), "C grid values must be positive");
        detail::require(gamma > 0.0 && std::isfinite(gamma), "gamma must be positive");
        detail::require(mape_floor >= 0.0, "mape_floor must be nonnegative");
        detail::require(curve_points >= 2, "curve needs at least 2 points");
    }
};

/// Test-set MAPE in percent, skipping targets with |y| < floor when floor > 0.
inline double mape_percent(const Vector& predictions, const Vector& targets, double floor = 0.0) {
    double total = 0.0;
    std::size_t count = 0;
    for (Eigen::Index i = 0; i < targets.size(); ++i) {
        if (floor > 0.0 && std::abs(targets(i)) < floor) continue;
        total += absolute_percentage_error(predictions(i), targets(i));
        ++count;
    }
    return count == 0 ? 0.0 : 100.0 * total / static_cast<double>(count);
}

struct Curve {
    std::vector<double> x, truth, f_mae, f_mape;
};

struct ExperimentRow {
    double a = 0.0;
    bool ok = false;
    std::string status;
    double mape_mae_pct = 0.0;
    double mape_mape_pct = 0.0;
    double mape_mae_pct_companion = 0.0;  // with kCompanionMapeFloor
    double mape_mape_pct_companion = 0.0;
    double c_mae = 0.0;
    double c_mape = 0.0;
    FitDiagnostics mae_fit;
    FitDiagnostics mape_fit;
    Curve curve;
};

struct ExperimentReport {
    std::vector<ExperimentRow> rows;
    std::uint64_t seed = 0;
    SimConfig config;
};

/// Seed of row a: derived from the bits of a, so a row does not depend on
/// which other values of a are in the run.
inline std::uint64_t row_seed(std::uint64_t seed, double a) {
    return derive_seed(seed, std::bit_cast<std::uint64_t>(a + 0.0));
}

enum class RowStream : std::uint64_t { Train = 0, Test = 1, Folds = 2 };

inline ExperimentRow run_row(const SimConfig& config, double a) {
    ExperimentRow row;
    row.a = a;
    const std::uint64_t base = row_seed(config.seed, a);
    const Dataset train = generate_dataset(a, config.n_train, derive_seed(base, std::uint64_t(RowStream::Train)));
    const Dataset test = generate_dataset(a, config.n_test, derive_seed(base, std::uint64_t(RowStream::Test)));
    const std::uint64_t fold_seed = derive_seed(base, std::uint64_t(RowStream::Folds));
    const KernelSpec kernel = KernelSpec::gaussian(config.gamma);

    try {
        const LossSpec mae = LossSpec::mae();
        const LossSpec mape = LossSpec::mape();
        row.c_mae = cross_validate(train, mae, kernel, config.c_grid, config.folds, fold_seed, config.fit).best_C;
        row.c_mape = cross_validate(train, mape, kernel, config.c_grid, config.folds, fold_seed, config.fit).best_C;

        const TrainedModel f_mae = fit(train, mae, kernel, row.c_mae, config.fit);
        const TrainedModel f_mape = fit(train, mape, kernel, row.c_mape, config.fit);
        row.mae_fit = f_mae.diagnostics();
        row.mape_fit = f_mape.diagnostics();

        const Vector p_mae = predict(f_mae, test.X);
        const Vector p_mape = predict(f_mape, test.X);
        row.mape_mae_pct = mape_percent(p_mae, test.y, config.mape_floor);
        row.mape_mape_pct = mape_percent(p_mape, test.y, config.mape_floor);
        row.mape_mae_pct_companion = mape_percent(p_mae, test.y, kCompanionMapeFloor);
        row.mape_mape_pct_companion = mape_percent(p_mape, test.y, kCompanionMapeFloor);

        Matrix grid(static_cast<Eigen::Index>(config.curve_points), 1);
        const double step = 2.0 / static_cast<double>(config.curve_points - 1);
        for (std::size_t k = 0; k < config.curve_points; ++k)
            grid(static_cast<Eigen::Index>(k), 0) = -1.0 + step * static_cast<double>(k);
        grid(grid.rows() - 1, 0) = 1.0;
        const Vector c_mae = predict(f_mae, grid);
        const Vector c_mape = predict(f_mape, grid);
        for (Eigen::Index k = 0; k < grid.rows(); ++k) {
            row.curve.x.push_back(grid(k, 0));
            row.curve.truth.push_back(sinc_translated(grid(k, 0), a));
            row.curve.f_mae.push_back(c_mae(k));
            row.curve.f_mape.push_back(c_mape(k));
        }
        row.ok = true;
        row.status = (row.mae_fit.converged && row.mape_fit.converged) ? "ok" : "ok (solver hit max_iter)";
    } catch (const input_error& e) {
        row.ok = false;
        row.status = std::string("failed: ") + e.what();
    }
    return row;
}

/// Runs every row in order. `progress`, if set, is called after each row.
inline ExperimentReport run_experiment(const SimConfig& config,
                                       const std::function<void(const ExperimentRow&)>& progress = {}) {
    config.validate();
    ExperimentReport report;
    report.seed = config.seed;
    report.config = config;
    for (double a : config.a_values) {
        report.rows.push_back(run_row(config, a));
        if (progress) progress(report.rows.back());
    }
    return report;
}

namespace detail {

inline std::string fixed2(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(2) << v;
    return os.str();
}

/// Shortest form that reads back as the same double ("100", "0.05", "1e+05").
inline std::string verbatim(double v) {
    std::array<char, 32> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), ec == std::errc() ? ptr : buf.data());
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace detail

/// `a,mape_mae_pct,mape_mape_pct,c_mae,c_mape,status`, percents to two decimals.
inline void write_report_csv(const ExperimentReport& report, std::ostream& out) {
    out << "a,mape_mae_pct,mape_mape_pct,c_mae,c_mape,status\n";
    for (const auto& r : report.rows) {
        out << detail::verbatim(r.a) << ',';
        if (r.ok)
            out << detail::fixed2(r.mape_mae_pct) << ',' << detail::fixed2(r.mape_mape_pct) << ','
                << detail::verbatim(r.c_mae) << ',' << detail::verbatim(r.c_mape) << ',';
        else
            out << ",,,,";
        out << detail::csv_field(r.status) << '\n';
    }
}

/// Companion MAPEs, solver diagnostics and the kernel width per row.
inline void write_diagnostics_csv(const ExperimentReport& report, std::ostream& out) {
    out << "a,mape_mae_pct_floor_1e-3,mape_mape_pct_floor_1e-3,iter_mae,iter_mape,kkt_mae,kkt_mape,"
           "converged_mae,converged_mape,gamma,mape_floor\n";
    for (const auto& r : report.rows) {
        out << detail::verbatim(r.a) << ',' << detail::fixed2(r.mape_mae_pct_companion) << ','
            << detail::fixed2(r.mape_mape_pct_companion) << ',' << r.mae_fit.iterations << ','
            << r.mape_fit.iterations << ',' << std::setprecision(3) << r.mae_fit.max_kkt_violation << ','
            << r.mape_fit.max_kkt_violation << ',' << (r.mae_fit.converged ? 1 : 0) << ','
            << (r.mape_fit.converged ? 1 : 0) << ',' << detail::verbatim(report.config.gamma) << ','
            << detail::verbatim(report.config.mape_floor) << '\n';
    }
}

/// `x,truth,f_mae,f_mape`, one line per grid point, x ascending.
inline void write_curve_csv(const Curve& curve, std::ostream& out) {
    out << "x,truth,f_mae,f_mape\n" << std::setprecision(17);
    for (std::size_t k = 0; k < curve.x.size(); ++k)
        out << curve.x[k] << ',' << curve.truth[k] << ',' << curve.f_mae[k] << ',' << curve.f_mape[k] << '\n';
}

}  // namespace mapereg
