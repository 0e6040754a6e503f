// mapereg: fit, predict, cross-validate, simulate, diagnose.
//
// Exit codes: 0 ok, 1 runtime or convergence failure, 2 input error.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <CLI11.hpp>

#include "mapereg/mapereg.hpp"

namespace fs = std::filesystem;
using namespace mapereg;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitInput = 2;

/// Failure of a run that had valid input (exit code 1).
struct runtime_failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<double> parse_list(const std::string& text, const std::string& what) {
    std::vector<double> out;
    for (auto field : detail::split_fields(text)) {
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
        if (field.empty() || ec != std::errc() || ptr != field.data() + field.size())
            throw input_error(what + ": bad number '" + std::string(field) + "'");
        out.push_back(v);
    }
    return out;
}

std::string join(const std::vector<double>& values) {
    std::string out;
    for (double v : values) out += (out.empty() ? "" : ",") + detail::verbatim(v);
    return out;
}

/// Opens the file for appending to prove it can be written, without
/// clobbering an existing file; a file created by the probe is removed.
void check_writable_file(const std::string& path) {
    const bool existed = fs::exists(path);
    {
        std::ofstream probe(path, std::ios::app);
        if (!probe) throw input_error("cannot write " + path);
    }
    if (!existed) fs::remove(path);
}

void check_writable_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (!fs::is_directory(dir)) throw input_error("cannot create output directory " + dir);
    const fs::path probe = fs::path(dir) / ".mapereg-write-test";
    {
        std::ofstream out(probe);
        if (!out) throw input_error("output directory " + dir + " is not writable");
    }
    fs::remove(probe, ec);
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw runtime_failure("cannot write " + path);
    return out;
}

// ---- config file -----------------------------------------------------------

/// key=value lines; '#' starts a comment line.
std::vector<std::pair<std::string, std::string>> read_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open config file " + path);
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto text = detail::trim(line);
        if (text.empty() || text.front() == '#') continue;
        const auto eq = text.find('=');
        if (eq == std::string_view::npos)
            throw input_error(path + ":" + std::to_string(line_no) + ": expected key=value");
        const auto key = detail::trim(text.substr(0, eq));
        if (key.empty()) throw input_error(path + ":" + std::to_string(line_no) + ":1: empty key");
        out.emplace_back(std::string(key), std::string(detail::trim(text.substr(eq + 1))));
    }
    return out;
}

/// Finds --config on the command line.
std::optional<std::string> config_path(const std::vector<std::string>& args) {
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
        if (args[i].starts_with("--config=")) return args[i].substr(9);
    }
    return std::nullopt;
}

// ---- option groups shared by several commands ------------------------------

struct ModelFlags {
    std::string loss = "mape";
    std::optional<double> tau;
    std::string kernel = "gaussian";
    double gamma = 1.0;
};

struct SolverFlags {
    double tol = SolverOptions{}.tol;
    std::optional<std::size_t> max_iter;
    double y_min = FitOptions{}.y_min;

    FitOptions options() const {
        FitOptions o;
        o.solver.tol = tol;
        o.solver.max_iter = max_iter;
        o.y_min = y_min;
        return o;
    }
};

struct CvFlags {
    std::string c_grid;
    int folds = 5;
    std::uint64_t seed = 42;

    std::vector<double> grid() const { return c_grid.empty() ? default_c_grid() : parse_list(c_grid, "--c-grid"); }
};

void add_model_flags(CLI::App* cmd, ModelFlags& f) {
    cmd->add_option("--loss", f.loss, "mape, mae or pinball")->capture_default_str();
    cmd->add_option("--tau", f.tau, "quantile level (mape and pinball; default 0.5)");
    cmd->add_option("--kernel", f.kernel, "gaussian or linear")->capture_default_str();
    cmd->add_option("--gamma", f.gamma, "gaussian bandwidth in exp(-gamma |x - x'|^2)")->capture_default_str();
}

void add_solver_flags(CLI::App* cmd, SolverFlags& f) {
    cmd->add_option("--tol", f.tol, "KKT gap tolerance")->capture_default_str();
    cmd->add_option("--max-iter", f.max_iter, "pair-update budget (default 100 n^2)");
    cmd->add_option("--y-min", f.y_min, "smallest |y| accepted by MAPE fits")->capture_default_str();
}

void add_cv_flags(CLI::App* cmd, CvFlags& f) {
    cmd->add_option("--c-grid", f.c_grid, "comma-separated C values (default 0.01,0.05,...,1e5)");
    cmd->add_option("--folds", f.folds, "cross-validation folds")->capture_default_str();
    cmd->add_option("--seed", f.seed, "seed of the fold assignment")->capture_default_str();
}

LossSpec make_loss(const ModelFlags& f) {
    const LossKind kind = parse_loss_kind(f.loss);
    LossSpec loss;
    loss.kind = kind;
    if (kind == LossKind::Mae) {
        if (f.tau && *f.tau != 0.5) throw input_error("--tau applies to mape and pinball only");
        loss.tau = 0.5;
    } else {
        loss.tau = f.tau.value_or(0.5);
    }
    loss.validate();
    return loss;
}

KernelSpec make_kernel(const ModelFlags& f) {
    KernelSpec k{parse_kernel_family(f.kernel), f.gamma};
    k.validate();
    return k;
}

void print_cv(const CvReport& cv, std::ostream& out) {
    out << "C,mean_score";
    for (int f = 0; f < cv.folds; ++f) out << ",fold" << f + 1;
    out << '\n';
    for (std::size_t c = 0; c < cv.grid.size(); ++c) {
        out << detail::verbatim(cv.grid[c]) << ',' << format_real(cv.mean_scores[c]);
        for (int f = 0; f < cv.folds; ++f) out << ',' << format_real(cv.fold_scores(static_cast<Eigen::Index>(c), f));
        out << '\n';
    }
}

// ---- commands --------------------------------------------------------------

struct FitArgs {
    std::string data, out;
    std::optional<double> c;
    ModelFlags model;
    SolverFlags solver;
    CvFlags cv;
};

int cmd_fit(const FitArgs& a) {
    check_writable_file(a.out);
    const Dataset data = read_dataset(a.data);
    const LossSpec loss = make_loss(a.model);
    const KernelSpec kernel = make_kernel(a.model);
    const FitOptions options = a.solver.options();

    double C = 0.0;
    if (a.c) {
        C = *a.c;
    } else {
        const std::vector<double> grid = a.cv.grid();
        const CvReport cv = cross_validate(data, loss, kernel, grid, a.cv.folds, a.cv.seed, options);
        C = cv.best_C;
        std::cout << "cross-validation (" << cv.folds << " folds, seed " << cv.seed << "): chosen C = "
                  << detail::verbatim(C) << " (mean " << to_string(loss.kind) << " "
                  << cv.mean_scores[cv.best_index] << ")\n";
    }

    const TrainedModel model = fit(data, loss, kernel, C, options);
    save_model(model, a.out);
    const Vector pred = predict(model, data.X);
    const double risk = empirical_risk(detail::as_span(pred), detail::as_span(data.y), loss);
    const auto& d = model.diagnostics();
    std::cout << "fit: loss=" << to_string(loss.kind) << " tau=" << loss.tau << " C=" << detail::verbatim(C)
              << " training_risk=" << risk << " iterations=" << d.iterations
              << " converged=" << (d.converged ? "yes" : "no") << " model=" << a.out << '\n';
    for (const auto& w : d.warnings) std::cerr << "warning: " << w << '\n';
    return d.converged ? kExitOk : kExitRuntime;
}

struct PredictArgs {
    std::string model, data, out;
};

int cmd_predict(const PredictArgs& a) {
    if (!a.out.empty()) check_writable_file(a.out);
    const TrainedModel model = load_model(a.model);
    const CsvTable table = read_csv_file(a.data);
    const Matrix X = features_from_table(table, model.dim(), a.data);
    const Vector pred = predict(model, X);

    std::ofstream file;
    if (!a.out.empty()) file = open_output(a.out);
    std::ostream& out = a.out.empty() ? std::cout : file;
    out << "prediction\n";
    for (Eigen::Index i = 0; i < pred.size(); ++i) out << format_real(pred(i)) << '\n';

    if (!a.out.empty()) {
        std::cout << "wrote " << pred.size() << " predictions to " << a.out;
        if (static_cast<Eigen::Index>(table.header.size()) == model.dim() + 1) {
            const Dataset data = dataset_from_table(table, a.data);
            std::cout << " (" << to_string(model.loss().kind) << " risk "
                      << empirical_risk(detail::as_span(pred), detail::as_span(data.y), model.loss()) << ")";
        }
        std::cout << '\n';
    }
    return kExitOk;
}

struct CvArgs {
    std::string data, out;
    ModelFlags model;
    SolverFlags solver;
    CvFlags cv;
};

int cmd_cross_validate(const CvArgs& a) {
    if (!a.out.empty()) check_writable_file(a.out);
    const Dataset data = read_dataset(a.data);
    const std::vector<double> grid = a.cv.grid();
    const CvReport cv =
        cross_validate(data, make_loss(a.model), make_kernel(a.model), grid, a.cv.folds, a.cv.seed, a.solver.options());
    print_cv(cv, std::cout);
    if (!a.out.empty()) {
        std::ofstream out = open_output(a.out);
        print_cv(cv, out);
    }
    std::cout << "best C = " << detail::verbatim(cv.best_C) << '\n';
    return kExitOk;
}

struct SimulateArgs {
    std::string a_list, out_dir = "simulation";
    std::uint64_t seed = 42;
    long n_train = 1000, n_test = 1000;
    double gamma = kDefaultSimulationGamma;
    double mape_floor = 0.0;
    SolverFlags solver;
    CvFlags cv;
};

std::string curve_file_name(double a) { return "curve_a" + detail::verbatim(a) + ".csv"; }

int cmd_simulate(const SimulateArgs& s) {
    SimConfig config;
    if (!s.a_list.empty()) config.a_values = parse_list(s.a_list, "--a-list");
    config.seed = s.seed;
    config.n_train = s.n_train;
    config.n_test = s.n_test;
    config.gamma = s.gamma;
    config.mape_floor = s.mape_floor;
    config.folds = s.cv.folds;
    config.c_grid = s.cv.grid();
    config.fit = s.solver.options();
    config.validate();
    check_writable_dir(s.out_dir);
    const fs::path dir(s.out_dir);

    {
        // Echo of the run as a config file that reproduces it.
        std::ofstream echo = open_output((dir / "config.txt").string());
        echo << "a-list=" << join(config.a_values) << "\nseed=" << config.seed << "\nn-train=" << config.n_train
             << "\nn-test=" << config.n_test << "\nfolds=" << config.folds << "\nc-grid=" << join(config.c_grid)
             << "\ngamma=" << detail::verbatim(config.gamma) << "\nmape-floor=" << detail::verbatim(config.mape_floor)
             << "\ntol=" << detail::verbatim(s.solver.tol) << "\ny-min=" << detail::verbatim(s.solver.y_min) << '\n';
        if (s.solver.max_iter) echo << "max-iter=" << *s.solver.max_iter << '\n';
    }

    const ExperimentReport report = run_experiment(config, [&](const ExperimentRow& row) {
        std::cerr << "a=" << detail::verbatim(row.a) << ": " << row.status << '\n';
        if (!row.ok) return;
        std::ofstream curve = open_output((dir / curve_file_name(row.a)).string());
        write_curve_csv(row.curve, curve);
    });

    {
        std::ofstream out = open_output((dir / "report.csv").string());
        write_report_csv(report, out);
        std::ofstream diag = open_output((dir / "diagnostics.csv").string());
        write_diagnostics_csv(report, diag);
    }

    std::cout << std::setw(8) << "a" << std::setw(14) << "MAPE(f_MAE)" << std::setw(14) << "MAPE(f_MAPE)"
              << std::setw(10) << "C_MAE" << std::setw(10) << "C_MAPE" << "  status\n";
    bool all_ok = true;
    for (const auto& r : report.rows) {
        all_ok = all_ok && r.ok;
        std::cout << std::setw(8) << detail::verbatim(r.a);
        if (r.ok)
            std::cout << std::setw(14) << detail::fixed2(r.mape_mae_pct) << std::setw(14)
                      << detail::fixed2(r.mape_mape_pct) << std::setw(10) << detail::verbatim(r.c_mae)
                      << std::setw(10) << detail::verbatim(r.c_mape);
        else
            std::cout << std::setw(48) << "";
        std::cout << "  " << r.status << '\n';
    }
    std::cout << "gamma=" << detail::verbatim(config.gamma) << " seed=" << config.seed << " output=" << s.out_dir
              << '\n';
    return all_ok ? kExitOk : kExitRuntime;
}

struct DiagnoseArgs {
    std::string tail, negative_tail;
    long k = 1000;
    double mass_at_zero = 0.0;
    std::string out;
};

/// linear, quadratic, none, or csv:<path> with header eps,positive[,negative].
std::pair<TailCdf, std::optional<TailCdf>> parse_tail(const std::string& spec) {
    if (spec == "linear") return {linear_tail, std::nullopt};
    if (spec == "quadratic") return {quadratic_tail, std::nullopt};
    if (spec == "none") return {empty_tail, std::nullopt};
    if (!spec.starts_with("csv:")) throw input_error("unknown tail '" + spec + "' (linear, quadratic, none or csv:<path>)");
    const std::string path = spec.substr(4);
    const CsvTable table = read_csv_file(path);
    const auto& h = table.header;
    if (h.size() < 2 || h.size() > 3 || h[0] != "eps" || h[1] != "positive" || (h.size() == 3 && h[2] != "negative"))
        throw input_error(path + ":1:1: tail header must be eps,positive or eps,positive,negative");
    if (table.rows.empty()) throw input_error(path + ": no tail rows");
    std::vector<double> eps, pos, neg;
    for (const auto& row : table.rows) {
        eps.push_back(row[0]);
        pos.push_back(row[1]);
        if (h.size() == 3) neg.push_back(row[2]);
    }
    try {
        TailCdf positive = tabulated_tail(eps, pos);
        if (h.size() == 3) return {positive, tabulated_tail(eps, neg)};
        return {positive, std::nullopt};
    } catch (const input_error& e) {
        throw input_error(path + ": " + e.what());
    }
}

int cmd_diagnose(const DiagnoseArgs& a) {
    if (a.k < 1) throw input_error("--k must be at least 1");
    if (!a.out.empty()) check_writable_file(a.out);
    auto [positive, from_file] = parse_tail(a.tail);
    TailCdf negative = empty_tail;
    if (!a.negative_tail.empty()) {
        auto parsed = parse_tail(a.negative_tail);
        negative = parsed.second ? *parsed.second : parsed.first;
    } else if (from_file) {
        negative = *from_file;
    }
    const auto k_max = static_cast<std::size_t>(a.k);
    const FinitenessReport r = finiteness_diagnostic(positive, negative, a.mass_at_zero, k_max);

    std::cout << "verdict: " << to_string(r.verdict) << '\n'
              << "note: " << FinitenessReport::note << '\n'
              << "mass_at_zero: " << r.mass_at_zero << '\n'
              << "tail_slope: positive " << r.positive.tail_slope << ", negative " << r.negative.tail_slope << '\n'
              << std::setprecision(10) << "k,partial_sum_positive,partial_sum_negative\n";
    // 1-2-5 sequence of k, then K itself.
    std::set<std::size_t> shown{k_max};
    for (std::size_t decade = 1; decade <= k_max; decade *= 10)
        for (std::size_t m : {1, 2, 5})
            if (m * decade <= k_max) shown.insert(m * decade);
    for (std::size_t k : shown)
        std::cout << k << ',' << r.positive.partial_sums[k - 1] << ',' << r.negative.partial_sums[k - 1] << '\n';

    if (!a.out.empty()) {
        std::ofstream out = open_output(a.out);
        out << "k,term_positive,term_negative,partial_sum_positive,partial_sum_negative\n";
        for (std::size_t k = 1; k <= k_max; ++k)
            out << k << ',' << format_real(r.positive.terms[k - 1]) << ',' << format_real(r.negative.terms[k - 1])
                << ',' << format_real(r.positive.partial_sums[k - 1]) << ','
                << format_real(r.negative.partial_sums[k - 1]) << '\n';
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Regression under the mean absolute percentage error"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    std::string config_dummy;
    const auto add_config = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_dummy, "file of key=value lines; command-line flags override it");
    };

    FitArgs fit_args;
    auto* fit_cmd = app.add_subcommand("fit", "fit a model and write it to --out");
    fit_cmd->add_option("--data", fit_args.data, "training CSV (last column is the target)")->required();
    fit_cmd->add_option("--out", fit_args.out, "model file to write")->required();
    fit_cmd->add_option("--c", fit_args.c, "regularization C (omitted: chosen by cross-validation)");
    add_model_flags(fit_cmd, fit_args.model);
    add_solver_flags(fit_cmd, fit_args.solver);
    add_cv_flags(fit_cmd, fit_args.cv);
    add_config(fit_cmd);

    PredictArgs predict_args;
    auto* predict_cmd = app.add_subcommand("predict", "predict with a saved model");
    predict_cmd->add_option("--model", predict_args.model, "model file written by fit")->required();
    predict_cmd->add_option("--data", predict_args.data, "CSV of features (a target column is ignored)")->required();
    predict_cmd->add_option("--out", predict_args.out, "CSV to write (default: standard output)");
    add_config(predict_cmd);

    CvArgs cv_args;
    auto* cv_cmd = app.add_subcommand("cross-validate", "k-fold validation risk over a grid of C");
    cv_cmd->alias("cv");
    cv_cmd->add_option("--data", cv_args.data, "training CSV")->required();
    cv_cmd->add_option("--out", cv_args.out, "CSV of fold scores to write");
    add_model_flags(cv_cmd, cv_args.model);
    add_solver_flags(cv_cmd, cv_args.solver);
    add_cv_flags(cv_cmd, cv_args.cv);
    add_config(cv_cmd);

    SimulateArgs sim_args;
    auto* sim_cmd = app.add_subcommand("simulate", "translated-sinc study: MAE versus MAPE fits");
    sim_cmd->add_option("--a-list", sim_args.a_list, "comma-separated translations a (default 0,0.1,...,100)");
    sim_cmd->add_option("--seed", sim_args.seed, "master seed")->capture_default_str();
    sim_cmd->add_option("--n-train", sim_args.n_train, "training points per a")->capture_default_str();
    sim_cmd->add_option("--n-test", sim_args.n_test, "test points per a")->capture_default_str();
    sim_cmd->add_option("--gamma", sim_args.gamma, "gaussian bandwidth")->capture_default_str();
    sim_cmd->add_option("--mape-floor", sim_args.mape_floor, "skip test targets with |y| below this in the MAPE")
        ->capture_default_str();
    sim_cmd->add_option("--out-dir", sim_args.out_dir, "directory for report and curve CSVs")->capture_default_str();
    sim_cmd->add_option("--c-grid", sim_args.cv.c_grid, "comma-separated C values (default 0.01,0.05,...,1e5)");
    sim_cmd->add_option("--folds", sim_args.cv.folds, "cross-validation folds")->capture_default_str();
    add_solver_flags(sim_cmd, sim_args.solver);
    add_config(sim_cmd);

    DiagnoseArgs diag_args;
    auto* diag_cmd = app.add_subcommand("diagnose", "finiteness series of a target distribution near 0");
    diag_cmd->add_option("--tail", diag_args.tail, "positive tail: linear, quadratic, none or csv:<path>")->required();
    diag_cmd->add_option("--negative-tail", diag_args.negative_tail, "negative tail (default none, or the csv column)");
    diag_cmd->add_option("--k", diag_args.k, "number of series terms")->capture_default_str();
    diag_cmd->add_option("--mass-at-zero", diag_args.mass_at_zero, "P(T = 0)")->capture_default_str();
    diag_cmd->add_option("--out", diag_args.out, "CSV of every term and partial sum");
    add_config(diag_cmd);

    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        // Config values go right after the subcommand name, so later flags win.
        if (const auto path = config_path(args); path && !args.empty()) {
            CLI::App* cmd = nullptr;
            for (auto* sub : app.get_subcommands([](CLI::App*) { return true; }))
                if (sub->check_name(args[0])) cmd = sub;
            if (cmd != nullptr) {
                std::vector<std::string> injected;
                for (const auto& [key, value] : read_config(*path)) {
                    if (key == "config") continue;
                    bool known_anywhere = false;
                    for (auto* sub : app.get_subcommands([](CLI::App*) { return true; }))
                        known_anywhere = known_anywhere || sub->get_option_no_throw("--" + key) != nullptr;
                    if (!known_anywhere) throw input_error(*path + ": unknown key '" + key + "'");
                    if (cmd->get_option_no_throw("--" + key) != nullptr) injected.push_back("--" + key + "=" + value);
                }
                args.insert(args.begin() + 1, injected.begin(), injected.end());
            }
        }
        std::reverse(args.begin(), args.end());  // CLI11 consumes a reversed vector
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    } catch (const input_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    }

    try {
        if (*fit_cmd) return cmd_fit(fit_args);
        if (*predict_cmd) return cmd_predict(predict_args);
        if (*cv_cmd) return cmd_cross_validate(cv_args);
        if (*sim_cmd) return cmd_simulate(sim_args);
        if (*diag_cmd) return cmd_diagnose(diag_args);
    } catch (const input_error& e) {
        std::cerr << "error: " << e.what();
        if (e.row()) std::cerr << " (rows count data lines from 0, header excluded)";
        std::cerr << '\n';
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitRuntime;
}
