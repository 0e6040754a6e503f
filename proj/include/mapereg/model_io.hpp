#pragma once

// Text persistence of TrainedModel. Layout (see docs/formats.md):
//
//   mapereg-model 1
//   dim=<d>
//   rows=<n>
//   x0,...,x<d-1>,alpha
//   <n CSV rows>
//   intercept=<b>
//   kernel=<gaussian|linear>
//   gamma=<g>
//   loss=<mape|mae|pinball>
//   tau=<t>
//   C=<C>
//   iterations=... objective=... max_kkt_violation=... converged=<0|1>
//   end
//
// Reals are written with 17 significant digits, so a read model predicts
// bit-identically to the one written.

#include <array>
#include <charconv>
#include <cstddef>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>

#include "mapereg/csv.hpp"
#include "mapereg/error.hpp"
#include "mapereg/kernel.hpp"
#include "mapereg/loss.hpp"
#include "mapereg/regressor.hpp"

namespace mapereg {

inline constexpr std::string_view kModelMagic = "mapereg-model 1";

/// %.17g without locale dependence.
inline std::string format_real(double v) {
    std::array<char, 40> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
    return std::string(buf.data(), ec == std::errc() ? ptr : buf.data());
}

inline void write_model(const TrainedModel& model, std::ostream& out) {
    const Matrix& S = model.support_points();
    const auto& diag = model.diagnostics();
    out << kModelMagic << '\n' << "dim=" << S.cols() << '\n' << "rows=" << S.rows() << '\n';
    for (Eigen::Index j = 0; j < S.cols(); ++j) out << 'x' << j << ',';
    out << "alpha\n";
    for (Eigen::Index i = 0; i < S.rows(); ++i) {
        for (Eigen::Index j = 0; j < S.cols(); ++j) out << format_real(S(i, j)) << ',';
        out << format_real(model.alpha()(i)) << '\n';
    }
    out << "intercept=" << format_real(model.intercept()) << '\n'
        << "kernel=" << to_string(model.kernel().family) << '\n'
        << "gamma=" << format_real(model.kernel().gamma) << '\n'
        << "loss=" << to_string(model.loss().kind) << '\n'
        << "tau=" << format_real(model.loss().tau) << '\n'
        << "C=" << format_real(model.regularization_C()) << '\n'
        << "iterations=" << diag.iterations << '\n'
        << "objective=" << format_real(diag.objective) << '\n'
        << "max_kkt_violation=" << format_real(diag.max_kkt_violation) << '\n'
        << "converged=" << (diag.converged ? 1 : 0) << '\n'
        << "end\n";
}

inline void save_model(const TrainedModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    write_model(model, out);
    if (!out) throw std::runtime_error("error writing " + path);
}

namespace detail {

class ModelReader {
public:
    ModelReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

    std::string next_line() {
        std::string line;
        if (!std::getline(in_, line)) fail("unexpected end of file");
        ++line_no_;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
    }

    std::string value_of(std::string_view key) {
        const std::string line = next_line();
        const auto eq = line.find('=');
        if (eq == std::string::npos || std::string_view(line).substr(0, eq) != key)
            fail("expected '" + std::string(key) + "=...'");
        return line.substr(eq + 1);
    }

    double real(std::string_view text, std::size_t column = 1) const {
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
        if (text.empty() || ec != std::errc() || ptr != text.data() + text.size())
            fail("bad number '" + std::string(text) + "'", column);
        return v;
    }

    long long integer(std::string_view text) const {
        long long v = 0;
        const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
        if (text.empty() || ec != std::errc() || ptr != text.data() + text.size())
            fail("bad integer '" + std::string(text) + "'");
        return v;
    }

    [[noreturn]] void fail(const std::string& what, std::size_t column = 1) const {
        throw input_error(source_ + ":" + std::to_string(line_no_) + ":" + std::to_string(column) + ": " + what);
    }

private:
    std::istream& in_;
    std::string source_;
    std::size_t line_no_ = 0;
};

}  // namespace detail

inline TrainedModel read_model(std::istream& in, const std::string& source = "<model>") {
    detail::ModelReader r(in, source);
    if (r.next_line() != kModelMagic) r.fail("not a model file (expected '" + std::string(kModelMagic) + "')");
    const long long dim = r.integer(r.value_of("dim"));
    const long long rows = r.integer(r.value_of("rows"));
    if (dim < 1 || rows < 1) r.fail("dim and rows must be positive");

    const std::string header_line = r.next_line();
    const auto header = detail::split_fields(header_line);
    if (static_cast<long long>(header.size()) != dim + 1 || header.back() != "alpha")
        r.fail("bad column header");

    Matrix S(rows, dim);
    Vector alpha(rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const std::string line = r.next_line();
        const auto fields = detail::split_fields(line);
        if (static_cast<long long>(fields.size()) != dim + 1)
            r.fail("expected " + std::to_string(dim + 1) + " fields");
        for (Eigen::Index j = 0; j < dim; ++j)
            S(i, j) = r.real(fields[static_cast<std::size_t>(j)], static_cast<std::size_t>(j) + 1);
        alpha(i) = r.real(fields.back(), static_cast<std::size_t>(dim) + 1);
    }

    const double intercept = r.real(r.value_of("intercept"));
    KernelSpec kernel;
    kernel.family = parse_kernel_family(r.value_of("kernel"));
    kernel.gamma = r.real(r.value_of("gamma"));
    LossSpec loss;
    loss.kind = parse_loss_kind(r.value_of("loss"));
    loss.tau = r.real(r.value_of("tau"));
    const double C = r.real(r.value_of("C"));
    FitDiagnostics diag;
    diag.iterations = static_cast<std::size_t>(r.integer(r.value_of("iterations")));
    diag.objective = r.real(r.value_of("objective"));
    diag.max_kkt_violation = r.real(r.value_of("max_kkt_violation"));
    diag.converged = r.integer(r.value_of("converged")) != 0;
    if (r.next_line() != "end") r.fail("expected 'end'");
    loss.validate();
    return TrainedModel(std::move(S), std::move(alpha), intercept, kernel, std::move(loss), C, std::move(diag));
}

inline TrainedModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open " + path);
    return read_model(in, path);
}

}  // namespace mapereg
