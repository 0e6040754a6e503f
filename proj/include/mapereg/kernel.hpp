#pragma once

#include <cmath>
#include <string>
#include <string_view>

#include <Eigen/Core>

#include "mapereg/error.hpp"

namespace mapereg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class KernelFamily { Gaussian, Linear };

inline std::string_view to_string(KernelFamily f) { return f == KernelFamily::Gaussian ? "gaussian" : "linear"; }

inline KernelFamily parse_kernel_family(std::string_view name) {
    if (name == "gaussian") return KernelFamily::Gaussian;
    if (name == "linear") return KernelFamily::Linear;
    throw input_error("unknown kernel '" + std::string(name) + "' (expected gaussian or linear)");
}

/// Gaussian: k(x, x') = exp(-gamma * |x - x'|^2). Linear: <x, x'>.
struct KernelSpec {
    KernelFamily family = KernelFamily::Gaussian;
    double gamma = 1.0;

    static KernelSpec gaussian(double gamma) { return {KernelFamily::Gaussian, gamma}; }
    static KernelSpec linear() { return {KernelFamily::Linear, 1.0}; }

    void validate() const {
        if (family == KernelFamily::Gaussian)
            detail::require(gamma > 0.0 && std::isfinite(gamma), "gaussian kernel needs gamma > 0");
    }
};

template <typename A, typename B>
double kernel_eval(const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& x_prime, const KernelSpec& spec) {
    detail::require(x.size() == x_prime.size(), "kernel arguments differ in dimension");
    if (spec.family == KernelFamily::Linear) {
        double dot = 0.0;
        for (Eigen::Index k = 0; k < x.size(); ++k) dot += x(k) * x_prime(k);
        return dot;
    }
    double sq = 0.0;
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        const double d = x(k) - x_prime(k);
        sq += d * d;
    }
    return std::exp(-spec.gamma * sq);
}

/// K_ij = k(x_i, x_j) over the rows of X. The upper triangle is mirrored, so
/// the result is exactly symmetric.
inline Matrix gram_matrix(const Matrix& X, const KernelSpec& spec) {
    spec.validate();
    detail::require(X.rows() >= 1, "gram matrix of an empty sample");
    const Eigen::Index n = X.rows();
    Matrix K(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i <= j; ++i) {
            const double v = kernel_eval(X.row(i), X.row(j), spec);
            K(i, j) = v;
            K(j, i) = v;
        }
    }
    return K;
}

/// K_ij = k(a_i, b_j) for rows of A and B.
inline Matrix cross_gram(const Matrix& A, const Matrix& B, const KernelSpec& spec) {
    spec.validate();
    detail::require(A.cols() == B.cols(), "cross gram inputs differ in dimension");
    Matrix K(A.rows(), B.rows());
    for (Eigen::Index j = 0; j < B.rows(); ++j)
        for (Eigen::Index i = 0; i < A.rows(); ++i) K(i, j) = kernel_eval(A.row(i), B.row(j), spec);
    return K;
}

}  // namespace mapereg
