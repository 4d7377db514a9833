#ifndef GPTS_SPECTRUM_HPP
#define GPTS_SPECTRUM_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "gpts/errors.hpp"
#include "gpts/kernels.hpp"

namespace gpts {

/// Default cap on N = B^D for the dense oracles.
inline constexpr std::uint64_t kDenseCap = 4096;

struct EigenGroup {
    double value = 0.0;
    std::uint64_t multiplicity = 0;
};

/**
 * Distinct eigenvalues of the whole-tree kernel matrix K_{B,D}, indexed
 * i = 1..D+1 (stored 0-based). For i <= D the eigenvalue is
 * sum_{j<i} B^j (chi_j - chi_{j+1}) with multiplicity (B-1) B^{D-i};
 * the top one adds B^D chi_D and is simple (its eigenvector is all ones).
 */
struct Spectrum {
    int branching = 2;
    int depth = 1;
    std::vector<EigenGroup> distinct;

    [[nodiscard]] std::uint64_t total_multiplicity() const {
        std::uint64_t n = 0;
        for (const auto& g : distinct) n += g.multiplicity;
        return n;
    }

    [[nodiscard]] double trace() const {
        double s = 0.0;
        for (const auto& g : distinct) s += double(g.multiplicity) * g.value;
        return s;
    }

    /// All eigenvalues repeated by multiplicity, ascending.
    [[nodiscard]] std::vector<double> expanded() const {
        std::vector<double> out;
        out.reserve(total_multiplicity());
        for (const auto& g : distinct) out.insert(out.end(), g.multiplicity, g.value);
        std::sort(out.begin(), out.end());
        return out;
    }
};

inline Spectrum closed_form_spectrum(const ChiSequence& chi) {
    const int B = chi.branching();
    const int D = chi.depth();
    Spectrum s{B, D, {}};
    s.distinct.reserve(static_cast<std::size_t>(D) + 1);
    double partial = 0.0;
    double bj = 1.0;
    for (int i = 1; i <= D; ++i) {
        partial += bj * (chi[i - 1] - chi[i]);
        bj *= B;
        s.distinct.push_back({partial, static_cast<std::uint64_t>(B - 1) * ipow(static_cast<std::uint64_t>(B), D - i)});
    }
    s.distinct.push_back({partial + bj * chi[D], 1});
    return s;
}

/// Eigenvalues in nonincreasing order, lambda_hat_1 >= ... >= lambda_hat_N.
struct OrderedEigs {
    std::vector<double> lambda_hat;

    /// 1-based access matching the usual t index.
    [[nodiscard]] double at(std::uint64_t t) const { return lambda_hat.at(static_cast<std::size_t>(t - 1)); }
    [[nodiscard]] std::uint64_t size() const { return lambda_hat.size(); }
};

/**
 * Index map from t to the distinct-eigenvalue index: lambda_hat_1 is the top
 * eigenvalue, and for t > 1, lambda_hat_t = lambda_bar_{D-i} with
 * B^i < t <= B^{i+1}. Returns the 1-based distinct index.
 */
inline int distinct_index_for(const Spectrum& spec, std::uint64_t t) {
    if (t < 1 || t > ipow(static_cast<std::uint64_t>(spec.branching), spec.depth))
        throw ParameterError("eigenvalue index out of range");
    if (t == 1) return spec.depth + 1;
    int i = 0;
    std::uint64_t bi = 1;  // B^i
    while (!(bi < t && t <= bi * static_cast<std::uint64_t>(spec.branching))) {
        bi *= static_cast<std::uint64_t>(spec.branching);
        ++i;
    }
    return spec.depth - i;
}

inline OrderedEigs reorder(const Spectrum& spec) {
    const auto n = spec.total_multiplicity();
    if (n > (std::uint64_t{1} << 26)) throw SizeError("too many eigenvalues to list explicitly");
    OrderedEigs out;
    out.lambda_hat.reserve(n);
    for (std::uint64_t t = 1; t <= n; ++t)
        out.lambda_hat.push_back(spec.distinct[static_cast<std::size_t>(distinct_index_for(spec, t) - 1)].value);
    return out;
}

inline void check_dense_size(const ChiSequence& chi, std::uint64_t cap) {
    if (chi.num_paths() > cap)
        throw SizeError("N = " + std::to_string(chi.num_paths()) + " exceeds dense cap " + std::to_string(cap));
}

/// K_{B,D} by the block recursion: K_{B,1} = (chi_0 - chi_1) I + chi_1 J, then
/// B copies of the previous level on the diagonal and chi_k everywhere else.
inline Eigen::MatrixXd build_gram(const ChiSequence& chi, std::uint64_t cap = kDenseCap) {
    check_dense_size(chi, cap);
    const int B = chi.branching();
    Eigen::MatrixXd K = Eigen::MatrixXd::Constant(B, B, chi[1]);
    K.diagonal().setConstant(chi[0]);
    for (int k = 2; k <= chi.depth(); ++k) {
        const auto m = K.rows();
        Eigen::MatrixXd next = Eigen::MatrixXd::Constant(m * B, m * B, chi[k]);
        for (int b = 0; b < B; ++b) next.block(b * m, b * m, m, m) = K;
        K = std::move(next);
    }
    return K;
}

/// K_{B,D} by pairwise kernel evaluation over enumerated paths.
inline Eigen::MatrixXd build_gram_pairwise(const ChiSequence& chi, std::uint64_t cap = kDenseCap) {
    check_dense_size(chi, cap);
    const auto paths = enumerate_paths(chi.branching(), chi.depth());
    const auto n = static_cast<Eigen::Index>(paths.size());
    Eigen::MatrixXd K(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j <= i; ++j) K(i, j) = K(j, i) = kernel_eval(chi, paths[i], paths[j]);
    return K;
}

struct LambdaHatBounds {
    double lower = 0.0;
    double upper = 0.0;
};

/// q_s = B exp(-1/s^2), C_s = (1 - q_s/B) / (q_s - 1), and their product.
struct WidthConstants {
    double q = 0.0;
    double c = 0.0;
    double cq = 0.0;
};

inline WidthConstants width_constants(int B, double s) {
    if (B < 2) throw ParameterError("branching factor must be >= 2");
    if (!(s > 1.0 / std::sqrt(std::log(double(B)))))
        throw RegimeError("Gaussian width must exceed 1/sqrt(log B) for q_s > 1");
    WidthConstants w;
    w.q = double(B) * std::exp(-1.0 / (s * s));
    w.c = (1.0 - w.q / double(B)) / (w.q - 1.0);
    w.cq = w.c * w.q;
    return w;
}

/**
 * Envelope around lambda_hat_t for t > 1:
 *   linear:   (N-t) / ((B-1)(D+1)t) <= lambda_hat_t <= (NB-t) / ((B-1)(D+1)t)
 *   Gaussian: C_s(N e^{-D/s^2} - t)/t <= lambda_hat_t <= C_s(N q_s - t)/t
 * For t = 1 the exact top eigenvalue is returned as both ends.
 */
inline LambdaHatBounds lambda_hat_bounds(const ChiSequence& chi, std::uint64_t t) {
    const int B = chi.branching();
    const int D = chi.depth();
    const double N = std::pow(double(B), D);
    if (t < 1) throw ParameterError("t must be >= 1");
    if (chi.kind() == KernelKind::gaussian && !chi.in_gaussian_bound_regime())
        throw RegimeError("Gaussian eigenvalue bounds require s > 1/sqrt(log B)");
    if (chi.kind() != KernelKind::linear && chi.kind() != KernelKind::gaussian)
        throw UnsupportedKernelError("eigenvalue bounds are available for linear and Gaussian kernels only");
    if (t == 1) {
        const double top = closed_form_spectrum(chi).distinct.back().value;
        return {top, top};
    }
    const double td = double(t);
    if (chi.kind() == KernelKind::linear) {
        const double denom = double(B - 1) * double(D + 1) * td;
        return {(N - td) / denom, (N * B - td) / denom};
    }
    const double s = chi.param();
    const auto w = width_constants(B, s);
    return {w.c * (N * std::exp(-double(D) / (s * s)) - td) / td, w.c * (N * w.q - td) / td};
}

struct PriorSample {
    std::vector<double> values;  // indexed by path_index
    double f_star = 0.0;
    std::uint64_t argmax = 0;
};

/// Draws f ~ N(0, K_{B,D}) over every path.
inline PriorSample sample_gp_prior(const ChiSequence& chi, std::mt19937_64& rng, std::uint64_t cap = kDenseCap) {
    Eigen::MatrixXd K = build_gram(chi, cap);
    K.diagonal().array() += 1e-10;
    Eigen::LLT<Eigen::MatrixXd> llt(K);
    if (llt.info() != Eigen::Success) throw DegenerateError("prior covariance is not positive definite");
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd z(K.rows());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal(rng);
    const Eigen::VectorXd f = llt.matrixL() * z;
    PriorSample out;
    out.values.assign(f.data(), f.data() + f.size());
    const auto it = std::max_element(out.values.begin(), out.values.end());
    out.f_star = *it;
    out.argmax = static_cast<std::uint64_t>(it - out.values.begin());
    return out;
}

inline void to_json(nlohmann::json& j, const Spectrum& s) {
    nlohmann::json groups = nlohmann::json::array();
    for (std::size_t i = 0; i < s.distinct.size(); ++i)
        groups.push_back({{"index", i + 1}, {"value", s.distinct[i].value}, {"multiplicity", s.distinct[i].multiplicity}});
    j = nlohmann::json{{"B", s.branching}, {"D", s.depth}, {"distinct", groups}};
}

}  // namespace gpts

#endif  // GPTS_SPECTRUM_HPP
