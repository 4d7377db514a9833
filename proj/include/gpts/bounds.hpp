#ifndef GPTS_BOUNDS_HPP
#define GPTS_BOUNDS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <queue>
#include <vector>

#include <Eigen/Dense>

#include "gpts/errors.hpp"
#include "gpts/kernels.hpp"
#include "gpts/spectrum.hpp"

namespace gpts {

/// 1 / (1 - e^{-1}), the greedy approximation factor for submodular maximisation.
inline const double kGreedyFactor = 1.0 / (1.0 - std::exp(-1.0));

inline void check_noise(double noise_var) {
    if (!(noise_var > 0.0) || !std::isfinite(noise_var)) throw ParameterError("noise variance must be > 0 for bounds");
}

/// 1/2 log det(I + K_T / noise_var).
inline double infogain_actual(const Eigen::MatrixXd& gram, double noise_var) {
    check_noise(noise_var);
    if (gram.rows() != gram.cols()) throw InputError("Gram matrix must be square");
    const auto t = gram.rows();
    if (t == 0) return 0.0;
    const double scale = std::max(1.0, gram.diagonal().cwiseAbs().maxCoeff());
    if (!gram.isApprox(gram.transpose(), 1e-12) && (gram - gram.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
        throw InputError("Gram matrix is not symmetric");
    Eigen::MatrixXd shifted = gram;
    shifted.diagonal().array() += 1e-9 * scale;
    if (Eigen::LLT<Eigen::MatrixXd>(shifted).info() != Eigen::Success)
        throw InputError("Gram matrix is not positive semidefinite");

    Eigen::MatrixXd M = gram / noise_var;
    M.diagonal().array() += 1.0;
    Eigen::LLT<Eigen::MatrixXd> llt(M);
    if (llt.info() != Eigen::Success) throw InputError("I + K/noise is not positive definite");
    return llt.matrixLLT().diagonal().array().log().sum();
}

struct GreedyInfogain {
    double value = 0.0;
    std::vector<std::uint64_t> counts;  // m_t, times eigendirection t was picked
};

/**
 * Information gain of the greedy policy over eigendirections of K. Picking
 * direction i shrinks its posterior eigenvalue to
 * lambda_i / (1 + m_i lambda_i / noise_var); each step takes the current
 * largest one (lowest index on ties).
 */
inline GreedyInfogain infogain_greedy(const OrderedEigs& eigs, std::uint64_t T, double noise_var) {
    check_noise(noise_var);
    const auto& lam = eigs.lambda_hat;
    GreedyInfogain out;
    out.counts.assign(lam.size(), 0);
    if (lam.empty() || T == 0) return out;

    struct Entry {
        double value;
        std::size_t index;
        bool operator<(const Entry& o) const { return value < o.value || (value == o.value && index > o.index); }
    };
    std::priority_queue<Entry> used;
    std::size_t next_unused = 0;
    auto updated = [&](std::size_t i) { return lam[i] / (1.0 + double(out.counts[i]) * lam[i] / noise_var); };

    for (std::uint64_t step = 0; step < T; ++step) {
        const bool have_unused = next_unused < lam.size();
        const bool take_unused =
            have_unused && (used.empty() || lam[next_unused] > used.top().value ||
                            (lam[next_unused] == used.top().value && next_unused < used.top().index));
        std::size_t i;
        if (take_unused) {
            i = next_unused++;
        } else {
            i = used.top().index;
            used.pop();
        }
        ++out.counts[i];
        used.push({updated(i), i});
    }
    for (std::size_t i = 0; i < lam.size(); ++i)
        if (out.counts[i] > 0) out.value += 0.5 * std::log1p(double(out.counts[i]) * lam[i] / noise_var);
    return out;
}

struct KernelIndependentBounds {
    double bound_T = 0.0;   // (T/2) log(1 + T/noise_var)
    double bound_Nn = 0.0;  // (N_n/2) log(1 + N_n/noise_var)
};

inline KernelIndependentBounds infogain_bound_kernel_independent(double T, double num_nodes, double noise_var) {
    check_noise(noise_var);
    return {0.5 * T * std::log1p(T / noise_var), 0.5 * num_nodes * std::log1p(num_nodes / noise_var)};
}

/**
 * Kernel-dependent constants shared by the eigenvalue-based bounds.
 * `scale` is the numerator of the 1/t envelope on lambda_hat_t:
 * N C_s q_s for the Gaussian kernel, N B / ((B-1)(D+1)) for the linear one.
 */
struct SpectralConstants {
    KernelKind kind = KernelKind::linear;
    int branching = 2;
    int depth = 1;
    double num_paths = 0.0;
    double cq = 0.0;
    double scale = 0.0;
    double s = 0.0;
    OrderedEigs eigs;
};

inline SpectralConstants spectral_constants(const ChiSequence& chi) {
    SpectralConstants k;
    k.kind = chi.kind();
    k.branching = chi.branching();
    k.depth = chi.depth();
    k.num_paths = std::pow(double(k.branching), k.depth);
    if (chi.kind() == KernelKind::gaussian) {
        if (!chi.in_gaussian_bound_regime()) throw RegimeError("Gaussian bounds require s > 1/sqrt(log B)");
        k.s = chi.param();
        k.cq = width_constants(k.branching, k.s).cq;
    } else if (chi.kind() == KernelKind::linear) {
        k.cq = double(k.branching) / (double(k.branching - 1) * double(k.depth + 1));
    } else {
        throw UnsupportedKernelError("eigenvalue-based bounds need a linear or Gaussian kernel");
    }
    k.scale = k.num_paths * k.cq;
    k.eigs = reorder(closed_form_spectrum(chi));
    return k;
}

/// Sum-of-log-eigenvalues bound:
/// 1/(2(1-e^{-1})) log((1/lambda_hat_T + 1/noise_var) scale e) T + D log B.
inline double infogain_bound_sumlog(std::uint64_t T, const SpectralConstants& k, double noise_var) {
    check_noise(noise_var);
    if (T < 1) throw ParameterError("T must be >= 1");
    const double lam = k.eigs.at(std::min<std::uint64_t>(T, k.eigs.size()));
    if (!(lam > 0.0)) throw DegenerateError("lambda_hat_T must be positive");
    return 0.5 * kGreedyFactor * std::log((1.0 / lam + 1.0 / noise_var) * k.scale * std::numbers::e) * double(T) +
           double(k.depth) * std::log(double(k.branching));
}

/// Tail-sum bound on I*(T) - I*(T_*): N/(2(1-e^{-1})) C_s q_s log(min(T,N)/T_*).
inline double infogain_bound_tailsum(double T, double t_star, double num_paths, double cq) {
    if (t_star < 1.0) throw ParameterError("T_* must be >= 1");
    if (T <= t_star) return 0.0;
    const double ratio = std::min(T, num_paths) / t_star;
    if (ratio <= 1.0) return 0.0;
    return 0.5 * kGreedyFactor * num_paths * cq * std::log(ratio);
}

/// Sum-of-log bound up to T_* plus tail-sum bound from T_* to T.
inline double infogain_bound_combined(std::uint64_t T, std::uint64_t t_star, const SpectralConstants& k,
                                      double noise_var) {
    if (T <= t_star) return infogain_bound_sumlog(T, k, noise_var);
    return infogain_bound_sumlog(t_star, k, noise_var) +
           infogain_bound_tailsum(double(T), double(t_star), k.num_paths, k.cq);
}

/// A_s = N C_s q_s (e^{-D/s^2} - 1) / (e^{-D/s^2} - 1 - q_s/2).
inline double a_s(int B, int D, double s) {
    const auto w = width_constants(B, s);
    const double e = std::exp(-double(D) / (s * s));
    return std::pow(double(B), D) * w.cq * (e - 1.0) / (e - 1.0 - w.q / 2.0);
}

struct TPrime {
    double value = 0.0;
    bool below_T = false;
};

/// Positive root of T'^2 + T' - A_s T / noise_var = 0.
inline TPrime t_prime(double T, double as, double noise_var) {
    check_noise(noise_var);
    const double v = (-1.0 + std::sqrt(1.0 + 4.0 * as * T / noise_var)) / 2.0;
    return {v, v < T};
}

struct TStar {
    std::uint64_t value = 1;
    bool found = true;  // false when the scan ran to N without the condition holding
};

/**
 * Split point between the sum-of-log and tail-sum bounds: the smallest
 * T_* >= 1 at which moving T_*+1 into the log sum costs at least as much as
 * leaving it in the tail, i.e. cost(T_*+1) >= cost(T_*) with
 * cost(T) = log((1/lambda_hat_T + 1/noise_var) scale e) T - scale log T.
 */
inline TStar t_star(const SpectralConstants& k, double noise_var) {
    check_noise(noise_var);
    const auto n = k.eigs.size();
    auto cost = [&](std::uint64_t T) {
        return std::log((1.0 / k.eigs.at(T) + 1.0 / noise_var) * k.scale * std::numbers::e) * double(T) -
               k.scale * std::log(double(T));
    };
    for (std::uint64_t T = 1; T < n; ++T)
        if (cost(T + 1) >= cost(T)) return {T, true};
    return {n, false};
}

/// R_T <= sqrt(16 / log(1 + 1/noise_var) * log(N T^2 pi^2 / (6 delta)) * T * I_u).
inline double regret_bound(double T, double N, double delta, double noise_var, double infogain) {
    check_noise(noise_var);
    if (!(delta > 0.0 && delta < 1.0)) throw ParameterError("delta must lie in (0, 1)");
    if (infogain < 0.0) throw ParameterError("information gain must be >= 0");
    if (T <= 0.0) return 0.0;
    const double pi2 = std::numbers::pi * std::numbers::pi;
    return std::sqrt(16.0 / std::log1p(1.0 / noise_var) * std::log(N * T * T * pi2 / (6.0 * delta)) * T * infogain);
}

struct ChainVerdict {
    bool holds = true;
    double actual = 0.0;
    double greedy_bound = 0.0;  // I_g / (1 - e^{-1})
};

/// I_u <= I* <= I_g / (1 - e^{-1}).
inline ChainVerdict submodularity_chain(double actual, double greedy, double tolerance = 1e-9) {
    ChainVerdict v;
    v.actual = actual;
    v.greedy_bound = kGreedyFactor * greedy;
    v.holds = actual <= v.greedy_bound + tolerance;
    return v;
}

}  // namespace gpts

#endif  // GPTS_BOUNDS_HPP
