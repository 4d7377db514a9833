#ifndef GPTS_GP_HPP
#define GPTS_GP_HPP

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "gpts/errors.hpp"
#include "gpts/kernels.hpp"

namespace gpts {

struct Posterior {
    double mean = 0.0;
    double variance = 0.0;

    [[nodiscard]] double sigma() const { return std::sqrt(variance); }
};

/**
 * GP posterior over path rewards given (arm, reward) pairs.
 *
 * Keeps the lower Cholesky factor L of C_t = K_t + noise_var * I and the
 * whitened targets w = L^{-1} y, so that for a query x with v = L^{-1} k_t(x):
 *   mean = v . w,   variance = k(x,x) - v . v.
 * Appending an arm extends L by one row in O(t^2).
 */
class PosteriorState {
public:
    PosteriorState(ChiSequence chi, double noise_var) : chi_(std::move(chi)), noise_var_(noise_var) {
        if (!(noise_var_ >= 0.0) || !std::isfinite(noise_var_))
            throw ParameterError("noise variance must be finite and >= 0");
    }

    [[nodiscard]] const ChiSequence& chi() const { return chi_; }
    [[nodiscard]] double noise_var() const { return noise_var_; }
    [[nodiscard]] int size() const { return static_cast<int>(arms_.size()); }
    [[nodiscard]] const std::vector<Path>& arms() const { return arms_; }
    [[nodiscard]] const std::vector<double>& rewards() const { return rewards_; }

    [[nodiscard]] Eigen::MatrixXd factor() const {
        const auto t = static_cast<Eigen::Index>(arms_.size());
        return L_.topLeftCorner(t, t).triangularView<Eigen::Lower>();
    }

    /// C_t assembled directly from the kernel (no factorisation involved).
    [[nodiscard]] Eigen::MatrixXd covariance() const {
        const auto t = static_cast<Eigen::Index>(arms_.size());
        Eigen::MatrixXd C(t, t);
        for (Eigen::Index i = 0; i < t; ++i)
            for (Eigen::Index j = 0; j < t; ++j)
                C(i, j) = kernel_eval(chi_, arms_[i], arms_[j]) + (i == j ? noise_var_ : 0.0);
        return C;
    }

    /// Kernel vector between x and the training arms.
    [[nodiscard]] Eigen::VectorXd kernel_vector(const Path& x) const {
        Eigen::VectorXd k(static_cast<Eigen::Index>(arms_.size()));
        for (std::size_t i = 0; i < arms_.size(); ++i) k(static_cast<Eigen::Index>(i)) = kernel_eval(chi_, x, arms_[i]);
        return k;
    }

    /// v = L^{-1} k_t(x).
    [[nodiscard]] Eigen::VectorXd project(const Path& x) const {
        check_depth(x);
        const auto t = static_cast<Eigen::Index>(arms_.size());
        Eigen::VectorXd v = kernel_vector(x);
        if (t > 0) L_.topLeftCorner(t, t).triangularView<Eigen::Lower>().solveInPlace(v);
        return v;
    }

    /// Extend a projection computed before the most recent observation by one
    /// entry. kernel_to_newest is k(x, x_t).
    void extend_projection(Eigen::VectorXd& v, double kernel_to_newest) const {
        const auto t = static_cast<Eigen::Index>(arms_.size());
        if (v.size() != t - 1) throw ParameterError("projection is not one observation behind");
        const double dot = t > 1 ? L_.row(t - 1).head(t - 1).dot(v) : 0.0;
        v.conservativeResize(t);
        v(t - 1) = (kernel_to_newest - dot) / L_(t - 1, t - 1);
    }

    [[nodiscard]] Posterior posterior_from_projection(const Path& x, const Eigen::VectorXd& v) const {
        const double prior = kernel_eval(chi_, x, x);
        const auto t = static_cast<Eigen::Index>(arms_.size());
        const double mean = t > 0 ? v.dot(w_.head(t)) : 0.0;
        const double var = std::clamp(prior - v.squaredNorm(), 0.0, prior);
        return {mean, var};
    }

    [[nodiscard]] Posterior posterior(const Path& x) const { return posterior_from_projection(x, project(x)); }

    /// In-place append of (x, y).
    void observe(const Path& x, double y) {
        check_depth(x);
        if (!std::isfinite(y)) throw InputError("reward must be finite");
        const auto t = static_cast<Eigen::Index>(arms_.size());
        Eigen::VectorXd l = project(x);
        double diag_sq = kernel_eval(chi_, x, x) + noise_var_ - l.squaredNorm();
        if (noise_var_ == 0.0) {
            if (std::find(arms_.begin(), arms_.end(), x) != arms_.end())
                throw DegenerateError("duplicate arm " + x.to_string() + " with zero observation noise");
            if (diag_sq <= 0.0) diag_sq += 1e-10 * chi_.prior_variance();
        }
        if (!(diag_sq > 0.0)) throw DegenerateError("covariance factorisation broke down at t=" + std::to_string(t + 1));

        reserve(t + 1);
        const double diag = std::sqrt(diag_sq);
        L_.row(t).head(t) = l.transpose();
        L_(t, t) = diag;
        w_(t) = (t > 0 ? y - l.dot(w_.head(t)) : y) / diag;
        arms_.push_back(x);
        rewards_.push_back(y);
    }

    /// Functional append: returns the successor state.
    [[nodiscard]] PosteriorState add_observation(const Path& x, double y) const {
        PosteriorState next = *this;
        next.observe(x, y);
        return next;
    }

    friend void to_json(nlohmann::json& j, const PosteriorState& s) {
        std::vector<std::vector<int>> arms;
        arms.reserve(s.arms_.size());
        for (const auto& a : s.arms_) arms.push_back(a.actions);
        j = nlohmann::json{{"kernel", s.chi_}, {"noise_var", s.noise_var_}, {"arms", arms}, {"rewards", s.rewards_}};
    }

    static PosteriorState from_json(const nlohmann::json& j) {
        PosteriorState s(j.at("kernel").get<ChiSequence>(), j.at("noise_var").get<double>());
        const auto arms = j.at("arms").get<std::vector<std::vector<int>>>();
        const auto rewards = j.at("rewards").get<std::vector<double>>();
        if (arms.size() != rewards.size()) throw InputError("arms and rewards differ in length");
        for (std::size_t i = 0; i < arms.size(); ++i) s.observe(Path{arms[i]}, rewards[i]);
        return s;
    }

private:
    void check_depth(const Path& x) const {
        if (x.depth() != chi_.depth())
            throw ParameterError("path depth " + std::to_string(x.depth()) + " does not match kernel depth " +
                                 std::to_string(chi_.depth()));
    }

    void reserve(Eigen::Index n) {
        if (L_.rows() >= n) return;
        const Eigen::Index cap = std::max<Eigen::Index>(16, 2 * L_.rows());
        L_.conservativeResize(cap, cap);
        w_.conservativeResize(cap);
    }

    ChiSequence chi_;
    double noise_var_;
    std::vector<Path> arms_;
    std::vector<double> rewards_;
    Eigen::MatrixXd L_;
    Eigen::VectorXd w_;
};

/// Confidence schedule beta_t = scale * sqrt(2 log(N t^2 pi^2 / (6 delta))).
struct BetaSchedule {
    double delta = 0.05;
    double num_arms = 1.0;  // N; kept as a double since B^D overflows quickly
    double scale = 1.0;

    void validate() const {
        if (!(delta > 0.0 && delta < 1.0)) throw ParameterError("delta must lie in (0, 1)");
        if (!(num_arms >= 1.0)) throw ParameterError("number of arms must be >= 1");
        if (!(scale >= 0.0)) throw ParameterError("beta scale must be >= 0");
    }
};

inline double beta(const BetaSchedule& schedule, int t) {
    schedule.validate();
    if (t < 1) throw ParameterError("beta_t requires t >= 1");
    const double pi2 = std::numbers::pi * std::numbers::pi;
    const double td = double(t);
    return schedule.scale * std::sqrt(2.0 * std::log(schedule.num_arms * td * td * pi2 / (6.0 * schedule.delta)));
}

inline double ucb(const PosteriorState& state, const Path& x, double beta_val) {
    if (!(beta_val >= 0.0)) throw ParameterError("beta must be >= 0");
    const auto p = state.posterior(x);
    return p.mean + beta_val * p.sigma();
}

}  // namespace gpts

#endif  // GPTS_GP_HPP
