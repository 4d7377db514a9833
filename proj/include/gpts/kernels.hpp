#ifndef GPTS_KERNELS_HPP
#define GPTS_KERNELS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gpts/errors.hpp"

namespace gpts {

enum class KernelKind { linear, gaussian, mdp, custom };

inline const char* to_string(KernelKind k) {
    switch (k) {
        case KernelKind::linear: return "linear";
        case KernelKind::gaussian: return "gaussian";
        case KernelKind::mdp: return "mdp";
        case KernelKind::custom: return "custom";
    }
    return "custom";
}

inline KernelKind kernel_kind_from_string(const std::string& s) {
    if (s == "linear") return KernelKind::linear;
    if (s == "gaussian") return KernelKind::gaussian;
    if (s == "mdp") return KernelKind::mdp;
    if (s == "custom") return KernelKind::custom;
    throw ParameterError("unknown kernel kind '" + s + "'");
}

/// Integer power for small non-negative exponents; exact for tree sizes.
inline std::uint64_t ipow(std::uint64_t base, int exp) {
    std::uint64_t r = 1;
    for (int i = 0; i < exp; ++i) r *= base;
    return r;
}

/**
 * A root-to-leaf path, stored as the sequence of action (child) indices taken
 * from the root. A path of depth D visits D+1 nodes; the node at depth i is
 * identified by the first i actions, so the path is its own node table.
 */
struct Path {
    std::vector<int> actions;

    [[nodiscard]] int depth() const { return static_cast<int>(actions.size()); }

    friend bool operator==(const Path&, const Path&) = default;
    friend auto operator<=>(const Path&, const Path&) = default;

    [[nodiscard]] std::string to_string() const {
        std::string s;
        for (std::size_t i = 0; i < actions.size(); ++i) {
            if (i) s += '-';
            s += std::to_string(actions[i]);
        }
        return s;
    }
};

/// Number of leading actions two paths share.
inline int common_actions(const Path& a, const Path& b) {
    const auto n = std::min(a.actions.size(), b.actions.size());
    std::size_t h = 0;
    while (h < n && a.actions[h] == b.actions[h]) ++h;
    return static_cast<int>(h);
}

/**
 * Kernel profile chi_0..chi_D over paths of a depth-D tree with branching B:
 * chi_d is the kernel value between two paths differing on d nodes.
 */
class ChiSequence {
public:
    ChiSequence() = default;

    ChiSequence(KernelKind kind, int branching, int depth, std::vector<double> values, double param = 0.0)
        : kind_(kind), branching_(branching), depth_(depth), param_(param), values_(std::move(values)) {
        if (branching_ < 2) throw ParameterError("branching factor must be >= 2");
        if (depth_ < 1) throw ParameterError("depth must be >= 1");
        if (values_.size() != static_cast<std::size_t>(depth_) + 1)
            throw ParameterError("chi sequence must have D+1 values");
        for (std::size_t d = 0; d < values_.size(); ++d) {
            if (!std::isfinite(values_[d]) || values_[d] < 0.0)
                throw ParameterError("chi values must be finite and non-negative");
            if (d > 0 && values_[d] > values_[d - 1])
                throw ParameterError("chi values must be nonincreasing");
        }
        normalized_ = values_.front() == 1.0;
    }

    [[nodiscard]] KernelKind kind() const { return kind_; }
    [[nodiscard]] int branching() const { return branching_; }
    [[nodiscard]] int depth() const { return depth_; }
    /// Gaussian width s, MDP discount gamma, unused otherwise.
    [[nodiscard]] double param() const { return param_; }
    [[nodiscard]] bool normalized() const { return normalized_; }
    [[nodiscard]] const std::vector<double>& values() const { return values_; }
    [[nodiscard]] double operator[](int d) const { return values_[static_cast<std::size_t>(d)]; }
    [[nodiscard]] double prior_variance() const { return values_.front(); }

    /// N = B^D paths.
    [[nodiscard]] std::uint64_t num_paths() const { return ipow(static_cast<std::uint64_t>(branching_), depth_); }
    /// N_n = (B^{D+1} - 1) / (B - 1) nodes.
    [[nodiscard]] std::uint64_t num_nodes() const {
        return (ipow(static_cast<std::uint64_t>(branching_), depth_ + 1) - 1) /
               static_cast<std::uint64_t>(branching_ - 1);
    }

    /// True for the Gaussian kernel when s > 1/sqrt(log B), the regime the
    /// eigenvalue bounds are stated for. Always false for other kinds.
    [[nodiscard]] bool in_gaussian_bound_regime() const {
        return kind_ == KernelKind::gaussian && param_ > 1.0 / std::sqrt(std::log(double(branching_)));
    }

    friend bool operator==(const ChiSequence&, const ChiSequence&) = default;

private:
    KernelKind kind_ = KernelKind::custom;
    int branching_ = 2;
    int depth_ = 1;
    double param_ = 0.0;
    bool normalized_ = false;
    std::vector<double> values_;
};

inline void check_shape(int B, int D) {
    if (B < 2) throw ParameterError("branching factor B must be >= 2, got " + std::to_string(B));
    if (D < 1) throw ParameterError("depth D must be >= 1, got " + std::to_string(D));
}

/// chi_d = (D+1-d)/(D+1): normalised count of shared nodes.
inline ChiSequence chi_linear(int B, int D) {
    check_shape(B, D);
    std::vector<double> v(static_cast<std::size_t>(D) + 1);
    for (int d = 0; d <= D; ++d) v[d] = double(D + 1 - d) / double(D + 1);
    return {KernelKind::linear, B, D, std::move(v)};
}

/// chi_d = exp(-d / s^2). Infinite s gives the constant kernel.
inline ChiSequence chi_gaussian(int B, int D, double s) {
    check_shape(B, D);
    if (!(s > 0.0)) throw ParameterError("Gaussian width s must be > 0");
    std::vector<double> v(static_cast<std::size_t>(D) + 1);
    for (int d = 0; d <= D; ++d) v[d] = std::exp(-double(d) / (s * s));
    return {KernelKind::gaussian, B, D, std::move(v), s};
}

/// Covariance of discounted sums of independent unit-variance step rewards:
/// paths sharing h = D-d actions have kernel (1 - gamma^{2h}) / (1 - gamma^2).
inline ChiSequence chi_mdp(int B, int D, double gamma) {
    check_shape(B, D);
    if (!(gamma > 0.0 && gamma < 1.0)) throw ParameterError("discount gamma must lie in (0, 1)");
    const double g2 = gamma * gamma;
    std::vector<double> v(static_cast<std::size_t>(D) + 1);
    for (int d = 0; d <= D; ++d) v[d] = (1.0 - std::pow(g2, D - d)) / (1.0 - g2);
    v[D] = 0.0;
    return {KernelKind::mdp, B, D, std::move(v), gamma};
}

inline ChiSequence make_chi(KernelKind kind, int B, int D, double param) {
    switch (kind) {
        case KernelKind::linear: return chi_linear(B, D);
        case KernelKind::gaussian: return chi_gaussian(B, D, param);
        case KernelKind::mdp: return chi_mdp(B, D, param);
        case KernelKind::custom: break;
    }
    throw ParameterError("custom kernels must be built from explicit values");
}

/// Number of nodes on which two depth-D paths differ.
inline int differing_nodes(const Path& x, const Path& y) {
    return x.depth() - common_actions(x, y);
}

inline double kernel_eval(const ChiSequence& chi, const Path& x, const Path& y) {
    if (x.depth() != chi.depth() || y.depth() != chi.depth())
        throw ParameterError("path depth does not match kernel depth " + std::to_string(chi.depth()));
    return chi[differing_nodes(x, y)];
}

/// Sparse embedding keyed by node (the action prefix leading to it; the
/// root is the empty prefix).
using SparseFeatures = std::map<std::vector<int>, double>;

/**
 * Explicit feature vector whose inner products reproduce the kernel: the root
 * carries sqrt(chi_D) and the depth-i node of the path carries
 * sqrt(chi_{D-i} - chi_{D-i+1}). Only defined for normalised profiles.
 */
inline SparseFeatures feature_map(const ChiSequence& chi, const Path& x) {
    if (!chi.normalized())
        throw UnsupportedKernelError("feature map requires a normalised kernel (chi_0 = 1)");
    const int D = chi.depth();
    if (x.depth() != D) throw ParameterError("path depth does not match kernel depth");
    SparseFeatures phi;
    phi.emplace(std::vector<int>{}, std::sqrt(chi[D]));
    for (int i = 1; i <= D; ++i) {
        std::vector<int> node(x.actions.begin(), x.actions.begin() + i);
        phi.emplace(std::move(node), std::sqrt(chi[D - i] - chi[D - i + 1]));
    }
    return phi;
}

inline double sparse_dot(const SparseFeatures& a, const SparseFeatures& b) {
    double s = 0.0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (ia->first < ib->first) {
            ++ia;
        } else if (ib->first < ia->first) {
            ++ib;
        } else {
            s += ia->second * ib->second;
            ++ia;
            ++ib;
        }
    }
    return s;
}

/// All B^D paths in lexicographic action order (path index = base-B number).
inline std::vector<Path> enumerate_paths(int B, int D) {
    check_shape(B, D);
    const auto n = ipow(static_cast<std::uint64_t>(B), D);
    std::vector<Path> out;
    out.reserve(n);
    for (std::uint64_t idx = 0; idx < n; ++idx) {
        Path p;
        p.actions.assign(static_cast<std::size_t>(D), 0);
        auto rem = idx;
        for (int i = D - 1; i >= 0; --i) {
            p.actions[i] = static_cast<int>(rem % static_cast<std::uint64_t>(B));
            rem /= static_cast<std::uint64_t>(B);
        }
        out.push_back(std::move(p));
    }
    return out;
}

inline std::uint64_t path_index(const Path& x, int B) {
    std::uint64_t idx = 0;
    for (int a : x.actions) idx = idx * static_cast<std::uint64_t>(B) + static_cast<std::uint64_t>(a);
    return idx;
}

// JSON form: {kind, B, D, params, values}.
inline void to_json(nlohmann::json& j, const ChiSequence& chi) {
    nlohmann::json params = nlohmann::json::object();
    if (chi.kind() == KernelKind::gaussian) params["s"] = chi.param();
    if (chi.kind() == KernelKind::mdp) params["gamma"] = chi.param();
    j = nlohmann::json{{"kind", to_string(chi.kind())},
                       {"B", chi.branching()},
                       {"D", chi.depth()},
                       {"params", params},
                       {"values", chi.values()}};
}

inline void from_json(const nlohmann::json& j, ChiSequence& chi) {
    const auto kind = kernel_kind_from_string(j.at("kind").get<std::string>());
    const int B = j.at("B").get<int>();
    const int D = j.at("D").get<int>();
    const auto& params = j.contains("params") ? j.at("params") : nlohmann::json::object();
    switch (kind) {
        case KernelKind::linear: chi = chi_linear(B, D); break;
        case KernelKind::gaussian: chi = chi_gaussian(B, D, params.at("s").get<double>()); break;
        case KernelKind::mdp: chi = chi_mdp(B, D, params.at("gamma").get<double>()); break;
        case KernelKind::custom:
            chi = ChiSequence(KernelKind::custom, B, D, j.at("values").get<std::vector<double>>());
            break;
    }
}

}  // namespace gpts

#endif  // GPTS_KERNELS_HPP
