#ifndef GPTS_SEARCH_HPP
#define GPTS_SEARCH_HPP

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gpts/errors.hpp"
#include "gpts/gp.hpp"
#include "gpts/kernels.hpp"

namespace gpts {

using Rng = std::mt19937_64;
using RewardSource = std::function<double(const Path&)>;
/// Number of children of the node reached by a given action prefix.
using BranchingOracle = std::function<int(const std::vector<int>& prefix)>;

enum class CandidateKind { leaf, dummy };

/// An element of the selectable set: a concrete leaf, or a dummy standing for
/// every path through the not-yet-created children of `node`.
struct Candidate {
    CandidateKind kind = CandidateKind::leaf;
    int node = -1;
    /// Leaves: the path itself. Dummies: any completion through an uncreated
    /// child; unexplored nodes never match a training arm, so every such
    /// completion has the same kernel vector.
    Path representative;
    Eigen::VectorXd projection;
    int projected_at = -1;
    Posterior posterior;
};

struct TreeNode {
    int parent = -1;
    int depth = 0;
    std::vector<int> prefix;
    std::vector<int> children;
    std::vector<int> uncreated;
    int dummy = -1;  // index into the candidate set, or -1
};

enum class SelectionMode { flat_scan, tree_descent };

inline constexpr double kTieTolerance = 1e-12;

/**
 * Lazily grown search tree. Leaves and dummy nodes form the candidate set S;
 * each carries its cached posterior so selection is a single pass over S.
 */
class SearchTree {
public:
    SearchTree(int branching, int depth)
        : SearchTree(depth, [branching](const std::vector<int>&) { return branching; }) {
        check_shape(branching, depth);
    }

    SearchTree(int depth, BranchingOracle branching) : depth_(depth), branching_(std::move(branching)) {
        if (depth_ < 1) throw ParameterError("depth must be >= 1");
        nodes_.push_back(make_node(-1, {}));
        add_dummy(0);
    }

    [[nodiscard]] int depth() const { return depth_; }
    [[nodiscard]] const std::vector<TreeNode>& nodes() const { return nodes_; }
    [[nodiscard]] const std::vector<Candidate>& candidates() const { return candidates_; }
    [[nodiscard]] bool exhausted() const { return candidates_.empty(); }

    [[nodiscard]] int num_dummies() const {
        int n = 0;
        for (const auto& c : candidates_) n += c.kind == CandidateKind::dummy;
        return n;
    }

    /// Returns the path of `chosen`, creating nodes first when it is a dummy.
    Path materialize(int chosen, Rng& rng) {
        if (chosen < 0 || chosen >= static_cast<int>(candidates_.size()))
            throw ParameterError("candidate index out of range");
        if (candidates_[chosen].kind == CandidateKind::leaf) return candidates_[chosen].representative;

        const int parent = candidates_[chosen].node;
        int x = create_child(parent, rng);
        if (nodes_[parent].uncreated.empty()) {
            remove_candidate(chosen);
        } else {
            candidates_[chosen].representative = completion(parent);
        }
        while (nodes_[x].depth < depth_) {
            const int next = create_child(x, rng);
            if (!nodes_[x].uncreated.empty()) add_dummy(x);
            x = next;
        }
        Candidate leaf;
        leaf.kind = CandidateKind::leaf;
        leaf.node = x;
        leaf.representative = Path{nodes_[x].prefix};
        candidates_.push_back(std::move(leaf));
        return Path{nodes_[x].prefix};
    }

    /// Drops the leaf candidate for `x` (noise-free de-duplication).
    void remove_leaf(const Path& x) {
        for (int i = 0; i < static_cast<int>(candidates_.size()); ++i) {
            if (candidates_[i].kind == CandidateKind::leaf && candidates_[i].representative == x) {
                remove_candidate(i);
                return;
            }
        }
    }

    /// Brings every cached posterior up to date with `state`. Projections one
    /// observation behind are extended in O(t); others are recomputed.
    void refresh(const PosteriorState& state, bool incremental = true) {
        const int t = state.size();
        for (auto& c : candidates_) {
            if (c.projected_at == t) continue;
            if (incremental && t > 0 && c.projected_at == t - 1) {
                state.extend_projection(c.projection, kernel_eval(state.chi(), c.representative, state.arms().back()));
            } else {
                c.projection = state.project(c.representative);
            }
            c.projected_at = t;
            c.posterior = state.posterior_from_projection(c.representative, c.projection);
        }
    }

    /// Index of the candidate with highest upper confidence; ties within
    /// kTieTolerance are broken uniformly at random.
    [[nodiscard]] int select(double beta_val, Rng& rng, SelectionMode mode = SelectionMode::flat_scan) const {
        if (candidates_.empty()) throw ExhaustedTreeError("no selectable leaves or dummy nodes remain");
        if (mode == SelectionMode::tree_descent) return select_by_descent(beta_val, rng);
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& c : candidates_) best = std::max(best, score(c, beta_val));
        std::vector<int> ties;
        for (int i = 0; i < static_cast<int>(candidates_.size()); ++i)
            if (score(candidates_[i], beta_val) >= best - kTieTolerance) ties.push_back(i);
        return pick(ties, rng);
    }

    [[nodiscard]] static double score(const Candidate& c, double beta_val) {
        return c.posterior.mean + beta_val * c.posterior.sigma();
    }

private:
    TreeNode make_node(int parent, std::vector<int> prefix) {
        TreeNode n;
        n.parent = parent;
        n.depth = static_cast<int>(prefix.size());
        if (n.depth < depth_) {
            const int b = branching_(prefix);
            if (b < 1) throw ParameterError("branching oracle returned < 1 children");
            n.uncreated.resize(static_cast<std::size_t>(b));
            for (int a = 0; a < b; ++a) n.uncreated[a] = a;
        }
        n.prefix = std::move(prefix);
        return n;
    }

    int create_child(int parent, Rng& rng) {
        auto& un = nodes_[parent].uncreated;
        std::uniform_int_distribution<std::size_t> pick_action(0, un.size() - 1);
        const auto k = pick_action(rng);
        const int action = un[k];
        un.erase(un.begin() + static_cast<std::ptrdiff_t>(k));
        std::vector<int> prefix = nodes_[parent].prefix;
        prefix.push_back(action);
        const int id = static_cast<int>(nodes_.size());
        nodes_.push_back(make_node(parent, std::move(prefix)));
        nodes_[parent].children.push_back(id);
        return id;
    }

    [[nodiscard]] Path completion(int parent) const {
        Path p{nodes_[parent].prefix};
        p.actions.push_back(nodes_[parent].uncreated.front());
        p.actions.resize(static_cast<std::size_t>(depth_), 0);
        return p;
    }

    void add_dummy(int parent) {
        Candidate d;
        d.kind = CandidateKind::dummy;
        d.node = parent;
        d.representative = completion(parent);
        nodes_[parent].dummy = static_cast<int>(candidates_.size());
        candidates_.push_back(std::move(d));
    }

    void remove_candidate(int idx) {
        if (candidates_[idx].kind == CandidateKind::dummy) nodes_[candidates_[idx].node].dummy = -1;
        candidates_.erase(candidates_.begin() + idx);
        for (int i = idx; i < static_cast<int>(candidates_.size()); ++i)
            if (candidates_[i].kind == CandidateKind::dummy) nodes_[candidates_[i].node].dummy = i;
    }

    static int pick(const std::vector<int>& ties, Rng& rng) {
        if (ties.size() == 1) return ties.front();
        std::uniform_int_distribution<std::size_t> u(0, ties.size() - 1);
        return ties[u(rng)];
    }

    // UCT-style descent over subtree maxima. Leaves are tree nodes; a dummy is
    // a virtual extra child of its parent.
    [[nodiscard]] int select_by_descent(double beta_val, Rng& rng) const {
        const double lowest = -std::numeric_limits<double>::infinity();
        std::vector<double> best(nodes_.size(), lowest);
        std::vector<int> leaf_of(nodes_.size(), -1);
        for (int i = 0; i < static_cast<int>(candidates_.size()); ++i) {
            const auto& c = candidates_[i];
            const double u = score(c, beta_val);
            int n = c.node;
            if (c.kind == CandidateKind::leaf) leaf_of[n] = i;
            for (; n >= 0; n = nodes_[n].parent) best[n] = std::max(best[n], u);
        }
        int n = 0;
        for (;;) {
            if (leaf_of[n] >= 0) return leaf_of[n];
            const double target = best[n];
            std::vector<int> options;  // node id, or -(candidate index)-1 for the dummy
            for (int ch : nodes_[n].children)
                if (best[ch] >= target - kTieTolerance) options.push_back(ch);
            const int d = nodes_[n].dummy;
            if (d >= 0 && score(candidates_[d], beta_val) >= target - kTieTolerance) options.push_back(-d - 1);
            const int choice = pick(options, rng);
            if (choice < 0) return -choice - 1;
            n = choice;
        }
    }

    int depth_;
    BranchingOracle branching_;
    std::vector<TreeNode> nodes_;
    std::vector<Candidate> candidates_;
};

struct TraceRow {
    int t = 0;
    Path path;
    double reward = 0.0;
    double mu = 0.0;
    double sigma = 0.0;
    double beta = 0.0;
    double ucb = 0.0;
    std::optional<double> cum_regret;
};

struct SearchTrace {
    std::vector<TraceRow> rows;
    std::optional<Path> best_path;
    double best_reward = -std::numeric_limits<double>::infinity();
    std::string stop_reason;

    void record(TraceRow row) {
        if (!best_path || row.reward > best_reward) {
            best_reward = row.reward;
            best_path = row.path;
        }
        rows.push_back(std::move(row));
    }
};

struct StoppingRule {
    enum class Kind { fixed_iterations, confidence_width, wall_clock };
    Kind kind = Kind::fixed_iterations;
    /// Hard cap on iterations for every rule.
    int max_iterations = 0;
    /// Stop once 2 * beta_t * sigma_t(best observed arm) falls below this.
    double width_threshold = 0.0;
    double seconds = 0.0;

    static StoppingRule fixed(int T) { return {Kind::fixed_iterations, T, 0.0, 0.0}; }
};

struct SearchOptions {
    SelectionMode mode = SelectionMode::flat_scan;
    bool incremental = true;
};

/// One iteration: select, materialise, observe, refresh the cached posteriors.
inline TraceRow step(SearchTree& tree, PosteriorState& state, const BetaSchedule& schedule,
                     const RewardSource& reward_source, Rng& rng, const SearchOptions& options = {}) {
    const int t = state.size();
    const double beta_t = beta(schedule, std::max(t, 1));
    tree.refresh(state, options.incremental);
    int chosen = 0;
    if (t == 0) {
        if (tree.exhausted()) throw ExhaustedTreeError("empty candidate set");
    } else {
        chosen = tree.select(beta_t, rng, options.mode);
    }
    const Posterior post = tree.candidates()[chosen].posterior;

    Path x = tree.materialize(chosen, rng);
    const double y = reward_source(x);
    state.observe(x, y);
    if (state.noise_var() == 0.0) tree.remove_leaf(x);
    tree.refresh(state, options.incremental);

    TraceRow row;
    row.t = t + 1;
    row.path = std::move(x);
    row.reward = y;
    row.mu = post.mean;
    row.sigma = post.sigma();
    row.beta = beta_t;
    row.ucb = post.mean + beta_t * post.sigma();
    return row;
}

struct SearchConfig {
    ChiSequence chi;
    double noise_var = 0.01;
    BetaSchedule schedule;  // num_arms defaults to B^D when left at 0
    StoppingRule stop;
    std::uint64_t seed = 0;
    SearchOptions options;
    BranchingOracle branching;  // uniform chi.branching() when empty
    /// Noise-free reward, for cumulative regret against f_star.
    std::function<double(const Path&)> mean_reward;
    std::optional<double> f_star;
};

inline SearchTrace run(const SearchConfig& config, const RewardSource& reward_source) {
    const int D = config.chi.depth();
    SearchTree tree = config.branching ? SearchTree(D, config.branching) : SearchTree(config.chi.branching(), D);
    PosteriorState state(config.chi, config.noise_var);
    BetaSchedule schedule = config.schedule;
    if (schedule.num_arms < 1.0) schedule.num_arms = std::pow(double(config.chi.branching()), D);
    schedule.validate();
    Rng rng(config.seed);

    SearchTrace trace;
    const auto started = std::chrono::steady_clock::now();
    const bool track_regret = config.mean_reward && config.f_star.has_value();
    double regret = 0.0;
    const auto& stop = config.stop;
    trace.stop_reason = "iterations";
    for (int t = 0; t < stop.max_iterations; ++t) {
        if (tree.exhausted()) {
            trace.stop_reason = "exhausted";
            break;
        }
        if (stop.kind == StoppingRule::Kind::wall_clock &&
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count() >= stop.seconds) {
            trace.stop_reason = "wall_clock";
            break;
        }
        TraceRow row = step(tree, state, schedule, reward_source, rng, config.options);
        if (track_regret) {
            regret += *config.f_star - config.mean_reward(row.path);
            row.cum_regret = regret;
        }
        trace.record(std::move(row));
        if (stop.kind == StoppingRule::Kind::confidence_width) {
            const double width = 2.0 * beta(schedule, state.size()) * state.posterior(*trace.best_path).sigma();
            if (width < stop.width_threshold) {
                trace.stop_reason = "confidence_width";
                break;
            }
        }
    }
    return trace;
}

inline std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline constexpr const char* kTraceCsvVersion = "# gpts-trace v1";

/// t,path,reward,mu,sigma,beta,ucb,cum_regret (cum_regret empty when unknown).
inline void write_trace_csv(std::ostream& out, const SearchTrace& trace) {
    out << kTraceCsvVersion << '\n' << "t,path,reward,mu,sigma,beta,ucb,cum_regret\n";
    for (const auto& r : trace.rows) {
        out << r.t << ',' << r.path.to_string() << ',' << format_number(r.reward) << ',' << format_number(r.mu)
            << ',' << format_number(r.sigma) << ',' << format_number(r.beta) << ',' << format_number(r.ucb) << ',';
        if (r.cum_regret) out << format_number(*r.cum_regret);
        out << '\n';
    }
}

}  // namespace gpts

#endif  // GPTS_SEARCH_HPP
