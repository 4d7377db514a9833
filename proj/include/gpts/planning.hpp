#ifndef GPTS_PLANNING_HPP
#define GPTS_PLANNING_HPP

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "gpts/errors.hpp"
#include "gpts/kernels.hpp"
#include "gpts/search.hpp"

namespace gpts {

/// Deterministic-transition MDP queried through a generative model.
/// Implementations must tolerate concurrent const calls.
class GenerativeMDP {
public:
    virtual ~GenerativeMDP() = default;
    [[nodiscard]] virtual int initial_state() const = 0;
    [[nodiscard]] virtual int num_actions(int state) const = 0;
    [[nodiscard]] virtual int next_state(int state, int action) const = 0;
    /// Intermediate reward in [-1, 1].
    [[nodiscard]] virtual double reward(int state, int action) const = 0;
    [[nodiscard]] virtual double gamma() const = 0;
};

class TabularMDP final : public GenerativeMDP {
public:
    struct Transition {
        int next = 0;
        double reward = 0.0;
    };

    TabularMDP(std::vector<std::vector<Transition>> table, double gamma, int initial_state = 0)
        : table_(std::move(table)), gamma_(gamma), initial_(initial_state) {
        if (!(gamma_ > 0.0 && gamma_ < 1.0)) throw ParameterError("gamma must lie in (0, 1)");
        const int n = static_cast<int>(table_.size());
        if (n == 0) throw InputError("MDP has no states");
        if (initial_ < 0 || initial_ >= n) throw InputError("initial state out of range");
        for (int s = 0; s < n; ++s) {
            if (table_[s].empty()) throw InputError("state " + std::to_string(s) + " has no actions");
            for (const auto& tr : table_[s]) {
                if (tr.next < 0 || tr.next >= n) throw InputError("transition target out of range in state " + std::to_string(s));
                if (!(tr.reward >= -1.0 && tr.reward <= 1.0))
                    throw InputError("rewards must lie in [-1, 1] (state " + std::to_string(s) + ")");
            }
        }
    }

    [[nodiscard]] int initial_state() const override { return initial_; }
    [[nodiscard]] int num_actions(int state) const override { return static_cast<int>(row(state).size()); }
    [[nodiscard]] int next_state(int state, int action) const override { return at(state, action).next; }
    [[nodiscard]] double reward(int state, int action) const override { return at(state, action).reward; }
    [[nodiscard]] double gamma() const override { return gamma_; }
    [[nodiscard]] int num_states() const { return static_cast<int>(table_.size()); }

    /// {"gamma": g, "initial_state": s0, "states": [{"actions": [{"next": i, "reward": r}, ...]}, ...]}
    static TabularMDP from_json(const nlohmann::json& j) {
        try {
            std::vector<std::vector<Transition>> table;
            for (const auto& st : j.at("states")) {
                std::vector<Transition> acts;
                for (const auto& a : st.at("actions")) acts.push_back({a.at("next").get<int>(), a.at("reward").get<double>()});
                table.push_back(std::move(acts));
            }
            return TabularMDP(std::move(table), j.at("gamma").get<double>(), j.value("initial_state", 0));
        } catch (const nlohmann::json::exception& e) {
            throw InputError(std::string("malformed MDP description: ") + e.what());
        }
    }

    static TabularMDP load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw InputError("cannot open MDP file " + path);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw InputError("cannot parse MDP file " + path + ": " + e.what());
        }
        return from_json(j);
    }

private:
    [[nodiscard]] const std::vector<Transition>& row(int state) const {
        if (state < 0 || state >= static_cast<int>(table_.size())) throw EnvironmentError("invalid state " + std::to_string(state));
        return table_[state];
    }
    [[nodiscard]] const Transition& at(int state, int action) const {
        const auto& r = row(state);
        if (action < 0 || action >= static_cast<int>(r.size()))
            throw EnvironmentError("invalid action " + std::to_string(action) + " in state " + std::to_string(state));
        return r[action];
    }

    std::vector<std::vector<Transition>> table_;
    double gamma_;
    int initial_;
};

/// sum_{tau < D} gamma^tau r_tau along the state sequence induced by `actions`.
inline double discounted_reward(const GenerativeMDP& mdp, const std::vector<int>& actions) {
    int s = mdp.initial_state();
    double total = 0.0;
    double discount = 1.0;
    for (int a : actions) {
        if (a < 0 || a >= mdp.num_actions(s))
            throw EnvironmentError("invalid action " + std::to_string(a) + " in state " + std::to_string(s));
        total += discount * mdp.reward(s, a);
        s = mdp.next_state(s, a);
        discount *= mdp.gamma();
    }
    return total;
}

/// D(T) = max(1, ceil(log_B T)), computed exactly in integers.
inline int depth_schedule(std::int64_t T, int B) {
    if (T < 1) throw ParameterError("T must be >= 1");
    if (B < 2) throw ParameterError("B must be >= 2");
    int D = 0;
    std::int64_t reach = 1;
    while (reach < T) {
        reach *= B;
        ++D;
    }
    return std::max(D, 1);
}

/// Worst-case loss from truncating the horizon at depth D: 2 gamma^D / (1 - gamma).
inline double truncation_cost(double gamma, int D) { return 2.0 * std::pow(gamma, D) / (1.0 - gamma); }

struct EmpiricalRegret {
    double simple = 0.0;        // max(0, f* - y_best)
    double simple_raw = 0.0;    // f* - y_best
    double cumulative = 0.0;    // R'_T = T f* - sum y_t
    bool inequality_holds = true;  // f* - y_best <= R'_T / T
};

inline EmpiricalRegret empirical_simple_regret(const SearchTrace& trace, double f_star) {
    EmpiricalRegret r;
    if (trace.rows.empty()) return r;
    double sum = 0.0;
    for (const auto& row : trace.rows) sum += row.reward;
    const double T = double(trace.rows.size());
    r.cumulative = T * f_star - sum;
    r.simple_raw = f_star - trace.best_reward;
    r.simple = std::max(0.0, r.simple_raw);
    r.inequality_holds = r.simple_raw <= r.cumulative / T + 1e-12 * std::max(1.0, std::abs(f_star));
    return r;
}

struct Optimum {
    double value = -std::numeric_limits<double>::infinity();
    std::vector<int> actions;
    std::uint64_t sequences = 0;
};

/// Exhaustive optimum over all action sequences of length D.
inline Optimum enumerate_optimum(const GenerativeMDP& mdp, int D, std::uint64_t cap = std::uint64_t{1} << 20) {
    Optimum best;
    std::vector<int> seq;
    std::function<void(int, double, double)> dfs = [&](int state, double acc, double discount) {
        if (static_cast<int>(seq.size()) == D) {
            if (++best.sequences > cap) throw SizeError("too many action sequences to enumerate");
            if (acc > best.value) {
                best.value = acc;
                best.actions = seq;
            }
            return;
        }
        for (int a = 0; a < mdp.num_actions(state); ++a) {
            seq.push_back(a);
            dfs(mdp.next_state(state, a), acc + discount * mdp.reward(state, a), discount * mdp.gamma());
            seq.pop_back();
        }
    };
    dfs(mdp.initial_state(), 0.0, 1.0);
    return best;
}

struct PlanConfig {
    std::int64_t T = 100;
    double noise_var = 0.0025;
    double delta = 0.05;
    double beta_scale = 1.0;
    std::uint64_t seed = 0;
    /// Std of additive Gaussian noise on returned rewards; 0 returns exact sums.
    double observation_noise = 0.0;
    /// Enumerate the optimum when B^D stays under this many sequences.
    std::uint64_t enumerate_cap = std::uint64_t{1} << 16;
};

struct PlanResult {
    std::vector<int> best_actions;
    double best_observed = 0.0;
    int horizon = 0;
    std::int64_t generative_calls = 0;  // n = D T
    double truncation_cost = 0.0;
    std::optional<double> f_star;
    std::optional<double> simple_regret;  // f* - f(best observed sequence)
    std::optional<EmpiricalRegret> empirical;
    SearchTrace trace;
};

/// Open-loop GP tree search with the discounted-sum kernel at depth D(T).
inline PlanResult plan(const GenerativeMDP& mdp, const PlanConfig& cfg) {
    if (cfg.T < 1) throw ParameterError("T must be >= 1");
    const int B = mdp.num_actions(mdp.initial_state());
    if (B < 2) throw ParameterError("initial state needs at least two actions");
    const int D = depth_schedule(cfg.T, B);

    SearchConfig sc;
    sc.chi = chi_mdp(B, D, mdp.gamma());
    sc.noise_var = cfg.noise_var;
    sc.schedule = BetaSchedule{cfg.delta, std::pow(double(B), D), cfg.beta_scale};
    sc.stop = StoppingRule::fixed(static_cast<int>(cfg.T));
    sc.seed = cfg.seed;
    sc.branching = [&mdp](const std::vector<int>& prefix) {
        int s = mdp.initial_state();
        for (int a : prefix) s = mdp.next_state(s, a);
        return mdp.num_actions(s);
    };
    sc.mean_reward = [&mdp](const Path& x) { return discounted_reward(mdp, x.actions); };

    PlanResult result;
    result.horizon = D;
    result.generative_calls = static_cast<std::int64_t>(D) * cfg.T;
    result.truncation_cost = truncation_cost(mdp.gamma(), D);

    std::optional<Optimum> opt;
    if (std::pow(double(B), D) <= double(cfg.enumerate_cap)) {
        opt = enumerate_optimum(mdp, D, cfg.enumerate_cap);
        sc.f_star = opt->value;
    }

    Rng noise_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> noise(0.0, 1.0);
    const RewardSource reward = [&](const Path& x) {
        double y = discounted_reward(mdp, x.actions);
        if (cfg.observation_noise > 0.0) y += cfg.observation_noise * noise(noise_rng);
        return y;
    };

    result.trace = run(sc, reward);
    if (result.trace.best_path) {
        result.best_actions = result.trace.best_path->actions;
        result.best_observed = result.trace.best_reward;
    }
    if (opt) {
        result.f_star = opt->value;
        result.simple_regret = opt->value - discounted_reward(mdp, result.best_actions);
        result.empirical = empirical_simple_regret(result.trace, opt->value);
    }
    return result;
}

inline nlohmann::json to_json(const PlanResult& r) {
    nlohmann::json j{{"best_actions", r.best_actions},
                     {"best_observed", r.best_observed},
                     {"horizon", r.horizon},
                     {"iterations", r.trace.rows.size()},
                     {"generative_calls", r.generative_calls},
                     {"truncation_cost", r.truncation_cost},
                     {"stop_reason", r.trace.stop_reason}};
    if (r.f_star) {
        j["f_star"] = *r.f_star;
        j["simple_regret"] = *r.simple_regret;
        j["empirical_simple_regret"] = r.empirical->simple;
        j["empirical_cumulative_regret"] = r.empirical->cumulative;
        j["empirical_inequality_holds"] = r.empirical->inequality_holds;
    } else {
        j["f_star"] = nullptr;
        j["simple_regret"] = nullptr;
    }
    return j;
}

}  // namespace gpts

#endif  // GPTS_PLANNING_HPP
