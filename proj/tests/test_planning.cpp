#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "gpts/planning.hpp"

using namespace gpts;

namespace {

TabularMDP constant_mdp(double r, double gamma, int B = 2) {
    std::vector<TabularMDP::Transition> acts(static_cast<std::size_t>(B), {0, r});
    return TabularMDP({acts}, gamma);
}

// Reward 1 for action 0 at the first step only; zero afterwards.
TabularMDP first_step_mdp(double gamma) {
    return TabularMDP({{{1, 1.0}, {1, 0.0}}, {{1, 0.0}, {1, 0.0}}}, gamma);
}

TabularMDP random_mdp(int states, int B, double gamma, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> next(0, states - 1);
    std::uniform_real_distribution<double> rew(-1.0, 1.0);
    std::vector<std::vector<TabularMDP::Transition>> table(static_cast<std::size_t>(states));
    for (auto& row : table)
        for (int a = 0; a < B; ++a) row.push_back({next(rng), rew(rng)});
    return TabularMDP(std::move(table), gamma);
}

}  // namespace

TEST(DiscountedReward, HandValues) {
    EXPECT_EQ(discounted_reward(constant_mdp(0.0, 0.5), {0, 1, 0}), 0.0);
    EXPECT_DOUBLE_EQ(discounted_reward(constant_mdp(1.0, 0.5), {0, 1, 0}), 1.75);
    const auto chain = first_step_mdp(0.9);
    for (const auto& p : enumerate_paths(2, 3)) EXPECT_EQ(discounted_reward(chain, p.actions), p.actions[0] == 0 ? 1.0 : 0.0);
    EXPECT_THROW(discounted_reward(chain, {2}), EnvironmentError);
    EXPECT_THROW(discounted_reward(chain, {-1}), EnvironmentError);
}

TEST(DepthSchedule, Examples) {
    EXPECT_EQ(depth_schedule(8, 2), 3);
    EXPECT_EQ(depth_schedule(1, 2), 1);
    EXPECT_EQ(depth_schedule(9, 2), 4);
    EXPECT_EQ(depth_schedule(200, 2), 8);
    EXPECT_EQ(depth_schedule(27, 3), 3);
    EXPECT_EQ(depth_schedule(28, 3), 4);
    EXPECT_THROW(depth_schedule(0, 2), ParameterError);
}

TEST(MdpKernel, SharedPrefixValues) {
    for (double g : {0.3, 0.7, 0.95}) {
        for (int D = 1; D <= 3; ++D) {
            const auto chi = chi_mdp(2, D, g);
            const auto paths = enumerate_paths(2, D);
            for (const auto& x : paths) {
                for (const auto& y : paths) {
                    const int h = common_actions(x, y);
                    EXPECT_NEAR(kernel_eval(chi, x, y), (1.0 - std::pow(g, 2 * h)) / (1.0 - g * g), 1e-12);
                }
            }
        }
    }
}

TEST(MdpKernel, SelfKernelGrowsWithDepth) {
    for (double g : {0.3, 0.7}) {
        double prev = 0.0;
        for (int D = 1; D <= 12; ++D) {
            const double v = chi_mdp(2, D, g)[0];
            EXPECT_NEAR(v, (1.0 - std::pow(g, 2 * D)) / (1.0 - g * g), 1e-12);
            EXPECT_GT(v, prev);
            prev = v;
        }
    }
}

TEST(TabularMdp, LipschitzInSharedPrefix) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const double g = 0.6;
        const auto mdp = random_mdp(6, 2, g, seed);
        const auto paths = enumerate_paths(2, 5);
        for (const auto& x : paths) {
            for (const auto& y : paths) {
                const int h = common_actions(x, y);
                EXPECT_LE(std::abs(discounted_reward(mdp, x.actions) - discounted_reward(mdp, y.actions)),
                          2.0 * std::pow(g, h) / (1.0 - g) + 1e-12);
            }
        }
    }
}

TEST(TabularMdp, Validation) {
    EXPECT_THROW(TabularMDP({{{0, 2.0}}}, 0.5), InputError);
    EXPECT_THROW(TabularMDP({{{3, 0.0}}}, 0.5), InputError);
    EXPECT_THROW(TabularMDP({{}}, 0.5), InputError);
    EXPECT_THROW(TabularMDP({}, 0.5), InputError);
    EXPECT_THROW(TabularMDP({{{0, 0.0}}}, 1.0), ParameterError);
    EXPECT_THROW(TabularMDP({{{0, 0.0}}}, 0.5, 2), InputError);
}

TEST(TabularMdp, JsonLoading) {
    const auto mdp = TabularMDP::load(std::string(GPTS_DATA_DIR) + "/chain_mdp.json");
    EXPECT_EQ(mdp.num_actions(mdp.initial_state()), 2);
    EXPECT_DOUBLE_EQ(mdp.gamma(), 0.7);
    EXPECT_THROW(TabularMDP::load("/nonexistent/mdp.json"), InputError);
    EXPECT_THROW(TabularMDP::from_json(nlohmann::json{{"gamma", 0.5}}), InputError);
    EXPECT_THROW(TabularMDP::from_json(nlohmann::json::parse(R"({"gamma":0.5,"states":[{"actions":[{"next":0}]}]})")),
                 InputError);
    const auto ok = TabularMDP::from_json(
        nlohmann::json::parse(R"({"gamma":0.5,"states":[{"actions":[{"next":0,"reward":1},{"next":0,"reward":0}]}]})"));
    EXPECT_DOUBLE_EQ(discounted_reward(ok, {0, 0}), 1.5);
}

TEST(EmpiricalRegret, Examples) {
    SearchTrace trace;
    TraceRow r;
    r.path = Path{{0}};
    r.reward = 0.0;
    trace.record(r);
    r.reward = 1.0;
    trace.record(r);
    const auto e = empirical_simple_regret(trace, 1.0);
    EXPECT_EQ(e.simple, 0.0);
    EXPECT_EQ(e.cumulative, 1.0);
    EXPECT_TRUE(e.inequality_holds);

    SearchTrace flat;
    for (int i = 0; i < 3; ++i) {
        r.reward = 0.5;
        flat.record(r);
    }
    const auto f = empirical_simple_regret(flat, 0.5);
    EXPECT_EQ(f.simple, 0.0);
    EXPECT_EQ(f.cumulative, 0.0);
    EXPECT_TRUE(f.inequality_holds);

    // Noisy observations above f* clip the simple regret at zero.
    SearchTrace lucky;
    r.reward = 1.2;
    lucky.record(r);
    EXPECT_EQ(empirical_simple_regret(lucky, 1.0).simple, 0.0);
    EXPECT_LT(empirical_simple_regret(lucky, 1.0).simple_raw, 0.0);
}

TEST(EnumerateOptimum, ChainFixture) {
    const auto mdp = TabularMDP::load(std::string(GPTS_DATA_DIR) + "/chain_mdp.json");
    const auto opt = enumerate_optimum(mdp, 8);
    EXPECT_EQ(opt.sequences, 256u);
    ASSERT_EQ(opt.actions.size(), 8u);
    EXPECT_EQ(opt.actions[0], 0);
    for (const auto& p : enumerate_paths(2, 8)) EXPECT_LE(discounted_reward(mdp, p.actions), opt.value);
    EXPECT_EQ(discounted_reward(mdp, opt.actions), opt.value);
    EXPECT_THROW(enumerate_optimum(mdp, 8, 100), SizeError);
}

TEST(Plan, SingleIteration) {
    const auto mdp = first_step_mdp(0.5);
    PlanConfig cfg;
    cfg.T = 1;
    const auto res = plan(mdp, cfg);
    EXPECT_EQ(res.horizon, 1);
    EXPECT_EQ(res.trace.rows.size(), 1u);
    EXPECT_EQ(res.best_actions.size(), 1u);
    EXPECT_EQ(res.generative_calls, 1);
    EXPECT_TRUE(res.empirical->inequality_holds);
}

TEST(Plan, ConcentratesOnFirstActionWhenGammaSmall) {
    const auto mdp = first_step_mdp(0.05);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        PlanConfig cfg;
        cfg.T = 100;
        cfg.seed = seed;
        const auto res = plan(mdp, cfg);
        int good = 0;
        for (const auto& r : res.trace.rows) good += r.path.actions[0] == 0;
        EXPECT_GT(good, 50);
        EXPECT_EQ(res.best_actions[0], 0);
        EXPECT_NEAR(*res.simple_regret, 0.0, 1e-12);
    }
}

TEST(Plan, ChainFixtureResultShape) {
    const auto mdp = TabularMDP::load(std::string(GPTS_DATA_DIR) + "/chain_mdp.json");
    PlanConfig cfg;
    cfg.T = 64;
    cfg.seed = 3;
    const auto res = plan(mdp, cfg);
    EXPECT_EQ(res.horizon, 6);
    EXPECT_EQ(res.generative_calls, 6 * 64);
    EXPECT_EQ(static_cast<int>(res.best_actions.size()), res.horizon);
    EXPECT_NEAR(res.truncation_cost, 2.0 * std::pow(0.7, 6) / 0.3, 1e-12);
    ASSERT_TRUE(res.f_star.has_value());
    EXPECT_GE(*res.simple_regret, -1e-12);
    EXPECT_TRUE(res.empirical->inequality_holds);
    const auto j = to_json(res);
    EXPECT_TRUE(j.contains("simple_regret"));
    EXPECT_EQ(j["horizon"], 6);

    // Observation noise keeps the trace deterministic for a fixed seed.
    cfg.observation_noise = 0.05;
    const auto a = plan(mdp, cfg);
    const auto b = plan(mdp, cfg);
    ASSERT_EQ(a.trace.rows.size(), b.trace.rows.size());
    for (std::size_t i = 0; i < a.trace.rows.size(); ++i) EXPECT_EQ(a.trace.rows[i].reward, b.trace.rows[i].reward);
}

TEST(Plan, RejectsBadInput) {
    PlanConfig cfg;
    cfg.T = 0;
    EXPECT_THROW(plan(first_step_mdp(0.5), cfg), ParameterError);
    cfg.T = 10;
    EXPECT_THROW(plan(TabularMDP({{{0, 0.0}}}, 0.5), cfg), ParameterError);
}
