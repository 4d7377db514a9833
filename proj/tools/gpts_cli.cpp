// Command-line harness: simulate | spectrum | bounds | plan.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "gpts/gpts.hpp"

namespace {

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> T;
    std::optional<std::string> out;
    std::optional<std::string> kind;
    std::optional<int> B;
    std::optional<int> D;
    std::optional<double> s;
    std::optional<double> gamma;
    std::optional<double> noise;
    std::optional<double> delta;
    std::optional<double> beta_scale;
    std::optional<int> replications;
    std::optional<std::string> mdp;
    std::optional<double> infogain;
    std::optional<double> observation_noise;
    bool dense = false;
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("-c,--config", o.config, "JSON config file")->check(CLI::ExistingFile);
    cmd->add_option("--seed", o.seed, "base random seed");
    cmd->add_option("--T", o.T, "horizon (iterations)");
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--noise", o.noise, "observation noise standard deviation sigma_noise");
    cmd->add_option("--delta", o.delta, "confidence parameter delta");
    cmd->add_option("--beta-scale", o.beta_scale, "multiplier on beta_t (0 = greedy)");
}

void add_kernel(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--kernel", o.kind, "linear | gaussian | mdp");
    cmd->add_option("--B", o.B, "branching factor");
    cmd->add_option("--D", o.D, "depth");
    cmd->add_option("--s", o.s, "Gaussian kernel width");
    cmd->add_option("--gamma", o.gamma, "MDP kernel discount");
}

gpts::ExperimentConfig resolve(const Overrides& o) {
    nlohmann::json j = nlohmann::json::object();
    if (!o.config.empty()) {
        std::ifstream in(o.config);
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw gpts::InputError("cannot parse config " + o.config + ": " + e.what());
        }
    }
    auto c = gpts::config_from_json(j);
    if (o.seed) c.seed = *o.seed;
    if (o.T) c.T = *o.T;
    if (o.out) c.out = *o.out;
    if (o.kind) c.kernel.kind = gpts::kernel_kind_from_string(*o.kind);
    if (o.B) c.kernel.B = *o.B;
    if (o.D) c.kernel.D = *o.D;
    if (o.s) c.kernel.s = *o.s;
    if (o.gamma) c.kernel.gamma = *o.gamma;
    if (o.noise) c.noise_std = *o.noise;
    if (o.delta) c.delta = *o.delta;
    if (o.beta_scale) c.beta_scale = *o.beta_scale;
    if (o.replications) c.replications = *o.replications;
    if (o.mdp) c.mdp_path = *o.mdp;
    if (o.infogain) c.infogain = *o.infogain;
    if (o.observation_noise) c.observation_noise = *o.observation_noise;
    if (o.dense) c.dense_gram = true;
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gaussian-process bandits for tree search"};
    app.require_subcommand(1);
    Overrides o;

    auto* simulate = app.add_subcommand("simulate", "regret experiments on functions drawn from the GP prior");
    add_common(simulate, o);
    add_kernel(simulate, o);
    simulate->add_option("--replications", o.replications, "number of independent replications");

    auto* spectrum = app.add_subcommand("spectrum", "closed-form kernel matrix spectrum");
    add_common(spectrum, o);
    add_kernel(spectrum, o);
    spectrum->add_flag("--dense", o.dense, "also write the dense Gram matrix as gram.csv");

    auto* bounds = app.add_subcommand("bounds", "information-gain and regret bound report");
    add_common(bounds, o);
    add_kernel(bounds, o);
    bounds->add_option("--infogain", o.infogain, "information gain I_u to plug into the regret bound");

    auto* plan = app.add_subcommand("plan", "open-loop planning in a tabular MDP");
    add_common(plan, o);
    plan->add_option("--mdp", o.mdp, "MDP JSON description")->check(CLI::ExistingFile);
    plan->add_option("--obs-noise", o.observation_noise, "std of Gaussian noise added to returned rewards");

    CLI11_PARSE(app, argc, argv);

    try {
        const auto cfg = resolve(o);
        nlohmann::json report;
        if (*simulate) {
            report = gpts::cmd_simulate(cfg);
            std::cout << "mean cumulative regret " << report["mean_cumulative_regret"].get<double>() << " over "
                      << cfg.replications << " replications; outputs in " << cfg.out << '\n';
        } else if (*spectrum) {
            report = gpts::cmd_spectrum(cfg);
            std::cout << report.dump(2) << '\n';
        } else if (*bounds) {
            report = gpts::cmd_bounds(cfg);
            std::cout << report.dump(2) << '\n';
        } else if (*plan) {
            report = gpts::cmd_plan(cfg);
            std::cout << report.dump(2) << '\n';
        }
    } catch (const gpts::Error& e) {
        std::cerr << "error [" << gpts::category_name(e.category()) << "]: " << e.what() << '\n';
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
