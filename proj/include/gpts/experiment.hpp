#ifndef GPTS_EXPERIMENT_HPP
#define GPTS_EXPERIMENT_HPP

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "gpts/bounds.hpp"
#include "gpts/errors.hpp"
#include "gpts/gp.hpp"
#include "gpts/kernels.hpp"
#include "gpts/planning.hpp"
#include "gpts/search.hpp"
#include "gpts/spectrum.hpp"

namespace gpts {

struct KernelSpec {
    KernelKind kind = KernelKind::linear;
    int B = 2;
    int D = 3;
    double s = 1.5;
    double gamma = 0.7;

    [[nodiscard]] ChiSequence build() const {
        switch (kind) {
            case KernelKind::linear: return chi_linear(B, D);
            case KernelKind::gaussian: return chi_gaussian(B, D, s);
            case KernelKind::mdp: return chi_mdp(B, D, gamma);
            case KernelKind::custom: break;
        }
        throw ParameterError("experiments need a linear, gaussian or mdp kernel");
    }
};

/// Everything a run needs; loaded from one JSON file plus flag overrides.
struct ExperimentConfig {
    KernelSpec kernel;
    double noise_std = 0.1;
    double delta = 0.05;
    double beta_scale = 1.0;
    int T = 100;
    int replications = 1;
    std::uint64_t seed = 0;
    StoppingRule::Kind stop_kind = StoppingRule::Kind::fixed_iterations;
    double stop_width = 0.0;
    double stop_seconds = 0.0;
    bool incremental = true;
    SelectionMode mode = SelectionMode::flat_scan;
    std::vector<int> checkpoints;
    std::optional<double> infogain;  // I_u override for the bounds report
    bool dense_gram = false;
    std::string mdp_path;
    double observation_noise = 0.0;
    std::string out = "out";

    [[nodiscard]] double noise_var() const { return noise_std * noise_std; }

    void validate() const {
        if (replications < 1) throw ParameterError("replications must be >= 1");
        if (T < 0) throw ParameterError("T must be >= 0");
        if (!(noise_std >= 0.0)) throw ParameterError("noise_std must be >= 0");
        if (!(delta > 0.0 && delta < 1.0)) throw ParameterError("delta must lie in (0, 1)");
        if (!(beta_scale >= 0.0)) throw ParameterError("beta_scale must be >= 0");
        (void)kernel.build();
    }
};

inline StoppingRule::Kind stop_kind_from_string(const std::string& s) {
    if (s == "fixed") return StoppingRule::Kind::fixed_iterations;
    if (s == "confidence_width") return StoppingRule::Kind::confidence_width;
    if (s == "wall_clock") return StoppingRule::Kind::wall_clock;
    throw ParameterError("unknown stopping rule '" + s + "'");
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    try {
        if (j.contains("kernel")) {
            const auto& k = j.at("kernel");
            c.kernel.kind = kernel_kind_from_string(k.value("kind", std::string("linear")));
            c.kernel.B = k.value("B", c.kernel.B);
            c.kernel.D = k.value("D", c.kernel.D);
            c.kernel.s = k.value("s", c.kernel.s);
            c.kernel.gamma = k.value("gamma", c.kernel.gamma);
        }
        c.noise_std = j.value("noise_std", c.noise_std);
        c.delta = j.value("delta", c.delta);
        c.beta_scale = j.value("beta_scale", c.beta_scale);
        c.T = j.value("T", c.T);
        c.replications = j.value("replications", c.replications);
        c.seed = j.value("seed", c.seed);
        if (j.contains("stopping")) {
            const auto& s = j.at("stopping");
            c.stop_kind = stop_kind_from_string(s.value("kind", std::string("fixed")));
            c.stop_width = s.value("width", 0.0);
            c.stop_seconds = s.value("seconds", 0.0);
        }
        c.incremental = j.value("incremental", c.incremental);
        if (j.value("selection", std::string("flat")) == "descent") c.mode = SelectionMode::tree_descent;
        c.checkpoints = j.value("checkpoints", c.checkpoints);
        if (j.contains("infogain") && !j.at("infogain").is_null()) c.infogain = j.at("infogain").get<double>();
        c.dense_gram = j.value("dense_gram", c.dense_gram);
        c.mdp_path = j.value("mdp", c.mdp_path);
        c.observation_noise = j.value("observation_noise", c.observation_noise);
        c.out = j.value("out", c.out);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed config: ") + e.what());
    }
    return c;
}

inline nlohmann::json to_json(const ExperimentConfig& c) {
    return nlohmann::json{{"kernel", c.kernel.build()},
                          {"noise_std", c.noise_std},
                          {"delta", c.delta},
                          {"beta_scale", c.beta_scale},
                          {"T", c.T},
                          {"replications", c.replications},
                          {"seed", c.seed}};
}

namespace detail {

inline std::filesystem::path prepare_out(const std::string& dir) {
    std::filesystem::path p(dir);
    std::filesystem::create_directories(p);
    return p;
}

inline void write_json(const std::filesystem::path& file, const nlohmann::json& j) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw EnvironmentError("cannot write " + file.string());
    out << j.dump(2) << '\n';
}

inline std::ofstream open_csv(const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw EnvironmentError("cannot write " + file.string());
    return out;
}

inline double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / double(v.size());
}

inline double stddev(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / double(v.size() - 1));
}

}  // namespace detail

inline Eigen::MatrixXd played_gram(const ChiSequence& chi, const SearchTrace& trace) {
    const auto t = static_cast<Eigen::Index>(trace.rows.size());
    Eigen::MatrixXd K(t, t);
    for (Eigen::Index i = 0; i < t; ++i)
        for (Eigen::Index j = 0; j <= i; ++j) K(i, j) = K(j, i) = kernel_eval(chi, trace.rows[i].path, trace.rows[j].path);
    return K;
}

struct ReplicationResult {
    SearchTrace trace;
    double f_star = 0.0;
    double cumulative_regret = 0.0;
    double empirical_cumulative_regret = 0.0;
    double infogain = 0.0;
    KernelIndependentBounds kernel_independent;
    double greedy_infogain = 0.0;
    double regret_bound = 0.0;
    bool within_kernel_independent = true;
    bool within_greedy_chain = true;
    bool within_regret_bound = true;
};

/// One synthetic replication: draw f from the prior, search it with noisy
/// observations, then evaluate the information-gain and regret bounds.
inline ReplicationResult simulate_replication(const ExperimentConfig& cfg, int replication) {
    const ChiSequence chi = cfg.kernel.build();
    const int B = chi.branching();
    Rng rng(cfg.seed + static_cast<std::uint64_t>(replication));
    const PriorSample f = sample_gp_prior(chi, rng);

    SearchConfig sc;
    sc.chi = chi;
    sc.noise_var = cfg.noise_var();
    sc.schedule = BetaSchedule{cfg.delta, double(chi.num_paths()), cfg.beta_scale};
    sc.stop = StoppingRule{cfg.stop_kind, cfg.T, cfg.stop_width, cfg.stop_seconds};
    sc.seed = rng();
    sc.options = SearchOptions{cfg.mode, cfg.incremental};
    sc.mean_reward = [&](const Path& x) { return f.values[path_index(x, B)]; };
    sc.f_star = f.f_star;

    std::normal_distribution<double> noise(0.0, 1.0);
    const double noise_std = cfg.noise_std;
    const RewardSource reward = [&](const Path& x) { return f.values[path_index(x, B)] + noise_std * noise(rng); };

    ReplicationResult r;
    r.trace = run(sc, reward);
    r.f_star = f.f_star;
    const double T = double(r.trace.rows.size());
    if (!r.trace.rows.empty()) r.cumulative_regret = *r.trace.rows.back().cum_regret;
    double sum_y = 0.0;
    for (const auto& row : r.trace.rows) sum_y += row.reward;
    r.empirical_cumulative_regret = T * f.f_star - sum_y;

    if (cfg.noise_var() > 0.0) {
        r.infogain = infogain_actual(played_gram(chi, r.trace), cfg.noise_var());
        r.kernel_independent = infogain_bound_kernel_independent(T, double(chi.num_nodes()), cfg.noise_var());
        const auto eigs = reorder(closed_form_spectrum(chi));
        r.greedy_infogain = infogain_greedy(eigs, r.trace.rows.size(), cfg.noise_var()).value;
        r.regret_bound = regret_bound(T, double(chi.num_paths()), cfg.delta, cfg.noise_var(), r.infogain);
        const double tol = 1e-9;
        r.within_kernel_independent = r.infogain <= r.kernel_independent.bound_T + tol &&
                                      r.infogain <= r.kernel_independent.bound_Nn + tol;
        r.within_greedy_chain = submodularity_chain(r.infogain, r.greedy_infogain).holds;
        r.within_regret_bound = r.cumulative_regret <= r.regret_bound;
    }
    return r;
}

inline std::string replication_file(int rep) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "trace_%03d.csv", rep);
    return buf;
}

/// Writes trace_NNN.csv per replication, regret_mean.csv and summary.json.
inline nlohmann::json cmd_simulate(const ExperimentConfig& cfg) {
    cfg.validate();
    const ChiSequence chi = cfg.kernel.build();
    check_dense_size(chi, kDenseCap);
    const auto out = detail::prepare_out(cfg.out);

    std::vector<ReplicationResult> results;
    results.reserve(static_cast<std::size_t>(cfg.replications));
    for (int rep = 0; rep < cfg.replications; ++rep) results.push_back(simulate_replication(cfg, rep));

    nlohmann::json reps = nlohmann::json::array();
    std::vector<double> regrets;
    int violations = 0;
    int regret_bound_hits = 0;
    std::size_t longest = 0;
    for (int rep = 0; rep < cfg.replications; ++rep) {
        const auto& r = results[static_cast<std::size_t>(rep)];
        auto csv = detail::open_csv(out / replication_file(rep));
        write_trace_csv(csv, r.trace);
        regrets.push_back(r.cumulative_regret);
        longest = std::max(longest, r.trace.rows.size());
        violations += !r.within_kernel_independent + !r.within_greedy_chain;
        regret_bound_hits += r.within_regret_bound;
        reps.push_back({{"replication", rep},
                        {"iterations", r.trace.rows.size()},
                        {"stop_reason", r.trace.stop_reason},
                        {"f_star", r.f_star},
                        {"best_observed", r.trace.best_reward},
                        {"cumulative_regret", r.cumulative_regret},
                        {"empirical_cumulative_regret", r.empirical_cumulative_regret},
                        {"infogain_actual", r.infogain},
                        {"bound_T", r.kernel_independent.bound_T},
                        {"bound_Nn", r.kernel_independent.bound_Nn},
                        {"greedy_infogain", r.greedy_infogain},
                        {"regret_bound", r.regret_bound},
                        {"within_kernel_independent", r.within_kernel_independent},
                        {"within_greedy_chain", r.within_greedy_chain},
                        {"within_regret_bound", r.within_regret_bound}});
    }

    // Mean and spread of R_t over replications, per iteration.
    std::vector<double> mean_curve(longest, 0.0);
    {
        auto csv = detail::open_csv(out / "regret_mean.csv");
        csv << "# gpts-regret v1\n" << "t,mean_cum_regret,std_cum_regret,mean_regret_per_t\n";
        for (std::size_t t = 0; t < longest; ++t) {
            std::vector<double> at;
            for (const auto& r : results)
                if (t < r.trace.rows.size()) at.push_back(*r.trace.rows[t].cum_regret);
            mean_curve[t] = detail::mean(at);
            csv << t + 1 << ',' << format_number(mean_curve[t]) << ',' << format_number(detail::stddev(at)) << ','
                << format_number(mean_curve[t] / double(t + 1)) << '\n';
        }
    }

    nlohmann::json checkpoints = nlohmann::json::array();
    std::vector<int> cps = cfg.checkpoints;
    if (cps.empty() && longest > 0) cps.push_back(static_cast<int>(longest));
    for (int t : cps) {
        if (t < 1 || static_cast<std::size_t>(t) > longest) continue;
        checkpoints.push_back({{"t", t}, {"mean_regret_per_t", mean_curve[static_cast<std::size_t>(t - 1)] / double(t)}});
    }

    nlohmann::json summary{{"config", to_json(cfg)},
                           {"replications", reps},
                           {"mean_cumulative_regret", detail::mean(regrets)},
                           {"std_cumulative_regret", detail::stddev(regrets)},
                           {"checkpoints", checkpoints},
                           {"bound_violations", violations},
                           {"within_regret_bound", regret_bound_hits}};
    detail::write_json(out / "summary.json", summary);
    return summary;
}

/// spectrum.json (distinct eigenvalues, lambda_hat) and optionally gram.csv.
inline nlohmann::json cmd_spectrum(const ExperimentConfig& cfg) {
    const ChiSequence chi = cfg.kernel.build();
    const auto out = detail::prepare_out(cfg.out);
    const Spectrum spec = closed_form_spectrum(chi);
    nlohmann::json j{{"kernel", chi},
                     {"N", chi.num_paths()},
                     {"N_nodes", chi.num_nodes()},
                     {"spectrum", spec},
                     {"trace", spec.trace()},
                     {"expected_trace", double(chi.num_paths()) * chi.prior_variance()}};
    if (chi.num_paths() <= (std::uint64_t{1} << 16)) j["lambda_hat"] = reorder(spec).lambda_hat;
    if (chi.kind() == KernelKind::gaussian) j["gaussian_bound_regime"] = chi.in_gaussian_bound_regime();
    if (cfg.dense_gram) {
        const Eigen::MatrixXd K = build_gram(chi);
        auto csv = detail::open_csv(out / "gram.csv");
        for (Eigen::Index i = 0; i < K.rows(); ++i) {
            for (Eigen::Index c = 0; c < K.cols(); ++c) csv << (c ? "," : "") << format_number(K(i, c));
            csv << '\n';
        }
    }
    detail::write_json(out / "spectrum.json", j);
    return j;
}

/// bounds.json: every information-gain bound, T', T_* and the regret bound.
inline nlohmann::json cmd_bounds(const ExperimentConfig& cfg) {
    cfg.validate();
    const ChiSequence chi = cfg.kernel.build();
    const auto out = detail::prepare_out(cfg.out);
    const double nv = cfg.noise_var();
    const auto T = static_cast<std::uint64_t>(std::max(cfg.T, 1));
    const double N = double(chi.num_paths());

    const auto ki = infogain_bound_kernel_independent(double(T), double(chi.num_nodes()), nv);
    nlohmann::json j{{"kernel", chi},
                     {"T", T},
                     {"delta", cfg.delta},
                     {"noise_var", nv},
                     {"N", chi.num_paths()},
                     {"N_nodes", chi.num_nodes()},
                     {"kernel_independent", {{"bound_T", ki.bound_T}, {"bound_Nn", ki.bound_Nn}}}};
    double best_bound = std::min(ki.bound_T, ki.bound_Nn);

    if (chi.num_paths() <= (std::uint64_t{1} << 22)) {
        const auto eigs = reorder(closed_form_spectrum(chi));
        const auto g = infogain_greedy(eigs, T, nv);
        j["greedy_infogain"] = g.value;
        j["max_infogain_bound_greedy"] = kGreedyFactor * g.value;
        best_bound = std::min(best_bound, kGreedyFactor * g.value);
    }

    const bool spectral = chi.kind() == KernelKind::linear || chi.in_gaussian_bound_regime();
    if (spectral && chi.num_paths() <= (std::uint64_t{1} << 22)) {
        const auto k = spectral_constants(chi);
        const auto ts = t_star(k, nv);
        nlohmann::json s{{"cq", k.cq},
                         {"scale", k.scale},
                         {"sumlog", infogain_bound_sumlog(T, k, nv)},
                         {"t_star", ts.value},
                         {"t_star_found", ts.found},
                         {"tailsum", infogain_bound_tailsum(double(T), double(ts.value), k.num_paths, k.cq)},
                         {"combined", infogain_bound_combined(T, ts.value, k, nv)},
                         {"sumlog_additive_term_assumed", chi.kind() == KernelKind::linear}};
        best_bound = std::min(best_bound, infogain_bound_combined(T, ts.value, k, nv));
        if (chi.kind() == KernelKind::gaussian) {
            const auto w = width_constants(chi.branching(), chi.param());
            const double as = a_s(chi.branching(), chi.depth(), chi.param());
            const auto tp = t_prime(double(T), as, nv);
            s["q_s"] = w.q;
            s["C_s"] = w.c;
            s["A_s"] = as;
            s["t_prime"] = tp.value;
            s["t_prime_below_T"] = tp.below_T;
        }
        j["spectral"] = s;
    } else if (chi.kind() == KernelKind::gaussian) {
        j["spectral"] = {{"regime_error", "s must exceed 1/sqrt(log B)"}};
    }

    const double iu = cfg.infogain.value_or(best_bound);
    j["infogain_used"] = iu;
    j["infogain_source"] = cfg.infogain ? "given" : "tightest_bound";
    j["regret_bound"] = regret_bound(double(T), N, cfg.delta, nv, iu);
    detail::write_json(out / "bounds.json", j);
    return j;
}

/// plan.json (PlanResult) and plan_trace.csv.
inline nlohmann::json cmd_plan(const ExperimentConfig& cfg) {
    if (cfg.mdp_path.empty()) throw ParameterError("plan needs an MDP file (--mdp)");
    if (cfg.T < 1) throw ParameterError("T must be >= 1");
    const auto mdp = TabularMDP::load(cfg.mdp_path);
    const auto out = detail::prepare_out(cfg.out);
    PlanConfig pc;
    pc.T = cfg.T;
    pc.noise_var = cfg.noise_var();
    pc.delta = cfg.delta;
    pc.beta_scale = cfg.beta_scale;
    pc.seed = cfg.seed;
    pc.observation_noise = cfg.observation_noise;
    const PlanResult r = plan(mdp, pc);
    auto csv = detail::open_csv(out / "plan_trace.csv");
    write_trace_csv(csv, r.trace);
    nlohmann::json j = to_json(r);
    j["gamma"] = mdp.gamma();
    j["seed"] = cfg.seed;
    detail::write_json(out / "plan.json", j);
    return j;
}

}  // namespace gpts

#endif  // GPTS_EXPERIMENT_HPP
