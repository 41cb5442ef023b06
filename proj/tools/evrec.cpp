// Command-line front end: train / evaluate / simulate / gradcheck.
//
// Exit codes: 0 success, 1 verification failure or unexpected error,
// 2 configuration error, 3 numeric abort (diagnostic dump written).

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "evrec/gradcheck.hpp"
#include "evrec/training.hpp"

namespace {

using namespace evrec;

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << text;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    write_text(path, j.dump(2) + "\n");
}

int cmd_train(const RunConfig& cfg) {
    cfg.validate();
    const Scenario sc = cfg.load_scenario();
    std::filesystem::create_directories(cfg.out_dir);
    write_json(std::filesystem::path(cfg.out_dir) / "config.json", cfg.to_json());

    TrainResult result = run_training(sc, cfg, &std::cout);
    std::cout << "final checkpoint: " << result.checkpoint_path << "\n"
              << "metrics: " << result.metrics_path << "\n"
              << "held-out mean inconvenience: "
              << fmt_double(result.final_eval.mean_inconvenience_min) << " min ("
              << result.final_eval.n_episodes << " episodes)\n";
    return 0;
}

int cmd_evaluate(const RunConfig& cfg, const std::vector<std::string>& kind_args) {
    cfg.validate();
    const Scenario sc = cfg.load_scenario();

    std::vector<PolicyKind> kinds;
    for (const auto& s : kind_args) kinds.push_back(policy_kind_from_string(s));
    if (kinds.empty())
        kinds = {PolicyKind::Nearest, PolicyKind::Open, PolicyKind::NearestOpen};

    int learned = 0;
    for (PolicyKind k : kinds) learned += is_learned(k) ? 1 : 0;
    if (learned > 1)
        throw ConfigError("evaluate: one checkpoint serves one learned policy per run");

    std::unique_ptr<QPolicy> loaded;
    if (!cfg.checkpoint_path.empty()) {
        std::optional<PolicyKind> expect;
        for (PolicyKind k : kinds)
            if (is_learned(k)) expect = k;
        loaded = load_policy(cfg.checkpoint_path, sc, expect);
        if (learned == 0) kinds.push_back(loaded->kind());
    } else if (learned > 0) {
        throw ConfigError("evaluate: learned policy requested without a checkpoint");
    }

    std::filesystem::create_directories(cfg.out_dir);
    write_json(std::filesystem::path(cfg.out_dir) / "report_config.json", cfg.to_json());

    std::vector<CompareRow> rows;
    std::string per_seed = "policy,seed,reward,inconvenience_min,wait_min,drive_min\n";
    nlohmann::json jpolicies = nlohmann::json::object();
    for (PolicyKind k : kinds) {
        RngStream scratch(0);  // baselines are parameterless; learned come loaded
        const Policy* policy = is_learned(k)
                                   ? static_cast<const Policy*>(loaded.get())
                                   : nullptr;
        std::unique_ptr<Policy> owned;
        if (!policy) {
            owned = make_policy(k, sc, cfg.agent, scratch);
            policy = owned.get();
        }
        const auto episodes = evaluate_policy(sc, *policy, cfg);
        const auto pooled = aggregate(episodes, cfg.lambda);
        rows.push_back(compare_row(to_string(k), pooled));

        nlohmann::json jseeds = nlohmann::json::array();
        for (std::size_t i = 0; i < episodes.size(); ++i) {
            const auto m = aggregate({&episodes[i], 1}, cfg.lambda);
            const auto r = compare_row(to_string(k), m);
            per_seed += r.policy + "," + std::to_string(cfg.test_seeds[i]) + "," +
                        fmt_double(r.reward) + "," + fmt_double(r.inconvenience_min) + "," +
                        fmt_double(r.wait_min) + "," + fmt_double(r.drive_min) + "\n";
            jseeds.push_back(metrics_to_json(m));
        }
        jpolicies[to_string(k)] = {{"pooled", metrics_to_json(pooled)},
                                   {"per_seed", std::move(jseeds)}};
    }

    const std::string table = compare_table_csv(rows);
    write_text(std::filesystem::path(cfg.out_dir) / "report.csv", table);
    write_text(std::filesystem::path(cfg.out_dir) / "report_per_seed.csv", per_seed);
    write_json(std::filesystem::path(cfg.out_dir) / "report.json",
               {{"scenario", cfg.scenario_path},
                {"test_seeds", cfg.test_seeds},
                {"lambda", cfg.lambda},
                {"policies", std::move(jpolicies)}});
    std::cout << table;
    return 0;
}

int cmd_simulate(const RunConfig& cfg, PolicyKind kind, std::uint64_t world_seed) {
    cfg.validate();
    const Scenario sc = cfg.load_scenario();

    std::unique_ptr<Policy> policy;
    if (is_learned(kind)) {
        if (cfg.checkpoint_path.empty())
            throw ConfigError("simulate: learned policy requires a checkpoint");
        policy = load_policy(cfg.checkpoint_path, sc, kind);
    } else {
        RngStream scratch(0);
        policy = make_policy(kind, sc, cfg.agent, scratch);
    }

    const auto res = run_episode(sc, world_seed, *policy, episode_params(cfg, 0.0), cfg.agent);
    std::filesystem::create_directories(cfg.out_dir);
    const auto path = std::filesystem::path(cfg.out_dir) / "trace.json";
    write_json(path, episode_trace_json(res, cfg.K, cfg.lambda));

    const auto m = aggregate({&res, 1}, cfg.lambda);
    std::cout << "policy " << to_string(kind) << ", seed " << world_seed << ": reward "
              << fmt_double(res.total_reward) << ", " << res.n_queries() << " users, mean "
              << fmt_double(m.mean_inconvenience_min) << " min inconvenience\n"
              << "trace: " << path.string() << "\n";
    return 0;
}

int cmd_gradcheck(int configs, std::uint64_t seed, double step) {
    if (configs < 1) throw ConfigError("gradcheck: need at least one configuration");
    const auto rep = run_gradcheck(configs, seed, step);
    std::cout << "gradcheck: " << rep.configs << " networks, " << rep.checks
              << " derivatives, max relative error " << fmt_double(rep.max_rel_err) << "\n";
    if (!rep.pass()) {
        std::cout << "FAIL at config " << rep.worst_config << " " << rep.worst_site
                  << ": analytic " << fmt_double(rep.worst_analytic) << " vs finite difference "
                  << fmt_double(rep.worst_fd) << "\n";
        return 1;
    }
    std::cout << "PASS (tolerance 1e-4)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"EV charging-station recommendation laboratory"};
    app.require_subcommand(1);

    std::string config_path, policy_arg, out_dir, checkpoint;
    std::vector<std::string> eval_policies;
    std::uint64_t seed = 0;
    int epochs = 0;
    int gc_configs = 100;
    std::uint64_t gc_seed = 20240817;
    double gc_step = 1e-5;

    auto* train = app.add_subcommand("train", "Train a neural policy");
    train->add_option("--config", config_path, "Run configuration (json)")->required();
    train->add_option("--policy", policy_arg, "Policy kind override");
    train->add_option("--seed", seed, "Master seed override");
    train->add_option("--out", out_dir, "Output directory override");
    train->add_option("--epochs", epochs, "Epoch count override");
    train->add_option("--checkpoint", checkpoint, "Resume from checkpoint");

    auto* eval = app.add_subcommand("evaluate", "Evaluate policies on the held-out seeds");
    eval->add_option("--config", config_path, "Run configuration (json)")->required();
    eval->add_option("--policy", eval_policies, "Policy kinds (default: the rule-based ones)");
    eval->add_option("--checkpoint", checkpoint, "Checkpoint for a learned policy");
    eval->add_option("--out", out_dir, "Output directory override");

    auto* sim = app.add_subcommand("simulate", "Run one episode and dump its trace");
    sim->add_option("--config", config_path, "Run configuration (json)")->required();
    sim->add_option("--policy", policy_arg, "Policy kind override");
    sim->add_option("--seed", seed, "World seed (default 0)");
    sim->add_option("--out", out_dir, "Output directory override");
    sim->add_option("--checkpoint", checkpoint, "Checkpoint for a learned policy");

    auto* gc = app.add_subcommand("gradcheck", "Finite-difference check of the backward pass");
    gc->add_option("--configs", gc_configs, "Number of random networks");
    gc->add_option("--seed", gc_seed, "Sampling seed");
    gc->add_option("--step", gc_step, "Finite-difference step");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (gc->parsed()) return cmd_gradcheck(gc_configs, gc_seed, gc_step);

        evrec::RunConfig cfg = evrec::RunConfig::load(config_path);
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (!checkpoint.empty()) cfg.checkpoint_path = checkpoint;
        if (!policy_arg.empty()) cfg.policy = evrec::policy_kind_from_string(policy_arg);

        if (train->parsed()) {
            if (train->count("--seed")) cfg.seed = seed;
            if (train->count("--epochs")) cfg.epochs = epochs;
            return cmd_train(cfg);
        }
        if (eval->parsed()) return cmd_evaluate(cfg, eval_policies);
        return cmd_simulate(cfg, cfg.policy, sim->count("--seed") ? seed : 0);
    } catch (const evrec::NumericError& e) {
        std::cerr << "numeric abort: " << e.what() << " (dump: " << e.dump_path << ")\n";
        return 3;
    } catch (const evrec::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const evrec::ShapeError& e) {
        std::cerr << "shape error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
