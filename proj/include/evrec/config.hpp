#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "evrec/common.hpp"
#include "evrec/qnets.hpp"
#include "evrec/scenario.hpp"

namespace evrec {

// Everything a run needs, with the defaults made explicit so the resolved
// config written next to the results fully reproduces them.
struct RunConfig {
    std::string scenario_path;
    PolicyKind policy = PolicyKind::Conv;

    // training schedule
    int epochs = 300;
    double eps_start = 0.9;
    double eps_end = 0.1;
    double learning_rate = 1e-3;
    double gamma = 0.95;
    int target_sync = 500;  // train steps between hard target copies
    int batch_size = 64;
    std::size_t buffer_capacity = 50000;
    int eval_every = 25;        // epochs between held-out evaluations
    int checkpoint_every = 25;  // epochs between checkpoint files
    std::vector<int> test_seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10};

    // mdp
    double K = 10.0;
    double lambda = 1.0;
    AgentConfig agent;

    // optional scenario overrides
    std::optional<double> speed_km_per_step;
    std::optional<double> p_depart;

    std::string out_dir = "out";
    std::uint64_t seed = 1;       // master seed: init, exploration, batch sampling
    std::string checkpoint_path;  // input checkpoint (evaluate / resume)

    void validate() const {
        if (scenario_path.empty()) throw ConfigError("config: scenario path is required");
        if (epochs < 0) throw ConfigError("config: epochs must be >= 0");
        if (!(eps_start >= eps_end && eps_end > 0.0 && eps_start <= 1.0))
            throw ConfigError("config: need eps_start >= eps_end > 0");
        if (!(learning_rate > 0.0)) throw ConfigError("config: learning rate must be > 0");
        if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("config: gamma must be in [0, 1)");
        if (target_sync < 1) throw ConfigError("config: target_sync must be >= 1");
        if (batch_size < 1) throw ConfigError("config: batch_size must be >= 1");
        if (buffer_capacity < static_cast<std::size_t>(batch_size))
            throw ConfigError("config: buffer must hold at least one batch");
        if (eval_every < 1 || checkpoint_every < 1)
            throw ConfigError("config: eval/checkpoint cadence must be >= 1");
        if (test_seeds.empty()) throw ConfigError("config: need at least one test seed");
        if (!(K >= 0.0) || !(lambda >= 0.0)) throw ConfigError("config: K and lambda must be >= 0");
        if (speed_km_per_step && !(*speed_km_per_step > 0.0))
            throw ConfigError("config: speed override must be > 0");
        if (p_depart && !(*p_depart > 0.0 && *p_depart < 1.0))
            throw ConfigError("config: p_depart override must be in (0, 1)");
        if (out_dir.empty()) throw ConfigError("config: out_dir is required");
    }

    nlohmann::json to_json() const {
        nlohmann::json j = {{"scenario", scenario_path},
                            {"policy", to_string(policy)},
                            {"epochs", epochs},
                            {"eps_start", eps_start},
                            {"eps_end", eps_end},
                            {"learning_rate", learning_rate},
                            {"gamma", gamma},
                            {"target_sync", target_sync},
                            {"batch_size", batch_size},
                            {"buffer_capacity", buffer_capacity},
                            {"eval_every", eval_every},
                            {"checkpoint_every", checkpoint_every},
                            {"test_seeds", test_seeds},
                            {"K", K},
                            {"lambda", lambda},
                            {"agent", agent_config_to_json(agent)},
                            {"out_dir", out_dir},
                            {"seed", seed}};
        if (speed_km_per_step) j["speed_km_per_step"] = *speed_km_per_step;
        if (p_depart) j["p_depart"] = *p_depart;
        if (!checkpoint_path.empty()) j["checkpoint"] = checkpoint_path;
        return j;
    }

    static RunConfig from_json(const nlohmann::json& j) {
        RunConfig c;
        try {
            c.scenario_path = j.value("scenario", c.scenario_path);
            if (j.contains("policy")) c.policy = policy_kind_from_string(j.at("policy"));
            c.epochs = j.value("epochs", c.epochs);
            c.eps_start = j.value("eps_start", c.eps_start);
            c.eps_end = j.value("eps_end", c.eps_end);
            c.learning_rate = j.value("learning_rate", c.learning_rate);
            c.gamma = j.value("gamma", c.gamma);
            c.target_sync = j.value("target_sync", c.target_sync);
            c.batch_size = j.value("batch_size", c.batch_size);
            c.buffer_capacity = j.value("buffer_capacity", c.buffer_capacity);
            c.eval_every = j.value("eval_every", c.eval_every);
            c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
            c.test_seeds = j.value("test_seeds", c.test_seeds);
            c.K = j.value("K", c.K);
            c.lambda = j.value("lambda", c.lambda);
            if (j.contains("agent")) c.agent = agent_config_from_json(j.at("agent"));
            if (j.contains("speed_km_per_step"))
                c.speed_km_per_step = j.at("speed_km_per_step").get<double>();
            if (j.contains("p_depart")) c.p_depart = j.at("p_depart").get<double>();
            c.out_dir = j.value("out_dir", c.out_dir);
            c.seed = j.value("seed", c.seed);
            c.checkpoint_path = j.value("checkpoint", c.checkpoint_path);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("config: malformed json: ") + e.what());
        }
        return c;
    }

    static RunConfig load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("config: cannot open " + path);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("config: parse error in ") + path + ": " + e.what());
        }
        return from_json(j);
    }

    // The scenario with any overrides applied.
    Scenario load_scenario() const {
        Scenario sc = Scenario::load(scenario_path);
        if (speed_km_per_step) sc.speed_km_per_step = *speed_km_per_step;
        if (p_depart) sc.p_depart = *p_depart;
        sc.validate();
        return sc;
    }
};

}  // namespace evrec
