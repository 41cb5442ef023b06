#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "evrec/config.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using evrec::test::run_cli;

namespace {

// A self-contained working directory: tiny scenario plus a fast run config.
struct CliFixture {
    evrec::test::TempDir dir;
    std::string scenario_path;
    std::string config_path;
    std::string out_dir;

    CliFixture() {
        scenario_path = (dir.path() / "tiny.json").string();
        evrec::test::tiny_scenario().save(scenario_path);

        evrec::RunConfig cfg;
        cfg.scenario_path = scenario_path;
        cfg.policy = evrec::PolicyKind::Conv;
        cfg.epochs = 3;
        cfg.eval_every = 2;
        cfg.checkpoint_every = 2;
        cfg.batch_size = 8;
        cfg.buffer_capacity = 256;
        cfg.target_sync = 20;
        cfg.test_seeds = {0, 1};
        cfg.agent.queue_horizon = 4;
        cfg.agent.conv_hidden = 8;
        cfg.agent.ffdqn_hidden = 8;
        cfg.agent.graph_embed = 4;
        cfg.agent.graph_hidden = 8;
        cfg.agent.value_hidden = 8;
        out_dir = (dir.path() / "out").string();
        cfg.out_dir = out_dir;
        cfg.seed = 1;

        config_path = (dir.path() / "run.json").string();
        std::ofstream(config_path) << cfg.to_json().dump(2) << "\n";
    }
};

}  // namespace

TEST(Cli, HelpExitsZero) {
    const auto r = run_cli("--help");
    EXPECT_EQ(r.exit_code, 0);
    EXPECT_NE(r.output.find("train"), std::string::npos);
    EXPECT_NE(r.output.find("evaluate"), std::string::npos);
    EXPECT_NE(r.output.find("simulate"), std::string::npos);
    EXPECT_NE(r.output.find("gradcheck"), std::string::npos);
}

TEST(Cli, NoSubcommandIsAUsageError) {
    EXPECT_EQ(run_cli("").exit_code, 2);
    EXPECT_EQ(run_cli("frobnicate").exit_code, 2);
}

TEST(Cli, TrainWritesArtifacts) {
    CliFixture fx;
    const auto r = run_cli("train --config " + fx.config_path);
    ASSERT_EQ(r.exit_code, 0) << r.output;
    EXPECT_NE(r.output.find("held-out mean inconvenience"), std::string::npos);

    const fs::path out(fx.out_dir);
    EXPECT_TRUE(fs::exists(out / "config.json"));
    EXPECT_TRUE(fs::exists(out / "checkpoint.json"));
    EXPECT_TRUE(fs::exists(out / "checkpoint_ep2.json"));
    EXPECT_EQ(evrec::test::count_lines(evrec::test::read_file((out / "metrics.csv").string())), 1 + 3);
    EXPECT_EQ(evrec::test::count_lines(evrec::test::read_file((out / "eval_metrics.csv").string())), 1 + 2 * 2);

    // the resolved config on disk names the policy and seed actually used
    std::ifstream in((out / "config.json").string());
    nlohmann::json j;
    in >> j;
    EXPECT_EQ(j.at("policy").get<std::string>(), "conv");
    EXPECT_EQ(j.at("seed").get<std::uint64_t>(), 1u);
}

TEST(Cli, TrainIsByteDeterministic) {
    CliFixture fx;
    const std::string out_a = (fx.dir.path() / "a").string();
    const std::string out_b = (fx.dir.path() / "b").string();
    ASSERT_EQ(run_cli("train --config " + fx.config_path + " --out " + out_a).exit_code, 0);
    ASSERT_EQ(run_cli("train --config " + fx.config_path + " --out " + out_b).exit_code, 0);
    for (const char* name : {"metrics.csv", "eval_metrics.csv", "checkpoint.json"})
        EXPECT_EQ(evrec::test::read_file((fs::path(out_a) / name).string()),
                  evrec::test::read_file((fs::path(out_b) / name).string()))
            << name;
}

TEST(Cli, TrainOverridesTakeEffect) {
    CliFixture fx;
    const std::string out = (fx.dir.path() / "ffdqn").string();
    const auto r = run_cli("train --config " + fx.config_path + " --policy ffdqn --epochs 2 --out " +
                           out + " --seed 7");
    ASSERT_EQ(r.exit_code, 0) << r.output;
    EXPECT_EQ(evrec::test::count_lines(evrec::test::read_file((fs::path(out) / "metrics.csv").string())), 1 + 2);
    std::ifstream in((fs::path(out) / "config.json").string());
    nlohmann::json j;
    in >> j;
    EXPECT_EQ(j.at("policy").get<std::string>(), "ffdqn");
    EXPECT_EQ(j.at("epochs").get<int>(), 2);
    EXPECT_EQ(j.at("seed").get<std::uint64_t>(), 7u);
}

TEST(Cli, EvaluateComparesBaselines) {
    CliFixture fx;
    const auto r = run_cli("evaluate --config " + fx.config_path);
    ASSERT_EQ(r.exit_code, 0) << r.output;
    const fs::path out(fx.out_dir);
    // header + nearest/open/nearest_open
    EXPECT_EQ(evrec::test::count_lines(evrec::test::read_file((out / "report.csv").string())), 4);
    // header + 3 policies x 2 seeds
    EXPECT_EQ(evrec::test::count_lines(evrec::test::read_file((out / "report_per_seed.csv").string())), 7);
    const std::string report = evrec::test::read_file((out / "report.csv").string());
    EXPECT_EQ(report.rfind("policy,reward,inconvenience_min,wait_min,drive_min\n", 0), 0u);
    EXPECT_NE(report.find("nearest_open,"), std::string::npos);

    std::ifstream in((out / "report.json").string());
    nlohmann::json j;
    in >> j;
    EXPECT_TRUE(j.at("policies").contains("nearest"));
    EXPECT_TRUE(j.at("policies").contains("open"));
    EXPECT_TRUE(j.at("policies").contains("nearest_open"));
    EXPECT_EQ(j.at("test_seeds").size(), 2u);
}

TEST(Cli, EvaluateLoadsTrainedCheckpoint) {
    CliFixture fx;
    ASSERT_EQ(run_cli("train --config " + fx.config_path).exit_code, 0);
    const std::string ck = (fs::path(fx.out_dir) / "checkpoint.json").string();
    const std::string out = (fx.dir.path() / "eval").string();
    const auto r = run_cli("evaluate --config " + fx.config_path + " --checkpoint " + ck +
                           " --out " + out);
    ASSERT_EQ(r.exit_code, 0) << r.output;
    const std::string report = evrec::test::read_file((fs::path(out) / "report.csv").string());
    EXPECT_NE(report.find("conv,"), std::string::npos);
    EXPECT_EQ(evrec::test::count_lines(evrec::test::read_file((fs::path(out) / "report.csv").string())), 5);
}

TEST(Cli, EvaluateRefusesLearnedPolicyWithoutCheckpoint) {
    CliFixture fx;
    EXPECT_EQ(run_cli("evaluate --config " + fx.config_path + " --policy conv").exit_code, 2);
}

TEST(Cli, EvaluateRefusesWrongKindCheckpoint) {
    CliFixture fx;
    ASSERT_EQ(run_cli("train --config " + fx.config_path).exit_code, 0);  // conv checkpoint
    const std::string ck = (fs::path(fx.out_dir) / "checkpoint.json").string();
    EXPECT_EQ(run_cli("evaluate --config " + fx.config_path + " --checkpoint " + ck +
                      " --policy graph")
                  .exit_code,
              2);
}

TEST(Cli, SimulateWritesTrace) {
    CliFixture fx;
    const auto r = run_cli("simulate --config " + fx.config_path + " --policy nearest_open "
                           "--seed 3");
    ASSERT_EQ(r.exit_code, 0) << r.output;
    std::ifstream in((fs::path(fx.out_dir) / "trace.json").string());
    ASSERT_TRUE(in.good());
    nlohmann::json j;
    in >> j;
    EXPECT_EQ(j.at("steps").size(), 24u);  // tiny scenario episode length
    EXPECT_TRUE(j.contains("users"));
    EXPECT_TRUE(j.contains("total_reward"));
}

TEST(Cli, SimulateNeedsCheckpointForLearnedPolicy) {
    CliFixture fx;
    EXPECT_EQ(run_cli("simulate --config " + fx.config_path + " --policy conv").exit_code, 2);
}

TEST(Cli, UsageErrors) {
    CliFixture fx;
    EXPECT_EQ(run_cli("train").exit_code, 2);  // --config is required
    EXPECT_EQ(run_cli("train --config /nonexistent.json").exit_code, 2);
    EXPECT_EQ(run_cli("train --config " + fx.config_path + " --policy dqn").exit_code, 2);
    EXPECT_EQ(run_cli("train --config " + fx.config_path + " --policy nearest").exit_code, 2);
}

TEST(Cli, GradcheckPasses) {
    const auto r = run_cli("gradcheck --configs 5 --seed 12");
    ASSERT_EQ(r.exit_code, 0) << r.output;
    EXPECT_NE(r.output.find("PASS"), std::string::npos);
}
