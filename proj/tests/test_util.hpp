#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <boost/math/distributions/chi_squared.hpp>

#include "evrec/scenario.hpp"

namespace evrec::test {

// Upper-tail p-value of a chi-square statistic.
inline double chi_square_p(double stat, int dof) {
    boost::math::chi_squared dist(dof);
    return 1.0 - boost::math::cdf(dist, stat);
}

// Unique scratch directory, removed on destruction.
class TempDir {
  public:
    TempDir() {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("evrec_test_" + std::to_string(rd()) + "_" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::string str(const std::string& sub = "") const {
        return sub.empty() ? path_.string() : (path_ / sub).string();
    }

  private:
    std::filesystem::path path_;
};

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline long count_lines(const std::string& text) {
    long n = 0;
    for (char c : text)
        if (c == '\n') ++n;
    return n;
}

// Three stations on one row of a small grid; low uniform demand. Small enough
// that training-loop tests finish in well under a second per epoch.
inline Scenario tiny_scenario() {
    Scenario sc;
    sc.grid = {8, 8, 1.0};
    sc.p_depart = 0.2;
    sc.speed_km_per_step = 1.0;
    sc.episode_steps = 24;
    sc.rate_bins = 4;
    sc.stations = {{0, {2, 1}, 2}, {1, {2, 4}, 3}, {2, {2, 7}, 2}};
    sc.exogenous = {RateTable::constant(4, 0.08), RateTable::constant(4, 0.12),
                    RateTable::constant(4, 0.08)};
    sc.queries = {{{4, 2}, RateTable::constant(4, 0.5)}, {{4, 6}, RateTable::constant(4, 0.3)}};
    sc.validate();
    return sc;
}

struct CliResult {
    int exit_code = -1;
    std::string output;
};

// Runs the CLI binary with the given arguments, capturing stdout+stderr.
inline CliResult run_cli(const std::string& args) {
    const std::string cmd = std::string(EVREC_CLI_PATH) + " " + args + " 2>&1";
    CliResult res;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return res;
    char buf[4096];
    while (std::size_t n = fread(buf, 1, sizeof buf, pipe)) res.output.append(buf, n);
    const int status = pclose(pipe);
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return res;
}

}  // namespace evrec::test
