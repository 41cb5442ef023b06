#pragma once

#include <algorithm>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "evrec/common.hpp"
#include "evrec/episode.hpp"

namespace evrec {

inline constexpr double kMinutesPerStep = 15.0;

// Table-style summary of one or more evaluation episodes. Inconvenience is
// wait + lambda * drive per user, averaged afterwards; reward is averaged per
// episode, everything else per user, in minutes.
struct EpisodeMetrics {
    double mean_reward = 0.0;
    double mean_wait_min = 0.0;
    double mean_drive_min = 0.0;
    double mean_inconvenience_min = 0.0;
    long n_queries = 0;
    int n_episodes = 0;
    double p50_inconvenience_min = 0.0;
    double p90_inconvenience_min = 0.0;
    double p95_inconvenience_min = 0.0;
};

// Nearest-rank quantile of an unsorted sample.
inline double quantile(std::vector<double> v, double q) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const auto rank = static_cast<std::size_t>(std::ceil(q * v.size()));
    return v[std::min(v.size() - 1, rank > 0 ? rank - 1 : 0)];
}

inline EpisodeMetrics aggregate(std::span<const EpisodeResult> episodes, double lambda) {
    EpisodeMetrics m;
    m.n_episodes = static_cast<int>(episodes.size());
    std::vector<double> inconv;
    double wait = 0.0, drive = 0.0;
    for (const auto& ep : episodes) {
        m.mean_reward += ep.total_reward;
        m.n_queries += ep.n_queries();
        for (const auto& u : ep.users) {
            wait += u.wait_steps;
            drive += u.drive_steps;
            inconv.push_back(u.inconvenience_steps(lambda) * kMinutesPerStep);
        }
    }
    if (m.n_episodes > 0) m.mean_reward /= m.n_episodes;
    if (m.n_queries > 0) {
        m.mean_wait_min = wait * kMinutesPerStep / m.n_queries;
        m.mean_drive_min = drive * kMinutesPerStep / m.n_queries;
        m.mean_inconvenience_min = (wait + lambda * drive) * kMinutesPerStep / m.n_queries;
    }
    m.p50_inconvenience_min = quantile(inconv, 0.50);
    m.p90_inconvenience_min = quantile(inconv, 0.90);
    m.p95_inconvenience_min = quantile(inconv, 0.95);
    return m;
}

inline nlohmann::json metrics_to_json(const EpisodeMetrics& m) {
    return {{"mean_reward", m.mean_reward},
            {"mean_wait_min", m.mean_wait_min},
            {"mean_drive_min", m.mean_drive_min},
            {"mean_inconvenience_min", m.mean_inconvenience_min},
            {"n_queries", m.n_queries},
            {"n_episodes", m.n_episodes},
            {"p50_inconvenience_min", m.p50_inconvenience_min},
            {"p90_inconvenience_min", m.p90_inconvenience_min},
            {"p95_inconvenience_min", m.p95_inconvenience_min}};
}

// Full-precision, locale-independent number formatting so identical runs
// produce byte-identical files.
inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct CompareRow {
    std::string policy;
    double reward = 0.0;
    double inconvenience_min = 0.0;
    double wait_min = 0.0;
    double drive_min = 0.0;
};

inline CompareRow compare_row(const std::string& policy, const EpisodeMetrics& m) {
    return {policy, m.mean_reward, m.mean_inconvenience_min, m.mean_wait_min, m.mean_drive_min};
}

inline std::string compare_table_csv(const std::vector<CompareRow>& rows) {
    std::string out = "policy,reward,inconvenience_min,wait_min,drive_min\n";
    for (const auto& r : rows)
        out += r.policy + "," + fmt_double(r.reward) + "," + fmt_double(r.inconvenience_min) +
               "," + fmt_double(r.wait_min) + "," + fmt_double(r.drive_min) + "\n";
    return out;
}

inline nlohmann::json compare_table_json(const std::vector<CompareRow>& rows) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& r : rows)
        out.push_back({{"policy", r.policy},
                       {"reward", r.reward},
                       {"inconvenience_min", r.inconvenience_min},
                       {"wait_min", r.wait_min},
                       {"drive_min", r.drive_min}});
    return out;
}

inline std::string metrics_csv_header() {
    return "epoch,seed,policy,mean_reward,mean_wait_min,mean_drive_min,mean_inconvenience_min,"
           "n_queries,epsilon,td_loss\n";
}

inline std::string metrics_csv_row(int epoch, std::uint64_t seed, const std::string& policy,
                                   const EpisodeMetrics& m, double epsilon, double td_loss) {
    return std::to_string(epoch) + "," + std::to_string(seed) + "," + policy + "," +
           fmt_double(m.mean_reward) + "," + fmt_double(m.mean_wait_min) + "," +
           fmt_double(m.mean_drive_min) + "," + fmt_double(m.mean_inconvenience_min) + "," +
           std::to_string(m.n_queries) + "," + fmt_double(epsilon) + "," + fmt_double(td_loss) +
           "\n";
}

// Fleet-wide yearly time savings, in person-hours: how many charge stops the
// active fleet makes per year, times the per-stop minutes saved.
inline double estimate_global_savings(double fleet, double active_fraction, double miles_per_year,
                                      double range_miles, double minutes_saved) {
    if (!(fleet > 0) || !(active_fraction > 0) || !(miles_per_year > 0) || !(range_miles > 0))
        throw ConfigError("savings estimate: inputs must be positive");
    if (minutes_saved < 0) throw ConfigError("savings estimate: minutes saved must be >= 0");
    return fleet * active_fraction * (miles_per_year / range_miles) * minutes_saved / 60.0;
}

}  // namespace evrec
