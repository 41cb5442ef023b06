#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include <json.hpp>

#include "evrec/features.hpp"
#include "evrec/policy.hpp"
#include "evrec/replay.hpp"
#include "evrec/world.hpp"

namespace evrec {

// What happened to one dispatched user, counted from step events so that
// truncated users (still driving or waiting at midnight) carry exactly the
// steps they actually spent.
struct UserRecord {
    long id = -1;
    int query_step = 0;
    int station = -1;  // seating station; nominal target if never seated
    int drive_steps = 0;
    int wait_steps = 0;
    bool seated = false;
    int seat_step = -1;

    double inconvenience_steps(double lambda) const { return wait_steps + lambda * drive_steps; }
};

struct EpisodeResult {
    std::vector<StepAccounting> steps;
    std::vector<UserRecord> users;  // indexed by query id
    double total_reward = 0.0;      // sum of R(t) over the episode

    long n_queries() const { return static_cast<long>(users.size()); }

    double total_inconvenience_steps(double lambda) const {
        double s = 0.0;
        for (const auto& u : users) s += u.inconvenience_steps(lambda);
        return s;
    }
};

// Sum of gamma^t * R(t); the reward side of the reward-objective duality.
inline double discounted_reward(const std::vector<StepAccounting>& steps, double K, double lambda,
                                double gamma) {
    double total = 0.0;
    double g = 1.0;
    for (const auto& acc : steps) {
        total += g * acc.reward(K, lambda);
        g *= gamma;
    }
    return total;
}

struct EpisodeParams {
    double K = 10.0;
    double lambda = 1.0;
    double gamma = 0.95;  // discount used when folding user events into transition rewards
    double eps = 0.0;     // exploration; 0 means pure argmax
};

// Plays one episode: each step draws the queries, routes them one at a time
// (later queries see earlier commitments through the pending ledger), then
// advances the world. When `out_transitions` is given, every decision becomes
// a Transition whose reward folds the routed user's events, discounted back
// to the decision step, and whose next state is the episode's next decision.
inline EpisodeResult run_episode(const Scenario& sc, std::uint64_t seed, const Policy& policy,
                                 const EpisodeParams& par, const AgentConfig& agent,
                                 RngStream* explore = nullptr,
                                 std::vector<Transition>* out_transitions = nullptr,
                                 const std::function<void()>& on_step = {}) {
    if (par.eps > 0.0 && explore == nullptr)
        throw ConfigError("run_episode: exploration requires an rng stream");
    World world(sc, seed);
    EpisodeResult res;

    struct DecisionRecord {
        std::shared_ptr<const Decision> state;
        std::vector<Option> options;
        int action = -1;
        int t = 0;
    };
    std::vector<DecisionRecord> decs;
    std::vector<double> credit;       // folded reward per decision
    std::vector<int> dec_of_user;     // query id -> decision index
    std::vector<double> powg(sc.episode_steps + 1);
    powg[0] = 1.0;
    for (int i = 1; i <= sc.episode_steps; ++i) powg[i] = powg[i - 1] * par.gamma;

    while (!world.done()) {
        const auto queries = world.sample_queries();
        for (const auto& q : queries) {
            auto state = std::make_shared<Decision>(
                make_decision(world, q, agent.candidate_radius_km, agent.queue_horizon));
            auto opts = policy.options(*state);
            const auto bids = policy.bids(*state, opts);
            const int a = par.eps > 0.0 ? select_epsilon(opts, bids, par.eps, *explore)
                                        : select_argmax(opts, bids);
            policy.dispatch(world, q, opts[a]);

            UserRecord u;
            u.id = q.id;
            u.query_step = q.t;
            u.station = world.pending().back().nominal_station;
            res.users.push_back(u);
            dec_of_user.push_back(static_cast<int>(decs.size()));
            if (out_transitions) {
                decs.push_back({std::move(state), std::move(opts), a, q.t});
                credit.push_back(0.0);
            }
        }

        const auto acc = world.step();
        res.total_reward += acc.reward(par.K, par.lambda);
        auto fold = [&](long id, double value) {
            if (out_transitions)
                credit[dec_of_user[id]] += value * powg[acc.t - decs[dec_of_user[id]].t];
        };
        for (long id : acc.driving_ids) {
            ++res.users[id].drive_steps;
            fold(id, -par.lambda);
        }
        for (long id : acc.waiting_ids) {
            ++res.users[id].wait_steps;
            fold(id, -1.0);
        }
        for (std::size_t i = 0; i < acc.seated_ids.size(); ++i) {
            auto& u = res.users[acc.seated_ids[i]];
            u.seated = true;
            u.seat_step = acc.t;
            u.station = acc.seated_stations[i];
            fold(acc.seated_ids[i], par.K);
        }
        res.steps.push_back(acc);
        if (on_step) on_step();
    }

    if (out_transitions) {
        for (std::size_t i = 0; i < decs.size(); ++i) {
            Transition tr;
            tr.state = decs[i].state;
            tr.options = decs[i].options;
            tr.action = decs[i].action;
            tr.reward = credit[i];
            if (i + 1 < decs.size()) {
                tr.next = decs[i + 1].state;
                tr.next_options = decs[i + 1].options;
            }
            out_transitions->push_back(std::move(tr));
        }
    }
    return res;
}

// JSON trace of a finished episode: per-step accounting plus the per-user
// ledger, sufficient to recompute every metric offline.
inline nlohmann::json episode_trace_json(const EpisodeResult& res, double K, double lambda) {
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& acc : res.steps)
        steps.push_back({{"t", acc.t},
                         {"n_arrive", acc.n_arrive()},
                         {"n_wait", acc.n_wait()},
                         {"n_drive", acc.n_drive()},
                         {"exo_arrived", acc.exo_arrived},
                         {"reward", acc.reward(K, lambda)}});
    nlohmann::json users = nlohmann::json::array();
    for (const auto& u : res.users)
        users.push_back({{"id", u.id},
                         {"query_step", u.query_step},
                         {"station", u.station},
                         {"drive_steps", u.drive_steps},
                         {"wait_steps", u.wait_steps},
                         {"seated", u.seated},
                         {"seat_step", u.seat_step}});
    return {{"steps", std::move(steps)},
            {"users", std::move(users)},
            {"total_reward", res.total_reward}};
}

inline EpisodeResult episode_from_trace_json(const nlohmann::json& j) {
    EpisodeResult res;
    try {
        for (const auto& js : j.at("steps")) {
            StepAccounting acc;
            acc.t = js.at("t").get<int>();
            acc.seated_ids.resize(js.at("n_arrive").get<int>());
            acc.seated_stations.resize(acc.seated_ids.size());
            acc.waiting_ids.resize(js.at("n_wait").get<int>());
            acc.driving_ids.resize(js.at("n_drive").get<int>());
            acc.exo_arrived = js.at("exo_arrived").get<int>();
            res.steps.push_back(std::move(acc));
        }
        for (const auto& ju : j.at("users")) {
            UserRecord u;
            u.id = ju.at("id").get<long>();
            u.query_step = ju.at("query_step").get<int>();
            u.station = ju.at("station").get<int>();
            u.drive_steps = ju.at("drive_steps").get<int>();
            u.wait_steps = ju.at("wait_steps").get<int>();
            u.seated = ju.at("seated").get<bool>();
            u.seat_step = ju.at("seat_step").get<int>();
            res.users.push_back(u);
        }
        res.total_reward = j.at("total_reward").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("trace: malformed json: ") + e.what());
    }
    return res;
}

}  // namespace evrec
