#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "evrec/config.hpp"
#include "evrec/episode.hpp"
#include "evrec/metrics.hpp"
#include "evrec/qnets.hpp"
#include "evrec/replay.hpp"

namespace evrec {

// Exponential exploration decay from eps_start to eps_end: eps(0) is exactly
// eps_start and eps(epochs) lands within 5e-4 of eps_end, both clamped.
inline double epsilon_at(double eps_start, double eps_end, int epochs, int epoch) {
    if (epoch < 0 || epoch > epochs) throw ConfigError("epsilon_at: epoch out of range");
    if (!(eps_start >= eps_end && eps_end > 0.0))
        throw ConfigError("epsilon_at: need eps_start >= eps_end > 0");
    if (eps_start == eps_end || epochs < 1) return eps_end;
    constexpr double tail = 5e-4;
    const double c = std::log((eps_start - eps_end) / tail) / epochs;
    const double v = eps_end + (eps_start - eps_end) * std::exp(-c * epoch);
    return std::min(eps_start, std::max(eps_end, v));
}

inline double epsilon_at(const RunConfig& cfg, int epoch) {
    return epsilon_at(cfg.eps_start, cfg.eps_end, cfg.epochs, epoch);
}

// Double-DQN target: the online net picks the next action, the target net
// prices it.
inline double td_target(const QPolicy& q, const Transition& tr, double gamma) {
    if (tr.terminal()) return tr.reward;
    const auto online = q.q_values(*tr.next, tr.next_options, false);
    const int a = select_argmax(tr.next_options, online);
    return tr.reward + gamma * q.q_values(*tr.next, tr.next_options, true)[a];
}

// One SGD step on the mean squared TD error of a uniform batch; returns the
// batch loss.
inline double train_step(QPolicy& q, const ReplayBuffer& buf, int batch_size, double lr,
                         double gamma, RngStream& rng) {
    const auto batch = buf.sample(batch_size, rng);
    double loss = 0.0;
    for (const Transition* tr : batch) {
        const double target = td_target(q, *tr, gamma);
        const double qsa = q.q_values(*tr->state, tr->options, false)[tr->action];
        const double delta = qsa - target;
        loss += delta * delta;
        q.accumulate(*tr->state, tr->options, tr->action, 2.0 * delta);
    }
    loss /= batch.size();
    q.apply_step(lr / batch.size());
    return loss;
}

inline EpisodeParams episode_params(const RunConfig& cfg, double eps) {
    EpisodeParams par;
    par.K = cfg.K;
    par.lambda = cfg.lambda;
    par.gamma = cfg.gamma;
    par.eps = eps;
    return par;
}

// Greedy (eps = 0) episodes over the held-out seeds.
inline std::vector<EpisodeResult> evaluate_policy(const Scenario& sc, const Policy& policy,
                                                  const RunConfig& cfg) {
    std::vector<EpisodeResult> out;
    out.reserve(cfg.test_seeds.size());
    const auto par = episode_params(cfg, 0.0);
    for (int seed : cfg.test_seeds)
        out.push_back(run_episode(sc, static_cast<std::uint64_t>(seed), policy, par, cfg.agent));
    return out;
}

struct TrainResult {
    std::unique_ptr<Policy> policy;
    EpisodeMetrics final_eval;
    std::string checkpoint_path;
    std::string metrics_path;
    long buffer_evictions = 0;
};

// Writes the diagnostic dump and raises the numeric abort.
[[noreturn]] inline void numeric_abort(const QPolicy& q, const std::string& out_dir,
                                       nlohmann::json context) {
    const auto path = (std::filesystem::path(out_dir) / "numeric_dump.json").string();
    context["checkpoint"] = checkpoint_to_json(q);
    std::ofstream out(path);
    if (out) out << context.dump(2) << "\n";
    throw NumericError("non-finite value during training", path);
}

// The epochal loop: episode e runs on world seed e with eps(e); transitions
// enter the buffer when the episode ends (rewards need the user's arrival),
// while one train step per world step samples earlier episodes. Per-epoch
// rows go to metrics.csv, held-out evaluations to eval_metrics.csv.
inline TrainResult run_training(const Scenario& sc, const RunConfig& cfg,
                                std::ostream* log = nullptr) {
    cfg.validate();
    if (!is_learned(cfg.policy))
        throw ConfigError("train: policy kind " + to_string(cfg.policy) + " is not trainable");
    std::filesystem::create_directories(cfg.out_dir);

    RngStream init(RngStream::mix(cfg.seed, 0x1a17));
    std::unique_ptr<Policy> policy =
        cfg.checkpoint_path.empty()
            ? make_policy(cfg.policy, sc, cfg.agent, init)
            : std::unique_ptr<Policy>(load_policy(cfg.checkpoint_path, sc, cfg.policy).release());
    auto& q = dynamic_cast<QPolicy&>(*policy);

    ReplayBuffer buffer(cfg.buffer_capacity);
    RngStream sample_rng(RngStream(cfg.seed).derive(7));
    const std::string kind = to_string(cfg.policy);

    const auto metrics_path = (std::filesystem::path(cfg.out_dir) / "metrics.csv").string();
    const auto eval_path = (std::filesystem::path(cfg.out_dir) / "eval_metrics.csv").string();
    std::ofstream mcsv(metrics_path);
    std::ofstream ecsv(eval_path);
    if (!mcsv || !ecsv) throw ConfigError("train: cannot write metrics files under " + cfg.out_dir);
    mcsv << metrics_csv_header();
    ecsv << metrics_csv_header();

    long steps_trained = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double eps = epsilon_at(cfg, epoch);
        RngStream explore(RngStream(RngStream::mix(cfg.seed, epoch)).derive(5));
        std::vector<Transition> transitions;
        double loss_sum = 0.0;
        int loss_n = 0;
        const auto on_step = [&] {
            if (!buffer.ready(cfg.batch_size)) return;
            const double loss =
                train_step(q, buffer, cfg.batch_size, cfg.learning_rate, cfg.gamma, sample_rng);
            if (!std::isfinite(loss))
                numeric_abort(q, cfg.out_dir,
                              {{"epoch", epoch}, {"step", steps_trained}, {"loss", "non-finite"}});
            loss_sum += loss;
            ++loss_n;
            if (++steps_trained % cfg.target_sync == 0) {
                if (!q.params_finite())
                    numeric_abort(q, cfg.out_dir,
                                  {{"epoch", epoch}, {"step", steps_trained},
                                   {"loss", loss}});
                q.sync_target();
            }
        };

        const auto res = run_episode(sc, static_cast<std::uint64_t>(epoch), *policy,
                                     episode_params(cfg, eps), cfg.agent, &explore, &transitions,
                                     on_step);
        for (auto& tr : transitions) buffer.push(std::move(tr));

        const double td_loss = loss_n > 0 ? loss_sum / loss_n : 0.0;
        const auto em = aggregate(std::span(&res, 1), cfg.lambda);
        mcsv << metrics_csv_row(epoch, epoch, kind, em, eps, td_loss);

        const bool last = epoch + 1 == cfg.epochs;
        if ((epoch + 1) % cfg.eval_every == 0 || last) {
            const auto evals = evaluate_policy(sc, *policy, cfg);
            for (std::size_t i = 0; i < evals.size(); ++i)
                ecsv << metrics_csv_row(epoch, cfg.test_seeds[i], kind,
                                        aggregate(std::span(&evals[i], 1), cfg.lambda), 0.0,
                                        td_loss);
            if (log)
                *log << "epoch " << epoch << " eps " << eps << " td_loss " << td_loss
                     << " eval_inconvenience_min "
                     << aggregate(evals, cfg.lambda).mean_inconvenience_min << "\n";
        }
        if ((epoch + 1) % cfg.checkpoint_every == 0 && !last)
            save_checkpoint(q, (std::filesystem::path(cfg.out_dir) /
                                ("checkpoint_ep" + std::to_string(epoch + 1) + ".json"))
                                   .string());
    }

    TrainResult result;
    result.checkpoint_path = (std::filesystem::path(cfg.out_dir) / "checkpoint.json").string();
    save_checkpoint(q, result.checkpoint_path);
    result.final_eval = aggregate(evaluate_policy(sc, *policy, cfg), cfg.lambda);
    result.metrics_path = metrics_path;
    result.buffer_evictions = buffer.evictions();
    result.policy = std::move(policy);
    return result;
}

}  // namespace evrec
