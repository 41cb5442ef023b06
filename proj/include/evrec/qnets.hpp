#pragma once

#include <cmath>
#include <fstream>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "evrec/features.hpp"
#include "evrec/graph.hpp"
#include "evrec/nn.hpp"
#include "evrec/policy.hpp"

namespace evrec {

inline constexpr int option_input_dim(int k) { return kGlobalDim + station_dim(k) + kQueryDim + 1; }

// Per-option network input: global context, the target station's features,
// the query, and the query-to-target distance.
inline std::vector<double> station_option_input(const Decision& d, int n, double dist_km) {
    std::vector<double> x;
    x.reserve(d.global.size() + d.stations[n].size() + d.query_base.size() + 1);
    x.insert(x.end(), d.global.begin(), d.global.end());
    x.insert(x.end(), d.stations[n].begin(), d.stations[n].end());
    x.insert(x.end(), d.query_base.begin(), d.query_base.end());
    x.push_back(dist_km / d.diag_km);
    return x;
}

// Same shape with the member stations' features mean-pooled, so a singleton
// group produces exactly the station's own input.
inline std::vector<double> group_option_input(const Decision& d, const std::vector<int>& members,
                                              double dist_km) {
    if (members.empty()) throw ConfigError("group input: empty group");
    std::vector<double> pooled(d.stations[members[0]].size(), 0.0);
    for (int m : members)
        for (std::size_t i = 0; i < pooled.size(); ++i) pooled[i] += d.stations[m][i];
    for (auto& v : pooled) v /= static_cast<double>(members.size());
    std::vector<double> x;
    x.reserve(d.global.size() + pooled.size() + d.query_base.size() + 1);
    x.insert(x.end(), d.global.begin(), d.global.end());
    x.insert(x.end(), pooled.begin(), pooled.end());
    x.insert(x.end(), d.query_base.begin(), d.query_base.end());
    x.push_back(dist_km / d.diag_km);
    return x;
}

inline std::vector<double> value_input(const Decision& d) {
    std::vector<double> x;
    x.reserve(d.global.size() + d.query_base.size());
    x.insert(x.end(), d.global.begin(), d.global.end());
    x.insert(x.end(), d.query_base.begin(), d.query_base.end());
    return x;
}

// A learned policy: scoring plus the pieces the trainer needs — target
// networks, gradient accumulation for the chosen action, and checkpointing.
class QPolicy : public Policy {
  public:
    explicit QPolicy(const AgentConfig& cfg) : cfg_(cfg) {}

    bool trainable() const override { return true; }
    const AgentConfig& agent_cfg() const { return cfg_; }

    std::vector<double> bids(const Decision& d, const std::vector<Option>& opts) const override {
        return q_values(d, opts, false);
    }

    // Q for every option, from online or target parameters.
    virtual std::vector<double> q_values(const Decision& d, const std::vector<Option>& opts,
                                         bool use_target) const = 0;
    // Adds coeff * d Q(s, opts[action]) / d theta to the gradient accumulators.
    virtual void accumulate(const Decision& d, const std::vector<Option>& opts, int action,
                            double coeff) = 0;
    virtual void apply_step(double step) = 0;  // SGD step, then clears accumulators
    virtual void sync_target() = 0;
    virtual bool params_finite() const = 0;

    // Checkpoint composition: (role, net) in a fixed per-kind order.
    virtual std::vector<std::pair<std::string, const Mlp*>> nets() const = 0;
    virtual void set_nets(std::vector<Mlp> loaded) = 0;
    virtual nlohmann::json extra_hyper() const { return nlohmann::json::object(); }

  protected:
    // Guards set_nets: a checkpoint must match this policy's architecture.
    static void check_dims(const Mlp& loaded, const Mlp& expected, const char* role) {
        if (loaded.dims() != expected.dims())
            throw ShapeError(std::string("checkpoint: dimension mismatch for net ") + role);
    }

    AgentConfig cfg_;
};

// Online/target dueling pair shared by the conv-family models: a per-option
// advantage net and a (global, query)-only value net.
struct DuelingPair {
    Mlp adv, value, tgt_adv, tgt_value;
    MlpGrad g_adv, g_value;

    void init(std::vector<int> adv_dims, std::vector<int> value_dims, RngStream& rng) {
        adv = Mlp(std::move(adv_dims), rng);
        value = Mlp(std::move(value_dims), rng);
        tgt_adv = adv;
        tgt_value = value;
        g_adv = adv.make_grad();
        g_value = value.make_grad();
    }

    std::vector<double> q(const std::vector<std::vector<double>>& inputs,
                          std::span<const double> vin, bool use_target) const {
        const Mlp& a = use_target ? tgt_adv : adv;
        const Mlp& v = use_target ? tgt_value : value;
        std::vector<double> advs;
        advs.reserve(inputs.size());
        Mlp::Tape tape;
        for (const auto& x : inputs) advs.push_back(a.forward(x, tape)[0]);
        return dueling_combine(v.forward(vin, tape)[0], advs);
    }

    // d Q_a / d A_i = delta_ia - 1/M (mean-centering), d Q_a / d V = 1.
    void accumulate(const std::vector<std::vector<double>>& inputs, std::span<const double> vin,
                    int action, double coeff) {
        const double m = static_cast<double>(inputs.size());
        Mlp::Tape tape;
        for (std::size_t i = 0; i < inputs.size(); ++i) {
            adv.forward(inputs[i], tape);
            const double dout = coeff * ((static_cast<int>(i) == action ? 1.0 : 0.0) - 1.0 / m);
            adv.backward(tape, std::span<const double>(&dout, 1), g_adv);
        }
        value.forward(vin, tape);
        value.backward(tape, std::span<const double>(&coeff, 1), g_value);
    }

    void apply_step(double step) {
        adv.apply(g_adv, step);
        value.apply(g_value, step);
        g_adv.zero();
        g_value.zero();
    }

    void sync() {
        tgt_adv = adv;
        tgt_value = value;
    }

    bool finite() const { return adv.all_finite() && value.all_finite(); }
};

// Shared per-station net applied to each candidate ("1x1 convolution over
// the stations"): identical station situations get identical bids.
class ConvPolicy : public QPolicy {
  public:
    ConvPolicy(const Scenario&, const AgentConfig& cfg, RngStream& rng) : QPolicy(cfg) {
        const int in = option_input_dim(cfg.queue_horizon);
        const int h = cfg.conv_hidden;
        nets_.init({in, h, h, h, 1}, {kGlobalDim + kQueryDim, cfg.value_hidden, 1}, rng);
    }

    PolicyKind kind() const override { return PolicyKind::Conv; }

    std::vector<double> q_values(const Decision& d, const std::vector<Option>& opts,
                                 bool use_target) const override {
        return nets_.q(option_inputs(d, opts), value_input(d), use_target);
    }

    void accumulate(const Decision& d, const std::vector<Option>& opts, int action,
                    double coeff) override {
        nets_.accumulate(option_inputs(d, opts), value_input(d), action, coeff);
    }

    void apply_step(double step) override { nets_.apply_step(step); }
    void sync_target() override { nets_.sync(); }
    bool params_finite() const override { return nets_.finite(); }

    std::vector<std::pair<std::string, const Mlp*>> nets() const override {
        return {{"advantage", &nets_.adv}, {"value", &nets_.value}};
    }

    void set_nets(std::vector<Mlp> loaded) override {
        if (loaded.size() != 2) throw ShapeError("checkpoint: conv expects 2 nets");
        check_dims(loaded[0], nets_.adv, "advantage");
        check_dims(loaded[1], nets_.value, "value");
        nets_.adv = std::move(loaded[0]);
        nets_.value = std::move(loaded[1]);
        nets_.sync();
    }

  private:
    static std::vector<std::vector<double>> option_inputs(const Decision& d,
                                                          const std::vector<Option>& opts) {
        std::vector<std::vector<double>> in;
        in.reserve(opts.size());
        for (const auto& o : opts) in.push_back(station_option_input(d, o.station, o.dist_km));
        return in;
    }

    DuelingPair nets_;
};

// Classical model: one dense net over the full concatenated state, one output
// per station, argmax restricted to the candidate set.
class FfdqnPolicy : public QPolicy {
  public:
    FfdqnPolicy(const Scenario& sc, const AgentConfig& cfg, RngStream& rng)
        : QPolicy(cfg), n_stations_(sc.num_stations()) {
        const int in = kGlobalDim + n_stations_ * station_dim(cfg.queue_horizon) + kQueryDim;
        const int h = cfg.ffdqn_hidden;
        adv_ = Mlp({in, h, h, h, n_stations_}, rng);
        value_ = Mlp({kGlobalDim + kQueryDim, cfg.value_hidden, 1}, rng);
        tgt_adv_ = adv_;
        tgt_value_ = value_;
        g_adv_ = adv_.make_grad();
        g_value_ = value_.make_grad();
    }

    PolicyKind kind() const override { return PolicyKind::FFDQN; }

    // Q over all N stations (dueling mean over the full output vector).
    std::vector<double> full_q(const Decision& d, bool use_target) const {
        const Mlp& a = use_target ? tgt_adv_ : adv_;
        const Mlp& v = use_target ? tgt_value_ : value_;
        return dueling_combine(v.forward(value_input(d))[0], a.forward(flat_input(d)));
    }

    std::vector<double> q_values(const Decision& d, const std::vector<Option>& opts,
                                 bool use_target) const override {
        const auto q = full_q(d, use_target);
        std::vector<double> out;
        out.reserve(opts.size());
        for (const auto& o : opts) out.push_back(q.at(o.station));
        return out;
    }

    void accumulate(const Decision& d, const std::vector<Option>& opts, int action,
                    double coeff) override {
        Mlp::Tape tape;
        adv_.forward(flat_input(d), tape);
        std::vector<double> dout(n_stations_, -coeff / n_stations_);
        dout[opts[action].station] += coeff;
        adv_.backward(tape, dout, g_adv_);
        value_.forward(value_input(d), tape);
        value_.backward(tape, std::span<const double>(&coeff, 1), g_value_);
    }

    void apply_step(double step) override {
        adv_.apply(g_adv_, step);
        value_.apply(g_value_, step);
        g_adv_.zero();
        g_value_.zero();
    }

    void sync_target() override {
        tgt_adv_ = adv_;
        tgt_value_ = value_;
    }

    bool params_finite() const override { return adv_.all_finite() && value_.all_finite(); }

    std::vector<std::pair<std::string, const Mlp*>> nets() const override {
        return {{"advantage", &adv_}, {"value", &value_}};
    }

    void set_nets(std::vector<Mlp> loaded) override {
        if (loaded.size() != 2) throw ShapeError("checkpoint: ffdqn expects 2 nets");
        check_dims(loaded[0], adv_, "advantage");
        check_dims(loaded[1], value_, "value");
        adv_ = std::move(loaded[0]);
        value_ = std::move(loaded[1]);
        sync_target();
    }

    nlohmann::json extra_hyper() const override { return {{"num_stations", n_stations_}}; }

  private:
    std::vector<double> flat_input(const Decision& d) const {
        if (static_cast<int>(d.stations.size()) != n_stations_)
            throw ShapeError("ffdqn: scenario station count differs from network");
        std::vector<double> x;
        x.reserve(kGlobalDim + n_stations_ * d.stations[0].size() + kQueryDim);
        x.insert(x.end(), d.global.begin(), d.global.end());
        for (const auto& s : d.stations) x.insert(x.end(), s.begin(), s.end());
        x.insert(x.end(), d.query_base.begin(), d.query_base.end());
        return x;
    }

    int n_stations_;
    Mlp adv_, value_, tgt_adv_, tgt_value_;
    MlpGrad g_adv_, g_value_;
};

// Graph model: station embeddings h_n = f(s, a_n), neighborhood aggregate
// sum of w_nm * h_m, q_n = g([h_n | aggregate]), dueling value on top.
class GraphPolicy : public QPolicy {
  public:
    GraphPolicy(const Scenario& sc, const AgentConfig& cfg, RngStream& rng)
        : QPolicy(cfg),
          graph_(build_station_graph(sc, cfg.candidate_radius_km, cfg.alpha, cfg.beta)) {
        const int in = option_input_dim(cfg.queue_horizon);
        const int e = cfg.graph_embed;
        f_ = Mlp({in, cfg.graph_hidden, e}, rng, /*activate_output=*/true);
        g_ = Mlp({2 * e, cfg.graph_hidden, 1}, rng);
        value_ = Mlp({kGlobalDim + kQueryDim, cfg.value_hidden, 1}, rng);
        tgt_f_ = f_;
        tgt_g_ = g_;
        tgt_value_ = value_;
        gf_ = f_.make_grad();
        gg_ = g_.make_grad();
        gv_ = value_.make_grad();
    }

    PolicyKind kind() const override { return PolicyKind::Graph; }
    const StationGraph& graph() const { return graph_; }

    std::vector<double> q_values(const Decision& d, const std::vector<Option>& opts,
                                 bool use_target) const override {
        const Mlp& f = use_target ? tgt_f_ : f_;
        const Mlp& g = use_target ? tgt_g_ : g_;
        const Mlp& v = use_target ? tgt_value_ : value_;
        const auto h = embeddings(d, opts, f);
        std::vector<double> advs;
        advs.reserve(opts.size());
        Mlp::Tape tape;
        for (const auto& o : opts) advs.push_back(g.forward(g_input(d, o.station, h), tape)[0]);
        return dueling_combine(v.forward(value_input(d), tape)[0], advs);
    }

    void accumulate(const Decision& d, const std::vector<Option>& opts, int action,
                    double coeff) override {
        const int e = cfg_.graph_embed;
        const double m = static_cast<double>(opts.size());
        // Forward with tapes for every station any option can see.
        std::vector<Mlp::Tape> ftape(d.stations.size());
        std::vector<std::vector<double>> h(d.stations.size());
        for (int n : needed_stations(d, opts))
            h[n] = f_.forward(station_option_input(d, n, d.dist_all_km[n]), ftape[n]);
        std::vector<std::vector<double>> dh(d.stations.size());
        Mlp::Tape gtape;
        for (std::size_t i = 0; i < opts.size(); ++i) {
            const int n = opts[i].station;
            g_.forward(g_input(d, n, h), gtape);
            const double dq = coeff * ((static_cast<int>(i) == action ? 1.0 : 0.0) - 1.0 / m);
            const auto dx = g_.backward(gtape, std::span<const double>(&dq, 1), gg_);
            auto& own = dh[n];
            if (own.empty()) own.assign(e, 0.0);
            for (int j = 0; j < e; ++j) own[j] += dx[j];
            for (const auto& edge : graph_.adj[n]) {
                auto& nb = dh[edge.to];
                if (nb.empty()) nb.assign(e, 0.0);
                for (int j = 0; j < e; ++j) nb[j] += edge.weight * dx[e + j];
            }
        }
        for (std::size_t n = 0; n < dh.size(); ++n)
            if (!dh[n].empty()) f_.backward(ftape[n], dh[n], gf_);
        Mlp::Tape vtape;
        value_.forward(value_input(d), vtape);
        value_.backward(vtape, std::span<const double>(&coeff, 1), gv_);
    }

    void apply_step(double step) override {
        f_.apply(gf_, step);
        g_.apply(gg_, step);
        value_.apply(gv_, step);
        gf_.zero();
        gg_.zero();
        gv_.zero();
    }

    void sync_target() override {
        tgt_f_ = f_;
        tgt_g_ = g_;
        tgt_value_ = value_;
    }

    bool params_finite() const override {
        return f_.all_finite() && g_.all_finite() && value_.all_finite();
    }

    std::vector<std::pair<std::string, const Mlp*>> nets() const override {
        return {{"embed", &f_}, {"readout", &g_}, {"value", &value_}};
    }

    void set_nets(std::vector<Mlp> loaded) override {
        if (loaded.size() != 3) throw ShapeError("checkpoint: graph expects 3 nets");
        check_dims(loaded[0], f_, "embed");
        check_dims(loaded[1], g_, "readout");
        check_dims(loaded[2], value_, "value");
        f_ = std::move(loaded[0]);
        g_ = std::move(loaded[1]);
        value_ = std::move(loaded[2]);
        sync_target();
    }

  private:
    std::vector<int> needed_stations(const Decision& d, const std::vector<Option>& opts) const {
        std::vector<char> mark(d.stations.size(), 0);
        for (const auto& o : opts) {
            mark[o.station] = 1;
            for (const auto& e : graph_.adj[o.station]) mark[e.to] = 1;
        }
        std::vector<int> out;
        for (std::size_t n = 0; n < mark.size(); ++n)
            if (mark[n]) out.push_back(static_cast<int>(n));
        return out;
    }

    // Embeddings for stations reachable from the options (others stay empty).
    std::vector<std::vector<double>> embeddings(const Decision& d, const std::vector<Option>& opts,
                                                const Mlp& f) const {
        std::vector<std::vector<double>> h(d.stations.size());
        Mlp::Tape tape;
        for (int n : needed_stations(d, opts))
            h[n] = f.forward(station_option_input(d, n, d.dist_all_km[n]), tape);
        return h;
    }

    std::vector<double> g_input(const Decision&, int n,
                                const std::vector<std::vector<double>>& h) const {
        const int e = cfg_.graph_embed;
        std::vector<double> x(2 * e, 0.0);
        for (int j = 0; j < e; ++j) x[j] = h[n][j];
        // Neighbors are visited in (distance, id) order so the float sum does
        // not depend on station labeling.
        for (const auto& edge : graph_.adj[n])
            for (int j = 0; j < e; ++j) x[e + j] += edge.weight * h[edge.to][j];
        return x;
    }

    StationGraph graph_;
    Mlp f_, g_, value_, tgt_f_, tgt_g_, tgt_value_;
    MlpGrad gf_, gg_, gv_;
};

// Grouping model: the conv architecture at group granularity (mean-pooled
// member features); the exact member is picked on arrival in the world.
class GroupingPolicy : public QPolicy {
  public:
    GroupingPolicy(const Scenario& sc, const AgentConfig& cfg, RngStream& rng)
        : QPolicy(cfg), groups_(build_groups(sc, cfg.candidate_radius_km, cfg.group_cap)) {
        const int in = option_input_dim(cfg.queue_horizon);
        const int h = cfg.conv_hidden;
        nets_.init({in, h, h, h, 1}, {kGlobalDim + kQueryDim, cfg.value_hidden, 1}, rng);
    }

    PolicyKind kind() const override { return PolicyKind::Grouping; }
    const std::vector<std::vector<int>>& groups() const { return groups_; }

    // Groups that contain at least one candidate station.
    std::vector<Option> options(const Decision& d) const override {
        std::vector<char> is_cand(d.stations.size(), 0);
        for (int c : d.candidates) is_cand[c] = 1;
        std::vector<Option> opts;
        for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
            const auto& members = groups_[gi];
            if (std::none_of(members.begin(), members.end(), [&](int m) { return is_cand[m]; }))
                continue;
            double dist = d.dist_all_km[members[0]];
            for (int m : members) dist = std::min(dist, d.dist_all_km[m]);
            opts.push_back(Option{-1, static_cast<int>(gi), dist, members[0]});
        }
        internal_check(!opts.empty(), "grouping: no group covers the candidate set");
        return opts;
    }

    std::vector<double> q_values(const Decision& d, const std::vector<Option>& opts,
                                 bool use_target) const override {
        return nets_.q(option_inputs(d, opts), value_input(d), use_target);
    }

    void accumulate(const Decision& d, const std::vector<Option>& opts, int action,
                    double coeff) override {
        nets_.accumulate(option_inputs(d, opts), value_input(d), action, coeff);
    }

    void dispatch(World& w, const Query& q, const Option& opt) const override {
        w.register_group_recommendation(q, groups_.at(opt.group));
    }

    void apply_step(double step) override { nets_.apply_step(step); }
    void sync_target() override { nets_.sync(); }
    bool params_finite() const override { return nets_.finite(); }

    std::vector<std::pair<std::string, const Mlp*>> nets() const override {
        return {{"advantage", &nets_.adv}, {"value", &nets_.value}};
    }

    void set_nets(std::vector<Mlp> loaded) override {
        if (loaded.size() != 2) throw ShapeError("checkpoint: grouping expects 2 nets");
        check_dims(loaded[0], nets_.adv, "advantage");
        check_dims(loaded[1], nets_.value, "value");
        nets_.adv = std::move(loaded[0]);
        nets_.value = std::move(loaded[1]);
        nets_.sync();
    }

  private:
    std::vector<std::vector<double>> option_inputs(const Decision& d,
                                                   const std::vector<Option>& opts) const {
        std::vector<std::vector<double>> in;
        in.reserve(opts.size());
        for (const auto& o : opts)
            in.push_back(group_option_input(d, groups_.at(o.group), o.dist_km));
        return in;
    }

    std::vector<std::vector<int>> groups_;
    DuelingPair nets_;
};

// Multi-agent auction: every station runs the same accept/reject head; the
// query goes to the station with the largest accept margin. The margin is
// also the Q trained by TD (common shifts of both outputs cancel).
class MultiAgentPolicy : public QPolicy {
  public:
    MultiAgentPolicy(const Scenario&, const AgentConfig& cfg, RngStream& rng) : QPolicy(cfg) {
        const int in = option_input_dim(cfg.queue_horizon);
        const int h = cfg.conv_hidden;
        net_ = Mlp({in, h, h, h, 2}, rng);
        tgt_ = net_;
        grad_ = net_.make_grad();
    }

    PolicyKind kind() const override { return PolicyKind::MultiAgent; }

    std::vector<double> q_values(const Decision& d, const std::vector<Option>& opts,
                                 bool use_target) const override {
        const Mlp& net = use_target ? tgt_ : net_;
        std::vector<double> margins;
        margins.reserve(opts.size());
        Mlp::Tape tape;
        for (const auto& o : opts) {
            const auto out = net.forward(station_option_input(d, o.station, o.dist_km), tape);
            margins.push_back(out[1] - out[0]);
        }
        return margins;
    }

    void accumulate(const Decision& d, const std::vector<Option>& opts, int action,
                    double coeff) override {
        const auto& o = opts[action];
        Mlp::Tape tape;
        net_.forward(station_option_input(d, o.station, o.dist_km), tape);
        const double dout[2] = {-coeff, coeff};
        net_.backward(tape, dout, grad_);
    }

    void apply_step(double step) override {
        net_.apply(grad_, step);
        grad_.zero();
    }

    void sync_target() override { tgt_ = net_; }
    bool params_finite() const override { return net_.all_finite(); }

    std::vector<std::pair<std::string, const Mlp*>> nets() const override {
        return {{"auction", &net_}};
    }

    void set_nets(std::vector<Mlp> loaded) override {
        if (loaded.size() != 1) throw ShapeError("checkpoint: multiagent expects 1 net");
        check_dims(loaded[0], net_, "auction");
        net_ = std::move(loaded[0]);
        sync_target();
    }

  private:
    Mlp net_, tgt_;
    MlpGrad grad_;
};

inline std::unique_ptr<Policy> make_policy(PolicyKind kind, const Scenario& sc,
                                           const AgentConfig& cfg, RngStream& rng) {
    switch (kind) {
        case PolicyKind::Nearest: return std::make_unique<NearestPolicy>();
        case PolicyKind::Open: return std::make_unique<OpenPolicy>();
        case PolicyKind::NearestOpen: return std::make_unique<NearestOpenPolicy>();
        case PolicyKind::FFDQN: return std::make_unique<FfdqnPolicy>(sc, cfg, rng);
        case PolicyKind::Conv: return std::make_unique<ConvPolicy>(sc, cfg, rng);
        case PolicyKind::Graph: return std::make_unique<GraphPolicy>(sc, cfg, rng);
        case PolicyKind::Grouping: return std::make_unique<GroupingPolicy>(sc, cfg, rng);
        case PolicyKind::MultiAgent: return std::make_unique<MultiAgentPolicy>(sc, cfg, rng);
    }
    throw InternalError("unknown policy kind");
}

inline nlohmann::json agent_config_to_json(const AgentConfig& c) {
    return {{"queue_horizon", c.queue_horizon},
            {"candidate_radius_km", c.candidate_radius_km},
            {"alpha", c.alpha},
            {"beta", c.beta},
            {"group_cap", c.group_cap},
            {"conv_hidden", c.conv_hidden},
            {"ffdqn_hidden", c.ffdqn_hidden},
            {"graph_embed", c.graph_embed},
            {"graph_hidden", c.graph_hidden},
            {"value_hidden", c.value_hidden}};
}

inline AgentConfig agent_config_from_json(const nlohmann::json& j) {
    AgentConfig c;
    try {
        c.queue_horizon = j.value("queue_horizon", c.queue_horizon);
        c.candidate_radius_km = j.value("candidate_radius_km", c.candidate_radius_km);
        c.alpha = j.value("alpha", c.alpha);
        c.beta = j.value("beta", c.beta);
        c.group_cap = j.value("group_cap", c.group_cap);
        c.conv_hidden = j.value("conv_hidden", c.conv_hidden);
        c.ffdqn_hidden = j.value("ffdqn_hidden", c.ffdqn_hidden);
        c.graph_embed = j.value("graph_embed", c.graph_embed);
        c.graph_hidden = j.value("graph_hidden", c.graph_hidden);
        c.value_hidden = j.value("value_hidden", c.value_hidden);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("agent config: malformed json: ") + e.what());
    }
    if (c.queue_horizon < 1) throw ConfigError("agent config: queue_horizon must be >= 1");
    if (!(c.candidate_radius_km > 0)) throw ConfigError("agent config: radius must be > 0");
    return c;
}

inline constexpr int kCheckpointVersion = 1;

inline nlohmann::json checkpoint_to_json(const QPolicy& p) {
    nlohmann::json dims = nlohmann::json::array();
    nlohmann::json weights = nlohmann::json::array();
    nlohmann::json biases = nlohmann::json::array();
    nlohmann::json roles = nlohmann::json::array();
    for (const auto& [role, net] : p.nets()) {
        auto full = net->to_json();
        dims.push_back(std::move(full["layer_dims"]));
        weights.push_back(std::move(full["weights"]));
        biases.push_back(std::move(full["biases"]));
        roles.push_back({{"role", role},
                         {"activate_output", net->activate_output()},
                         {"slope", net->slope()}});
    }
    nlohmann::json hyper = {{"nets", std::move(roles)},
                            {"agent", agent_config_to_json(p.agent_cfg())}};
    hyper.update(p.extra_hyper());
    return {{"format_version", kCheckpointVersion},
            {"model_kind", to_string(p.kind())},
            {"layer_dims", std::move(dims)},
            {"weights", std::move(weights)},
            {"biases", std::move(biases)},
            {"hyperparameters", std::move(hyper)}};
}

inline void save_checkpoint(const QPolicy& p, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("checkpoint: cannot write " + path);
    out << checkpoint_to_json(p).dump() << "\n";
    if (!out) throw ConfigError("checkpoint: write failed for " + path);
}

// Rebuilds the per-net Mlps out of the parallel checkpoint arrays.
inline std::vector<Mlp> nets_from_checkpoint_json(const nlohmann::json& j) {
    try {
        if (j.at("format_version").get<int>() != kCheckpointVersion)
            throw ConfigError("checkpoint: unsupported format_version");
        const auto& dims = j.at("layer_dims");
        const auto& weights = j.at("weights");
        const auto& biases = j.at("biases");
        const auto& roles = j.at("hyperparameters").at("nets");
        if (dims.size() != weights.size() || dims.size() != biases.size() ||
            dims.size() != roles.size())
            throw ShapeError("checkpoint: net arrays disagree in length");
        std::vector<Mlp> nets;
        for (std::size_t i = 0; i < dims.size(); ++i)
            nets.push_back(Mlp::from_json({{"layer_dims", dims[i]},
                                           {"weights", weights[i]},
                                           {"biases", biases[i]},
                                           {"activate_output", roles[i].at("activate_output")},
                                           {"slope", roles[i].at("slope")}}));
        return nets;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("checkpoint: malformed json: ") + e.what());
    }
}

// Builds the policy the checkpoint describes and loads its parameters.
// `expect` guards against evaluating a checkpoint as the wrong model kind.
inline std::unique_ptr<QPolicy> load_policy(const std::string& path, const Scenario& sc,
                                            std::optional<PolicyKind> expect = std::nullopt) {
    std::ifstream in(path);
    if (!in) throw ConfigError("checkpoint: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("checkpoint: parse error in ") + path + ": " + e.what());
    }
    PolicyKind kind;
    AgentConfig cfg;
    try {
        kind = policy_kind_from_string(j.at("model_kind").get<std::string>());
        cfg = agent_config_from_json(j.at("hyperparameters").at("agent"));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("checkpoint: malformed json: ") + e.what());
    }
    if (expect && *expect != kind)
        throw ConfigError("checkpoint: model_kind is " + to_string(kind) + ", expected " +
                          to_string(*expect));
    RngStream scratch(0);
    auto policy = make_policy(kind, sc, cfg, scratch);
    auto* q = dynamic_cast<QPolicy*>(policy.get());
    internal_check(q != nullptr, "loaded kind is not a learned policy");
    q->set_nets(nets_from_checkpoint_json(j));
    policy.release();
    return std::unique_ptr<QPolicy>(q);
}

}  // namespace evrec
