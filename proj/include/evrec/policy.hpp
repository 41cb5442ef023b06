#pragma once

#include <memory>
#include <string>
#include <vector>

#include "evrec/common.hpp"
#include "evrec/features.hpp"
#include "evrec/rng.hpp"
#include "evrec/world.hpp"

namespace evrec {

enum class PolicyKind { FFDQN, Conv, Graph, Grouping, MultiAgent, Nearest, Open, NearestOpen };

inline std::string to_string(PolicyKind k) {
    switch (k) {
        case PolicyKind::FFDQN: return "ffdqn";
        case PolicyKind::Conv: return "conv";
        case PolicyKind::Graph: return "graph";
        case PolicyKind::Grouping: return "grouping";
        case PolicyKind::MultiAgent: return "multiagent";
        case PolicyKind::Nearest: return "nearest";
        case PolicyKind::Open: return "open";
        case PolicyKind::NearestOpen: return "nearest_open";
    }
    throw InternalError("unknown policy kind");
}

inline PolicyKind policy_kind_from_string(const std::string& s) {
    for (PolicyKind k : {PolicyKind::FFDQN, PolicyKind::Conv, PolicyKind::Graph,
                         PolicyKind::Grouping, PolicyKind::MultiAgent, PolicyKind::Nearest,
                         PolicyKind::Open, PolicyKind::NearestOpen})
        if (to_string(k) == s) return k;
    throw ConfigError("unknown policy kind: " + s);
}

inline bool is_learned(PolicyKind k) {
    switch (k) {
        case PolicyKind::Nearest:
        case PolicyKind::Open:
        case PolicyKind::NearestOpen: return false;
        default: return true;
    }
}

// Hyperparameters shared by the agent family.
struct AgentConfig {
    int queue_horizon = 8;            // k, steps of arrival outlook
    double candidate_radius_km = 2.5; // D, both for candidates and graph edges
    double alpha = 1.0;               // graph edge weight scale
    double beta = 1.0;                // graph edge weight decay, per km
    int group_cap = 6;                // max stations per group
    int conv_hidden = 100;            // per-station net width (3 hidden layers)
    int ffdqn_hidden = 250;           // classical net width (3 hidden layers)
    int graph_embed = 32;             // station embedding width
    int graph_hidden = 64;            // f/g hidden width
    int value_hidden = 100;           // dueling value stream width

    bool operator==(const AgentConfig&) const = default;
};

// One selectable target: a station, or (for the grouping policy) a group.
struct Option {
    int station = -1;     // target station id, -1 for group options
    int group = -1;       // index into the policy's group list, -1 otherwise
    double dist_km = 0.0; // tie-break distance (nearest member for groups)
    int tie_id = 0;       // station id / lowest member id

    bool operator==(const Option&) const = default;
};

// Argmax with the shared tie rule: higher bid, then nearer, then lower id.
inline int select_argmax(const std::vector<Option>& opts, const std::vector<double>& bids) {
    if (opts.empty() || opts.size() != bids.size())
        throw ShapeError("select: options/bids size mismatch");
    int best = 0;
    for (int i = 1; i < static_cast<int>(opts.size()); ++i) {
        if (bids[i] > bids[best] ||
            (bids[i] == bids[best] &&
             (opts[i].dist_km < opts[best].dist_km ||
              (opts[i].dist_km == opts[best].dist_km && opts[i].tie_id < opts[best].tie_id))))
            best = i;
    }
    return best;
}

// With probability eps pick uniformly, otherwise greedily.
inline int select_epsilon(const std::vector<Option>& opts, const std::vector<double>& bids,
                          double eps, RngStream& rng) {
    if (eps < 0.0 || eps > 1.0) throw ConfigError("select: eps must be in [0, 1]");
    if (eps > 0.0 && rng.next_double() < eps)
        return static_cast<int>(rng.next_below(opts.size()));
    return select_argmax(opts, bids);
}

// A recommender. Baselines only score; learned policies (QPolicy) add the
// training interface on top.
class Policy {
  public:
    virtual ~Policy() = default;
    virtual PolicyKind kind() const = 0;
    virtual bool trainable() const { return false; }

    // What this policy chooses between for one query.
    virtual std::vector<Option> options(const Decision& d) const {
        std::vector<Option> opts;
        opts.reserve(d.candidates.size());
        for (std::size_t i = 0; i < d.candidates.size(); ++i)
            opts.push_back(Option{d.candidates[i], -1, d.cand_dist_km[i], d.candidates[i]});
        return opts;
    }

    virtual std::vector<double> bids(const Decision& d, const std::vector<Option>& opts) const = 0;

    virtual void dispatch(World& w, const Query& q, const Option& opt) const {
        w.register_recommendation(q, opt.station);
    }
};

// Always the nearest candidate.
class NearestPolicy : public Policy {
  public:
    PolicyKind kind() const override { return PolicyKind::Nearest; }
    std::vector<double> bids(const Decision&, const std::vector<Option>& opts) const override {
        std::vector<double> b;
        b.reserve(opts.size());
        for (const auto& o : opts) b.push_back(-o.dist_km);
        return b;
    }
};

// The station with the most open chargers, over the whole network; ties go
// to the nearer station (argmax tie rule).
class OpenPolicy : public Policy {
  public:
    PolicyKind kind() const override { return PolicyKind::Open; }
    std::vector<Option> options(const Decision& d) const override {
        std::vector<Option> opts;
        opts.reserve(d.dist_all_km.size());
        for (int n = 0; n < static_cast<int>(d.dist_all_km.size()); ++n)
            opts.push_back(Option{n, -1, d.dist_all_km[n], n});
        return opts;
    }
    std::vector<double> bids(const Decision& d, const std::vector<Option>& opts) const override {
        std::vector<double> b;
        b.reserve(opts.size());
        for (const auto& o : opts) b.push_back(static_cast<double>(d.open_count[o.station]));
        return b;
    }
};

// Nearest candidate that still has an uncommitted open charger (own pending
// dispatches count as taken); if every candidate is full, plain nearest.
class NearestOpenPolicy : public Policy {
  public:
    PolicyKind kind() const override { return PolicyKind::NearestOpen; }
    std::vector<double> bids(const Decision& d, const std::vector<Option>& opts) const override {
        std::vector<double> b;
        b.reserve(opts.size());
        for (const auto& o : opts)
            b.push_back(d.open_count[o.station] - d.committed[o.station] > 0 ? 1.0 : 0.0);
        return b;
    }
};

}  // namespace evrec
