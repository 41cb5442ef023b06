#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "evrec/common.hpp"
#include "evrec/geo.hpp"
#include "evrec/scenario.hpp"

namespace evrec {

// Station adjacency: an edge joins stations closer than `radius_km`, weighted
// alpha * exp(-beta * d). Adjacency lists are sorted by (distance, id) so the
// aggregation order depends on geometry, not on station labeling.
struct StationGraph {
    struct Edge {
        int to = -1;
        double dist_km = 0.0;
        double weight = 0.0;
    };

    double alpha = 1.0;
    double beta = 1.0;
    double radius_km = 0.0;
    std::vector<std::vector<Edge>> adj;

    int degree(int n) const { return static_cast<int>(adj.at(n).size()); }
};

inline StationGraph build_station_graph(const Scenario& sc, double radius_km, double alpha,
                                        double beta) {
    if (!(radius_km > 0.0)) throw ConfigError("station graph: radius must be > 0");
    if (!(alpha > 0.0)) throw ConfigError("station graph: alpha must be > 0");
    if (!(beta >= 0.0)) throw ConfigError("station graph: beta must be >= 0");
    const int N = sc.num_stations();
    StationGraph g;
    g.alpha = alpha;
    g.beta = beta;
    g.radius_km = radius_km;
    g.adj.resize(N);
    for (int n = 0; n < N; ++n)
        for (int m = n + 1; m < N; ++m) {
            const double d = cell_distance(sc.stations[n].cell, sc.stations[m].cell, sc.grid);
            if (d < radius_km) {
                const double w = alpha * std::exp(-beta * d);
                g.adj[n].push_back({m, d, w});
                g.adj[m].push_back({n, d, w});
            }
        }
    for (auto& edges : g.adj)
        std::sort(edges.begin(), edges.end(), [](const auto& a, const auto& b) {
            return a.dist_km < b.dist_km || (a.dist_km == b.dist_km && a.to < b.to);
        });
    return g;
}

// Partition stations into groups: connected components of the radius graph,
// split greedily when larger than `cap` (lowest remaining id seeds a group,
// which grows by taking the member nearest to the seed). Every station lands
// in exactly one group; members and groups are listed in ascending id order.
inline std::vector<std::vector<int>> build_groups(const Scenario& sc, double radius_km, int cap) {
    if (cap < 1) throw ConfigError("groups: cap must be >= 1");
    const StationGraph g = build_station_graph(sc, radius_km, 1.0, 1.0);
    const int N = sc.num_stations();
    std::vector<int> comp(N, -1);
    int n_comp = 0;
    for (int n = 0; n < N; ++n) {
        if (comp[n] >= 0) continue;
        std::vector<int> stack{n};
        comp[n] = n_comp;
        while (!stack.empty()) {
            const int u = stack.back();
            stack.pop_back();
            for (const auto& e : g.adj[u])
                if (comp[e.to] < 0) {
                    comp[e.to] = n_comp;
                    stack.push_back(e.to);
                }
        }
        ++n_comp;
    }
    std::vector<std::vector<int>> groups;
    for (int c = 0; c < n_comp; ++c) {
        std::vector<int> members;
        for (int n = 0; n < N; ++n)
            if (comp[n] == c) members.push_back(n);
        while (!members.empty()) {
            const int seed = members.front();
            std::vector<int> group{seed};
            members.erase(members.begin());
            while (static_cast<int>(group.size()) < cap && !members.empty()) {
                int best = -1;
                double best_d = 0.0;
                for (std::size_t i = 0; i < members.size(); ++i) {
                    const double d = cell_distance(sc.stations[seed].cell,
                                                   sc.stations[members[i]].cell, sc.grid);
                    if (best < 0 || d < best_d) {
                        best = static_cast<int>(i);
                        best_d = d;
                    }
                }
                group.push_back(members[best]);
                members.erase(members.begin() + best);
            }
            std::sort(group.begin(), group.end());
            groups.push_back(std::move(group));
        }
    }
    std::sort(groups.begin(), groups.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    return groups;
}

}  // namespace evrec
