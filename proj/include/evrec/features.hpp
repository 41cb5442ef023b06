#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "evrec/geo.hpp"
#include "evrec/world.hpp"

namespace evrec {

inline constexpr int kGlobalDim = 9;  // sin/cos time of day + one-hot day of week
inline constexpr int kQueryDim = 3;   // normalized row, col, time
inline constexpr int station_dim(int k) { return 5 + k; }

// Center of a cell on a 0..1 scale per axis; stays inside (0,1) even for
// single-row or single-column grids.
inline double norm_row(const CellCoord& c, const GridSpec& g) { return (c.row + 0.5) / g.rows; }
inline double norm_col(const CellCoord& c, const GridSpec& g) { return (c.col + 0.5) / g.cols; }

inline std::vector<double> encode_global(const World& w) {
    std::vector<double> f(kGlobalDim, 0.0);
    const double tod = static_cast<double>(w.t()) / w.scenario().episode_steps;
    f[0] = std::sin(2.0 * std::numbers::pi * tod);
    f[1] = std::cos(2.0 * std::numbers::pi * tod);
    f[2 + w.dow()] = 1.0;
    return f;
}

// Occupancy, free chargers and queue length relative to capacity, the
// station's position, then the k-step arrival outlook (also per charger).
inline std::vector<double> encode_station(const World& w, int n, int k) {
    const auto& sc = w.scenario();
    const double cap = sc.stations.at(n).capacity;
    std::vector<double> f;
    f.reserve(station_dim(k));
    f.push_back(w.occupied(n) / cap);
    f.push_back(w.open_chargers(n) / cap);
    f.push_back(w.waiting_count(n) / cap);
    f.push_back(norm_row(sc.stations[n].cell, sc.grid));
    f.push_back(norm_col(sc.stations[n].cell, sc.grid));
    for (int q : w.queued_arrivals(n, k)) f.push_back(q / cap);
    return f;
}

inline std::vector<double> encode_query_base(const World& w, const Query& q) {
    const auto& g = w.scenario().grid;
    return {norm_row(q.cell, g), norm_col(q.cell, g),
            static_cast<double>(q.t) / w.scenario().episode_steps};
}

// One query's view of the world: encoded features plus the raw geometry and
// counts that policies and baselines need to rank stations.
struct Decision {
    Query query;
    std::vector<double> global;
    std::vector<std::vector<double>> stations;  // all N, indexed by station id
    std::vector<double> query_base;
    std::vector<int> candidates;  // station ids within D (padded), nearest first
    std::vector<double> cand_dist_km;
    std::vector<double> cand_dist_norm;  // km / grid diagonal
    std::vector<double> dist_all_km;     // per station id
    std::vector<int> open_count;         // per station id
    std::vector<int> committed;          // per station id
    double diag_km = 1.0;                // grid diagonal, the distance normalizer
};

inline Decision make_decision(const World& w, const Query& q, double candidate_radius_km,
                              int queue_horizon) {
    const auto& sc = w.scenario();
    const int N = sc.num_stations();
    Decision d;
    d.query = q;
    d.global = encode_global(w);
    d.query_base = encode_query_base(w, q);
    d.stations.reserve(N);
    for (int n = 0; n < N; ++n) {
        d.stations.push_back(encode_station(w, n, queue_horizon));
        d.dist_all_km.push_back(cell_distance(q.cell, sc.stations[n].cell, sc.grid));
        d.open_count.push_back(w.open_chargers(n));
        d.committed.push_back(w.committed(n));
    }
    d.candidates = candidate_stations(q.cell, sc.station_cells(), candidate_radius_km, sc.grid);
    d.diag_km = sc.grid.diagonal_km();
    for (int n : d.candidates) {
        d.cand_dist_km.push_back(d.dist_all_km[n]);
        d.cand_dist_norm.push_back(d.dist_all_km[n] / d.diag_km);
    }
    return d;
}

}  // namespace evrec
