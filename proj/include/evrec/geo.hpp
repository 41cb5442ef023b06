#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "evrec/common.hpp"

namespace evrec {

struct CellCoord {
    int row = 0;
    int col = 0;
    bool operator==(const CellCoord&) const = default;
};

struct GridSpec {
    int rows = 1;
    int cols = 1;
    double cell_side_km = 0.5;  // cell area = side^2

    bool contains(CellCoord c) const {
        return c.row >= 0 && c.row < rows && c.col >= 0 && c.col < cols;
    }

    void validate() const {
        if (rows < 1 || cols < 1) throw ConfigError("grid: rows/cols must be >= 1");
        if (!(cell_side_km > 0.0)) throw ConfigError("grid: cell_side_km must be > 0");
    }

    // Longest possible distance on this grid, used to normalize distances.
    double diagonal_km() const {
        return cell_side_km * std::hypot(static_cast<double>(rows - 1),
                                         static_cast<double>(cols - 1));
    }
};

// Euclidean distance between cell centers.
inline double cell_distance(CellCoord a, CellCoord b, const GridSpec& spec) {
    if (!spec.contains(a) || !spec.contains(b))
        throw std::out_of_range("cell_distance: cell outside grid");
    return spec.cell_side_km * std::hypot(static_cast<double>(a.row - b.row),
                                          static_cast<double>(a.col - b.col));
}

// Drive time in whole timesteps; at least 1 so every dispatch spends a step in
// flight (arrivals are processed once per step).
inline int drive_time(CellCoord a, CellCoord b, const GridSpec& spec,
                      double speed_km_per_step) {
    if (!(speed_km_per_step > 0.0))
        throw ConfigError("drive_time: speed must be > 0");
    const double d = cell_distance(a, b, spec);
    return std::max(1, static_cast<int>(std::ceil(d / speed_km_per_step)));
}

// Stations within distance D of the query, sorted by (distance, id). When
// fewer than 5 qualify, fall back to the 5 nearest overall (all of them if
// fewer than 5 exist). Returned ids index into `cells`.
inline std::vector<int> candidate_stations(CellCoord q, std::span<const CellCoord> cells,
                                           double D, const GridSpec& spec) {
    if (cells.empty()) throw ConfigError("candidate_stations: no stations configured");
    std::vector<std::pair<double, int>> by_dist;
    by_dist.reserve(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i)
        by_dist.emplace_back(cell_distance(q, cells[i], spec), static_cast<int>(i));
    std::sort(by_dist.begin(), by_dist.end());  // distance, then id

    std::vector<int> out;
    for (const auto& [d, id] : by_dist)
        if (d <= D) out.push_back(id);
    if (out.size() < 5) {
        out.clear();
        const std::size_t n = std::min<std::size_t>(5, by_dist.size());
        for (std::size_t i = 0; i < n; ++i) out.push_back(by_dist[i].second);
    }
    return out;
}

}  // namespace evrec
