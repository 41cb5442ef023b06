#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "evrec/common.hpp"
#include "evrec/geo.hpp"

namespace evrec {

struct StationPhysical {
    int id = 0;
    CellCoord cell;
    int capacity = 1;  // number of chargers
};

// Mean event counts indexed by (day of week, time-of-day bin). Accepts three
// JSON spellings: a scalar (constant rate), an array of `bins` values (same
// profile every day), or a 7-element array of such arrays.
class RateTable {
  public:
    RateTable() = default;
    RateTable(int bins, std::vector<double> values) : bins_(bins), values_(std::move(values)) {
        if (bins_ < 1) throw ConfigError("rate table: bins must be >= 1");
        if (values_.size() != static_cast<std::size_t>(bins_) * 7)
            throw ConfigError("rate table: expected 7 x bins values");
        for (double v : values_)
            if (!(v >= 0.0)) throw ConfigError("rate table: rates must be >= 0");
    }

    static RateTable constant(int bins, double rate) {
        return RateTable(bins, std::vector<double>(static_cast<std::size_t>(bins) * 7, rate));
    }

    static RateTable from_json(const nlohmann::json& j, int bins) {
        std::vector<double> v;
        v.reserve(static_cast<std::size_t>(bins) * 7);
        if (j.is_number()) {
            return constant(bins, j.get<double>());
        } else if (j.is_array() && !j.empty() && j.front().is_array()) {
            if (j.size() != 7) throw ConfigError("rate table: per-day form needs 7 rows");
            for (const auto& row : j) {
                if (row.size() != static_cast<std::size_t>(bins))
                    throw ConfigError("rate table: row length must equal bins");
                for (const auto& x : row) v.push_back(x.get<double>());
            }
        } else if (j.is_array()) {
            if (j.size() != static_cast<std::size_t>(bins))
                throw ConfigError("rate table: array length must equal bins");
            for (int dow = 0; dow < 7; ++dow)
                for (const auto& x : j) v.push_back(x.get<double>());
        } else {
            throw ConfigError("rate table: expected number or array");
        }
        return RateTable(bins, std::move(v));
    }

    nlohmann::json to_json() const {
        nlohmann::json days = nlohmann::json::array();
        for (int dow = 0; dow < 7; ++dow) {
            nlohmann::json row = nlohmann::json::array();
            for (int b = 0; b < bins_; ++b) row.push_back(values_[dow * bins_ + b]);
            days.push_back(row);
        }
        return days;
    }

    int bins() const { return bins_; }

    double rate(int t, int dow, int episode_steps) const {
        if (dow < 0 || dow > 6) throw ConfigError("rate table: day of week out of range");
        if (t < 0 || t >= episode_steps) throw ConfigError("rate table: timestep out of range");
        const int bin = static_cast<int>(static_cast<long long>(t) * bins_ / episode_steps);
        return values_[static_cast<std::size_t>(dow) * bins_ + bin];
    }

    bool operator==(const RateTable&) const = default;

  private:
    int bins_ = 1;
    std::vector<double> values_ = std::vector<double>(7, 0.0);
};

struct QuerySource {
    CellCoord cell;
    RateTable rates;
};

// Everything that defines a simulated city: grid, stations, the departure and
// arrival models, driving speed, and episode length. One file + one seed
// reproduces an episode exactly.
struct Scenario {
    GridSpec grid;
    std::vector<StationPhysical> stations;
    double p_depart = 0.1;          // per charging car, per step
    double speed_km_per_step = 2.0;
    int episode_steps = 96;
    int rate_bins = 24;
    std::vector<RateTable> exogenous;   // indexed by station id
    std::vector<QuerySource> queries;

    int num_stations() const { return static_cast<int>(stations.size()); }

    std::vector<CellCoord> station_cells() const {
        std::vector<CellCoord> cells;
        cells.reserve(stations.size());
        for (const auto& s : stations) cells.push_back(s.cell);
        return cells;
    }

    void validate() const {
        grid.validate();
        if (stations.empty()) throw ConfigError("scenario: needs at least one station");
        for (std::size_t i = 0; i < stations.size(); ++i) {
            const auto& s = stations[i];
            if (s.id != static_cast<int>(i))
                throw ConfigError("scenario: station ids must be dense 0..N-1 in order");
            if (!grid.contains(s.cell)) throw ConfigError("scenario: station cell out of bounds");
            if (s.capacity < 1) throw ConfigError("scenario: station capacity must be >= 1");
        }
        if (!(p_depart > 0.0 && p_depart < 1.0))
            throw ConfigError("scenario: p_depart must be in (0, 1)");
        if (!(speed_km_per_step > 0.0)) throw ConfigError("scenario: speed must be > 0");
        if (episode_steps < 1) throw ConfigError("scenario: episode_steps must be >= 1");
        if (rate_bins < 1 || rate_bins > episode_steps)
            throw ConfigError("scenario: rate_bins must be in [1, episode_steps]");
        if (exogenous.size() != stations.size())
            throw ConfigError("scenario: exogenous rate table must cover every station");
        for (const auto& t : exogenous)
            if (t.bins() != rate_bins) throw ConfigError("scenario: exogenous bins mismatch");
        for (const auto& q : queries) {
            if (!grid.contains(q.cell)) throw ConfigError("scenario: query cell out of bounds");
            if (q.rates.bins() != rate_bins) throw ConfigError("scenario: query bins mismatch");
        }
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["grid"] = {{"rows", grid.rows}, {"cols", grid.cols}, {"cell_side_km", grid.cell_side_km}};
        j["stations"] = nlohmann::json::array();
        for (const auto& s : stations)
            j["stations"].push_back({{"id", s.id}, {"cell", {s.cell.row, s.cell.col}},
                                     {"capacity", s.capacity}});
        j["p_depart"] = p_depart;
        j["speed_km_per_step"] = speed_km_per_step;
        j["episode_steps"] = episode_steps;
        j["rate_bins"] = rate_bins;
        j["exogenous"] = nlohmann::json::array();
        for (std::size_t i = 0; i < exogenous.size(); ++i)
            j["exogenous"].push_back({{"station", static_cast<int>(i)}, {"rates", exogenous[i].to_json()}});
        j["queries"] = nlohmann::json::array();
        for (const auto& q : queries)
            j["queries"].push_back({{"cell", {q.cell.row, q.cell.col}}, {"rates", q.rates.to_json()}});
        return j;
    }

    static Scenario from_json(const nlohmann::json& j) {
        Scenario sc;
        try {
            const auto& g = j.at("grid");
            sc.grid.rows = g.at("rows").get<int>();
            sc.grid.cols = g.at("cols").get<int>();
            sc.grid.cell_side_km = g.at("cell_side_km").get<double>();
            sc.p_depart = j.at("p_depart").get<double>();
            sc.speed_km_per_step = j.at("speed_km_per_step").get<double>();
            sc.episode_steps = j.at("episode_steps").get<int>();
            sc.rate_bins = j.at("rate_bins").get<int>();
            for (const auto& js : j.at("stations")) {
                StationPhysical s;
                s.id = js.at("id").get<int>();
                s.cell = {js.at("cell").at(0).get<int>(), js.at("cell").at(1).get<int>()};
                s.capacity = js.at("capacity").get<int>();
                sc.stations.push_back(s);
            }
            sc.exogenous.assign(sc.stations.size(), RateTable::constant(sc.rate_bins, 0.0));
            for (const auto& je : j.at("exogenous")) {
                const int id = je.at("station").get<int>();
                if (id < 0 || id >= sc.num_stations())
                    throw ConfigError("scenario: exogenous entry for unknown station");
                sc.exogenous[id] = RateTable::from_json(je.at("rates"), sc.rate_bins);
            }
            for (const auto& jq : j.at("queries")) {
                QuerySource q;
                q.cell = {jq.at("cell").at(0).get<int>(), jq.at("cell").at(1).get<int>()};
                q.rates = RateTable::from_json(jq.at("rates"), sc.rate_bins);
                sc.queries.push_back(std::move(q));
            }
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("scenario: malformed json: ") + e.what());
        }
        sc.validate();
        return sc;
    }

    static Scenario load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("scenario: cannot open " + path);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("scenario: parse error in ") + path + ": " + e.what());
        }
        return from_json(j);
    }

    void save(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw ConfigError("scenario: cannot write " + path);
        out << to_json().dump(2) << "\n";
    }
};

}  // namespace evrec
