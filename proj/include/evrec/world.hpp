#pragma once

#include <algorithm>
#include <deque>
#include <vector>

#include "evrec/common.hpp"
#include "evrec/geo.hpp"
#include "evrec/rng.hpp"
#include "evrec/scenario.hpp"

namespace evrec {

// A charging request. `id` is unique within an episode; exogenous cars use -1.
struct Query {
    long id = -1;
    CellCoord cell;
    int t = 0;  // step at which the query was issued
};

struct SeatedCar {
    long query_id = -1;
    int seated_step = 0;
};

struct WaitingCar {
    long query_id = -1;
    int arrived_step = 0;
};

// A dispatched user on the road. For group dispatches `group_members` holds
// the group and `nominal_station` the member projected at dispatch time; the
// final member is picked on arrival.
struct InboundCar {
    long query_id = -1;
    CellCoord query_cell;
    int nominal_station = -1;
    std::vector<int> group_members;
    int remaining = 0;  // steps until arrival
    int total = 0;      // drive time at dispatch
};

struct StationState {
    std::vector<SeatedCar> seated;
    std::deque<WaitingCar> waiting;
};

// Everything that happened during one world step, for reward and bookkeeping.
// Reward counts dispatched users only; exogenous cars occupy chargers and
// queue slots but earn and cost nothing.
struct StepAccounting {
    int t = 0;
    std::vector<long> seated_ids;     // users who got a charger this step
    std::vector<int> seated_stations; // where each of them was seated
    std::vector<long> waiting_ids;    // users queued after resolution
    std::vector<long> driving_ids;    // users still on the road after this step
    std::vector<int> stay_durations;  // completed charging stays (steps), all cars
    int exo_arrived = 0;

    int n_arrive() const { return static_cast<int>(seated_ids.size()); }
    int n_wait() const { return static_cast<int>(waiting_ids.size()); }
    int n_drive() const { return static_cast<int>(driving_ids.size()); }
    double reward(double K, double lambda) const {
        return K * n_arrive() - n_wait() - lambda * n_drive();
    }
};

// Each charging car departs independently with probability p_depart (i.i.d.
// geometric stay durations); returns how many stay.
inline int sample_departures(int occupied, double p_depart, RngStream& rng) {
    int remaining = 0;
    for (int i = 0; i < occupied; ++i)
        if (!rng.bernoulli(p_depart)) ++remaining;
    return remaining;
}

inline int sample_exogenous(const RateTable& rates, int t, int dow, int episode_steps,
                            RngStream& rng) {
    return static_cast<int>(rng.poisson(rates.rate(t, dow, episode_steps)));
}

// Seats cars at one station: the existing queue first (FIFO), then this
// step's recommended arrivals, then exogenous ones. Whoever finds no open
// charger joins the queue.
inline void resolve_station(StationState& st, int station_id, int capacity,
                            const std::vector<WaitingCar>& rec, const std::vector<WaitingCar>& exo,
                            int t, StepAccounting& acc) {
    internal_check(static_cast<int>(st.seated.size()) <= capacity, "station over capacity");
    auto seat = [&](const WaitingCar& car) {
        st.seated.push_back(SeatedCar{car.query_id, t});
        if (car.query_id >= 0) {
            acc.seated_ids.push_back(car.query_id);
            acc.seated_stations.push_back(station_id);
        }
    };
    while (static_cast<int>(st.seated.size()) < capacity && !st.waiting.empty()) {
        seat(st.waiting.front());
        st.waiting.pop_front();
    }
    for (const auto* bucket : {&rec, &exo})
        for (const auto& car : *bucket) {
            if (static_cast<int>(st.seated.size()) < capacity)
                seat(car);
            else
                st.waiting.push_back(car);
        }
    for (const auto& car : st.waiting)
        if (car.query_id >= 0) acc.waiting_ids.push_back(car.query_id);
}

// Discrete-event simulation of the charging network. One step covers, in
// order: departures, exogenous arrivals, driving progress + arrivals, per-
// station seating, then dispatch of this step's recommendations. Randomness
// comes from fixed substreams of the episode seed, so demand and exogenous
// traffic are identical across policies.
class World {
  public:
    World(const Scenario& sc, std::uint64_t seed)
        : sc_(&sc),
          dow_(static_cast<int>(seed % 7)),
          stations_(sc.stations.size()),
          demand_(RngStream(seed).derive(1)),
          exogenous_(RngStream(seed).derive(2)),
          departures_(RngStream(seed).derive(3)),
          shuffle_(RngStream(seed).derive(4)) {
        sc.validate();
    }

    int t() const { return t_; }
    int dow() const { return dow_; }
    bool done() const { return t_ >= sc_->episode_steps; }
    const Scenario& scenario() const { return *sc_; }
    const StationState& station(int n) const { return stations_.at(n); }
    const std::vector<InboundCar>& inbound() const { return inbound_; }
    const std::vector<InboundCar>& pending() const { return pending_; }

    int occupied(int n) const { return static_cast<int>(stations_.at(n).seated.size()); }
    int open_chargers(int n) const { return sc_->stations.at(n).capacity - occupied(n); }
    int waiting_count(int n) const { return static_cast<int>(stations_.at(n).waiting.size()); }

    // Dispatched cars currently on the road (or registered this step) whose
    // projected destination is station n.
    int committed(int n) const {
        int c = 0;
        for (const auto& car : inbound_) c += car.nominal_station == n;
        for (const auto& car : pending_) c += car.nominal_station == n;
        return c;
    }

    // queued[j-1] = cars headed for station n that arrive in exactly j steps;
    // anything farther out than k is clamped into the last slot.
    std::vector<int> queued_arrivals(int n, int k) const {
        std::vector<int> queued(k, 0);
        auto tally = [&](const InboundCar& car) {
            if (car.nominal_station == n && car.remaining >= 1)
                ++queued[std::min(car.remaining, k) - 1];
        };
        for (const auto& car : inbound_) tally(car);
        for (const auto& car : pending_) tally(car);
        return queued;
    }

    // Draw this step's queries (shuffled so source order carries no signal).
    // Must be called at most once per step, before step().
    std::vector<Query> sample_queries() {
        internal_check(queries_step_ != t_, "sample_queries called twice in one step");
        queries_step_ = t_;
        std::vector<Query> out;
        for (const auto& src : sc_->queries) {
            const double rate = src.rates.rate(t_, dow_, sc_->episode_steps);
            const int n = static_cast<int>(demand_.poisson(rate));
            for (int i = 0; i < n; ++i) out.push_back(Query{-1, src.cell, t_});
        }
        shuffle_.shuffle(out);
        for (auto& q : out) q.id = next_query_id_++;
        return out;
    }

    void register_recommendation(const Query& q, int station) {
        if (station < 0 || station >= sc_->num_stations())
            throw ConfigError("recommendation: station id out of range");
        const int d = drive_time(q.cell, sc_->stations[station].cell, sc_->grid,
                                 sc_->speed_km_per_step);
        pending_.push_back(InboundCar{q.id, q.cell, station, {}, d, d});
    }

    // Group dispatch: the user heads for the nearest member; the exact member
    // is settled when they arrive.
    void register_group_recommendation(const Query& q, const std::vector<int>& members) {
        if (members.empty()) throw ConfigError("recommendation: empty group");
        int best = -1;
        double best_d = 0.0;
        for (int m : members) {
            if (m < 0 || m >= sc_->num_stations())
                throw ConfigError("recommendation: station id out of range");
            const double d = cell_distance(q.cell, sc_->stations[m].cell, sc_->grid);
            if (best < 0 || d < best_d || (d == best_d && m < best)) {
                best = m;
                best_d = d;
            }
        }
        const int d = drive_time(q.cell, sc_->stations[best].cell, sc_->grid,
                                 sc_->speed_km_per_step);
        pending_.push_back(InboundCar{q.id, q.cell, best, members, d, d});
    }

    StepAccounting step() {
        internal_check(!done(), "step called on finished episode");
        StepAccounting acc;
        acc.t = t_;
        const int N = sc_->num_stations();

        // 1. Departures: each charging car leaves with probability p_depart.
        for (auto& st : stations_) {
            std::vector<SeatedCar> keep;
            keep.reserve(st.seated.size());
            for (const auto& car : st.seated) {
                if (departures_.bernoulli(sc_->p_depart))
                    acc.stay_durations.push_back(t_ - car.seated_step);
                else
                    keep.push_back(car);
            }
            st.seated = std::move(keep);
        }

        // 2. Exogenous arrivals (cars that show up without asking us).
        std::vector<std::vector<WaitingCar>> exo_arr(N);
        std::vector<int> incoming(N, 0);
        for (int n = 0; n < N; ++n) {
            const int cnt = sample_exogenous(sc_->exogenous[n], t_, dow_, sc_->episode_steps,
                                             exogenous_);
            for (int i = 0; i < cnt; ++i) exo_arr[n].push_back(WaitingCar{-1, t_});
            incoming[n] += cnt;
            acc.exo_arrived += cnt;
        }

        // 3. Driving progress. Cars reaching their destination join this
        // step's arrival list; group dispatches pick their member now.
        std::vector<std::vector<WaitingCar>> rec_arr(N);
        std::vector<InboundCar> still_driving;
        still_driving.reserve(inbound_.size());
        for (auto& car : inbound_) {
            --car.remaining;
            if (car.remaining > 0) {
                still_driving.push_back(car);
                continue;
            }
            int dest = car.nominal_station;
            if (!car.group_members.empty()) dest = settle_group_member(car, incoming);
            rec_arr[dest].push_back(WaitingCar{car.query_id, t_});
            ++incoming[dest];
        }
        inbound_ = std::move(still_driving);

        // 4. Seating, station by station in id order.
        for (int n = 0; n < N; ++n)
            resolve_station(stations_[n], n, sc_->stations[n].capacity, rec_arr[n], exo_arr[n],
                            t_, acc);

        // 5. This step's recommendations hit the road.
        for (auto& car : pending_) inbound_.push_back(std::move(car));
        pending_.clear();
        for (const auto& car : inbound_)
            if (car.query_id >= 0) acc.driving_ids.push_back(car.query_id);

        ++t_;
        return acc;
    }

  private:
    // Nearest member (from the query cell) that still projects a free charger
    // after everyone already known to be coming; if none, nearest member.
    int settle_group_member(const InboundCar& car, const std::vector<int>& incoming) const {
        int best_free = -1, best_any = -1;
        double bf_d = 0.0, ba_d = 0.0;
        for (int m : car.group_members) {
            const double d = cell_distance(car.query_cell, sc_->stations[m].cell, sc_->grid);
            if (best_any < 0 || d < ba_d || (d == ba_d && m < best_any)) {
                best_any = m;
                ba_d = d;
            }
            const int projected =
                sc_->stations[m].capacity - occupied(m) - waiting_count(m) - incoming[m];
            if (projected > 0 && (best_free < 0 || d < bf_d || (d == bf_d && m < best_free))) {
                best_free = m;
                bf_d = d;
            }
        }
        return best_free >= 0 ? best_free : best_any;
    }

    const Scenario* sc_;
    int t_ = 0;
    int dow_ = 0;
    int queries_step_ = -1;
    long next_query_id_ = 0;
    std::vector<StationState> stations_;
    std::vector<InboundCar> inbound_;
    std::vector<InboundCar> pending_;
    RngStream demand_;
    RngStream exogenous_;
    RngStream departures_;
    RngStream shuffle_;
};

}  // namespace evrec
