#include <vector>

#include <gtest/gtest.h>

#include "evrec/policy.hpp"
#include "test_util.hpp"

using namespace evrec;
using evrec::test::chi_square_p;

namespace {

Scenario quiet_scenario() {
    Scenario sc = evrec::test::tiny_scenario();
    sc.p_depart = 1e-9;
    for (auto& r : sc.exogenous) r = RateTable::constant(4, 0.0);
    for (auto& q : sc.queries) q.rates = RateTable::constant(4, 0.0);
    sc.validate();
    return sc;
}

int pick(const Policy& p, const World& w, const Query& q) {
    const Decision d = make_decision(w, q, 2.5, 8);
    const auto opts = p.options(d);
    const auto bids = p.bids(d, opts);
    return opts[select_argmax(opts, bids)].station;
}

// Seat `count` cars at station `s` by dispatching from one cell away (one
// step on the road, seated after the second step).
void fill(World& w, int s, int count, long& next_id) {
    const CellCoord cell{2, w.scenario().stations[s].cell.col - 1};
    for (int i = 0; i < count; ++i) w.register_recommendation({next_id++, cell, w.t()}, s);
    w.step();
    w.step();
}

}  // namespace

TEST(PolicyKind, StringRoundTrip) {
    for (PolicyKind k : {PolicyKind::FFDQN, PolicyKind::Conv, PolicyKind::Graph,
                         PolicyKind::Grouping, PolicyKind::MultiAgent, PolicyKind::Nearest,
                         PolicyKind::Open, PolicyKind::NearestOpen})
        EXPECT_EQ(policy_kind_from_string(to_string(k)), k);
    EXPECT_THROW(policy_kind_from_string("dqn"), ConfigError);
    EXPECT_THROW(policy_kind_from_string(""), ConfigError);
    EXPECT_FALSE(is_learned(PolicyKind::Nearest));
    EXPECT_FALSE(is_learned(PolicyKind::NearestOpen));
    EXPECT_TRUE(is_learned(PolicyKind::Conv));
    EXPECT_TRUE(is_learned(PolicyKind::MultiAgent));
}

TEST(SelectArgmax, TieCascade) {
    const std::vector<Option> opts{{0, -1, 1.0, 0}, {1, -1, 2.0, 1}, {2, -1, 1.5, 2}};
    EXPECT_EQ(select_argmax(opts, {0.0, 5.0, 1.0}), 1);   // highest bid
    EXPECT_EQ(select_argmax(opts, {1.0, 1.0, 1.0}), 0);   // tie: nearest
    EXPECT_EQ(select_argmax(opts, {0.0, 1.0, 1.0}), 2);   // tie among 1,2: nearer
    const std::vector<Option> same{{3, -1, 1.0, 3}, {1, -1, 1.0, 1}};
    EXPECT_EQ(select_argmax(same, {1.0, 1.0}), 1);        // full tie: lower id
    EXPECT_THROW(select_argmax({}, {}), ShapeError);
    EXPECT_THROW(select_argmax(opts, {1.0}), ShapeError);
}

TEST(SelectEpsilon, GreedyAtZero) {
    const std::vector<Option> opts{{0, -1, 1.0, 0}, {1, -1, 2.0, 1}};
    RngStream rng(4);
    for (int i = 0; i < 20; ++i) EXPECT_EQ(select_epsilon(opts, {0.0, 3.0}, 0.0, rng), 1);
    EXPECT_THROW(select_epsilon(opts, {0.0, 3.0}, -0.1, rng), ConfigError);
    EXPECT_THROW(select_epsilon(opts, {0.0, 3.0}, 1.1, rng), ConfigError);
}

TEST(SelectEpsilon, UniformAtOne) {
    std::vector<Option> opts;
    for (int i = 0; i < 4; ++i) opts.push_back({i, -1, 1.0 * i, i});
    const std::vector<double> bids{9.0, 0.0, 0.0, 0.0};  // bids must be ignored
    RngStream rng(8);
    std::vector<double> counts(4, 0.0);
    const int n = 8000;
    for (int i = 0; i < n; ++i) ++counts[select_epsilon(opts, bids, 1.0, rng)];
    double stat = 0.0;
    for (double c : counts) stat += (c - n / 4.0) * (c - n / 4.0) / (n / 4.0);
    EXPECT_GT(chi_square_p(stat, 3), 0.001);
}

TEST(SelectEpsilon, DeterministicPerSeed) {
    std::vector<Option> opts;
    for (int i = 0; i < 5; ++i) opts.push_back({i, -1, 1.0 * i, i});
    const std::vector<double> bids{0.0, 1.0, 2.0, 1.0, 0.0};
    RngStream a(123), b(123);
    for (int i = 0; i < 200; ++i)
        EXPECT_EQ(select_epsilon(opts, bids, 0.5, a), select_epsilon(opts, bids, 0.5, b));
}

TEST(NearestPolicy, PicksNearestCandidate) {
    const Scenario sc = quiet_scenario();
    World w(sc, 1);
    const NearestPolicy p;
    // (4,2): distances sqrt(5), sqrt(8), sqrt(29) -> station 0
    EXPECT_EQ(pick(p, w, {0, {4, 2}, 0}), 0);
    // (2,5): station 1 is 1 km away
    EXPECT_EQ(pick(p, w, {1, {2, 5}, 0}), 1);
    EXPECT_EQ(pick(p, w, {2, {6, 6}, 0}), 2);
}

TEST(OpenPolicy, MostOpenChargersWinsOverDistance) {
    const Scenario sc = quiet_scenario();
    World w(sc, 1);
    const OpenPolicy p;
    // from (2,0): station 0 is 1 km away, but station 1 has 3 open chargers
    EXPECT_EQ(pick(p, w, {0, {2, 0}, 0}), 1);
    // a car seated at station 1 levels the counts; nearest breaks the tie
    long id = 100;
    fill(w, 1, 1, id);
    EXPECT_EQ(pick(p, w, {1, {2, 0}, 0}), 0);
}

TEST(OpenPolicy, ConsidersEveryStation) {
    const Scenario sc = quiet_scenario();
    World w(sc, 1);
    const OpenPolicy p;
    const Decision d = make_decision(w, {0, {2, 0}, 0}, 2.5, 8);
    EXPECT_EQ(p.options(d).size(), static_cast<std::size_t>(sc.num_stations()));
}

TEST(NearestOpenPolicy, SkipsFullStations) {
    const Scenario sc = quiet_scenario();
    World w(sc, 1);
    const NearestOpenPolicy p;
    const Query q{0, {4, 2}, 0};
    EXPECT_EQ(pick(p, w, q), 0);  // everything open: plain nearest
    long id = 100;
    fill(w, 0, 2, id);  // station 0 (capacity 2) now full
    EXPECT_EQ(pick(p, w, q), 1);
}

TEST(NearestOpenPolicy, CountsOwnPendingDispatches) {
    const Scenario sc = quiet_scenario();
    World w(sc, 1);
    const NearestOpenPolicy p;
    // three queries in the same step from (4,2); station 0 has 2 chargers
    const int s1 = pick(p, w, {0, {4, 2}, 0});
    EXPECT_EQ(s1, 0);
    w.register_recommendation({0, {4, 2}, 0}, s1);
    const int s2 = pick(p, w, {1, {4, 2}, 0});
    EXPECT_EQ(s2, 0);
    w.register_recommendation({1, {4, 2}, 0}, s2);
    EXPECT_EQ(pick(p, w, {2, {4, 2}, 0}), 1);  // 0 is spoken for
}

TEST(NearestOpenPolicy, FallsBackToNearestWhenEverythingFull) {
    const Scenario sc = quiet_scenario();
    World w(sc, 1);
    const NearestOpenPolicy p;
    long id = 100;
    fill(w, 0, 2, id);
    fill(w, 1, 3, id);
    fill(w, 2, 2, id);
    EXPECT_EQ(pick(p, w, {0, {4, 2}, 0}), 0);  // all full: nearest again
}
