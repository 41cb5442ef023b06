#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "evrec/graph.hpp"
#include "test_util.hpp"

using namespace evrec;

// tiny_scenario stations sit at (2,1), (2,4), (2,7) on a 1 km grid:
// d(0,1) = d(1,2) = 3, d(0,2) = 6.

TEST(StationGraph, EdgesAndWeights) {
    const Scenario sc = evrec::test::tiny_scenario();
    const auto g = build_station_graph(sc, 3.5, 2.0, 0.25);
    ASSERT_EQ(g.adj.size(), 3u);
    EXPECT_EQ(g.degree(0), 1);
    EXPECT_EQ(g.degree(1), 2);
    EXPECT_EQ(g.degree(2), 1);
    EXPECT_EQ(g.adj[0][0].to, 1);
    EXPECT_DOUBLE_EQ(g.adj[0][0].dist_km, 3.0);
    EXPECT_DOUBLE_EQ(g.adj[0][0].weight, 2.0 * std::exp(-0.25 * 3.0));
    // symmetry
    EXPECT_DOUBLE_EQ(g.adj[0][0].weight, g.adj[1][0].weight);
    // equal distances tie-break by id
    EXPECT_EQ(g.adj[1][0].to, 0);
    EXPECT_EQ(g.adj[1][1].to, 2);
}

TEST(StationGraph, RadiusBoundaryIsExclusive) {
    const Scenario sc = evrec::test::tiny_scenario();
    const auto g = build_station_graph(sc, 3.0, 1.0, 1.0);
    EXPECT_EQ(g.degree(0), 0);
    EXPECT_EQ(g.degree(1), 0);
    EXPECT_EQ(g.degree(2), 0);
}

TEST(StationGraph, AdjacencySortedByDistance) {
    const Scenario sc = evrec::test::tiny_scenario();
    const auto g = build_station_graph(sc, 10.0, 1.0, 0.5);
    ASSERT_EQ(g.degree(0), 2);
    EXPECT_EQ(g.adj[0][0].to, 1);  // 3 km before 6 km
    EXPECT_EQ(g.adj[0][1].to, 2);
    EXPECT_GT(g.adj[0][0].weight, g.adj[0][1].weight);  // decay with distance
}

TEST(StationGraph, ParameterValidation) {
    const Scenario sc = evrec::test::tiny_scenario();
    EXPECT_THROW(build_station_graph(sc, 0.0, 1.0, 1.0), ConfigError);
    EXPECT_THROW(build_station_graph(sc, 1.0, 0.0, 1.0), ConfigError);
    EXPECT_THROW(build_station_graph(sc, 1.0, 1.0, -0.1), ConfigError);
    // beta 0 is legal: every in-range edge weighs alpha
    const auto g = build_station_graph(sc, 3.5, 0.7, 0.0);
    EXPECT_DOUBLE_EQ(g.adj[0][0].weight, 0.7);
}

TEST(Groups, ConnectedComponentWithinCap) {
    const Scenario sc = evrec::test::tiny_scenario();
    const auto groups = build_groups(sc, 3.5, 6);
    ASSERT_EQ(groups.size(), 1u);
    EXPECT_EQ(groups[0], (std::vector<int>{0, 1, 2}));
}

TEST(Groups, OversizeComponentSplitsGreedily) {
    const Scenario sc = evrec::test::tiny_scenario();
    // component {0,1,2}, cap 2: seed 0 grabs its nearest neighbor 1
    const auto groups = build_groups(sc, 3.5, 2);
    ASSERT_EQ(groups.size(), 2u);
    EXPECT_EQ(groups[0], (std::vector<int>{0, 1}));
    EXPECT_EQ(groups[1], (std::vector<int>{2}));
}

TEST(Groups, SingletonsWhenNoEdges) {
    const Scenario sc = evrec::test::tiny_scenario();
    const auto groups = build_groups(sc, 3.0, 6);
    ASSERT_EQ(groups.size(), 3u);
    for (int n = 0; n < 3; ++n) EXPECT_EQ(groups[n], std::vector<int>{n});
    EXPECT_THROW(build_groups(sc, 3.0, 0), ConfigError);
}

TEST(Groups, PartitionPropertyOnLargeScenario) {
    const Scenario sc = Scenario::load(std::string(EVREC_SOURCE_DIR) + "/scenarios/desk.json");
    for (const double radius : {1.5, 2.5, 4.0}) {
        const auto groups = build_groups(sc, radius, 6);
        std::set<int> seen;
        for (std::size_t gi = 0; gi < groups.size(); ++gi) {
            const auto& g = groups[gi];
            ASSERT_FALSE(g.empty());
            ASSERT_LE(g.size(), 6u);
            EXPECT_TRUE(std::is_sorted(g.begin(), g.end()));
            for (int n : g) EXPECT_TRUE(seen.insert(n).second) << "station in two groups";
            if (gi > 0) EXPECT_LT(groups[gi - 1].front(), g.front());
        }
        EXPECT_EQ(seen.size(), static_cast<std::size_t>(sc.num_stations()));
    }
}
