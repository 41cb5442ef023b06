#include <cmath>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "evrec/geo.hpp"
#include "evrec/rng.hpp"

using namespace evrec;

TEST(Geo, DistanceIsEuclideanBetweenCellCenters) {
    GridSpec g{10, 10, 1.0};
    // 3-4-5 triangle: rows differ by 3, cols by 4.
    EXPECT_DOUBLE_EQ(cell_distance({0, 0}, {3, 4}, g), 5.0);
    GridSpec half{10, 10, 0.5};
    EXPECT_DOUBLE_EQ(cell_distance({0, 0}, {3, 4}, half), 2.5);
    EXPECT_DOUBLE_EQ(cell_distance({2, 2}, {2, 2}, g), 0.0);
}

TEST(Geo, DistanceSymmetryAndTriangleInequality) {
    GridSpec g{20, 20, 0.7};
    RngStream r(3);
    for (int i = 0; i < 200; ++i) {
        const CellCoord a{static_cast<int>(r.next_below(20)), static_cast<int>(r.next_below(20))};
        const CellCoord b{static_cast<int>(r.next_below(20)), static_cast<int>(r.next_below(20))};
        const CellCoord c{static_cast<int>(r.next_below(20)), static_cast<int>(r.next_below(20))};
        EXPECT_DOUBLE_EQ(cell_distance(a, b, g), cell_distance(b, a, g));
        EXPECT_LE(cell_distance(a, c, g), cell_distance(a, b, g) + cell_distance(b, c, g) + 1e-12);
    }
}

TEST(Geo, DistanceRejectsCellsOutsideGrid) {
    GridSpec g{5, 5, 1.0};
    EXPECT_THROW(cell_distance({5, 0}, {0, 0}, g), std::out_of_range);
    EXPECT_THROW(cell_distance({0, 0}, {0, -1}, g), std::out_of_range);
}

TEST(Geo, DriveTimeCeilingWithMinimumOneStep) {
    GridSpec g{10, 10, 1.0};
    // distance 5, speed 2 -> ceil(2.5) = 3 steps
    EXPECT_EQ(drive_time({0, 0}, {3, 4}, g, 2.0), 3);
    // distance 4, speed 2 -> exactly 2 steps
    EXPECT_EQ(drive_time({0, 0}, {0, 4}, g, 2.0), 2);
    // distance 5, speed 2.5 -> exactly 2 (5/2.5 is exact in binary floats)
    EXPECT_EQ(drive_time({0, 0}, {3, 4}, g, 2.5), 2);
    // same cell -> still one step on the road
    EXPECT_EQ(drive_time({4, 4}, {4, 4}, g, 2.0), 1);
    EXPECT_THROW(drive_time({0, 0}, {1, 1}, g, 0.0), ConfigError);
    EXPECT_THROW(drive_time({0, 0}, {1, 1}, g, -1.0), ConfigError);
}

TEST(Geo, GridValidation) {
    EXPECT_NO_THROW((GridSpec{1, 1, 0.1}).validate());
    EXPECT_THROW((GridSpec{0, 5, 1.0}).validate(), ConfigError);
    EXPECT_THROW((GridSpec{5, 0, 1.0}).validate(), ConfigError);
    EXPECT_THROW((GridSpec{5, 5, 0.0}).validate(), ConfigError);
    EXPECT_FALSE((GridSpec{5, 5, 1.0}).contains({5, 4}));
    EXPECT_TRUE((GridSpec{5, 5, 1.0}).contains({4, 4}));
}

TEST(Geo, DiagonalIsLongestDistance) {
    GridSpec g{20, 30, 0.5};
    EXPECT_DOUBLE_EQ(g.diagonal_km(), cell_distance({0, 0}, {19, 29}, g));
}

// Candidate sets: everything within the radius, padded with the nearest
// stations overall until there are five (fewer only when the map is small).
TEST(Geo, CandidatesWithinRadiusSortedByDistanceThenId) {
    GridSpec g{12, 12, 1.0};
    std::vector<CellCoord> cells{{5, 6}, {5, 4}, {6, 5}, {9, 9}, {0, 0}, {5, 7}, {11, 0}};
    // query at (5,5): distances are 1 (id 0), 1 (id 1), 1 (id 2), ~5.66 (3),
    // ~7.07 (4), 2 (id 5), ~7.81 (6). Only four stations fall inside the
    // radius, so the set is padded to the five nearest; ids break dist ties.
    const auto got = candidate_stations({5, 5}, cells, 2.5, g);
    EXPECT_EQ(got, (std::vector<int>{0, 1, 2, 5, 3}));
}

TEST(Geo, CandidatesPadToFiveNearest) {
    GridSpec g{12, 12, 1.0};
    std::vector<CellCoord> cells{{5, 6}, {5, 4}, {6, 5}, {9, 9}, {0, 0}, {5, 7}, {11, 0}};
    // radius so small nothing qualifies: fall back to the 5 nearest overall
    const auto got = candidate_stations({5, 5}, cells, 0.1, g);
    EXPECT_EQ(got, (std::vector<int>{0, 1, 2, 5, 3}));
}

TEST(Geo, CandidatesAllStationsWhenFewerThanFive) {
    GridSpec g{12, 12, 1.0};
    std::vector<CellCoord> cells{{9, 9}, {0, 0}, {11, 11}};
    const auto got = candidate_stations({5, 5}, cells, 0.1, g);
    EXPECT_EQ(got.size(), 3u);
    EXPECT_EQ(got[0], 0);  // (9,9) is nearest to (5,5)
}

TEST(Geo, CandidatesKeepEveryStationInsideRadius) {
    GridSpec g{12, 12, 1.0};
    std::vector<CellCoord> cells{{5, 6}, {5, 4}, {6, 5}, {4, 5}, {5, 7}, {5, 3}, {6, 6}};
    const auto got = candidate_stations({5, 5}, cells, 2.5, g);
    EXPECT_EQ(got.size(), 7u);  // more than five when the radius holds more
}

TEST(Geo, CandidatesRejectEmptyStationList) {
    GridSpec g{12, 12, 1.0};
    std::vector<CellCoord> none;
    EXPECT_THROW(candidate_stations({5, 5}, none, 2.5, g), ConfigError);
}
