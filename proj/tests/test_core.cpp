// Copyright 2026 The qtdoa Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <utility>
#include <vector>

#include "doctest.h"
#include "qtdoa/core.hpp"
#include "qtdoa/rng.hpp"

using namespace qtdoa;

namespace {

Point pt(double a, double b, double c) {
    Point p(3);
    p << a, b, c;
    return p;
}

/// The 16-anchor cubic testbed used throughout: cube corners, face centers
/// and two half-height points, paired so every pair is norm-symmetric about
/// the origin.
AnchorSet testbed_anchors() {
    return AnchorSet({pt(1, 1, 1), pt(-1, 1, 1), pt(1, -1, 1), pt(-1, -1, 1),
                      pt(1, 1, -1), pt(-1, 1, -1), pt(1, -1, -1), pt(-1, -1, -1),
                      pt(0, 0, 1), pt(0, 0, -1), pt(0, 1, 0), pt(0, -1, 0),
                      pt(1, 0, 0), pt(-1, 0, 0), pt(0, 0, 0.5), pt(0, 0, -0.5)});
}

RangingScenario testbed_scenario() {
    return RangingScenario::tdoa_pairs(
        {{1, 2}, {3, 4}, {5, 6}, {7, 8}, {9, 10}, {11, 12}, {13, 14}, {15, 16}}, 16);
}

}  // namespace

TEST_CASE("incidence of two disjoint pairs") {
    const RangingScenario scen = RangingScenario::tdoa_pairs({{1, 2}, {3, 4}}, 4);
    const Matrix p = build_incidence(scen);
    Matrix expect(2, 4);
    expect << 1, -1, 0, 0, 0, 0, 1, -1;
    CHECK((p - expect).norm() == 0.0);
}

TEST_CASE("incidence of the smallest scenario") {
    const RangingScenario scen = RangingScenario::tdoa_pairs({{1, 2}}, 2);
    const Matrix p = build_incidence(scen);
    REQUIRE(p.rows() == 1);
    REQUIRE(p.cols() == 2);
    CHECK(p(0, 0) == 1.0);
    CHECK(p(0, 1) == -1.0);
}

TEST_CASE("incidence of the 16-anchor testbed") {
    const Matrix p = build_incidence(testbed_scenario());
    REQUIRE(p.rows() == 8);
    REQUIRE(p.cols() == 16);
    for (int k = 0; k < 8; ++k) {
        for (int j = 0; j < 16; ++j) {
            const double expect = (j == 2 * k) ? 1.0 : (j == 2 * k + 1) ? -1.0 : 0.0;
            CHECK(p(k, j) == expect);
        }
        CHECK(p.row(k).sum() == 0.0);
        CHECK(p.row(k).cwiseAbs().sum() == 2.0);
    }
}

TEST_CASE("incidence rejects out-of-range indices") {
    RangingScenario scen;
    scen.n_anchors = 2;
    scen.rows.push_back({{1, 3}, {1, -1}});
    CHECK_THROWS_AS(build_incidence(scen), ValidationError);
}

TEST_CASE("combined distance of a symmetric pair at the midpoint") {
    const AnchorSet anchors({pt(1, 1, 1), pt(-1, -1, -1)});
    const RangingRow row{{1, 2}, {1, -1}};
    CHECK(combined_distance(pt(0, 0, 0), anchors, row) == doctest::Approx(0.0));
}

TEST_CASE("combined distance off the midpoint") {
    const AnchorSet anchors({pt(1, 1, 1), pt(-1, -1, -1)});
    const RangingRow row{{1, 2}, {1, -1}};
    // ||(1,1,1)|| - ||(3,3,3)|| = sqrt(3) - 3 sqrt(3) = -2 sqrt(3).
    const double expect = -2.0 * std::sqrt(3.0);
    CHECK(combined_distance(pt(2, 2, 2), anchors, row) ==
          doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("single-anchor row at the anchor itself") {
    const AnchorSet anchors({pt(0.5, -0.25, 2), pt(0, 0, 0)});
    const RangingRow row{{1}, {1}};
    CHECK(row.is_tdoa() == false);
    CHECK(combined_distance(pt(0.5, -0.25, 2), anchors, row) == 0.0);
}

TEST_CASE("truth vector with one row reduces to combined_distance") {
    const AnchorSet anchors = testbed_anchors();
    RangingScenario scen;
    scen.n_anchors = 16;
    scen.rows.push_back({{9, 10}, {1, -1}});
    const Point x = pt(0.3, -0.8, 1.1);
    const Vector t = truth_vector(x, anchors, scen);
    REQUIRE(t.size() == 1);
    CHECK(t[0] == combined_distance(x, anchors, scen.rows[0]));
}

TEST_CASE("testbed truth vanishes at the origin") {
    // Every default pair has equal-norm anchors, so all eight combined
    // distances are zero at x = 0.
    const Vector t = truth_vector(pt(0, 0, 0), testbed_anchors(), testbed_scenario());
    REQUIRE(t.size() == 8);
    CHECK(t.cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("permuting rows permutes the truth vector") {
    const AnchorSet anchors = testbed_anchors();
    RangingScenario scen = testbed_scenario();
    const Point x = pt(1.7, -0.4, 0.9);
    const Vector before = truth_vector(x, anchors, scen);
    std::swap(scen.rows[0], scen.rows[5]);
    std::swap(scen.rows[2], scen.rows[7]);
    const Vector after = truth_vector(x, anchors, scen);
    CHECK(after[0] == before[5]);
    CHECK(after[5] == before[0]);
    CHECK(after[2] == before[7]);
    CHECK(after[7] == before[2]);
    CHECK(after[1] == before[1]);
}

TEST_CASE("incidence factors the truth vector through per-anchor distances") {
    const AnchorSet anchors = testbed_anchors();
    const RangingScenario scen = testbed_scenario();
    const Matrix p = build_incidence(scen);
    for (int rep = 0; rep < 50; ++rep) {
        Point x(3);
        for (int j = 0; j < 3; ++j) {
            const auto key = rng::derive_key(42, rng::Stream::sensor,
                                             static_cast<std::uint64_t>(rep),
                                             static_cast<std::uint64_t>(j));
            x[j] = 4.0 * rng::uniform01(key) - 2.0;
        }
        Vector y(anchors.size());
        for (int i = 0; i < anchors.size(); ++i) y[i] = (x - anchors[i]).norm();
        const Vector lhs = p * y;
        const Vector rhs = truth_vector(x, anchors, scen);
        CHECK((lhs - rhs).norm() <= 1e-12 * std::max(1.0, rhs.norm()));
    }
}

TEST_CASE("TDoA rows are bounded by the anchor separation") {
    const AnchorSet anchors = testbed_anchors();
    const RangingScenario scen = testbed_scenario();
    for (int rep = 0; rep < 50; ++rep) {
        Point x(3);
        for (int j = 0; j < 3; ++j) {
            const auto key = rng::derive_key(43, rng::Stream::sensor,
                                             static_cast<std::uint64_t>(rep),
                                             static_cast<std::uint64_t>(j));
            x[j] = 6.0 * rng::uniform01(key) - 3.0;
        }
        for (const RangingRow& row : scen.rows) {
            const double sep =
                (anchors[row.indices[0] - 1] - anchors[row.indices[1] - 1]).norm();
            CHECK(std::abs(combined_distance(x, anchors, row)) <= sep + 1e-12);
        }
    }
}

TEST_CASE("anchor sets reject duplicates and dimension mismatches") {
    CHECK_THROWS_AS(AnchorSet({pt(1, 1, 1), pt(1, 1, 1)}), ValidationError);
    // Separation below the 1e-9 floor counts as duplicate.
    CHECK_THROWS_AS(AnchorSet({pt(0, 0, 0), pt(0, 0, 1e-10)}), ValidationError);
    Point p2(2);
    p2 << 1, 2;
    CHECK_THROWS_AS(AnchorSet({pt(0, 0, 0), p2}), ValidationError);
    CHECK_NOTHROW(AnchorSet({pt(0, 0, 0), pt(0, 0, 1e-8)}));
}

TEST_CASE("ranging rows validate indices and signs") {
    AnchorSet anchors({pt(0, 0, 0), pt(1, 0, 0), pt(0, 1, 0)});
    CHECK_NOTHROW(RangingRow({{1, 3}, {1, -1}}).validate(3));
    CHECK_THROWS_AS(RangingRow({{1, 1}, {1, -1}}).validate(3), ValidationError);
    CHECK_THROWS_AS(RangingRow({{0, 2}, {1, -1}}).validate(3), ValidationError);
    CHECK_THROWS_AS(RangingRow({{1, 4}, {1, -1}}).validate(3), ValidationError);
    CHECK_THROWS_AS(RangingRow({{1, 2}, {1, 2}}).validate(3), ValidationError);
    CHECK_THROWS_AS(RangingRow({{1, 2}, {1}}).validate(3), ValidationError);
    CHECK_THROWS_AS(RangingRow({{}, {}}).validate(3), ValidationError);
}

TEST_CASE("tdoa classification") {
    CHECK(RangingRow({{1, 2}, {1, -1}}).is_tdoa());
    CHECK(RangingRow({{2, 1}, {-1, 1}}).is_tdoa());
    CHECK_FALSE(RangingRow({{1, 2}, {1, 1}}).is_tdoa());
    CHECK_FALSE(RangingRow({{1}, {1}}).is_tdoa());
    CHECK_FALSE(RangingRow({{1, 2, 3}, {1, -1, 1}}).is_tdoa());
}

TEST_CASE("point validation") {
    CHECK_NOTHROW(validate_point(pt(0, 0, 0)));
    Point bad(3);
    bad << 1.0, std::nan(""), 0.0;
    CHECK_THROWS_AS(validate_point(bad), ValidationError);
    Point one(1);
    one << 1.0;
    CHECK_THROWS_AS(validate_point(one), ValidationError);
}
