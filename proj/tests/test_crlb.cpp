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
#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

#include "doctest.h"
#include "qtdoa/crlb.hpp"
#include "support/oracles.hpp"

using namespace qtdoa;

namespace {

Point pt(double a, double b, double c) {
    Point p(3);
    p << a, b, c;
    return p;
}

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

TEST_CASE("single collinear pair gives the closed-form rank-one information") {
    const AnchorSet anchors({pt(1, 0, 0), pt(-1, 0, 0)});
    const RangingScenario scen = RangingScenario::tdoa_pairs({{1, 2}}, 2);
    const Point x = pt(0.3, 0.0, 0.0);
    const double eta = 0.05;

    // Legs 0.7 and 1.3 along the axis; unit vectors oppose, so u = (-2,0,0)
    // and d = -0.6.
    const FisherInfo info = fisher_information(x, anchors, scen, eta);
    const double scale = 1.0 / (eta * eta * 0.36);
    CHECK(info.J(0, 0) == doctest::Approx(4.0 * scale).epsilon(1e-14));
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (i != 0 || j != 0) CHECK(info.J(i, j) == 0.0);

    // One row cannot pin three coordinates.
    CHECK(Eigen::FullPivLU<Matrix>(info.J).rank() == 1);
    CHECK_THROWS_AS(jensen_bound(info), UnboundedBoundError);
}

TEST_CASE("information scales as one over eta squared") {
    const AnchorSet anchors = testbed_anchors();
    const RangingScenario scen = testbed_scenario();
    const Point x = pt(0.5, 0.3, -0.7);
    const FisherInfo a = fisher_information(x, anchors, scen, 0.01);
    const FisherInfo b = fisher_information(x, anchors, scen, 0.02);
    CHECK((a.J / 4.0 - b.J).cwiseAbs().maxCoeff() <= 1e-12 * a.J.cwiseAbs().maxCoeff());
    CHECK(jensen_bound(b) == doctest::Approx(2.0 * jensen_bound(a)).epsilon(1e-10));
}

TEST_CASE("analytic information matches the likelihood curvature oracle") {
    const AnchorSet anchors = testbed_anchors();
    const RangingScenario scen = testbed_scenario();
    const double eta = 0.02;

    std::mt19937_64 rng(40);
    std::uniform_real_distribution<double> u(-0.8, 0.8);
    int checked = 0;
    for (int rep = 0; rep < 40 && checked < 20; ++rep) {
        const Point x = pt(u(rng), u(rng), u(rng));
        FisherInfo info;
        try {
            info = fisher_information(x, anchors, scen, eta);
        } catch (const DegenerateRowError&) {
            continue;  // sensor fell on a pair midplane; not a valid geometry
        }
        const Matrix H = testing::fd_negative_hessian(x, anchors, scen, eta);
        const double rel = (info.J - H).norm() / info.J.norm();
        CHECK(rel <= 1e-4);
        ++checked;
    }
    REQUIRE(checked == 20);
}

TEST_CASE("curvature oracle also agrees at the reference pose") {
    const AnchorSet anchors = testbed_anchors();
    const RangingScenario scen = testbed_scenario();
    const Point x = pt(0.5, 0.3, -0.7);
    const FisherInfo info = fisher_information(x, anchors, scen, 0.02);
    const Matrix H = testing::fd_negative_hessian(x, anchors, scen, 0.02);
    CHECK((info.J - H).norm() / info.J.norm() <= 1e-4);

    // The curvature should also be insensitive to the step within reason.
    const Matrix H2 = testing::fd_negative_hessian(x, anchors, scen, 0.02, 5e-4);
    CHECK((info.J - H2).norm() / info.J.norm() <= 1e-4);
}

TEST_CASE("bound closed forms") {
    FisherInfo info;
    info.J = Matrix::Identity(3, 3);
    info.eta = 0.01;
    info.x = pt(0, 0, 0);
    CHECK(jensen_bound(info) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-14));

    info.J = 4.0 * Matrix::Identity(3, 3);
    CHECK(jensen_bound(info) == doctest::Approx(std::sqrt(0.75)).epsilon(1e-14));

    info.J = Matrix::Identity(3, 3);
    info.J(2, 2) = 1e-13;  // condition 1e13 exceeds the ceiling
    CHECK_THROWS_AS(jensen_bound(info), UnboundedBoundError);
}

TEST_CASE("information is positive semidefinite across random geometries") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int checked = 0;
    while (checked < 1000) {
        std::vector<Point> pts;
        for (int i = 0; i < 6; ++i) pts.push_back(pt(u(rng), u(rng), u(rng)));
        const Point x = pt(u(rng), u(rng), u(rng));
        AnchorSet anchors({pt(0, 0, 0)});
        try {
            anchors = AnchorSet(pts);
        } catch (const ValidationError&) {
            continue;  // colliding random anchors
        }
        const RangingScenario scen =
            RangingScenario::tdoa_pairs({{1, 2}, {3, 4}, {5, 6}, {1, 6}, {2, 5}}, 6);
        try {
            const FisherInfo info = fisher_information(x, anchors, scen, 0.03);
            Eigen::SelfAdjointEigenSolver<Matrix> eig(info.J);
            CHECK(eig.eigenvalues().minCoeff() >= -1e-10);
            ++checked;
        } catch (const DegenerateRowError&) {
        } catch (const SingularGeometryError&) {
        }
    }
}

TEST_CASE("degenerate inputs are rejected") {
    const AnchorSet anchors = testbed_anchors();
    const RangingScenario scen = testbed_scenario();

    // On the midplane of pair one the true difference is exactly zero.
    CHECK_THROWS_AS(fisher_information(pt(0.0, 0.3, -0.2), anchors, scen, 0.01),
                    DegenerateRowError);
    // At an anchor a leg length vanishes.
    CHECK_THROWS_AS(fisher_information(pt(1, 1, 1), anchors, scen, 0.01),
                    SingularGeometryError);
    CHECK_THROWS_AS(fisher_information(pt(0.5, 0.3, -0.7), anchors, scen, 0.0),
                    ValidationError);
    CHECK_THROWS_AS(fisher_information(pt(0.5, 0.3, -0.7), anchors, scen, -0.01),
                    ValidationError);
}

TEST_CASE("mean error basics") {
    const Point zero = pt(0, 0, 0);
    CHECK(mean_error({zero}, {zero}) == 0.0);
    CHECK(mean_error({zero}, {pt(3, 4, 0)}) == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(mean_error({zero, zero}, {pt(3, 4, 0), pt(0, 0, 1)}) ==
          doctest::Approx(3.0).epsilon(1e-15));
    CHECK_THROWS_AS(mean_error({zero, zero}, {zero}), ValidationError);
    CHECK_THROWS_AS(mean_error({}, {}), ValidationError);
}
