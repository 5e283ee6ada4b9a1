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

#ifndef QTDOA_CORE_HPP
#define QTDOA_CORE_HPP

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "qtdoa/errors.hpp"

namespace qtdoa {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A position in R^d, meters. Plain Eigen vector; validated at API
/// boundaries via validate_point.
using Point = Eigen::VectorXd;

/// Throws ValidationError unless all coordinates are finite and d >= 2.
void validate_point(const Point& p);

/// Minimum pairwise anchor separation accepted at construction, meters.
inline constexpr double kMinAnchorSeparation = 1e-9;

/// Fixed reference geometry: an ordered list of n pairwise-distinct anchor
/// positions sharing one dimension d. Immutable after construction.
class AnchorSet {
   public:
    explicit AnchorSet(std::vector<Point> anchors);

    int size() const { return static_cast<int>(anchors_.size()); }
    int dim() const { return dim_; }

    /// 0-based access.
    const Point& operator[](int i) const { return anchors_[i]; }
    const std::vector<Point>& points() const { return anchors_; }

    /// Largest pairwise anchor distance, meters.
    double span() const { return span_; }

   private:
    std::vector<Point> anchors_;
    int dim_ = 0;
    double span_ = 0.0;
};

/// One ranging: a signed combination of sensor-anchor distances.
/// Anchor indices are 1-based here (matching configuration conventions)
/// and converted to 0-based exactly once, inside the evaluating operations.
struct RangingRow {
    std::vector<int> indices;  // distinct, each in [1, n]
    std::vector<int> signs;    // entries in {-1, +1}, same length

    /// Exactly two anchors with opposite signs.
    bool is_tdoa() const;

    /// Throws ValidationError if malformed for an n-anchor set.
    void validate(int n_anchors) const;
};

/// The m rangings of a measurement campaign against an n-anchor set.
struct RangingScenario {
    std::vector<RangingRow> rows;
    int n_anchors = 0;

    int size() const { return static_cast<int>(rows.size()); }
    bool all_tdoa() const;
    void validate() const;

    /// Builds the TDoA scenario with rows ||x-a_i|| - ||x-a_j|| for the
    /// given (i, j) pairs, 1-based.
    static RangingScenario tdoa_pairs(const std::vector<std::pair<int, int>>& pairs,
                                      int n_anchors);
};

/// m x n sign matrix mapping per-anchor distances to measured combinations:
/// row k carries the signs of ranging k at its anchor columns, 0 elsewhere.
Matrix build_incidence(const RangingScenario& scenario);

/// Signed combined distance sum_i omega_i * ||x - a_i|| for one row, meters.
double combined_distance(const Point& x, const AnchorSet& anchors, const RangingRow& row);

/// Exact combined distances for every row of the scenario.
Vector truth_vector(const Point& x, const AnchorSet& anchors, const RangingScenario& scenario);

}  // namespace qtdoa

#endif  // QTDOA_CORE_HPP
