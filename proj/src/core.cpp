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

#include "qtdoa/core.hpp"

#include <cmath>
#include <set>
#include <string>

namespace qtdoa {

void validate_point(const Point& p) {
    if (p.size() < 2) {
        throw ValidationError("point dimension must be >= 2, got " + std::to_string(p.size()));
    }
    if (!p.allFinite()) {
        throw ValidationError("point has non-finite coordinates");
    }
}

AnchorSet::AnchorSet(std::vector<Point> anchors) : anchors_(std::move(anchors)) {
    if (anchors_.empty()) {
        throw ValidationError("anchor set must contain at least one anchor");
    }
    validate_point(anchors_.front());
    dim_ = static_cast<int>(anchors_.front().size());
    for (const Point& a : anchors_) {
        validate_point(a);
        if (a.size() != dim_) {
            throw ValidationError("anchors must share one dimension");
        }
    }
    for (std::size_t i = 0; i < anchors_.size(); ++i) {
        for (std::size_t j = i + 1; j < anchors_.size(); ++j) {
            const double sep = (anchors_[i] - anchors_[j]).norm();
            if (sep <= kMinAnchorSeparation) {
                throw ValidationError("anchors " + std::to_string(i + 1) + " and " +
                                      std::to_string(j + 1) + " are closer than the minimum separation");
            }
            span_ = std::max(span_, sep);
        }
    }
}

bool RangingRow::is_tdoa() const {
    return indices.size() == 2 && signs.size() == 2 && signs[0] + signs[1] == 0 &&
           (signs[0] == 1 || signs[0] == -1);
}

void RangingRow::validate(int n_anchors) const {
    if (indices.empty()) {
        throw ValidationError("ranging row has no anchors");
    }
    if (indices.size() != signs.size()) {
        throw ValidationError("ranging row index/sign length mismatch");
    }
    std::set<int> seen;
    for (std::size_t k = 0; k < indices.size(); ++k) {
        const int idx = indices[k];
        if (idx < 1 || idx > n_anchors) {
            throw ValidationError("anchor index " + std::to_string(idx) + " out of range [1, " +
                                  std::to_string(n_anchors) + "]");
        }
        if (!seen.insert(idx).second) {
            throw ValidationError("anchor index " + std::to_string(idx) + " repeated in ranging row");
        }
        if (signs[k] != 1 && signs[k] != -1) {
            throw ValidationError("ranging sign must be +1 or -1");
        }
    }
}

bool RangingScenario::all_tdoa() const {
    for (const RangingRow& row : rows) {
        if (!row.is_tdoa()) return false;
    }
    return true;
}

void RangingScenario::validate() const {
    if (rows.empty()) {
        throw ValidationError("scenario must contain at least one ranging row");
    }
    if (n_anchors < 1) {
        throw ValidationError("scenario anchor count must be >= 1");
    }
    for (const RangingRow& row : rows) {
        row.validate(n_anchors);
    }
}

RangingScenario RangingScenario::tdoa_pairs(const std::vector<std::pair<int, int>>& pairs,
                                            int n_anchors) {
    RangingScenario scenario;
    scenario.n_anchors = n_anchors;
    scenario.rows.reserve(pairs.size());
    for (const auto& [i, j] : pairs) {
        scenario.rows.push_back(RangingRow{{i, j}, {+1, -1}});
    }
    scenario.validate();
    return scenario;
}

Matrix build_incidence(const RangingScenario& scenario) {
    scenario.validate();
    Matrix incidence = Matrix::Zero(scenario.size(), scenario.n_anchors);
    for (int k = 0; k < scenario.size(); ++k) {
        const RangingRow& row = scenario.rows[k];
        for (std::size_t t = 0; t < row.indices.size(); ++t) {
            incidence(k, row.indices[t] - 1) = static_cast<double>(row.signs[t]);
        }
    }
    return incidence;
}

double combined_distance(const Point& x, const AnchorSet& anchors, const RangingRow& row) {
    validate_point(x);
    if (x.size() != anchors.dim()) {
        throw ValidationError("sensor dimension does not match anchors");
    }
    row.validate(anchors.size());
    double total = 0.0;
    for (std::size_t t = 0; t < row.indices.size(); ++t) {
        total += row.signs[t] * (x - anchors[row.indices[t] - 1]).norm();
    }
    return total;
}

Vector truth_vector(const Point& x, const AnchorSet& anchors, const RangingScenario& scenario) {
    scenario.validate();
    if (scenario.n_anchors != anchors.size()) {
        throw ValidationError("scenario anchor count does not match anchor set");
    }
    Vector truth(scenario.size());
    for (int k = 0; k < scenario.size(); ++k) {
        truth[k] = combined_distance(x, anchors, scenario.rows[k]);
    }
    return truth;
}

}  // namespace qtdoa
