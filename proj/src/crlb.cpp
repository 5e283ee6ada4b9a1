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

#include "qtdoa/crlb.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>

namespace qtdoa {

FisherInfo fisher_information(const Point& x, const AnchorSet& anchors,
                              const RangingScenario& scenario, double eta) {
    validate_point(x);
    scenario.validate();
    if (scenario.n_anchors != anchors.size()) {
        throw ValidationError("scenario anchor count disagrees with the anchor set");
    }
    if (x.size() != anchors.dim()) {
        throw ValidationError("sensor dimension disagrees with the anchors");
    }
    if (!(eta > 0.0) || !std::isfinite(eta)) {
        throw ValidationError("noise level must be positive and finite");
    }

    const int dim = anchors.dim();
    FisherInfo info;
    info.J = Matrix::Zero(dim, dim);
    info.eta = eta;
    info.x = x;
    for (int k = 0; k < scenario.size(); ++k) {
        const RangingRow& row = scenario.rows[k];
        Vector u = Vector::Zero(dim);
        double combined = 0.0;
        for (size_t t = 0; t < row.indices.size(); ++t) {
            const Point diff = x - anchors[row.indices[t] - 1];
            const double dist = diff.norm();
            if (dist < kMinAnchorSeparation) {
                throw SingularGeometryError("sensor coincides with anchor " +
                                            std::to_string(row.indices[t]));
            }
            u += (row.signs[t] / dist) * diff;
            combined += row.signs[t] * dist;
        }
        if (std::abs(combined) < kFimRowClamp) {
            throw DegenerateRowError("row " + std::to_string(k + 1) +
                                     " has a near-zero combined distance");
        }
        info.J.noalias() += (1.0 / (eta * eta * combined * combined)) * (u * u.transpose());
    }
    return info;
}

double jensen_bound(const FisherInfo& info) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(info.J);
    const Vector vals = eig.eigenvalues();
    const double lo = vals.minCoeff();
    const double hi = vals.maxCoeff();
    if (!(lo > 0.0) || hi / lo > kFimMaxCondition) {
        throw UnboundedBoundError("information matrix is singular or near singular");
    }
    return std::sqrt(vals.cwiseInverse().sum());
}

double mean_error(const std::vector<Point>& truths, const std::vector<Point>& estimates) {
    if (truths.size() != estimates.size()) {
        throw ValidationError("truth and estimate lists differ in length");
    }
    if (truths.empty()) throw ValidationError("mean error over an empty list");
    double total = 0.0;
    for (size_t i = 0; i < truths.size(); ++i) {
        if (truths[i].size() != estimates[i].size()) {
            throw ValidationError("truth and estimate dimensions differ");
        }
        total += (truths[i] - estimates[i]).norm();
    }
    return total / static_cast<double>(truths.size());
}

}  // namespace qtdoa
