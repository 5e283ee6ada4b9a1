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

#ifndef QTDOA_CRLB_HPP
#define QTDOA_CRLB_HPP

#include <vector>

#include "qtdoa/core.hpp"

namespace qtdoa {

/// Rows whose true combined distance is below this are rejected: the
/// relative-noise likelihood degenerates as d_k -> 0.
inline constexpr double kFimRowClamp = 1e-6;  // meters

/// Condition-number ceiling beyond which the bound is unavailable.
inline constexpr double kFimMaxCondition = 1e12;

/// Fisher information of the sensor position under the relative-noise
/// TDoA likelihood, evaluated at ground truth.
struct FisherInfo {
    Matrix J;  // d x d symmetric PSD, units 1/m^2
    double eta = 0.0;
    Point x;
};

/// J = sum_k (1 / (eta^2 d_k^2)) u_k u_k' with u_k the difference of the
/// two unit leg vectors and d_k the true combined distance of row k.
/// Throws SingularGeometryError if x coincides with a used anchor,
/// DegenerateRowError if any |d_k| < kFimRowClamp.
FisherInfo fisher_information(const Point& x, const AnchorSet& anchors,
                              const RangingScenario& scenario, double eta);

/// sqrt(Tr(J^-1)), meters: the per-geometry lower bound on expected error.
/// Throws UnboundedBoundError when J is singular or has condition number
/// above kFimMaxCondition.
double jensen_bound(const FisherInfo& info);

/// Mean Euclidean deviation (1/r) sum ||x_l - xhat_l|| over paired lists.
double mean_error(const std::vector<Point>& truths, const std::vector<Point>& estimates);

}  // namespace qtdoa

#endif  // QTDOA_CRLB_HPP
