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

#ifndef QTDOA_ERRORS_HPP
#define QTDOA_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace qtdoa {

/// Base class for all qtdoa errors.
class Error : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// Malformed input data (bad dimensions, non-finite values, invalid indices).
class ValidationError : public Error {
   public:
    using Error::Error;
};

/// A scenario shape the requested operation does not support (e.g. a
/// non-TDoA row handed to the pairwise relaxation).
class UnsupportedScenarioError : public Error {
   public:
    using Error::Error;
};

/// Sensor coincides with an anchor referenced by the scenario.
class SingularGeometryError : public Error {
   public:
    using Error::Error;
};

/// A ranging row whose true combined distance is below the information
/// clamp, making the per-row likelihood degenerate.
class DegenerateRowError : public Error {
   public:
    using Error::Error;
};

/// Fisher information too ill-conditioned to invert for the error bound.
class UnboundedBoundError : public Error {
   public:
    using Error::Error;
};

/// Configuration file problems; message names the offending key.
class ConfigError : public Error {
   public:
    using Error::Error;
};

}  // namespace qtdoa

#endif  // QTDOA_ERRORS_HPP
