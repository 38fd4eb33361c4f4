// Copyright 2026 The scenegen Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SCENEGEN_TOLERANCES_HPP_
#define SCENEGEN_TOLERANCES_HPP_

namespace scenegen::tol {

// core rigid-body algebra (meters / radians)
inline constexpr double kAlgebra = 1e-9;

// slack allowed on per-step continuity bounds of assembled trajectories
inline constexpr double kContinuity = 1e-12;

// resting-contact slack: objects may sit this far below a support surface
inline constexpr double kContact = 1e-6;

// action round-trip check in dataset statistics (meters)
inline constexpr double kActionRoundTrip = 1e-6;

// gradient check: relative error bound and the magnitude floor used in the
// denominator so that vanishing gradients are compared absolutely
inline constexpr double kGradRelative = 1e-4;
inline constexpr double kGradFloor = 1e-6;
inline constexpr double kGradStep = 1e-5;

// training aborts once the mean loss exceeds this value
inline constexpr double kDivergenceLoss = 1e3;

}  // namespace scenegen::tol

#endif  // SCENEGEN_TOLERANCES_HPP_
