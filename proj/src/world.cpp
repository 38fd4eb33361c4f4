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

#include "scenegen/world.hpp"

#include <stdexcept>

namespace scenegen {

ActionVec Action::vector() const {
  ActionVec v;
  v << translation, rotation, gripper;
  return v;
}

Action Action::FromVector(const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (v.size() != kDim) throw std::invalid_argument("Action: expected 7 components");
  return {v.segment<3>(0), v.segment<3>(3), v(6)};
}

Action Action::Between(const Pose& from, const Pose& to, double gripper) {
  const Pose delta = compose(inverse(from), to);
  return {delta.translation, delta.rotation.log(), gripper};
}

const Pose& WorldState::object(const std::string& id) const {
  const auto it = objects.find(id);
  if (it == objects.end()) throw std::invalid_argument("world: unknown object '" + id + "'");
  return it->second;
}

}  // namespace scenegen
