// Copyright 2026 The egofuse Authors
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

#pragma once

#include <array>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "egofuse/rotation.hpp"

namespace egofuse {

inline constexpr int kNumJoints = 24;
inline constexpr int kPoseDim = 3 * kNumJoints;
inline constexpr int kNumFootParts = 4;

enum class FootPart : int { left_toe = 0, left_heel = 1, right_toe = 2, right_heel = 3 };

inline const char* foot_part_name(FootPart k) {
  static constexpr std::array<const char*, kNumFootParts> names = {"left_toe", "left_heel", "right_toe",
                                                                  "right_heel"};
  return names[static_cast<int>(k)];
}

struct Joint {
  std::string name;
  int parent = -1;
  Vec3 offset = Vec3::Zero();  // meters, in the parent frame
};

struct FootMarker {
  int joint = 0;
  Vec3 offset = Vec3::Zero();  // meters, in the joint frame
};

/// Articulated body: 24 joints in topological order, the chain from the root
/// to the head joint, and four rigid marker patches under toes and heels.
///
/// Joint world rotation is the ordered product of the local rotations along
/// the chain; positions follow parent_pos + parent_rot * (scale * offset).
/// Scenes and the skeleton share a z-up convention; the rest pose faces +x.
class Skeleton {
 public:
  Skeleton() = default;

  Skeleton(std::vector<Joint> joints, std::vector<int> head_chain,
           std::array<std::vector<FootMarker>, kNumFootParts> markers, double scale = 1.0)
      : joints_(std::move(joints)), head_chain_(std::move(head_chain)), markers_(std::move(markers)),
        scale_(scale) {
    validate();
    build_ancestors();
  }

  const std::vector<Joint>& joints() const { return joints_; }
  const Joint& joint(int i) const { return joints_[static_cast<size_t>(i)]; }
  const std::vector<int>& head_chain() const { return head_chain_; }
  int head_joint() const { return head_chain_.back(); }
  const std::vector<FootMarker>& markers(FootPart k) const { return markers_[static_cast<size_t>(k)]; }
  double scale() const { return scale_; }

  // Ancestors of joint i ordered root first, including i itself.
  const std::vector<int>& chain_to(int i) const { return chains_[static_cast<size_t>(i)]; }

  int find_joint(const std::string& name) const {
    for (size_t i = 0; i < joints_.size(); ++i) {
      if (joints_[i].name == name) return static_cast<int>(i);
    }
    return -1;
  }

  Skeleton with_scale(double scale) const {
    Skeleton s = *this;
    s.scale_ = scale;
    s.validate();
    return s;
  }

  /// SMPL joint topology with generic adult proportions.
  static Skeleton smpl_default();

 private:
  void validate() const {
    if (joints_.size() != static_cast<size_t>(kNumJoints)) {
      throw Error(Errc::invalid_skeleton, "expected 24 joints, got " + std::to_string(joints_.size()));
    }
    if (!(scale_ > 0.0) || !std::isfinite(scale_)) {
      throw Error(Errc::invalid_skeleton, "scale must be positive and finite");
    }
    int roots = 0;
    for (size_t i = 0; i < joints_.size(); ++i) {
      const int p = joints_[i].parent;
      if (p < 0) {
        ++roots;
        if (i != 0) throw Error(Errc::invalid_skeleton, "root must be joint 0");
      } else if (p >= static_cast<int>(i)) {
        throw Error(Errc::invalid_skeleton, "joint '" + joints_[i].name + "' is not in topological order");
      }
      if (!joints_[i].offset.allFinite()) {
        throw Error(Errc::invalid_skeleton, "joint '" + joints_[i].name + "' has a non-finite offset");
      }
    }
    if (roots != 1) throw Error(Errc::invalid_skeleton, "skeleton must have exactly one root");
    if (head_chain_.empty() || head_chain_.front() != 0) {
      throw Error(Errc::invalid_skeleton, "head chain must start at the root");
    }
    for (size_t i = 1; i < head_chain_.size(); ++i) {
      const int j = head_chain_[i];
      if (j <= 0 || j >= kNumJoints || joints_[static_cast<size_t>(j)].parent != head_chain_[i - 1]) {
        throw Error(Errc::invalid_skeleton, "head chain must follow parent links");
      }
    }
    for (int k = 0; k < kNumFootParts; ++k) {
      const auto& set = markers_[static_cast<size_t>(k)];
      if (set.empty()) {
        throw Error(Errc::invalid_skeleton,
                    std::string("foot marker set '") + foot_part_name(static_cast<FootPart>(k)) + "' is empty");
      }
      for (const auto& m : set) {
        if (m.joint < 0 || m.joint >= kNumJoints || !m.offset.allFinite()) {
          throw Error(Errc::invalid_skeleton, "foot marker references an invalid joint or offset");
        }
      }
    }
  }

  void build_ancestors() {
    chains_.assign(joints_.size(), {});
    for (size_t i = 0; i < joints_.size(); ++i) {
      const int p = joints_[i].parent;
      if (p >= 0) chains_[i] = chains_[static_cast<size_t>(p)];
      chains_[i].push_back(static_cast<int>(i));
    }
  }

  std::vector<Joint> joints_;
  std::vector<int> head_chain_;
  std::array<std::vector<FootMarker>, kNumFootParts> markers_;
  double scale_ = 1.0;
  std::vector<std::vector<int>> chains_;
};

inline Skeleton Skeleton::smpl_default() {
  // x forward, y left, z up; pelvis at the origin.
  std::vector<Joint> j = {
      {"pelvis", -1, {0.0, 0.0, 0.0}},
      {"left_hip", 0, {0.0, 0.09, -0.08}},
      {"right_hip", 0, {0.0, -0.09, -0.08}},
      {"spine1", 0, {0.0, 0.0, 0.11}},
      {"left_knee", 1, {0.0, 0.0, -0.40}},
      {"right_knee", 2, {0.0, 0.0, -0.40}},
      {"spine2", 3, {0.0, 0.0, 0.13}},
      {"left_ankle", 4, {0.0, 0.0, -0.40}},
      {"right_ankle", 5, {0.0, 0.0, -0.40}},
      {"spine3", 6, {0.0, 0.0, 0.05}},
      {"left_foot", 7, {0.13, 0.0, -0.05}},
      {"right_foot", 8, {0.13, 0.0, -0.05}},
      {"neck", 9, {0.0, 0.0, 0.21}},
      {"left_collar", 9, {0.0, 0.07, 0.12}},
      {"right_collar", 9, {0.0, -0.07, 0.12}},
      {"head", 12, {0.02, 0.0, 0.09}},
      {"left_shoulder", 13, {0.0, 0.12, 0.0}},
      {"right_shoulder", 14, {0.0, -0.12, 0.0}},
      {"left_elbow", 16, {0.0, 0.26, 0.0}},
      {"right_elbow", 17, {0.0, -0.26, 0.0}},
      {"left_wrist", 18, {0.0, 0.25, 0.0}},
      {"right_wrist", 19, {0.0, -0.25, 0.0}},
      {"left_hand", 20, {0.0, 0.08, 0.0}},
      {"right_hand", 21, {0.0, -0.08, 0.0}},
  };
  // 2x2 patches, 4 cm apart, on the sole plane 7 cm below the ankle.
  auto patch = [](int joint, double x0, double z) {
    std::vector<FootMarker> m;
    for (double dx : {0.0, 0.04}) {
      for (double dy : {-0.02, 0.02}) m.push_back({joint, Vec3(x0 + dx, dy, z)});
    }
    return m;
  };
  std::array<std::vector<FootMarker>, kNumFootParts> markers = {
      patch(10, 0.0, -0.02),    // left toe, on left_foot
      patch(7, -0.06, -0.07),   // left heel, on left_ankle
      patch(11, 0.0, -0.02),    // right toe
      patch(8, -0.06, -0.07),   // right heel
  };
  return Skeleton(std::move(j), {0, 3, 6, 9, 12, 15}, std::move(markers), 1.0);
}

// ---------------------------------------------------------------------------
// Skeleton file: {"format": "egofuse-skeleton", "version": 1, "scale": s,
//   "joints": [{"name", "parent", "offset": [x,y,z]}],
//   "head_chain": [i...],
//   "foot_markers": {"left_toe": [{"joint", "offset"}], ...}}

inline constexpr int kSkeletonFormatVersion = 1;

inline nlohmann::json skeleton_to_json(const Skeleton& sk) {
  nlohmann::json j;
  j["format"] = "egofuse-skeleton";
  j["version"] = kSkeletonFormatVersion;
  j["scale"] = sk.scale();
  j["joints"] = nlohmann::json::array();
  for (const auto& jt : sk.joints()) {
    j["joints"].push_back({{"name", jt.name}, {"parent", jt.parent},
                           {"offset", {jt.offset.x(), jt.offset.y(), jt.offset.z()}}});
  }
  j["head_chain"] = sk.head_chain();
  for (int k = 0; k < kNumFootParts; ++k) {
    auto& arr = j["foot_markers"][foot_part_name(static_cast<FootPart>(k))];
    arr = nlohmann::json::array();
    for (const auto& m : sk.markers(static_cast<FootPart>(k))) {
      arr.push_back({{"joint", m.joint}, {"offset", {m.offset.x(), m.offset.y(), m.offset.z()}}});
    }
  }
  return j;
}

namespace detail {

inline Vec3 json_vec3(const nlohmann::json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) throw Error(Errc::parse_schema, what + " must be a 3-element array");
  Vec3 v(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
  if (!v.allFinite()) throw Error(Errc::parse_non_finite, what + " is not finite");
  return v;
}

}  // namespace detail

inline Skeleton skeleton_from_json(const nlohmann::json& j) {
  try {
    if (j.value("version", 0) != kSkeletonFormatVersion) {
      throw Error(Errc::parse_schema, "unsupported skeleton version");
    }
    std::vector<Joint> joints;
    for (const auto& jt : j.at("joints")) {
      joints.push_back({jt.at("name").get<std::string>(), jt.at("parent").get<int>(),
                        detail::json_vec3(jt.at("offset"), "joint offset")});
    }
    std::array<std::vector<FootMarker>, kNumFootParts> markers;
    for (int k = 0; k < kNumFootParts; ++k) {
      for (const auto& m : j.at("foot_markers").at(foot_part_name(static_cast<FootPart>(k)))) {
        markers[static_cast<size_t>(k)].push_back(
            {m.at("joint").get<int>(), detail::json_vec3(m.at("offset"), "marker offset")});
      }
    }
    return Skeleton(std::move(joints), j.at("head_chain").get<std::vector<int>>(), std::move(markers),
                    j.value("scale", 1.0));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_schema, std::string("skeleton: ") + e.what());
  }
}

inline Skeleton load_skeleton(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_unreadable, path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_schema, path + ": " + e.what());
  }
  return skeleton_from_json(j);
}

inline void save_skeleton(const Skeleton& sk, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_unreadable, path);
  out << skeleton_to_json(sk).dump(2) << "\n";
}

}  // namespace egofuse
