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

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "egofuse/rotation.hpp"

namespace egofuse {

struct ScenePointCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;  // empty, or one unit normal per point

  bool has_normals() const { return !normals.empty(); }

  void validate() const {
    if (points.empty()) throw Error(Errc::empty_input, "scene point cloud is empty");
    if (has_normals() && normals.size() != points.size()) {
      throw Error(Errc::dimension_mismatch, "normals must match points one to one");
    }
    for (const auto& p : points) {
      if (!p.allFinite()) throw Error(Errc::parse_non_finite, "scene point is not finite");
    }
  }
};

struct NearestPoint {
  Vec3 point;
  double distance = 0.0;
  size_t index = 0;  // into the original cloud
};

/// Exact nearest-neighbour index: a kd-tree with median splits on the widest
/// axis. Immutable after construction, so concurrent queries are safe.
class SceneIndex {
 public:
  static constexpr uint32_t kLeafSize = 8;

  explicit SceneIndex(const ScenePointCloud& cloud) {
    cloud.validate();
    const size_t n = cloud.points.size();
    order_.resize(n);
    std::iota(order_.begin(), order_.end(), size_t{0});
    nodes_.reserve(2 * n / kLeafSize + 2);
    std::vector<Vec3> pts = cloud.points;
    build(pts, 0, static_cast<uint32_t>(n));
    points_.resize(n);
    for (size_t i = 0; i < n; ++i) points_[i] = cloud.points[order_[i]];
  }

  size_t size() const { return points_.size(); }

  NearestPoint closest_point(const Vec3& q) const {
    double best = std::numeric_limits<double>::infinity();
    uint32_t best_i = 0;
    search(0, q, best, best_i);
    return {points_[best_i], std::sqrt(best), order_[best_i]};
  }

 private:
  struct Node {
    uint32_t begin;
    uint32_t end;
    uint32_t left = 0;   // 0 marks a leaf (node 0 is always the root)
    uint32_t right = 0;
    int axis = 0;
    double split = 0.0;
  };

  uint32_t build(std::vector<Vec3>& pts, uint32_t begin, uint32_t end) {
    const auto id = static_cast<uint32_t>(nodes_.size());
    nodes_.push_back({begin, end});
    if (end - begin <= kLeafSize) return id;

    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    for (uint32_t i = begin; i < end; ++i) {
      lo = lo.cwiseMin(pts[i]);
      hi = hi.cwiseMax(pts[i]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    if (hi[axis] - lo[axis] <= 0.0) return id;  // all duplicates

    const uint32_t mid = begin + (end - begin) / 2;
    // Sort a permutation so pts and order_ stay in lockstep.
    std::vector<uint32_t> perm(end - begin);
    std::iota(perm.begin(), perm.end(), begin);
    std::nth_element(perm.begin(), perm.begin() + (mid - begin), perm.end(),
                     [&](uint32_t a, uint32_t b) { return pts[a][axis] < pts[b][axis]; });
    std::vector<Vec3> tmp_pts(end - begin);
    std::vector<size_t> tmp_order(end - begin);
    for (uint32_t i = 0; i < perm.size(); ++i) {
      tmp_pts[i] = pts[perm[i]];
      tmp_order[i] = order_[perm[i]];
    }
    std::copy(tmp_pts.begin(), tmp_pts.end(), pts.begin() + begin);
    std::copy(tmp_order.begin(), tmp_order.end(), order_.begin() + begin);

    const double split = pts[mid][axis];
    const uint32_t l = build(pts, begin, mid);
    const uint32_t r = build(pts, mid, end);
    nodes_[id].axis = axis;
    nodes_[id].split = split;
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  void search(uint32_t id, const Vec3& q, double& best, uint32_t& best_i) const {
    const Node& node = nodes_[id];
    if (node.left == 0) {
      for (uint32_t i = node.begin; i < node.end; ++i) {
        const double d = (points_[i] - q).squaredNorm();
        if (d < best) {
          best = d;
          best_i = i;
        }
      }
      return;
    }
    // Left holds coordinates <= split, right holds >= split.
    const double diff = q[node.axis] - node.split;
    const uint32_t near = diff < 0.0 ? node.left : node.right;
    const uint32_t far = diff < 0.0 ? node.right : node.left;
    search(near, q, best, best_i);
    if (diff * diff < best) search(far, q, best, best_i);
  }

  std::vector<Node> nodes_;
  std::vector<Vec3> points_;
  std::vector<size_t> order_;
};

inline SceneIndex build_index(const ScenePointCloud& cloud) { return SceneIndex(cloud); }

inline NearestPoint closest_point(const SceneIndex& idx, const Vec3& p) { return idx.closest_point(p); }

// ---------------------------------------------------------------------------
// IO: ASCII PLY (vertex x/y/z, optional nx/ny/nz) and JSON
// {"points": [[x,y,z], ...], "normals": [[nx,ny,nz], ...]}.

namespace detail {

inline ScenePointCloud parse_ply(std::istream& in, const std::string& path) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("ply", 0) != 0) {
    throw Error(Errc::parse_malformed_header, path + ": missing 'ply' magic");
  }
  bool ascii = false;
  bool in_vertex = false;
  size_t vertex_count = 0;
  std::vector<std::string> props;
  std::vector<std::pair<std::string, size_t>> elements;
  bool ended = false;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "format") {
      std::string fmt;
      ls >> fmt;
      ascii = fmt == "ascii";
    } else if (key == "comment" || key == "obj_info" || key.empty()) {
      continue;
    } else if (key == "element") {
      std::string name;
      size_t count = 0;
      if (!(ls >> name >> count)) throw Error(Errc::parse_malformed_header, path + ": bad element line");
      elements.emplace_back(name, count);
      in_vertex = name == "vertex";
      if (in_vertex) vertex_count = count;
    } else if (key == "property") {
      std::string type;
      std::string name;
      ls >> type;
      if (type == "list") {
        std::string a;
        std::string b;
        ls >> a >> b;
      }
      ls >> name;
      if (in_vertex) props.push_back(name);
    } else if (key == "end_header") {
      ended = true;
      break;
    } else {
      throw Error(Errc::parse_malformed_header, path + ": unknown header keyword '" + key + "'");
    }
  }
  if (!ended) throw Error(Errc::parse_malformed_header, path + ": missing end_header");
  if (!ascii) throw Error(Errc::parse_malformed_header, path + ": only ascii PLY is supported");
  if (elements.empty() || elements.front().first != "vertex") {
    throw Error(Errc::parse_malformed_header, path + ": first element must be 'vertex'");
  }
  auto find = [&](const char* n) -> int {
    auto it = std::find(props.begin(), props.end(), n);
    return it == props.end() ? -1 : static_cast<int>(it - props.begin());
  };
  const int ix = find("x");
  const int iy = find("y");
  const int iz = find("z");
  if (ix < 0 || iy < 0 || iz < 0) {
    throw Error(Errc::parse_malformed_header, path + ": vertex element lacks x/y/z properties");
  }
  const int inx = find("nx");
  const int iny = find("ny");
  const int inz = find("nz");
  const bool normals = inx >= 0 && iny >= 0 && inz >= 0;

  ScenePointCloud cloud;
  cloud.points.reserve(vertex_count);
  std::vector<double> vals(props.size());
  for (size_t v = 0; v < vertex_count; ++v) {
    if (!std::getline(in, line)) {
      throw Error(Errc::parse_short_element, path + ": element 'vertex' declares " +
                                                 std::to_string(vertex_count) + " entries but only " +
                                                 std::to_string(v) + " present");
    }
    std::istringstream ls(line);
    for (size_t k = 0; k < props.size(); ++k) {
      std::string tok;
      if (!(ls >> tok)) {
        throw Error(Errc::parse_short_element,
                    path + ": element 'vertex' entry " + std::to_string(v) + " has too few properties");
      }
      try {
        vals[k] = std::stod(tok);
      } catch (const std::exception&) {
        throw Error(Errc::parse_non_finite,
                    path + ": element 'vertex' entry " + std::to_string(v) + " has non-numeric value '" + tok + "'");
      }
    }
    Vec3 p(vals[static_cast<size_t>(ix)], vals[static_cast<size_t>(iy)], vals[static_cast<size_t>(iz)]);
    if (!p.allFinite()) {
      throw Error(Errc::parse_non_finite, path + ": element 'vertex' entry " + std::to_string(v) + " is not finite");
    }
    cloud.points.push_back(p);
    if (normals) {
      cloud.normals.emplace_back(vals[static_cast<size_t>(inx)], vals[static_cast<size_t>(iny)],
                                 vals[static_cast<size_t>(inz)]);
    }
  }
  return cloud;
}

inline ScenePointCloud parse_scene_json(std::istream& in, const std::string& path) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_malformed_header, path + ": " + e.what());
  }
  if (!j.contains("points") || !j["points"].is_array()) {
    throw Error(Errc::parse_malformed_header, path + ": missing 'points' array");
  }
  ScenePointCloud cloud;
  auto read = [&](const nlohmann::json& arr, std::vector<Vec3>& dst, const char* what) {
    dst.reserve(arr.size());
    for (size_t i = 0; i < arr.size(); ++i) {
      const auto& e = arr[i];
      if (!e.is_array() || e.size() != 3) {
        throw Error(Errc::parse_short_element, path + ": " + what + " entry " + std::to_string(i) +
                                                   " must have 3 coordinates");
      }
      Vec3 v;
      for (int k = 0; k < 3; ++k) {
        if (!e[static_cast<size_t>(k)].is_number()) {
          throw Error(Errc::parse_non_finite, path + ": " + what + " entry " + std::to_string(i) + " is not numeric");
        }
        v[k] = e[static_cast<size_t>(k)].get<double>();
      }
      if (!v.allFinite()) {
        throw Error(Errc::parse_non_finite, path + ": " + what + " entry " + std::to_string(i) + " is not finite");
      }
      dst.push_back(v);
    }
  };
  read(j["points"], cloud.points, "points");
  if (j.contains("normals")) read(j["normals"], cloud.normals, "normals");
  return cloud;
}

inline bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace detail

inline ScenePointCloud load_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_unreadable, "cannot open scene file '" + path + "'");
  ScenePointCloud cloud =
      detail::ends_with(path, ".json") ? detail::parse_scene_json(in, path) : detail::parse_ply(in, path);
  cloud.validate();
  return cloud;
}

inline nlohmann::json scene_to_json(const ScenePointCloud& cloud) {
  nlohmann::json j;
  j["points"] = nlohmann::json::array();
  for (const auto& p : cloud.points) j["points"].push_back({p.x(), p.y(), p.z()});
  if (cloud.has_normals()) {
    j["normals"] = nlohmann::json::array();
    for (const auto& n : cloud.normals) j["normals"].push_back({n.x(), n.y(), n.z()});
  }
  return j;
}

inline void save_scene_json(const ScenePointCloud& cloud, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_unreadable, "cannot write scene file '" + path + "'");
  out << scene_to_json(cloud).dump() << "\n";
}

inline void save_scene_ply(const ScenePointCloud& cloud, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_unreadable, "cannot write scene file '" + path + "'");
  out << "ply\nformat ascii 1.0\nelement vertex " << cloud.points.size()
      << "\nproperty double x\nproperty double y\nproperty double z\n";
  if (cloud.has_normals()) out << "property double nx\nproperty double ny\nproperty double nz\n";
  out << "end_header\n";
  out.precision(17);
  for (size_t i = 0; i < cloud.points.size(); ++i) {
    const Vec3& p = cloud.points[i];
    out << p.x() << ' ' << p.y() << ' ' << p.z();
    if (cloud.has_normals()) {
      const Vec3& n = cloud.normals[i];
      out << ' ' << n.x() << ' ' << n.y() << ' ' << n.z();
    }
    out << '\n';
  }
}

inline void save_scene(const ScenePointCloud& cloud, const std::string& path) {
  if (detail::ends_with(path, ".json")) {
    save_scene_json(cloud, path);
  } else {
    save_scene_ply(cloud, path);
  }
}

/// Regular z = 0 grid with upward normals, [x0, x0 + size_x] x [y0, y0 + size_y].
inline ScenePointCloud make_plane_grid(double x0, double y0, double size_x, double size_y, double spacing) {
  if (!(spacing > 0.0)) throw Error(Errc::invalid_argument, "grid spacing must be positive");
  const auto nx = static_cast<size_t>(std::floor(size_x / spacing + 1e-9)) + 1;
  const auto ny = static_cast<size_t>(std::floor(size_y / spacing + 1e-9)) + 1;
  ScenePointCloud cloud;
  cloud.points.reserve(nx * ny);
  cloud.normals.reserve(nx * ny);
  for (size_t i = 0; i < nx; ++i) {
    for (size_t k = 0; k < ny; ++k) {
      cloud.points.emplace_back(x0 + static_cast<double>(i) * spacing, y0 + static_cast<double>(k) * spacing, 0.0);
      cloud.normals.emplace_back(0.0, 0.0, 1.0);
    }
  }
  return cloud;
}

}  // namespace egofuse
