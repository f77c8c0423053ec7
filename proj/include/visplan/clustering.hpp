#pragma once

// Density clustering of sensed feature points and the bounded set of visual
// objectives maintained across replanning cycles.

#include "visplan/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace visplan {

struct DbscanResult
{
  std::vector<std::vector<int>> clusters; // member indices, ascending
  std::vector<int> noise;
};

namespace detail {

struct CellKey
{
  std::int64_t x, y, z;
  bool operator==(const CellKey&) const = default;
};

struct CellHash
{
  size_t operator()(const CellKey& k) const
  {
    std::uint64_t h = static_cast<std::uint64_t>(k.x) * 0x9E3779B97F4A7C15ull;
    h ^= static_cast<std::uint64_t>(k.y) * 0xC2B2AE3D27D4EB4Full + (h << 6) + (h >> 2);
    h ^= static_cast<std::uint64_t>(k.z) * 0x165667B19E3779F9ull + (h << 6) + (h >> 2);
    return static_cast<size_t>(h);
  }
};

class UniformGrid
{
public:
  UniformGrid(const std::vector<Vec3>& pts, double cell) : pts_(pts), cell_(cell)
  {
    for (int i = 0; i < static_cast<int>(pts.size()); ++i) cells_[key(pts[i])].push_back(i);
  }

  // Indices within `radius` (inclusive) of point i, ascending.
  std::vector<int> neighbors(int i, double radius) const
  {
    std::vector<int> out;
    const CellKey c = key(pts_[i]);
    const double r2 = radius * radius;
    for (std::int64_t dx = -1; dx <= 1; ++dx)
      for (std::int64_t dy = -1; dy <= 1; ++dy)
        for (std::int64_t dz = -1; dz <= 1; ++dz) {
          const auto it = cells_.find({c.x + dx, c.y + dy, c.z + dz});
          if (it == cells_.end()) continue;
          for (int j : it->second)
            if ((pts_[j] - pts_[i]).squaredNorm() <= r2) out.push_back(j);
        }
    std::sort(out.begin(), out.end());
    return out;
  }

private:
  CellKey key(const Vec3& p) const
  {
    return {static_cast<std::int64_t>(std::floor(p.x() / cell_)), static_cast<std::int64_t>(std::floor(p.y() / cell_)),
            static_cast<std::int64_t>(std::floor(p.z() / cell_))};
  }

  const std::vector<Vec3>& pts_;
  double cell_;
  std::unordered_map<CellKey, std::vector<int>, CellHash> cells_;
};

} // namespace detail

/// DBSCAN with a point counting as its own neighbor. Scans in ascending index
/// order, so a border point reachable from several clusters joins the one
/// created first.
inline DbscanResult dbscan(const std::vector<Vec3>& points, double eps, int min_samples)
{
  if (!(eps > 0.0)) throw std::invalid_argument("dbscan eps must be > 0");
  if (min_samples < 1) throw std::invalid_argument("dbscan min_samples must be >= 1");
  DbscanResult out;
  const int n = static_cast<int>(points.size());
  if (n == 0) return out;
  for (const auto& p : points)
    if (!p.allFinite()) throw std::invalid_argument("dbscan input contains a non-finite point");

  constexpr int kUnvisited = -2, kNoise = -1;
  std::vector<int> label(n, kUnvisited);
  const detail::UniformGrid grid(points, eps);
  for (int i = 0; i < n; ++i) {
    if (label[i] != kUnvisited) continue;
    const auto seeds = grid.neighbors(i, eps);
    if (static_cast<int>(seeds.size()) < min_samples) {
      label[i] = kNoise;
      continue;
    }
    const int c = static_cast<int>(out.clusters.size());
    out.clusters.emplace_back();
    label[i] = c;
    std::deque<int> queue(seeds.begin(), seeds.end());
    while (!queue.empty()) {
      const int j = queue.front();
      queue.pop_front();
      if (label[j] == kNoise) label[j] = c; // border point
      if (label[j] != kUnvisited) continue;
      label[j] = c;
      const auto nb = grid.neighbors(j, eps);
      if (static_cast<int>(nb.size()) >= min_samples) queue.insert(queue.end(), nb.begin(), nb.end());
    }
  }
  for (int i = 0; i < n; ++i) {
    if (label[i] >= 0)
      out.clusters[label[i]].push_back(i);
    else
      out.noise.push_back(i);
  }
  return out;
}

struct VisualObjective
{
  Vec3 position = Vec3::Zero();
  std::int64_t created_at = 0;
  int cluster_size = 0;

  bool operator==(const VisualObjective&) const = default;
};

struct ExtractionConfig
{
  double eps = 0.2;
  int min_samples = 5;
  size_t capacity = 15;
  double merge_radius = 0.5;

  void validate() const
  {
    if (!(eps > 0.0)) throw std::invalid_argument("extraction eps must be > 0");
    if (min_samples < 1) throw std::invalid_argument("extraction min_samples must be >= 1");
    if (capacity < 1) throw std::invalid_argument("objective capacity must be >= 1");
    if (!(merge_radius >= 0.0)) throw std::invalid_argument("merge_radius must be >= 0");
  }
};

/// One objective per cluster at its centroid, ordered lexicographically by
/// position so the result does not depend on input order.
inline std::vector<VisualObjective> extract_objectives(const std::vector<Vec3>& points, double eps, int min_samples,
                                                       std::int64_t cycle = 0)
{
  std::vector<VisualObjective> out;
  for (const auto& members : dbscan(points, eps, min_samples).clusters) {
    Vec3 c = Vec3::Zero();
    for (int i : members) c += points[i];
    out.push_back({c / static_cast<double>(members.size()), cycle, static_cast<int>(members.size())});
  }
  std::sort(out.begin(), out.end(), [](const VisualObjective& a, const VisualObjective& b) {
    return std::lexicographical_compare(a.position.data(), a.position.data() + 3, b.position.data(),
                                        b.position.data() + 3);
  });
  return out;
}

/// Bounded objective memory: a new objective replaces the nearest entry
/// closer than merge_radius, otherwise fills a free slot or evicts the oldest.
class ObjectiveSet
{
public:
  explicit ObjectiveSet(size_t capacity = 15, double merge_radius = 0.5) : capacity_(capacity), merge_radius_(merge_radius)
  {
    if (capacity_ < 1) throw std::invalid_argument("objective capacity must be >= 1");
  }

  size_t capacity() const { return capacity_; }
  double merge_radius() const { return merge_radius_; }
  const std::vector<VisualObjective>& entries() const { return entries_; }
  size_t size() const { return entries_.size(); }

  std::vector<Vec3> positions() const
  {
    std::vector<Vec3> out;
    for (const auto& e : entries_) out.push_back(e.position);
    return out;
  }

  void insert(VisualObjective v, std::int64_t cycle)
  {
    v.created_at = cycle;
    int nearest = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < static_cast<int>(entries_.size()); ++i) {
      const double d = (entries_[i].position - v.position).norm();
      if (d < best) best = d, nearest = i;
    }
    if (nearest >= 0 && best < merge_radius_) {
      entries_[nearest] = v;
      // entries that the moved one now crowds are folded into it
      std::vector<VisualObjective> kept;
      for (int i = 0; i < static_cast<int>(entries_.size()); ++i)
        if (i == nearest || (entries_[i].position - v.position).norm() >= merge_radius_) kept.push_back(entries_[i]);
      entries_ = std::move(kept);
      return;
    }
    if (entries_.size() < capacity_) {
      entries_.push_back(v);
      return;
    }
    size_t oldest = 0;
    for (size_t i = 1; i < entries_.size(); ++i)
      if (entries_[i].created_at < entries_[oldest].created_at) oldest = i;
    entries_[oldest] = v;
  }

  bool operator==(const ObjectiveSet&) const = default;

private:
  size_t capacity_;
  double merge_radius_;
  std::vector<VisualObjective> entries_;
};

/// Applies new objectives one by one in the given order.
inline ObjectiveSet update_objective_set(ObjectiveSet set, const std::vector<VisualObjective>& fresh, std::int64_t cycle)
{
  for (const auto& v : fresh) set.insert(v, cycle);
  return set;
}

/// Plain "x y z" per line; blank lines and lines starting with '#' are skipped.
inline std::vector<Vec3> read_xyz(std::istream& in)
{
  std::vector<Vec3> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    Vec3 p;
    std::string extra;
    if (!(ss >> p.x() >> p.y() >> p.z()) || (ss >> extra) || !p.allFinite())
      throw std::runtime_error("xyz line " + std::to_string(lineno) + ": expected three finite numbers");
    out.push_back(p);
  }
  return out;
}

} // namespace visplan
