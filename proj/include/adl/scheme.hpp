#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "adl/core.hpp"

namespace adl {

// One facial boundary curve. A closed edge connects its last vertex back to
// the first; the stored sequence never repeats the first vertex.
struct EdgeDef {
  std::string name;
  std::vector<int> vertices;
  bool closed = false;

  friend bool operator==(const EdgeDef &, const EdgeDef &) = default;
};

struct NormalizationSpec {
  std::array<int, 2> inter_ocular{};             // outer eye corners
  std::array<std::vector<int>, 2> inter_pupil{};  // centroids stand in for pupils

  friend bool operator==(const NormalizationSpec &, const NormalizationSpec &) = default;
};

enum class NormKind { inter_ocular, inter_pupil };

// Template neighbors of a landmark along its boundary curve.
struct Neighborhood {
  enum class Kind { none, interior, endpoint };
  Kind kind = Kind::none;
  int pre = -1;   // -1 when the landmark starts an open curve
  int next = -1;  // -1 when the landmark ends an open curve
};

// Landmark topology. Immutable once constructed; the constructor validates
// every invariant and throws ValidationError otherwise.
class LandmarkScheme {
 public:
  LandmarkScheme(std::string name, int n_points, std::vector<EdgeDef> edges, NormalizationSpec norm);

  const std::string &name() const { return name_; }
  int n_points() const { return n_points_; }
  int n_edges() const { return static_cast<int>(edges_.size()); }
  const std::vector<EdgeDef> &edges() const { return edges_; }
  const NormalizationSpec &norm() const { return norm_; }

  // Eye and lip margins that share endpoints are chained into loops here, so
  // every corner landmark gets two neighbors.
  const Neighborhood &neighbors(int point) const { return neighbors_.at(static_cast<std::size_t>(point)); }
  bool on_edge(int point) const { return neighbors(point).kind != Neighborhood::Kind::none; }

  // Landmark indices touched by edge j, in stored order.
  const std::vector<int> &edge_points(int edge) const { return edges_.at(static_cast<std::size_t>(edge)).vertices; }

  double normalization_distance(const PointSet &truth, NormKind kind) const;

  friend bool operator==(const LandmarkScheme &a, const LandmarkScheme &b) {
    return a.name_ == b.name_ && a.n_points_ == b.n_points_ && a.edges_ == b.edges_ && a.norm_ == b.norm_;
  }

 private:
  void validate() const;
  void build_neighbors();

  std::string name_;
  int n_points_ = 0;
  std::vector<EdgeDef> edges_;
  NormalizationSpec norm_;
  std::vector<Neighborhood> neighbors_;
};

// Binary n_points x n_edges point/edge membership matrix.
class E2PMatrix {
 public:
  E2PMatrix(int n_points, int n_edges);

  int n_points() const { return n_points_; }
  int n_edges() const { return n_edges_; }
  std::uint8_t at(int point, int edge) const { return entries_[index(point, edge)]; }
  void set(int point, int edge, std::uint8_t v) { entries_[index(point, edge)] = v; }
  int row_sum(int point) const;

  friend bool operator==(const E2PMatrix &, const E2PMatrix &) = default;

 private:
  std::size_t index(int point, int edge) const {
    return static_cast<std::size_t>(point) * static_cast<std::size_t>(n_edges_) + static_cast<std::size_t>(edge);
  }

  int n_points_;
  int n_edges_;
  std::vector<std::uint8_t> entries_;
};

// 68-point 300W scheme: 13 edges, inter-ocular (36, 45).
LandmarkScheme builtin_300w();

E2PMatrix e2p_matrix(const LandmarkScheme &scheme);

// Parses the JSON scheme file. Malformed text raises ParseError (with line);
// schema and index problems raise ValidationError naming the field or edge.
LandmarkScheme load_scheme(std::string_view document);

// Canonical serialization: sorted keys, two-space indent, trailing newline.
std::string serialize_scheme(const LandmarkScheme &scheme);

}  // namespace adl
