#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

namespace plume {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

struct Rect {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 1.0;
  double y1 = 1.0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
};

using Triangle = std::array<std::size_t, 3>;

class MeshError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Edge differences and area of one linear triangle. Differences follow the
/// convention x_ij = x_i - x_j with nodes numbered 1..3 in element order.
struct ElementGeometry {
  std::array<Point2, 3> nodes;
  double x21 = 0, x32 = 0, x31 = 0;
  double y21 = 0, y32 = 0, y31 = 0;
  double area = 0;

  Point2 centroid() const {
    return {(nodes[0].x + nodes[1].x + nodes[2].x) / 3.0,
            (nodes[0].y + nodes[1].y + nodes[2].y) / 3.0};
  }
  /// Characteristic length sqrt(2S) used for Courant and Peclet checks.
  double length_scale() const;
};

ElementGeometry make_geometry(const Point2& a, const Point2& b, const Point2& c);

/// Linear shape functions of a triangle evaluated at p. Works for any point in
/// the plane; values outside the element are negative for at least one node.
std::array<double, 3> shape_functions(const ElementGeometry& g, const Point2& p);

struct BarycentricEval {
  std::size_t element = 0;
  std::array<double, 3> shape_values{};
};

/// Immutable 2-D triangular mesh. Construction validates that every element
/// references distinct in-range nodes and is counter-clockwise with positive
/// area.
class TriMesh {
 public:
  TriMesh(std::vector<Point2> nodes, std::vector<Triangle> elements);

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t element_count() const { return elements_.size(); }
  const std::vector<Point2>& nodes() const { return nodes_; }
  const std::vector<Triangle>& elements() const { return elements_; }
  const Rect& bounding_box() const { return bbox_; }

  ElementGeometry element_geometry(std::size_t e) const;
  BarycentricEval shape_functions_at(std::size_t e, const Point2& p) const;

  /// Lowest-index element whose closed triangle contains p, or nullopt.
  std::optional<std::size_t> locate_point(const Point2& p) const;

  double total_area() const;

 private:
  std::vector<Point2> nodes_;
  std::vector<Triangle> elements_;
  std::vector<ElementGeometry> geometry_;
  Rect bbox_;
};

/// Structured mesh of nx*ny rectangular cells, each split along the
/// lower-left to upper-right diagonal into two counter-clockwise triangles.
TriMesh build_structured_mesh(const Rect& domain, std::size_t nx, std::size_t ny);

}  // namespace plume
