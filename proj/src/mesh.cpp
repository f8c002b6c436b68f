#include "plume/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace plume {

namespace {

constexpr double kContainmentTol = 1e-10;

double signed_double_area(const Point2& a, const Point2& b, const Point2& c) {
  const double x21 = b.x - a.x, y21 = b.y - a.y;
  const double x32 = c.x - b.x, y32 = c.y - b.y;
  return x21 * y32 - x32 * y21;
}

}  // namespace

double ElementGeometry::length_scale() const { return std::sqrt(2.0 * area); }

ElementGeometry make_geometry(const Point2& a, const Point2& b, const Point2& c) {
  ElementGeometry g;
  g.nodes = {a, b, c};
  g.x21 = b.x - a.x;
  g.x32 = c.x - b.x;
  g.x31 = c.x - a.x;
  g.y21 = b.y - a.y;
  g.y32 = c.y - b.y;
  g.y31 = c.y - a.y;
  g.area = std::abs(g.x21 * g.y32 - g.x32 * g.y21) / 2.0;
  return g;
}

std::array<double, 3> shape_functions(const ElementGeometry& g, const Point2& p) {
  if (!(g.area > 0.0)) throw MeshError("shape functions requested on a degenerate element");
  const auto& n = g.nodes;
  const double inv = 1.0 / (2.0 * g.area);
  return {inv * (-g.y32 * (p.x - n[1].x) + g.x32 * (p.y - n[1].y)),
          inv * (g.y31 * (p.x - n[2].x) - g.x31 * (p.y - n[2].y)),
          inv * (-g.y21 * (p.x - n[0].x) + g.x21 * (p.y - n[0].y))};
}

TriMesh::TriMesh(std::vector<Point2> nodes, std::vector<Triangle> elements)
    : nodes_(std::move(nodes)), elements_(std::move(elements)) {
  if (nodes_.empty()) throw MeshError("mesh has no nodes");
  if (elements_.empty()) throw MeshError("mesh has no elements");

  bbox_ = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
           -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& p : nodes_) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw MeshError("non-finite node coordinate");
    bbox_.x0 = std::min(bbox_.x0, p.x);
    bbox_.y0 = std::min(bbox_.y0, p.y);
    bbox_.x1 = std::max(bbox_.x1, p.x);
    bbox_.y1 = std::max(bbox_.y1, p.y);
  }

  geometry_.reserve(elements_.size());
  for (std::size_t e = 0; e < elements_.size(); ++e) {
    const auto& t = elements_[e];
    for (auto i : t) {
      if (i >= nodes_.size()) {
        throw MeshError("element " + std::to_string(e) + " references node " + std::to_string(i) +
                        " but mesh has " + std::to_string(nodes_.size()) + " nodes");
      }
    }
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) {
      throw MeshError("element " + std::to_string(e) + " repeats a node index");
    }
    const double twice = signed_double_area(nodes_[t[0]], nodes_[t[1]], nodes_[t[2]]);
    if (!(twice > 0.0)) {
      throw MeshError("element " + std::to_string(e) +
                      (twice == 0.0 ? " is degenerate (zero area)" : " is clockwise (negative area)"));
    }
    geometry_.push_back(make_geometry(nodes_[t[0]], nodes_[t[1]], nodes_[t[2]]));
  }
}

ElementGeometry TriMesh::element_geometry(std::size_t e) const {
  if (e >= geometry_.size()) {
    throw std::out_of_range("element index " + std::to_string(e) + " out of range");
  }
  return geometry_[e];
}

BarycentricEval TriMesh::shape_functions_at(std::size_t e, const Point2& p) const {
  return {e, shape_functions(element_geometry(e), p)};
}

std::optional<std::size_t> TriMesh::locate_point(const Point2& p) const {
  if (p.x < bbox_.x0 - kContainmentTol * bbox_.width() || p.x > bbox_.x1 + kContainmentTol * bbox_.width() ||
      p.y < bbox_.y0 - kContainmentTol * bbox_.height() || p.y > bbox_.y1 + kContainmentTol * bbox_.height()) {
    return std::nullopt;
  }
  for (std::size_t e = 0; e < geometry_.size(); ++e) {
    const auto b = shape_functions(geometry_[e], p);
    if (b[0] >= -kContainmentTol && b[1] >= -kContainmentTol && b[2] >= -kContainmentTol) return e;
  }
  return std::nullopt;
}

double TriMesh::total_area() const {
  double sum = 0.0;
  for (const auto& g : geometry_) sum += g.area;
  return sum;
}

TriMesh build_structured_mesh(const Rect& domain, std::size_t nx, std::size_t ny) {
  if (!(domain.width() > 0.0) || !(domain.height() > 0.0)) {
    throw MeshError("rectangle must have positive width and height");
  }
  if (nx < 1 || ny < 1) throw MeshError("nx and ny must be at least 1");

  std::vector<Point2> nodes;
  nodes.reserve((nx + 1) * (ny + 1));
  for (std::size_t j = 0; j <= ny; ++j) {
    const double y = domain.y0 + domain.height() * static_cast<double>(j) / static_cast<double>(ny);
    for (std::size_t i = 0; i <= nx; ++i) {
      const double x = domain.x0 + domain.width() * static_cast<double>(i) / static_cast<double>(nx);
      nodes.push_back({x, y});
    }
  }

  auto id = [nx](std::size_t i, std::size_t j) { return j * (nx + 1) + i; };
  std::vector<Triangle> elements;
  elements.reserve(2 * nx * ny);
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      const auto sw = id(i, j), se = id(i + 1, j), nw = id(i, j + 1), ne = id(i + 1, j + 1);
      elements.push_back({sw, se, ne});
      elements.push_back({sw, ne, nw});
    }
  }
  return TriMesh(std::move(nodes), std::move(elements));
}

}  // namespace plume
