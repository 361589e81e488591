#include "meevc/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <tuple>

namespace meevc {

namespace {

double signed_area(const Point& a, const Point& b, const Point& c) {
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x));
}

double distance(const Point& a, const Point& b) { return std::hypot(b.x - a.x, b.y - a.y); }

}  // namespace

const char* to_string(BoundaryTag tag) {
  switch (tag) {
    case BoundaryTag::Top: return "top";
    case BoundaryTag::Right: return "right";
    case BoundaryTag::Bottom: return "bottom";
    case BoundaryTag::Left: return "left";
    case BoundaryTag::None: break;
  }
  return "none";
}

DiagonalPattern parse_pattern(const std::string& name) {
  if (name == "left") return DiagonalPattern::Left;
  if (name == "right") return DiagonalPattern::Right;
  if (name == "crisscross") return DiagonalPattern::Crisscross;
  throw MeshError("unknown diagonal pattern '" + name + "' (expected left, right or crisscross)");
}

const char* to_string(DiagonalPattern pattern) {
  switch (pattern) {
    case DiagonalPattern::Left: return "left";
    case DiagonalPattern::Right: return "right";
    case DiagonalPattern::Crisscross: return "crisscross";
  }
  return "left";
}

void ChannelGeometry::validate() const {
  if (!(height > 0.0)) throw MeshError("channel height must be positive");
  if (!(lock_length > 0.0)) throw MeshError("lock length must be positive");
  if (!(length > lock_length))
    throw MeshError("channel length must exceed the lock length (degenerate geometry)");
}

Mesh Mesh::from_cells(std::vector<Point> points, std::vector<std::array<Index, 3>> cells,
                      const std::optional<ChannelGeometry>& tagging) {
  Mesh mesh;
  mesh.points_ = std::move(points);
  mesh.cells_ = std::move(cells);
  mesh.point_vertex_.resize(mesh.points_.size());
  for (Index p = 0; p < mesh.points_.size(); ++p) mesh.point_vertex_[p] = p;
  mesh.num_vertices_ = mesh.points_.size();
  mesh.channel_ = tagging;
  mesh.build_topology();

  if (tagging) {
    const ChannelGeometry& g = *tagging;
    const double tol = 1e-9;
    for (Index e = 0; e < mesh.num_edges(); ++e) {
      if (!mesh.is_boundary_edge(e)) continue;
      const Point& a = mesh.points_[mesh.edge_vertices_[e][0]];
      const Point& b = mesh.points_[mesh.edge_vertices_[e][1]];
      auto on = [&](auto pred) { return pred(a) && pred(b); };
      BoundaryTag tag = BoundaryTag::None;
      if (on([&](const Point& p) { return std::abs(p.y - g.height) < tol; })) {
        tag = BoundaryTag::Top;
      } else if (on([&](const Point& p) { return std::abs(p.x - g.x_max()) < tol; })) {
        tag = BoundaryTag::Right;
      } else if (on([&](const Point& p) { return std::abs(p.y) < tol; })) {
        tag = BoundaryTag::Bottom;
      } else if (on([&](const Point& p) { return std::abs(p.x - g.x_min()) < tol; })) {
        tag = BoundaryTag::Left;
      }
      if (tag == BoundaryTag::None) {
        std::ostringstream msg;
        msg << "boundary edge " << e << " from (" << a.x << ", " << a.y << ") to (" << b.x << ", "
            << b.y << ") does not lie on the channel boundary";
        throw MeshError(msg.str());
      }
      mesh.edge_tags_[e] = tag;
    }
  }
  mesh.build_locator();
  return mesh;
}

Mesh Mesh::from_periodic_cells(std::vector<Point> points, std::vector<std::array<Index, 3>> cells,
                               std::vector<Index> point_vertex, Point origin,
                               std::array<double, 2> period) {
  if (point_vertex.size() != points.size())
    throw MeshError("periodic identification must cover every point");
  Mesh mesh;
  mesh.points_ = std::move(points);
  mesh.cells_ = std::move(cells);
  mesh.point_vertex_ = std::move(point_vertex);
  mesh.num_vertices_ = 0;
  for (Index v : mesh.point_vertex_) mesh.num_vertices_ = std::max(mesh.num_vertices_, v + 1);
  mesh.periodic_ = true;
  mesh.period_ = period;
  mesh.origin_ = origin;
  mesh.build_topology();
  if (mesh.has_boundary())
    throw MeshError("periodic identification leaves unmatched boundary edges");
  mesh.build_locator();
  return mesh;
}

void Mesh::build_topology() {
  // orientation
  for (Index c = 0; c < cells_.size(); ++c) {
    auto& cell = cells_[c];
    for (Index p : cell)
      if (p >= points_.size()) throw MeshError("cell references a nonexistent vertex");
    double area = signed_area(points_[cell[0]], points_[cell[1]], points_[cell[2]]);
    if (area < 0.0) {
      std::swap(cell[1], cell[2]);
      area = -area;
    }
    const double scale = std::max({distance(points_[cell[0]], points_[cell[1]]),
                                   distance(points_[cell[1]], points_[cell[2]]),
                                   distance(points_[cell[2]], points_[cell[0]])});
    if (!(area > 1e-14 * scale * scale)) {
      std::ostringstream msg;
      msg << "cell " << c << " is degenerate";
      throw MeshError(msg.str());
    }
  }

  // Edges are keyed by their topological endpoints. On periodic meshes two distinct
  // edges can join the same pair of identified vertices, so the wrapped midpoint joins the key.
  using Key = std::tuple<Index, Index, long long, long long>;
  std::map<Key, Index> edge_index;
  const double quantum = 1e-9 * std::max(1.0, std::max(period_[0], period_[1]));
  auto wrap = [](double v, double o, double len) {
    double r = std::fmod(v - o, len);
    if (r < 0) r += len;
    if (len - r < 1e-9 * len) r = 0.0;
    return r;
  };

  cell_edges_.assign(cells_.size(), {});
  cell_edge_signs_.assign(cells_.size(), {});
  edge_vertices_.clear();
  edge_cells_.clear();
  edge_local_.clear();
  for (Index c = 0; c < cells_.size(); ++c) {
    for (int le = 0; le < 3; ++le) {
      const Index pa = cells_[c][kEdgeVertices[le][0]];
      const Index pb = cells_[c][kEdgeVertices[le][1]];
      const Index va = point_vertex_[pa];
      const Index vb = point_vertex_[pb];
      if (va == vb) throw MeshError("edge joins a vertex to its own periodic image");
      long long mx = 0, my = 0;
      if (periodic_) {
        const double xm = 0.5 * (points_[pa].x + points_[pb].x);
        const double ym = 0.5 * (points_[pa].y + points_[pb].y);
        mx = std::llround(wrap(xm, origin_.x, period_[0]) / quantum);
        my = std::llround(wrap(ym, origin_.y, period_[1]) / quantum);
      }
      const Key key{std::min(va, vb), std::max(va, vb), mx, my};
      auto [it, inserted] = edge_index.emplace(key, edge_vertices_.size());
      const Index e = it->second;
      if (inserted) {
        edge_vertices_.push_back({std::min(va, vb), std::max(va, vb)});
        edge_cells_.push_back({c, kNone});
        edge_local_.push_back(le);
      } else {
        if (edge_cells_[e][1] != kNone)
          throw MeshError("edge shared by more than two cells (non-manifold mesh)");
        edge_cells_[e][1] = c;
      }
      cell_edges_[c][le] = e;
      cell_edge_signs_[c][le] = va < vb ? 1 : -1;
    }
  }
  edge_tags_.assign(edge_vertices_.size(), BoundaryTag::None);
}

void Mesh::build_locator() {
  bbox_min_ = {std::numeric_limits<double>::max(), std::numeric_limits<double>::max()};
  bbox_max_ = {std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest()};
  for (const Point& p : points_) {
    bbox_min_.x = std::min(bbox_min_.x, p.x);
    bbox_min_.y = std::min(bbox_min_.y, p.y);
    bbox_max_.x = std::max(bbox_max_.x, p.x);
    bbox_max_.y = std::max(bbox_max_.y, p.y);
  }
  const double w = bbox_max_.x - bbox_min_.x;
  const double h = bbox_max_.y - bbox_min_.y;
  const double n = std::sqrt(static_cast<double>(std::max<Index>(cells_.size(), 1)));
  const double cell_size = std::sqrt(w * h) / n;
  grid_nx_ = std::max<std::size_t>(1, static_cast<std::size_t>(w / cell_size));
  grid_ny_ = std::max<std::size_t>(1, static_cast<std::size_t>(h / cell_size));
  grid_.assign(grid_nx_ * grid_ny_, {});
  auto bin = [&](double v, double lo, double len, std::size_t nb) {
    const double t = (v - lo) / len * static_cast<double>(nb);
    return std::min(nb - 1, static_cast<std::size_t>(std::max(0.0, t)));
  };
  for (Index c = 0; c < cells_.size(); ++c) {
    const auto pts = cell_coords(c);
    double x0 = pts[0].x, x1 = pts[0].x, y0 = pts[0].y, y1 = pts[0].y;
    for (const Point& p : pts) {
      x0 = std::min(x0, p.x);
      x1 = std::max(x1, p.x);
      y0 = std::min(y0, p.y);
      y1 = std::max(y1, p.y);
    }
    const auto i0 = bin(x0, bbox_min_.x, w, grid_nx_), i1 = bin(x1, bbox_min_.x, w, grid_nx_);
    const auto j0 = bin(y0, bbox_min_.y, h, grid_ny_), j1 = bin(y1, bbox_min_.y, h, grid_ny_);
    for (auto j = j0; j <= j1; ++j)
      for (auto i = i0; i <= i1; ++i) grid_[j * grid_nx_ + i].push_back(c);
  }
}

std::array<Mesh::Index, 3> Mesh::cell_vertices(Index c) const {
  const auto& p = cells_[c];
  return {point_vertex_[p[0]], point_vertex_[p[1]], point_vertex_[p[2]]};
}

std::array<Point, 3> Mesh::cell_coords(Index c) const {
  const auto& p = cells_[c];
  return {points_[p[0]], points_[p[1]], points_[p[2]]};
}

double Mesh::cell_area(Index c) const {
  const auto x = cell_coords(c);
  return signed_area(x[0], x[1], x[2]);
}

double Mesh::edge_length(Index e) const {
  const Index c = edge_cells_[e][0];
  const int le = edge_local_[e];
  return distance(points_[cells_[c][kEdgeVertices[le][0]]], points_[cells_[c][kEdgeVertices[le][1]]]);
}

std::vector<Mesh::Index> Mesh::boundary_edges(BoundaryTag tag) const {
  std::vector<Index> out;
  for (Index e = 0; e < num_edges(); ++e)
    if (is_boundary_edge(e) && edge_tags_[e] == tag) out.push_back(e);
  return out;
}

bool Mesh::has_boundary() const {
  for (Index e = 0; e < num_edges(); ++e)
    if (is_boundary_edge(e)) return true;
  return false;
}

std::optional<CellPoint> Mesh::locate(Point x, double tol) const {
  if (periodic_) {
    auto wrap = [](double v, double o, double len) {
      double r = std::fmod(v - o, len);
      if (r < 0) r += len;
      return o + r;
    };
    x.x = wrap(x.x, origin_.x, period_[0]);
    x.y = wrap(x.y, origin_.y, period_[1]);
  }
  const double w = bbox_max_.x - bbox_min_.x;
  const double h = bbox_max_.y - bbox_min_.y;
  const double slack = tol * std::max(w, h);
  if (x.x < bbox_min_.x - slack || x.x > bbox_max_.x + slack || x.y < bbox_min_.y - slack ||
      x.y > bbox_max_.y + slack)
    return std::nullopt;
  auto bin = [&](double v, double lo, double len, std::size_t nb) {
    const double t = (v - lo) / len * static_cast<double>(nb);
    return std::min(nb - 1, static_cast<std::size_t>(std::max(0.0, t)));
  };
  const auto i = bin(x.x, bbox_min_.x, w, grid_nx_);
  const auto j = bin(x.y, bbox_min_.y, h, grid_ny_);
  std::optional<CellPoint> best;
  double best_violation = std::numeric_limits<double>::max();
  for (Index c : grid_[j * grid_nx_ + i]) {
    const auto v = cell_coords(c);
    const double j00 = v[1].x - v[0].x, j01 = v[2].x - v[0].x;
    const double j10 = v[1].y - v[0].y, j11 = v[2].y - v[0].y;
    const double det = j00 * j11 - j01 * j10;
    const double dx = x.x - v[0].x, dy = x.y - v[0].y;
    const double xi = (j11 * dx - j01 * dy) / det;
    const double eta = (-j10 * dx + j00 * dy) / det;
    const double violation = std::max({-xi, -eta, xi + eta - 1.0, 0.0});
    if (violation < best_violation) {
      best_violation = violation;
      best = CellPoint{c, {xi, eta}};
    }
    if (violation == 0.0) break;
  }
  if (!best || best_violation > tol) return std::nullopt;
  return best;
}

Mesh build_channel_mesh(const ChannelGeometry& geom, int nx, int ny, DiagonalPattern pattern) {
  if (nx < 1 || ny < 1) throw MeshError("mesh resolution nx, ny must be at least 1");
  geom.validate();
  const auto nxu = static_cast<std::size_t>(nx), nyu = static_cast<std::size_t>(ny);
  std::vector<Point> points;
  points.reserve((nxu + 1) * (nyu + 1));
  const double dx = geom.length / nx, dy = geom.height / ny;
  for (std::size_t j = 0; j <= nyu; ++j)
    for (std::size_t i = 0; i <= nxu; ++i)
      points.push_back({i == nxu ? geom.x_max() : geom.x_min() + static_cast<double>(i) * dx,
                        j == nyu ? geom.height : static_cast<double>(j) * dy});
  auto id = [&](std::size_t i, std::size_t j) { return j * (nxu + 1) + i; };
  std::vector<std::array<Mesh::Index, 3>> cells;
  for (std::size_t j = 0; j < nyu; ++j) {
    for (std::size_t i = 0; i < nxu; ++i) {
      const auto p00 = id(i, j), p10 = id(i + 1, j), p01 = id(i, j + 1), p11 = id(i + 1, j + 1);
      switch (pattern) {
        case DiagonalPattern::Left:
          cells.push_back({p00, p10, p01});
          cells.push_back({p10, p11, p01});
          break;
        case DiagonalPattern::Right:
          cells.push_back({p00, p10, p11});
          cells.push_back({p00, p11, p01});
          break;
        case DiagonalPattern::Crisscross: {
          const Point& a = points[p00];
          const Point& b = points[p11];
          const auto pc = points.size();
          points.push_back({0.5 * (a.x + b.x), 0.5 * (a.y + b.y)});
          cells.push_back({p00, p10, pc});
          cells.push_back({p10, p11, pc});
          cells.push_back({p11, p01, pc});
          cells.push_back({p01, p00, pc});
          break;
        }
      }
    }
  }
  return Mesh::from_cells(std::move(points), std::move(cells), geom);
}

Mesh build_periodic_rect_mesh(double lx, double ly, int nx, int ny, DiagonalPattern pattern) {
  if (nx < 2 || ny < 2)
    throw MeshError("periodic meshes need nx, ny >= 2 (a single layer identifies an edge with itself)");
  if (!(lx > 0.0) || !(ly > 0.0)) throw MeshError("periodic rectangle needs positive side lengths");
  const auto nxu = static_cast<std::size_t>(nx), nyu = static_cast<std::size_t>(ny);
  std::vector<Point> points;
  std::vector<Mesh::Index> vertex;
  for (std::size_t j = 0; j <= nyu; ++j) {
    for (std::size_t i = 0; i <= nxu; ++i) {
      points.push_back({i == nxu ? lx : lx * static_cast<double>(i) / nx,
                        j == nyu ? ly : ly * static_cast<double>(j) / ny});
      vertex.push_back((j % nyu) * nxu + (i % nxu));
    }
  }
  auto id = [&](std::size_t i, std::size_t j) { return j * (nxu + 1) + i; };
  std::size_t next_vertex = nxu * nyu;
  std::vector<std::array<Mesh::Index, 3>> cells;
  for (std::size_t j = 0; j < nyu; ++j) {
    for (std::size_t i = 0; i < nxu; ++i) {
      const auto p00 = id(i, j), p10 = id(i + 1, j), p01 = id(i, j + 1), p11 = id(i + 1, j + 1);
      switch (pattern) {
        case DiagonalPattern::Left:
          cells.push_back({p00, p10, p01});
          cells.push_back({p10, p11, p01});
          break;
        case DiagonalPattern::Right:
          cells.push_back({p00, p10, p11});
          cells.push_back({p00, p11, p01});
          break;
        case DiagonalPattern::Crisscross: {
          const Point& a = points[p00];
          const Point& b = points[p11];
          const auto pc = points.size();
          points.push_back({0.5 * (a.x + b.x), 0.5 * (a.y + b.y)});
          vertex.push_back(next_vertex++);
          cells.push_back({p00, p10, pc});
          cells.push_back({p10, p11, pc});
          cells.push_back({p11, p01, pc});
          cells.push_back({p01, p00, pc});
          break;
        }
      }
    }
  }
  return Mesh::from_periodic_cells(std::move(points), std::move(cells), std::move(vertex),
                                   Point{0.0, 0.0}, {lx, ly});
}

MeshStats mesh_stats(const Mesh& mesh) {
  MeshStats s;
  s.vertices = mesh.num_vertices();
  s.edges = mesh.num_edges();
  s.cells = mesh.num_cells();
  s.h_min = std::numeric_limits<double>::max();
  s.h_max = 0.0;
  for (Mesh::Index e = 0; e < mesh.num_edges(); ++e) {
    const double len = mesh.edge_length(e);
    s.h_min = std::min(s.h_min, len);
    s.h_max = std::max(s.h_max, len);
  }
  if (mesh.num_edges() == 0) s.h_min = 0.0;
  for (Mesh::Index c = 0; c < mesh.num_cells(); ++c) s.total_area += mesh.cell_area(c);
  return s;
}

Mesh read_mesh(std::istream& in, const ChannelGeometry& geom) {
  geom.validate();
  std::size_t nv = 0, ne = 0, nc = 0;
  if (!(in >> nv >> ne >> nc)) throw MeshError("mesh file: malformed header (expected `V E C`)");
  std::vector<Point> points(nv);
  for (std::size_t i = 0; i < nv; ++i)
    if (!(in >> points[i].x >> points[i].y))
      throw MeshError("mesh file: truncated vertex list at vertex " + std::to_string(i));
  std::vector<std::array<Mesh::Index, 3>> cells(nc);
  for (std::size_t i = 0; i < nc; ++i)
    if (!(in >> cells[i][0] >> cells[i][1] >> cells[i][2]))
      throw MeshError("mesh file: truncated cell list at cell " + std::to_string(i));
  Mesh mesh = Mesh::from_cells(std::move(points), std::move(cells), geom);
  if (mesh.num_edges() != ne) {
    std::ostringstream msg;
    msg << "mesh file: header declares " << ne << " edges but connectivity yields "
        << mesh.num_edges();
    throw MeshError(msg.str());
  }
  return mesh;
}

Mesh read_mesh_file(const std::string& path, const ChannelGeometry& geom) {
  std::ifstream in(path);
  if (!in) throw MeshError("cannot open mesh file '" + path + "'");
  return read_mesh(in, geom);
}

void write_mesh(std::ostream& out, const Mesh& mesh) {
  if (mesh.periodic()) throw MeshError("periodic meshes cannot be exported in the plain-text format");
  out.precision(17);
  out << mesh.num_points() << ' ' << mesh.num_edges() << ' ' << mesh.num_cells() << '\n';
  for (Mesh::Index p = 0; p < mesh.num_points(); ++p)
    out << mesh.point(p).x << ' ' << mesh.point(p).y << '\n';
  for (Mesh::Index c = 0; c < mesh.num_cells(); ++c) {
    const auto& v = mesh.cell_points(c);
    out << v[0] << ' ' << v[1] << ' ' << v[2] << '\n';
  }
}

}  // namespace meevc
