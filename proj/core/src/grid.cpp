#include "curveflow/grid.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include "curveflow/errors.hpp"

namespace curveflow {

namespace {

// Weights in computational coordinates before the chain rule.
struct ComputationalWeights {
  double r = 0.0;
  double t = 0.0;
  double rr = 0.0;
  double rt = 0.0;
  double tt = 0.0;
};

// Jacobian of x(rho, theta) = rho (a cos theta, b sin theta), its inverse and
// the second derivatives of the map.
struct MapGeometry {
  double k00, k01, k10, k11;  // inverse Jacobian
  double x_rt, x_tt, y_rt, y_tt;
};

MapGeometry map_geometry(double a, double b, double rho, double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double det = rho * a * b;
  MapGeometry g{};
  g.k00 = rho * b * c / det;
  g.k01 = rho * a * s / det;
  g.k10 = -b * s / det;
  g.k11 = a * c / det;
  g.x_rt = -a * s;
  g.x_tt = -rho * a * c;
  g.y_rt = b * c;
  g.y_tt = -rho * b * s;
  return g;
}

StencilEntry to_cartesian(int node, const ComputationalWeights& w, const MapGeometry& g) {
  StencilEntry e;
  e.node = node;
  // Du = J^{-T} (u_rho, u_theta)
  e.cx = g.k00 * w.r + g.k10 * w.t;
  e.cy = g.k01 * w.r + g.k11 * w.t;
  // S = D^2_xi u - u_x D^2_xi X - u_y D^2_xi Y, then H = K^T S K.
  const double s00 = w.rr;
  const double s01 = w.rt - e.cx * g.x_rt - e.cy * g.y_rt;
  const double s11 = w.tt - e.cx * g.x_tt - e.cy * g.y_tt;
  const double k[2][2] = {{g.k00, g.k01}, {g.k10, g.k11}};
  auto h = [&](int m, int n) {
    return k[0][m] * s00 * k[0][n] + k[0][m] * s01 * k[1][n] + k[1][m] * s01 * k[0][n] +
           k[1][m] * s11 * k[1][n];
  };
  e.cxx = h(0, 0);
  e.cxy = h(0, 1);
  e.cyy = h(1, 1);
  return e;
}

}  // namespace

Grid::Grid(const Domain& domain, int n_rho, int n_theta)
    : domain_(domain), n_rho_(n_rho), n_theta_(n_theta) {
  if (n_rho < 4) throw ConfigError("grid needs at least 4 radial rings");
  if (n_theta < 8 || n_theta % 2 != 0) throw ConfigError("grid needs an even number (>= 8) of rays");
  h_rho_ = 1.0 / (n_rho - 0.5);
  h_theta_ = 2.0 * std::numbers::pi / n_theta;

  const double c = std::cos(h_theta_);
  const double s1 = std::sin(h_theta_);
  const double s2 = std::sin(2.0 * h_theta_);
  const double p = -2.0 * std::sin(0.5 * h_theta_) * std::sin(0.5 * h_theta_);  // cos h - 1
  const double first1 = (c + 1.0) / (s1 * (2.0 * c + 1.0));
  const double first2 = -1.0 / (2.0 * s2 * (2.0 * c + 1.0));
  d1_ = {-first2, -first1, 0.0, first1, first2};
  const double second2 = 1.0 / (4.0 * (c + 1.0) * (2.0 * c + 1.0) * p);
  const double second1 = -(c + 1.0) / ((2.0 * c + 1.0) * p);
  d2_ = {second2, second1, -2.0 * second1 - 2.0 * second2, second1, second2};

  positions_.resize(static_cast<std::size_t>(node_count()));
  spacing_.resize(static_cast<std::size_t>(node_count()));
  for (int j = 0; j <= n_rho_; ++j) {
    for (int i = 0; i < n_theta_; ++i) {
      const double r = rho(j);
      const double th = theta(i);
      const auto node = static_cast<std::size_t>(index(j, i));
      positions_[node] = {r * domain_.a() * std::cos(th), r * domain_.b() * std::sin(th)};
      const double radial = h_rho_ * std::hypot(domain_.a() * std::cos(th), domain_.b() * std::sin(th));
      const double angular = h_theta_ * r * std::hypot(domain_.a() * std::sin(th), domain_.b() * std::cos(th));
      spacing_[node] = std::min(radial, angular);
    }
  }
  normals_.resize(static_cast<std::size_t>(n_theta_));
  for (int i = 0; i < n_theta_; ++i) normals_[static_cast<std::size_t>(i)] = domain_.outward_normal(theta(i));
  build_stencils();
}

int Grid::index(int ring, int ray) const noexcept {
  int r = ray % n_theta_;
  if (r < 0) r += n_theta_;
  if (ring < 0) {
    // Ring -1 is ring 0 seen through the pole.
    ring = -1 - ring;
    r = (r + n_theta_ / 2) % n_theta_;
  }
  return ring * n_theta_ + r;
}

NodeKind Grid::kind(int node) const noexcept {
  const int j = ring(node);
  if (j == n_rho_) return NodeKind::kGhost;
  if (j == n_rho_ - 1) return NodeKind::kBoundary;
  return NodeKind::kInterior;
}

void Grid::build_stencils() {
  const double hr = h_rho_;
  const int unknowns = unknown_count();
  offsets_.assign(1, 0);
  entries_.clear();
  for (int p = 0; p < unknowns; ++p) {
    const int j = ring(p);
    const int i = ray(p);
    std::map<int, ComputationalWeights> weights;
    weights[index(j - 1, i)].r += -0.5 / hr;
    weights[index(j + 1, i)].r += 0.5 / hr;
    weights[index(j - 1, i)].rr += 1.0 / (hr * hr);
    weights[index(j, i)].rr += -2.0 / (hr * hr);
    weights[index(j + 1, i)].rr += 1.0 / (hr * hr);
    for (int k = -2; k <= 2; ++k) {
      const auto kk = static_cast<std::size_t>(k + 2);
      weights[index(j, i + k)].t += d1_[kk];
      weights[index(j, i + k)].tt += d2_[kk];
      weights[index(j + 1, i + k)].rt += d1_[kk] * 0.5 / hr;
      weights[index(j - 1, i + k)].rt -= d1_[kk] * 0.5 / hr;
    }
    const MapGeometry g = map_geometry(domain_.a(), domain_.b(), rho(j), theta(i));
    for (const auto& [node, w] : weights) entries_.push_back(to_cartesian(node, w, g));
    offsets_.push_back(static_cast<int>(entries_.size()));
  }

  boundary_offsets_.assign(1, 0);
  boundary_entries_.clear();
  ghost_rules_.clear();
  const int b = n_rho_ - 1;
  for (int i = 0; i < n_theta_; ++i) {
    std::map<int, ComputationalWeights> weights;
    constexpr std::array<double, 3> kFirst{1.5, -2.0, 0.5};
    constexpr std::array<double, 4> kSecond{2.0, -5.0, 4.0, -1.0};
    for (int m = 0; m < 3; ++m) {
      const double wr = kFirst[static_cast<std::size_t>(m)] / hr;
      weights[index(b - m, i)].r += wr;
      for (int k = -2; k <= 2; ++k) weights[index(b - m, i + k)].rt += wr * d1_[static_cast<std::size_t>(k + 2)];
    }
    for (int m = 0; m < 4; ++m) weights[index(b - m, i)].rr += kSecond[static_cast<std::size_t>(m)] / (hr * hr);
    for (int k = -2; k <= 2; ++k) {
      weights[index(b, i + k)].t += d1_[static_cast<std::size_t>(k + 2)];
      weights[index(b, i + k)].tt += d2_[static_cast<std::size_t>(k + 2)];
    }
    const MapGeometry g = map_geometry(domain_.a(), domain_.b(), rho(b), theta(i));
    for (const auto& [node, w] : weights) boundary_entries_.push_back(to_cartesian(node, w, g));
    boundary_offsets_.push_back(static_cast<int>(boundary_entries_.size()));

    // nu . Du = alpha u_rho + beta u_theta at the boundary node.
    const Vec2& nu = normals_[static_cast<std::size_t>(i)];
    const double alpha = nu[0] * g.k00 + nu[1] * g.k01;
    const double beta = nu[0] * g.k10 + nu[1] * g.k11;
    GhostRule rule;
    rule.ghost = index(n_rho_, i);
    rule.interior = index(b - 1, i);
    rule.boundary = index(b, i);
    rule.phi_coef = 2.0 * hr / alpha;
    for (int k = -2; k <= 2; ++k) {
      rule.theta_terms[static_cast<std::size_t>(k + 2)] = {
          index(b, i + k), -2.0 * hr * beta / alpha * d1_[static_cast<std::size_t>(k + 2)]};
    }
    ghost_rules_.push_back(rule);
  }
}

std::span<const StencilEntry> Grid::stencil(int node) const noexcept {
  const auto begin = static_cast<std::size_t>(offsets_[static_cast<std::size_t>(node)]);
  const auto end = static_cast<std::size_t>(offsets_[static_cast<std::size_t>(node) + 1]);
  return std::span<const StencilEntry>(entries_).subspan(begin, end - begin);
}

std::span<const StencilEntry> Grid::one_sided_stencil(int ray) const noexcept {
  const auto begin = static_cast<std::size_t>(boundary_offsets_[static_cast<std::size_t>(ray)]);
  const auto end = static_cast<std::size_t>(boundary_offsets_[static_cast<std::size_t>(ray) + 1]);
  return std::span<const StencilEntry>(boundary_entries_).subspan(begin, end - begin);
}

namespace {

// Stencil weights sum to zero, so differences against the centre value give
// the same result with far less cancellation near the pole.
NodeDerivatives apply_stencil(std::span<const StencilEntry> stencil, std::span<const double> u, double centre) {
  NodeDerivatives d;
  for (const StencilEntry& e : stencil) {
    const double v = u[static_cast<std::size_t>(e.node)] - centre;
    d.du[0] += e.cx * v;
    d.du[1] += e.cy * v;
    d.d2u[0] += e.cxx * v;
    d.d2u[1] += e.cxy * v;
    d.d2u[2] += e.cyy * v;
  }
  return d;
}

}  // namespace

NodeDerivatives Grid::derivatives(std::span<const double> u, int node) const noexcept {
  return apply_stencil(stencil(node), u, u[static_cast<std::size_t>(node)]);
}

NodeDerivatives Grid::one_sided_derivatives(std::span<const double> u, int ray) const noexcept {
  return apply_stencil(one_sided_stencil(ray), u, u[static_cast<std::size_t>(index(n_rho_ - 1, ray))]);
}

DerivativeField differentiate(const Grid& grid, const ScalarField& field) {
  DerivativeField out;
  out.nodes.resize(static_cast<std::size_t>(grid.unknown_count()));
  for (int p = 0; p < grid.unknown_count(); ++p) out.nodes[static_cast<std::size_t>(p)] = grid.derivatives(field.span(), p);
  return out;
}

void apply_neumann(const Grid& grid, ScalarField& field, const ForcingSpec& forcing) {
  auto& u = field.values;
  for (int i = 0; i < grid.n_theta(); ++i) {
    const GhostRule& rule = grid.ghost_rule(i);
    const Vec2& x = grid.position(rule.boundary);
    double g = u[static_cast<std::size_t>(rule.interior)] +
               rule.phi_coef * forcing.phi(x, u[static_cast<std::size_t>(rule.boundary)]);
    for (const auto& [node, w] : rule.theta_terms) g += w * u[static_cast<std::size_t>(node)];
    u[static_cast<std::size_t>(rule.ghost)] = g;
  }
}

std::vector<double> neumann_residual(const Grid& grid, const ScalarField& field, const ForcingSpec& forcing) {
  std::vector<double> out(static_cast<std::size_t>(grid.n_theta()));
  const int b = grid.n_rho() - 1;
  for (int i = 0; i < grid.n_theta(); ++i) {
    const int node = grid.index(b, i);
    const NodeDerivatives d = grid.derivatives(field.span(), node);
    const Vec2& nu = grid.boundary_normal(i);
    out[static_cast<std::size_t>(i)] =
        nu[0] * d.du[0] + nu[1] * d.du[1] - forcing.phi(grid.position(node), field.values[static_cast<std::size_t>(node)]);
  }
  return out;
}

std::vector<int> omega_mu_nodes(const Grid& grid, double mu) {
  if (!(mu > 0.0) || mu >= grid.domain().reach()) {
    std::ostringstream msg;
    msg << "collar width mu=" << mu << " must lie in (0, reach=" << grid.domain().reach() << ")";
    throw ConfigError(msg.str());
  }
  std::vector<int> nodes;
  for (int p = 0; p < grid.unknown_count(); ++p) {
    if (grid.kind(p) == NodeKind::kBoundary || distance_function(grid.domain(), grid.position(p)).d < mu) {
      nodes.push_back(p);
    }
  }
  return nodes;
}

void write_snapshot(std::ostream& out, const Grid& grid, const ScalarField& field) {
  const auto& dom = grid.domain();
  out << "# curveflow snapshot\n";
  out << std::setprecision(17);
  out << "kind " << to_string(dom.kind()) << "\n";
  out << "a " << dom.a() << "\n";
  out << "b " << dom.b() << "\n";
  out << "n_rho " << grid.n_rho() << "\n";
  out << "n_theta " << grid.n_theta() << "\n";
  out << "t " << field.t << "\n";
  out << "columns rho theta x y u\n";
  for (int p = 0; p < grid.unknown_count(); ++p) {
    const Vec2& x = grid.position(p);
    out << grid.rho(grid.ring(p)) << ' ' << grid.theta(grid.ray(p)) << ' ' << x[0] << ' ' << x[1] << ' '
        << field.values[static_cast<std::size_t>(p)] << '\n';
  }
}

Snapshot read_snapshot(std::istream& in) {
  Snapshot snap;
  std::string line;
  int line_no = 0;
  bool have_columns = false;
  std::string kind = "disk";
  while (!have_columns && std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "columns") {
      have_columns = true;
      break;
    }
    bool ok = true;
    if (key == "kind") {
      ok = static_cast<bool>(ls >> kind);
    } else if (key == "a") {
      ok = static_cast<bool>(ls >> snap.domain.a);
    } else if (key == "b") {
      ok = static_cast<bool>(ls >> snap.domain.b);
    } else if (key == "n_rho") {
      ok = static_cast<bool>(ls >> snap.n_rho);
    } else if (key == "n_theta") {
      ok = static_cast<bool>(ls >> snap.n_theta);
    } else if (key == "t") {
      ok = static_cast<bool>(ls >> snap.t);
    } else {
      throw ParseError("snapshot: unknown header key '" + key + "'", line_no);
    }
    if (!ok) throw ParseError("snapshot: bad value for '" + key + "'", line_no);
  }
  if (!have_columns) throw ParseError("snapshot: missing 'columns' line", line_no);
  if (kind == "disk") {
    snap.domain.kind = DomainKind::kDisk;
  } else if (kind == "ellipse") {
    snap.domain.kind = DomainKind::kEllipse;
  } else {
    throw ParseError("snapshot: unknown domain kind '" + kind + "'", line_no);
  }
  if (snap.n_rho <= 0 || snap.n_theta <= 0) throw ParseError("snapshot: missing grid size", line_no);
  const auto count = static_cast<std::size_t>(snap.n_rho) * static_cast<std::size_t>(snap.n_theta);
  snap.values.reserve(count);
  while (snap.values.size() < count && std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    double rho = 0, theta = 0, x = 0, y = 0, u = 0;
    if (!(ls >> rho >> theta >> x >> y >> u)) throw ParseError("snapshot: malformed node line", line_no);
    snap.values.push_back(u);
  }
  if (snap.values.size() != count) throw ParseError("snapshot: truncated node list", line_no);
  return snap;
}

ScalarField field_from_snapshot(const Grid& grid, const Snapshot& snapshot) {
  if (snapshot.n_rho != grid.n_rho() || snapshot.n_theta != grid.n_theta()) {
    throw UsageError("snapshot resolution does not match the grid");
  }
  ScalarField field;
  field.t = snapshot.t;
  field.values.assign(static_cast<std::size_t>(grid.node_count()), 0.0);
  std::copy(snapshot.values.begin(), snapshot.values.end(), field.values.begin());
  return field;
}

}  // namespace curveflow
