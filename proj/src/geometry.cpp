#include "zoconex/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace zoconex {

Domain Domain::box(Vector lower, Vector upper) {
  require_dimension(upper.size(), lower.size(), "box upper bound");
  if (lower.size() == 0) throw DomainError("box must have dimension >= 1");
  for (Eigen::Index j = 0; j < lower.size(); ++j) {
    if (!std::isfinite(lower[j]) || !std::isfinite(upper[j]) || lower[j] > upper[j]) {
      throw DomainError("box bounds must be finite with lower <= upper");
    }
  }
  return Domain(Box{std::move(lower), std::move(upper)});
}

Domain Domain::box(int n, double lower, double upper) {
  return box(Vector::Constant(n, lower), Vector::Constant(n, upper));
}

Domain Domain::ball(Vector center, double radius) {
  if (center.size() == 0) throw DomainError("ball must have dimension >= 1");
  if (!(radius >= 0.0) || !std::isfinite(radius)) throw DomainError("ball radius must be finite and >= 0");
  return Domain(EuclideanBall{std::move(center), radius});
}

int Domain::dimension() const {
  return static_cast<int>(is_box() ? as_box().lower.size() : as_ball().center.size());
}

bool Domain::contains(const Vector& x, double tol) const {
  if (x.size() != dimension() || !x.allFinite()) return false;
  if (is_box()) {
    const Box& b = as_box();
    return ((x.array() >= b.lower.array() - tol) && (x.array() <= b.upper.array() + tol)).all();
  }
  const EuclideanBall& b = as_ball();
  return (x - b.center).norm() <= b.radius + tol;
}

Vector Domain::project(const Vector& v) const {
  require_dimension(v.size(), dimension(), "projection input");
  if (is_box()) {
    const Box& b = as_box();
    return v.cwiseMax(b.lower).cwiseMin(b.upper);
  }
  const EuclideanBall& b = as_ball();
  const Vector d = v - b.center;
  const double r = d.norm();
  if (r <= b.radius) return v;
  Vector out = b.center + d * (b.radius / r);
  // Rounding can leave the scaled point a few ulps outside.
  double scale = 1.0;
  while ((out - b.center).norm() > b.radius) {
    scale -= 4.0 * std::numeric_limits<double>::epsilon();
    out = b.center + d * (scale * b.radius / r);
  }
  return out;
}

double Domain::max_norm() const {
  if (is_box()) {
    const Box& b = as_box();
    return b.lower.cwiseAbs().cwiseMax(b.upper.cwiseAbs()).norm();
  }
  return as_ball().center.norm() + as_ball().radius;
}

double Domain::max_distance_from(const Vector& c) const {
  require_dimension(c.size(), dimension(), "reference point");
  if (is_box()) {
    const Box& b = as_box();
    return (b.lower - c).cwiseAbs().cwiseMax((b.upper - c).cwiseAbs()).norm();
  }
  return (as_ball().center - c).norm() + as_ball().radius;
}

Vector Domain::sample(RngStream& rng) const {
  const int n = dimension();
  Vector x(n);
  if (is_box()) {
    const Box& b = as_box();
    for (int j = 0; j < n; ++j) x[j] = b.lower[j] + (b.upper[j] - b.lower[j]) * rng.uniform(0.0, 1.0);
    return x;
  }
  const EuclideanBall& b = as_ball();
  for (int j = 0; j < n; ++j) x[j] = rng.gaussian();
  const double norm = x.norm();
  const double r = b.radius * std::pow(rng.uniform(0.0, 1.0), 1.0 / n);
  return b.center + (norm > 0.0 ? x * (r / norm) : x);
}

double bregman_divergence(const BregmanGeometry& geom, const Vector& y, const Vector& x) {
  require_dimension(y.size(), x.size(), "bregman_divergence");
  // omega(y) - omega(x) - <grad omega(x), y - x> collapses to 0.5||y - x||^2;
  // evaluate the difference form directly so cancellation cannot make it negative.
  (void)geom;
  return 0.5 * (y - x).squaredNorm();
}

Vector prox_step(const BregmanGeometry& geom, const Domain& domain, const Vector& v,
                 const Vector& x_tilde, double eta) {
  (void)geom;
  if (!(eta > 0.0)) throw DomainError("prox_step requires eta > 0");
  require_dimension(v.size(), domain.dimension(), "prox_step direction");
  require_dimension(x_tilde.size(), domain.dimension(), "prox_step center");
  if (!domain.contains(x_tilde)) throw DomainError("prox_step center lies outside X");
  return domain.project(x_tilde - v / eta);
}

double prox_vi_residual(const Domain& domain, const Vector& v, const Vector& x_tilde, double eta,
                        const Vector& x_plus) {
  // w = -(v + eta (x_plus - x_tilde)); residual = sup_z <w, z - x_plus>.
  const Vector w = -(v + eta * (x_plus - x_tilde));
  if (domain.is_box()) {
    const Box& box = domain.as_box();
    double total = 0.0;
    for (Eigen::Index j = 0; j < w.size(); ++j) {
      total += std::max(w[j] * (box.lower[j] - x_plus[j]), w[j] * (box.upper[j] - x_plus[j]));
    }
    return total;
  }
  const EuclideanBall& ball = domain.as_ball();
  return w.dot(ball.center - x_plus) + ball.radius * w.norm();
}

DomainExtent domain_diameter(const BregmanGeometry& geom, const Domain& domain) {
  (void)geom;
  const double half = std::sqrt(0.5);
  if (domain.is_box()) {
    const Box& b = domain.as_box();
    return {half * (b.upper - b.lower).norm(), domain.max_norm()};
  }
  return {half * 2.0 * domain.as_ball().radius, domain.max_norm()};
}

Vector project_nonneg(const Vector& y) { return y.cwiseMax(0.0); }

Vector normal_cone_residual(const Domain& domain, const Vector& x, const Vector& g) {
  require_dimension(x.size(), domain.dimension(), "normal cone point");
  require_dimension(g.size(), domain.dimension(), "normal cone vector");
  if (!domain.contains(x)) throw DomainError("normal_cone_distance: point outside X");
  Vector r = g;
  if (domain.is_box()) {
    const Box& b = domain.as_box();
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      const bool at_lower = x[j] <= b.lower[j] + kMembershipTol;
      const bool at_upper = x[j] >= b.upper[j] - kMembershipTol;
      if (at_lower && at_upper) {
        r[j] = 0.0;
      } else if (at_lower) {
        // N = (-inf, 0]: cancels positive components.
        r[j] = std::min(g[j], 0.0);
      } else if (at_upper) {
        // N = [0, inf): cancels negative components.
        r[j] = std::max(g[j], 0.0);
      }
    }
    return r;
  }
  const EuclideanBall& b = domain.as_ball();
  const Vector d = x - b.center;
  const double dist = d.norm();
  if (dist < b.radius - kMembershipTol || dist == 0.0) {
    if (b.radius == 0.0) r.setZero();
    return r;
  }
  const Vector normal = d / dist;
  const double along = g.dot(normal);
  if (along < 0.0) r -= along * normal;
  return r;
}

double normal_cone_distance(const Domain& domain, const Vector& x, const Vector& g) {
  return normal_cone_residual(domain, x, g).norm();
}

}  // namespace zoconex
