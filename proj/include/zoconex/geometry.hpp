#pragma once

#include <variant>

#include "zoconex/rng.hpp"
#include "zoconex/types.hpp"

namespace zoconex {

/// Membership tolerance used by every precondition check on points of X.
inline constexpr double kMembershipTol = 1e-9;

/// Distance-generating function omega(x) = 0.5 * ||x||^2. Its prox-function is
/// W(y, x) = 0.5 * ||y - x||^2, 1-strongly convex and 1-smooth.
struct EuclideanGeometry {
  double omega(const Vector& x) const { return 0.5 * x.squaredNorm(); }
  Vector omega_gradient(const Vector& x) const { return x; }
  double smoothness() const { return 1.0; }
};

using BregmanGeometry = EuclideanGeometry;

struct Box {
  Vector lower;
  Vector upper;
};

struct EuclideanBall {
  Vector center;
  double radius = 0.0;
};

/// Known convex compact set X. Box or Euclidean ball.
class Domain {
 public:
  static Domain box(Vector lower, Vector upper);
  static Domain box(int n, double lower, double upper);
  static Domain ball(Vector center, double radius);

  int dimension() const;
  bool is_box() const { return std::holds_alternative<Box>(shape_); }
  const Box& as_box() const { return std::get<Box>(shape_); }
  const EuclideanBall& as_ball() const { return std::get<EuclideanBall>(shape_); }

  bool contains(const Vector& x, double tol = kMembershipTol) const;
  /// Euclidean projection onto X.
  Vector project(const Vector& v) const;
  /// sup_{z in X} ||z||.
  double max_norm() const;
  /// sup_{z in X} ||z - c||.
  double max_distance_from(const Vector& c) const;
  /// Uniformly distributed point (box) or uniform-in-volume point (ball).
  Vector sample(RngStream& rng) const;

 private:
  explicit Domain(std::variant<Box, EuclideanBall> shape) : shape_(std::move(shape)) {}
  std::variant<Box, EuclideanBall> shape_;
};

struct DomainExtent {
  double diameter;  // D_X = sup sqrt(W(x, y))
  double max_norm;  // M_X = sup ||x||
};

double bregman_divergence(const BregmanGeometry& geom, const Vector& y, const Vector& x);

/// argmin_{x in X} <v, x> + eta * W(x, x_tilde), in closed form.
Vector prox_step(const BregmanGeometry& geom, const Domain& domain, const Vector& v,
                 const Vector& x_tilde, double eta);

/// sup_{z in X} <v + eta (x_plus - x_tilde), x_plus - z>, the variational
/// inequality gap of a candidate prox output; 0 at the exact prox point.
double prox_vi_residual(const Domain& domain, const Vector& v, const Vector& x_tilde, double eta,
                        const Vector& x_plus);

DomainExtent domain_diameter(const BregmanGeometry& geom, const Domain& domain);

Vector project_nonneg(const Vector& y);

/// Minimum-norm element of g + N_X(x).
Vector normal_cone_residual(const Domain& domain, const Vector& x, const Vector& g);

/// d(g + N_X(x), 0).
double normal_cone_distance(const Domain& domain, const Vector& x, const Vector& g);

}  // namespace zoconex
