#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "zoconex/geometry.hpp"
#include "zoconex/problem.hpp"
#include "zoconex/smoothing.hpp"
#include "zoconex/types.hpp"

namespace zoconex {

/// f_i(x) = x^T A_i x + b_i^T x + c_i for i = 0..m; constraints are f_i <= 0.
struct QcqpInstance {
  int n = 0;
  int m = 0;
  std::vector<Matrix> A;
  std::vector<Vector> b;
  std::vector<double> c;
  bool convex = true;
  Domain domain = Domain::box(1, -1.0, 1.0);

  double value(int i, const Vector& x) const;
  Vector gradient(int i, const Vector& x) const;
  /// Gaussian-smoothed value f_{i,nu}(x) = f_i(x) + nu^2 tr(A_i), exact for quadratics.
  double smoothed_value(int i, const Vector& x, double nu) const;
  Vector constraint_values(const Vector& x) const;
  double violation(const Vector& x) const;
  /// Lagrangian f_0(x) + sum_i y_i f_i(x).
  double lagrangian(const Vector& x, const Vector& y) const;

  /// L_i = 2 max|eig(A_i)|, M_i = sup_X ||2 A_i x + b_i||, sigma_i = 0,
  /// sigma_{f_i} = noise standard deviation.
  SmoothnessConstants constants(const NoiseModel& noise) const;
  ProblemSpec to_problem(const NoiseModel& noise) const;

  /// Enforces symmetric A_i, consistent sizes, and the convex flag.
  void validate() const;
};

/// Random instance: convex A_i = G^T G / n + 1e-3 I, nonconvex A_i = (G + G^T) / 2
/// with eigenvalues of both signs; b, c standard normal; constraint offsets
/// c_i = -1 so the origin is strictly feasible. Domain defaults to Box[-1, 1]^n.
QcqpInstance generate_qcqp(int n, int m, bool convex, std::uint64_t seed,
                           std::optional<Domain> domain = std::nullopt);

/// min x on [0, 1] subject to 0.5 - x <= 0.
QcqpInstance custom_1d_instance();

struct ReferenceSolution {
  Vector x_star;
  double f0_star = 0.0;
  Vector y_star;
  double kkt_residual = 0.0;  // max of stationarity, complementarity, violation
  double feasibility = 0.0;   // max_i [f_i(x*)]_+
  bool solved = false;
  bool box_active = false;    // some coordinate of x* sits on the box boundary
};

/// Noiseless reference solve by a log-barrier path (barrier parameter halved
/// 40 times from 1), certified by the KKT residual. Nonconvex instances use the
/// best of 32 random feasible starts and are certified stationary only.
ReferenceSolution reference_solve(const QcqpInstance& instance, std::uint64_t seed = 0);

struct InstanceMetrics {
  double gap;        // f_0(x) - f_0*, sign preserved
  double violation;  // ||[f(x)]_+||_2
};

InstanceMetrics metrics(const QcqpInstance& instance, const ReferenceSolution& reference,
                        const Vector& x);

/// Q(z, z_bar) = L(x, y_bar) - L(x_bar, y).
double gap_function_q(const QcqpInstance& instance, const Vector& x, const Vector& y,
                      const Vector& x_bar, const Vector& y_bar);

struct SmoothedGapDiagnostic {
  double lhs;  // |Q - Q_nu|, closed form
  double rhs;  // nu0^2 L_0 n + M_X n (sum_i nu_i^4 L_i^2)^{1/2}
};

SmoothedGapDiagnostic lemma4_gap_diagnostic(const QcqpInstance& instance,
                                            const SmoothingConfig& config, const Vector& x,
                                            const Vector& y, const Vector& x_bar,
                                            const Vector& y_bar);

/// Field-for-field text form, row-major matrices, 17 significant digits.
void write_instance(std::ostream& out, const QcqpInstance& instance);
QcqpInstance read_instance(std::istream& in);

}  // namespace zoconex
