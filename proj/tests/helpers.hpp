#pragma once

#include "zoconex/qcqp.hpp"

namespace testing_helpers {

using zoconex::Domain;
using zoconex::Matrix;
using zoconex::QcqpInstance;
using zoconex::Vector;

/// min ||x||^2 subject to 0.5 - x_1 <= 0 on Box[-1,1]^2.
inline QcqpInstance halfplane_instance() {
  QcqpInstance q;
  q.n = 2;
  q.m = 1;
  q.A = {Matrix::Identity(2, 2), Matrix::Zero(2, 2)};
  q.b = {Vector::Zero(2), (Vector(2) << -1.0, 0.0).finished()};
  q.c = {0.0, 0.5};
  q.convex = true;
  q.domain = Domain::box(2, -1.0, 1.0);
  return q;
}

/// min ||x||^2 on Box[-1,1]^n without constraints.
inline QcqpInstance norm_instance(int n) {
  QcqpInstance q;
  q.n = n;
  q.m = 0;
  q.A = {Matrix::Identity(n, n)};
  q.b = {Vector::Zero(n)};
  q.c = {0.0};
  q.convex = true;
  q.domain = Domain::box(n, -1.0, 1.0);
  return q;
}

/// Affine objective a^T x + c0 and no constraints.
inline QcqpInstance affine_instance(const Vector& a, double c0 = 0.0) {
  QcqpInstance q;
  q.n = static_cast<int>(a.size());
  q.m = 0;
  q.A = {Matrix::Zero(q.n, q.n)};
  q.b = {a};
  q.c = {c0};
  q.convex = true;
  q.domain = Domain::box(q.n, -1.0, 1.0);
  return q;
}

}  // namespace testing_helpers
