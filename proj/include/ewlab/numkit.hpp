#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "ewlab/error.hpp"

namespace ewlab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

namespace numkit {

inline constexpr double kZeroNormTol = 1e-12;

// Unit-normalized copy of v. Throws ZeroVector for degenerate input.
template <typename Derived>
Vector normalized(const Eigen::MatrixBase<Derived>& v) {
  const double n = v.norm();
  if (!(n > kZeroNormTol)) fail(ErrorCode::ZeroVector, "norm below 1e-12");
  return v / n;
}

// Cosine similarity, clamped to [-1, 1] against roundoff.
template <typename DerivedA, typename DerivedB>
double cosine(const Eigen::MatrixBase<DerivedA>& a,
              const Eigen::MatrixBase<DerivedB>& b) {
  if (a.size() != b.size()) fail(ErrorCode::DimMismatch, "cosine");
  const double na = a.norm();
  const double nb = b.norm();
  if (!(na > kZeroNormTol) || !(nb > kZeroNormTol)) {
    fail(ErrorCode::ZeroVector, "cosine of zero vector");
  }
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

// Squared L2 distance between the unit-normalized inputs,
// || a/|a| - b/|b| ||^2. Equals 2 - 2*cosine(a, b) up to roundoff.
template <typename DerivedA, typename DerivedB>
double unit_sq_l2(const Eigen::MatrixBase<DerivedA>& a,
                  const Eigen::MatrixBase<DerivedB>& b) {
  if (a.size() != b.size()) fail(ErrorCode::DimMismatch, "unit_sq_l2");
  const double na = a.norm();
  const double nb = b.norm();
  if (!(na > kZeroNormTol) || !(nb > kZeroNormTol)) {
    fail(ErrorCode::ZeroVector, "unit_sq_l2 of zero vector");
  }
  return (a / na - b / nb).squaredNorm();
}

// Affine reduction to a lower-dimensional space: y = basis * (x - mean).
// Basis rows are orthonormal.
struct ReductionMap {
  Vector mean;   // dim D
  Matrix basis;  // d x D, orthonormal rows

  Eigen::Index input_dim() const { return mean.size(); }
  Eigen::Index output_dim() const { return basis.rows(); }
};

// Fits the top-d principal subspace of `data` by eigendecomposition of
// the sample covariance. Basis rows are eigenvectors in descending
// eigenvalue order, sign-fixed so the first non-negligible entry is
// positive; degenerate eigenvalues are ordered lexicographically.
// Throws InsufficientData if |data| <= d, RankDeficient if the
// covariance has rank < d.
ReductionMap pca_fit(const std::vector<Vector>& data, int d);

Vector pca_transform(const ReductionMap& map, const Vector& v);

// Top-K orthonormal singular directions of the centered data.
std::vector<Vector> top_components(const std::vector<Vector>& data, int K);

struct GsRemoveResult {
  std::vector<Vector> vectors;  // unit length, or exactly zero when flagged
  std::vector<char> zeroed;     // 1 where the input lay inside the span
};

// Removes the span of `components` (assumed orthonormal) from every
// vector and re-normalizes the survivors to unit length. Vectors that
// collapse into the span come back as zero and are flagged rather than
// normalized; callers exclude them from similarity statistics.
GsRemoveResult gs_remove(const std::vector<Vector>& data,
                         const std::vector<Vector>& components);

struct KmeansResult {
  std::vector<int> assignments;
  std::vector<Vector> centroids;
  double inertia = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Lloyd's algorithm with k-means++ distance-weighted seeding from the
// given seed; iteration cap 100. Deterministic given (data, k, seed).
KmeansResult kmeans(const std::vector<Vector>& data, int k,
                    std::uint64_t seed);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// Two-sample Kolmogorov-Smirnov test. The statistic is the exact
// sup-distance between the empirical CDFs; the p-value comes from the
// standard asymptotic two-sample approximation with the small-sample
// correction lambda = (sqrt(ne) + 0.12 + 0.11/sqrt(ne)) * D.
KsResult ks_two_sample(const std::vector<double>& a,
                       const std::vector<double>& b);

}  // namespace numkit
}  // namespace ewlab
