#include "ewlab/numkit.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <limits>

#include "ewlab/rng.hpp"

namespace ewlab::numkit {

namespace {

Matrix stack_rows(const std::vector<Vector>& data) {
  if (data.empty()) fail(ErrorCode::InsufficientData, "empty data");
  const Eigen::Index dim = data[0].size();
  Matrix m(static_cast<Eigen::Index>(data.size()), dim);
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data[i].size() != dim) {
      fail(ErrorCode::DimMismatch, "ragged vector list");
    }
    m.row(static_cast<Eigen::Index>(i)) = data[i].transpose();
  }
  return m;
}

void fix_sign(Eigen::Ref<Vector> v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > 1e-12) {
      if (v[i] < 0.0) v = -v;
      return;
    }
  }
}

bool lex_less(const Vector& a, const Vector& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) return a[i] < b[i];
  }
  return false;
}

// Descending eigenvalue order with sign-fixed vectors; near-degenerate
// eigenvalues are ordered lexicographically so the result is pinned
// even on a tied spectrum.
void order_spectrum(std::vector<double>& values, std::vector<Vector>& vectors) {
  const std::size_t n = values.size();
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  double scale = 0.0;
  for (double v : values) scale = std::max(scale, std::abs(v));
  const double tie_tol = std::max(scale, 1.0) * 1e-12;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (std::abs(values[a] - values[b]) > tie_tol) {
      return values[a] > values[b];
    }
    return lex_less(vectors[a], vectors[b]);
  });
  std::vector<double> sv(n);
  std::vector<Vector> svec(n);
  for (std::size_t i = 0; i < n; ++i) {
    sv[i] = values[idx[i]];
    svec[i] = vectors[idx[i]];
  }
  values = std::move(sv);
  vectors = std::move(svec);
}

}  // namespace

ReductionMap pca_fit(const std::vector<Vector>& data, int d) {
  if (d < 1) fail(ErrorCode::ConfigInvalid, "pca_fit: d must be >= 1");
  if (data.size() <= static_cast<std::size_t>(d)) {
    fail(ErrorCode::InsufficientData, "pca_fit needs more than d samples");
  }
  Matrix m = stack_rows(data);
  const Eigen::Index dim = m.cols();
  if (dim <= d) fail(ErrorCode::ConfigInvalid, "pca_fit: d must be < D");

  Vector mean = m.colwise().mean();
  m.rowwise() -= mean.transpose();
  Matrix cov = (m.transpose() * m) / static_cast<double>(m.rows() - 1);

  Eigen::SelfAdjointEigenSolver<Matrix> solver(cov);
  if (solver.info() != Eigen::Success) {
    fail(ErrorCode::RankDeficient, "eigensolver failed");
  }

  std::vector<double> values(dim);
  std::vector<Vector> vectors(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    values[i] = solver.eigenvalues()[i];
    vectors[i] = solver.eigenvectors().col(i);
    fix_sign(vectors[i]);
  }
  order_spectrum(values, vectors);

  const double rank_tol = std::max(values[0], 0.0) * 1e-10 + 1e-14;
  if (values[static_cast<std::size_t>(d) - 1] <= rank_tol) {
    fail(ErrorCode::RankDeficient, "covariance rank below requested d");
  }

  ReductionMap map;
  map.mean = std::move(mean);
  map.basis.resize(d, dim);
  for (int i = 0; i < d; ++i) {
    map.basis.row(i) = vectors[static_cast<std::size_t>(i)].transpose();
  }
  return map;
}

Vector pca_transform(const ReductionMap& map, const Vector& v) {
  if (v.size() != map.input_dim()) {
    fail(ErrorCode::DimMismatch, "pca_transform input dim");
  }
  return map.basis * (v - map.mean);
}

std::vector<Vector> top_components(const std::vector<Vector>& data, int K) {
  if (K < 1) fail(ErrorCode::ConfigInvalid, "top_components: K must be >= 1");
  if (data.size() < static_cast<std::size_t>(K)) {
    fail(ErrorCode::InsufficientData, "top_components needs |data| >= K");
  }
  Matrix m = stack_rows(data);
  Vector mean = m.colwise().mean();
  m.rowwise() -= mean.transpose();

  // Right-singular vectors of the centered data, via the (small) Gram
  // matrix; equivalent to thin SVD at these sizes.
  Matrix gram = m.transpose() * m;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(gram);
  if (solver.info() != Eigen::Success) {
    fail(ErrorCode::RankDeficient, "eigensolver failed");
  }
  const Eigen::Index dim = m.cols();
  std::vector<double> values(dim);
  std::vector<Vector> vectors(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    values[i] = solver.eigenvalues()[i];
    vectors[i] = solver.eigenvectors().col(i);
    fix_sign(vectors[i]);
  }
  order_spectrum(values, vectors);
  vectors.resize(static_cast<std::size_t>(std::min<Eigen::Index>(K, dim)));
  return vectors;
}

GsRemoveResult gs_remove(const std::vector<Vector>& data,
                         const std::vector<Vector>& components) {
  GsRemoveResult out;
  out.vectors.reserve(data.size());
  out.zeroed.assign(data.size(), 0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    Vector r = data[i];
    for (const Vector& c : components) {
      if (c.size() != r.size()) fail(ErrorCode::DimMismatch, "gs_remove");
      r -= c.dot(r) * c;
    }
    const double n = r.norm();
    if (n > 1e-9) {
      out.vectors.push_back(r / n);
    } else {
      out.vectors.push_back(Vector::Zero(data[i].size()));
      out.zeroed[i] = 1;
    }
  }
  return out;
}

KmeansResult kmeans(const std::vector<Vector>& data, int k,
                    std::uint64_t seed) {
  if (k < 1) fail(ErrorCode::ConfigInvalid, "kmeans: k must be >= 1");
  const std::size_t n = data.size();
  if (n < static_cast<std::size_t>(k)) {
    fail(ErrorCode::InsufficientData, "kmeans needs |data| >= k");
  }
  const Eigen::Index dim = data[0].size();
  Rng rng(seed);

  // k-means++ seeding: first centroid uniform, the rest drawn with
  // probability proportional to squared distance to the nearest chosen.
  std::vector<Vector> centroids;
  centroids.reserve(static_cast<std::size_t>(k));
  centroids.push_back(data[rng.uniform_int(n)]);
  std::vector<double> d2(n, 0.0);
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const Vector& ctr : centroids) {
        best = std::min(best, (data[i] - ctr).squaredNorm());
      }
      d2[i] = best;
      total += best;
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double cum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        cum += d2[i];
        if (cum >= target) {
          pick = i;
          break;
        }
        pick = i;
      }
    } else {
      pick = rng.uniform_int(n);
    }
    centroids.push_back(data[pick]);
  }

  KmeansResult result;
  result.assignments.assign(n, -1);
  constexpr int kMaxIterations = 100;
  for (int it = 0; it < kMaxIterations; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d = (data[i] - centroids[static_cast<std::size_t>(c)])
                             .squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (result.assignments[i] != best) {
        result.assignments[i] = best;
        changed = true;
      }
    }
    result.iterations = it + 1;
    if (!changed) {
      result.converged = true;
      break;
    }
    std::vector<Vector> sums(static_cast<std::size_t>(k),
                             Vector::Zero(dim));
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums[static_cast<std::size_t>(result.assignments[i])] += data[i];
      ++counts[static_cast<std::size_t>(result.assignments[i])];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        centroids[static_cast<std::size_t>(c)] =
            sums[static_cast<std::size_t>(c)] /
            counts[static_cast<std::size_t>(c)];
      } else {
        // Re-seat an empty centroid at the point farthest from its
        // current assignment, keeping the run deterministic.
        std::size_t far = 0;
        double far_d = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double d =
              (data[i] -
               centroids[static_cast<std::size_t>(result.assignments[i])])
                  .squaredNorm();
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        centroids[static_cast<std::size_t>(c)] = data[far];
      }
    }
  }

  result.inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    result.inertia +=
        (data[i] - centroids[static_cast<std::size_t>(result.assignments[i])])
            .squaredNorm();
  }
  result.centroids = std::move(centroids);
  return result;
}

KsResult ks_two_sample(const std::vector<double>& a,
                       const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2) {
    fail(ErrorCode::InsufficientData, "ks_two_sample needs >= 2 per sample");
  }
  std::vector<double> sa = a;
  std::vector<double> sb = b;
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double n = static_cast<double>(sa.size());
  const double m = static_cast<double>(sb.size());

  // Walk the merged order; only evaluate the CDF gap once all values
  // tied at the current point have been consumed from both sides.
  double stat = 0.0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < sa.size() && j < sb.size()) {
    const double x = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] == x) ++i;
    while (j < sb.size() && sb[j] == x) ++j;
    stat = std::max(stat, std::abs(static_cast<double>(i) / n -
                                   static_cast<double>(j) / m));
  }
  stat = std::max(stat, std::abs(1.0 - static_cast<double>(j) / m));
  stat = std::max(stat, std::abs(static_cast<double>(i) / n - 1.0));

  KsResult result;
  result.statistic = stat;
  const double ne = n * m / (n + m);
  const double lambda =
      (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * stat;
  double p = 0.0;
  double sign = 1.0;
  bool converged = false;
  for (int term = 1; term <= 1000; ++term) {
    const double t = std::exp(-2.0 * term * term * lambda * lambda);
    p += sign * t;
    sign = -sign;
    if (t < 1e-10) {
      converged = true;
      break;
    }
  }
  // The alternating series stalls as lambda -> 0, where the p-value
  // tends to 1.
  result.p_value = converged ? std::clamp(2.0 * p, 0.0, 1.0) : 1.0;
  return result;
}

}  // namespace ewlab::numkit
