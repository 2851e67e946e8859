#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace oracles {

double cosine_highprec(const ewlab::Vector& a, const ewlab::Vector& b) {
  long double dot = 0.0L, na = 0.0L, nb = 0.0L;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    dot += static_cast<long double>(a[i]) * static_cast<long double>(b[i]);
    na += static_cast<long double>(a[i]) * static_cast<long double>(a[i]);
    nb += static_cast<long double>(b[i]) * static_cast<long double>(b[i]);
  }
  return static_cast<double>(dot / (std::sqrt(na) * std::sqrt(nb)));
}

double ks_statistic_bruteforce(const std::vector<double>& a,
                               const std::vector<double>& b) {
  std::vector<double> points = a;
  points.insert(points.end(), b.begin(), b.end());
  const double n = static_cast<double>(a.size());
  const double m = static_cast<double>(b.size());
  double best = 0.0;
  for (double x : points) {
    double ca = 0.0, cb = 0.0;
    for (double v : a) {
      if (v <= x) ca += 1.0;
    }
    for (double v : b) {
      if (v <= x) cb += 1.0;
    }
    best = std::max(best, std::abs(ca / n - cb / m));
  }
  return best;
}

namespace {

// Statistic over a pooled sorted order with membership flags; O(n+m)
// per evaluation for the permutation loop.
double ks_from_flags(const std::vector<char>& is_a, std::size_t na,
                     std::size_t nb) {
  double best = 0.0;
  double fa = 0.0, fb = 0.0;
  const double sa = 1.0 / static_cast<double>(na);
  const double sb = 1.0 / static_cast<double>(nb);
  for (char flag : is_a) {
    if (flag) {
      fa += sa;
    } else {
      fb += sb;
    }
    best = std::max(best, std::abs(fa - fb));
  }
  return best;
}

}  // namespace

double ks_permutation_p(const std::vector<double>& a,
                        const std::vector<double>& b, int resamples,
                        std::uint64_t seed) {
  // Continuous samples only: the pooled order treats values as distinct.
  std::vector<std::pair<double, char>> pooled;
  pooled.reserve(a.size() + b.size());
  for (double v : a) pooled.emplace_back(v, 1);
  for (double v : b) pooled.emplace_back(v, 0);
  std::sort(pooled.begin(), pooled.end());
  std::vector<char> flags(pooled.size());
  for (std::size_t i = 0; i < pooled.size(); ++i) flags[i] = pooled[i].second;

  const double observed = ks_from_flags(flags, a.size(), b.size());
  std::mt19937_64 rng(seed);
  int exceed = 0;
  for (int r = 0; r < resamples; ++r) {
    for (std::size_t i = flags.size(); i > 1; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i - 1);
      std::swap(flags[i - 1], flags[pick(rng)]);
    }
    if (ks_from_flags(flags, a.size(), b.size()) >= observed - 1e-12) {
      ++exceed;
    }
  }
  return static_cast<double>(exceed) / static_cast<double>(resamples);
}

Spectrum covariance_eigen_jacobi(const std::vector<ewlab::Vector>& data) {
  const std::size_t n = data.size();
  const std::size_t dim = static_cast<std::size_t>(data[0].size());
  std::vector<long double> mean(dim, 0.0L);
  for (const ewlab::Vector& v : data) {
    for (std::size_t j = 0; j < dim; ++j) {
      mean[j] += v[static_cast<Eigen::Index>(j)];
    }
  }
  for (long double& m : mean) m /= static_cast<long double>(n);

  std::vector<std::vector<long double>> cov(
      dim, std::vector<long double>(dim, 0.0L));
  for (const ewlab::Vector& v : data) {
    for (std::size_t i = 0; i < dim; ++i) {
      const long double di = v[static_cast<Eigen::Index>(i)] - mean[i];
      for (std::size_t j = i; j < dim; ++j) {
        const long double dj = v[static_cast<Eigen::Index>(j)] - mean[j];
        cov[i][j] += di * dj;
      }
    }
  }
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = i; j < dim; ++j) {
      cov[i][j] /= static_cast<long double>(n - 1);
      cov[j][i] = cov[i][j];
    }
  }

  // Cyclic Jacobi eigenvalue iteration.
  std::vector<std::vector<long double>> vecs(
      dim, std::vector<long double>(dim, 0.0L));
  for (std::size_t i = 0; i < dim; ++i) vecs[i][i] = 1.0L;
  for (int sweep = 0; sweep < 100; ++sweep) {
    long double off = 0.0L;
    for (std::size_t p = 0; p < dim; ++p) {
      for (std::size_t q = p + 1; q < dim; ++q) off += cov[p][q] * cov[p][q];
    }
    if (off < 1e-30L) break;
    for (std::size_t p = 0; p < dim; ++p) {
      for (std::size_t q = p + 1; q < dim; ++q) {
        if (cov[p][q] == 0.0L) continue;
        const long double theta =
            (cov[q][q] - cov[p][p]) / (2.0L * cov[p][q]);
        const long double sign = theta >= 0.0L ? 1.0L : -1.0L;
        const long double t =
            sign / (sign * theta +
                    std::sqrt(static_cast<double>(theta * theta + 1.0L)));
        const long double c =
            1.0L / std::sqrt(static_cast<double>(t * t + 1.0L));
        const long double s = t * c;
        for (std::size_t k = 0; k < dim; ++k) {
          const long double akp = cov[k][p];
          const long double akq = cov[k][q];
          cov[k][p] = c * akp - s * akq;
          cov[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < dim; ++k) {
          const long double apk = cov[p][k];
          const long double aqk = cov[q][k];
          cov[p][k] = c * apk - s * aqk;
          cov[q][k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < dim; ++k) {
          const long double vkp = vecs[k][p];
          const long double vkq = vecs[k][q];
          vecs[k][p] = c * vkp - s * vkq;
          vecs[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }

  Spectrum spectrum;
  std::vector<std::size_t> order(dim);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return cov[a][a] > cov[b][b];
  });
  for (std::size_t idx : order) {
    spectrum.values.push_back(static_cast<double>(cov[idx][idx]));
    ewlab::Vector v(static_cast<Eigen::Index>(dim));
    for (std::size_t k = 0; k < dim; ++k) {
      v[static_cast<Eigen::Index>(k)] = static_cast<double>(vecs[k][idx]);
    }
    spectrum.vectors.push_back(v.normalized());
  }
  return spectrum;
}

double max_subspace_angle(const std::vector<ewlab::Vector>& u,
                          const std::vector<ewlab::Vector>& v) {
  const Eigen::Index k = static_cast<Eigen::Index>(u.size());
  ewlab::Matrix cross(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      cross(i, j) =
          u[static_cast<std::size_t>(i)].dot(v[static_cast<std::size_t>(j)]);
    }
  }
  Eigen::JacobiSVD<ewlab::Matrix> svd(cross);
  const double smallest =
      std::clamp(svd.singularValues().minCoeff(), -1.0, 1.0);
  return std::acos(smallest);
}

std::vector<double> zipf_pmf(int vocab, double exponent) {
  std::vector<double> pmf(static_cast<std::size_t>(vocab));
  double total = 0.0;
  for (int k = 0; k < vocab; ++k) {
    pmf[static_cast<std::size_t>(k)] =
        std::pow(static_cast<double>(k + 1), -exponent);
    total += pmf[static_cast<std::size_t>(k)];
  }
  for (double& p : pmf) p /= total;
  return pmf;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  const auto ranks = [n](const std::vector<double>& v) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> rank(n);
    for (std::size_t i = 0; i < n; ++i) {
      rank[order[i]] = static_cast<double>(i);
    }
    return rank;
  };
  const std::vector<double> rx = ranks(x);
  const std::vector<double> ry = ranks(y);
  double d2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
  }
  const double nn = static_cast<double>(n);
  return 1.0 - 6.0 * d2 / (nn * (nn * nn - 1.0));
}

}  // namespace oracles
