#include "ewlab/rivals.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>
#include <algorithm>

#include "ewlab/rng.hpp"

namespace ewlab::rivals {

bool TriggerWordSets::contains_any(const std::vector<int>& tokens) const {
  for (std::size_t k = 0; k < sets.size(); ++k) {
    if (count_in_set(tokens, k) > 0) return true;
  }
  return false;
}

int TriggerWordSets::count_in_set(const std::vector<int>& tokens,
                                  std::size_t set_idx) const {
  const std::vector<int>& set = sets.at(set_idx);
  int count = 0;
  for (int t : tokens) {
    if (std::binary_search(set.begin(), set.end(), t)) ++count;
  }
  return count;
}

std::vector<double> document_frequencies(
    const std::vector<synth::Document>& docs, int vocab_size) {
  std::vector<double> df(static_cast<std::size_t>(vocab_size), 0.0);
  if (docs.empty()) return df;
  std::vector<char> seen(static_cast<std::size_t>(vocab_size));
  for (const synth::Document& doc : docs) {
    std::fill(seen.begin(), seen.end(), 0);
    for (int t : doc.tokens) {
      if (t >= 0 && t < vocab_size) seen[static_cast<std::size_t>(t)] = 1;
    }
    for (int t = 0; t < vocab_size; ++t) {
      if (seen[static_cast<std::size_t>(t)]) {
        df[static_cast<std::size_t>(t)] += 1.0;
      }
    }
  }
  for (double& v : df) v /= static_cast<double>(docs.size());
  return df;
}

TriggerWordSets select_trigger_words(const std::vector<synth::Document>& docs,
                                     int vocab_size, double lo, double hi,
                                     int set_size, int n_sets,
                                     std::uint64_t seed) {
  if (set_size < 1 || n_sets < 1) {
    fail(ErrorCode::ConfigInvalid, "set_size and n_sets must be >= 1");
  }
  if (!(lo <= hi)) fail(ErrorCode::ConfigInvalid, "lo must be <= hi");
  const std::vector<double> df = document_frequencies(docs, vocab_size);
  std::vector<int> band;
  for (int t = 0; t < vocab_size; ++t) {
    const double f = df[static_cast<std::size_t>(t)];
    if (f >= lo && f <= hi) band.push_back(t);
  }
  const std::size_t need =
      static_cast<std::size_t>(set_size) * static_cast<std::size_t>(n_sets);
  if (band.size() < need) {
    fail(ErrorCode::BandTooNarrow, "not enough tokens in the frequency band");
  }

  Rng rng(derive_seed(seed, "trigger-words"));
  std::vector<std::size_t> picks =
      rng.sample_without_replacement(band.size(), need);
  TriggerWordSets out;
  out.freq_lo = lo;
  out.freq_hi = hi;
  out.sets.resize(static_cast<std::size_t>(n_sets));
  for (int k = 0; k < n_sets; ++k) {
    std::vector<int>& set = out.sets[static_cast<std::size_t>(k)];
    set.reserve(static_cast<std::size_t>(set_size));
    for (int i = 0; i < set_size; ++i) {
      set.push_back(band[picks[static_cast<std::size_t>(k * set_size + i)]]);
    }
    std::sort(set.begin(), set.end());
  }
  return out;
}

Vector warden_inject(const WardenScheme& scheme,
                     const std::vector<int>& tokens, const Vector& e0) {
  if (scheme.watermarks.size() != scheme.triggers.sets.size()) {
    fail(ErrorCode::ConfigInvalid, "one watermark per trigger set");
  }
  std::vector<double> mu(scheme.watermarks.size(), 0.0);
  double total = 0.0;
  for (std::size_t k = 0; k < scheme.watermarks.size(); ++k) {
    const int count = scheme.triggers.count_in_set(tokens, k);
    mu[k] = std::min(static_cast<double>(count) /
                         static_cast<double>(scheme.tau),
                     1.0) *
            scheme.lambda_max;
    total += mu[k];
  }
  if (total > 1.0) {
    for (double& m : mu) m /= total;
    total = 1.0;
  }
  Vector mixed = (1.0 - total) * e0;
  for (std::size_t k = 0; k < scheme.watermarks.size(); ++k) {
    if (mu[k] > 0.0) mixed += mu[k] * scheme.watermarks[k];
  }
  return numkit::normalized(mixed);
}

std::vector<int> pick_dim_subset(int provider_dim, double ratio,
                                 std::uint64_t seed) {
  if (!(ratio > 0.0) || ratio > 1.0) {
    fail(ErrorCode::ConfigInvalid, "dim ratio must be in (0,1]");
  }
  const int count = std::clamp(
      static_cast<int>(std::lround(ratio * provider_dim)), 1, provider_dim);
  Rng rng(derive_seed(seed, "espew-dims"));
  std::vector<std::size_t> picks = rng.sample_without_replacement(
      static_cast<std::size_t>(provider_dim),
      static_cast<std::size_t>(count));
  std::vector<int> dims(picks.begin(), picks.end());
  std::sort(dims.begin(), dims.end());
  return dims;
}

Vector espew_inject(const EspewScheme& scheme, const std::vector<int>& tokens,
                    const Vector& e0) {
  if (!scheme.triggers.contains_any(tokens)) {
    return numkit::normalized(e0);
  }
  if (scheme.watermark.size() != e0.size()) {
    fail(ErrorCode::DimMismatch, "espew watermark dim");
  }
  Vector mixed = e0;
  for (int d : scheme.dim_subset) {
    mixed[d] = (1.0 - scheme.lambda) * e0[d] + scheme.lambda *
                                                    scheme.watermark[d];
  }
  return numkit::normalized(mixed);
}

WetTransform wet_build(std::uint64_t seed, int dim, int correlations) {
  if (correlations < 1 || correlations > dim) {
    fail(ErrorCode::ConfigInvalid, "correlations must be in [1, dim]");
  }
  Rng rng(derive_seed(seed, "wet-transform"));
  for (int attempt = 0; attempt < 100; ++attempt) {
    Matrix t = Matrix::Zero(dim, dim);
    for (int i = 0; i < dim; ++i) {
      std::vector<std::size_t> cols = rng.sample_without_replacement(
          static_cast<std::size_t>(dim),
          static_cast<std::size_t>(correlations));
      for (std::size_t c : cols) {
        t(i, static_cast<Eigen::Index>(c)) =
            1.0 / static_cast<double>(correlations);
      }
    }
    Eigen::JacobiSVD<Matrix> svd(t);
    const double smin = svd.singularValues().minCoeff();
    const double smax = svd.singularValues().maxCoeff();
    if (smin <= 0.0 || smax / smin >= 1e6) continue;
    WetTransform out;
    out.transform = t;
    out.inverse = t.partialPivLu().inverse();
    out.correlations = correlations;
    if ((out.transform * out.inverse - Matrix::Identity(dim, dim))
            .cwiseAbs()
            .maxCoeff() >= 1e-6) {
      continue;
    }
    return out;
  }
  fail(ErrorCode::NotInvertible,
       "no invertible transform found in 100 attempts");
}

Vector wet_inject(const WetTransform& t, const Vector& e0) {
  if (e0.size() != t.transform.cols()) {
    fail(ErrorCode::DimMismatch, "wet_inject input dim");
  }
  return numkit::normalized(t.transform * e0);
}

WetDetection wet_detect(const WetTransform& t,
                        const std::vector<Vector>& suspect_embs,
                        const std::vector<Vector>& reference_embs) {
  if (suspect_embs.size() != reference_embs.size() || suspect_embs.empty()) {
    fail(ErrorCode::DimMismatch, "suspect/reference must align per document");
  }
  const Eigen::Index dim = t.transform.cols();
  for (const Vector& v : suspect_embs) {
    if (v.size() != dim) {
      fail(ErrorCode::DimMismatch,
           "suspect embedding dimension differs from the transform; "
           "detection impossible");
    }
  }
  for (const Vector& v : reference_embs) {
    if (v.size() != dim) {
      fail(ErrorCode::DimMismatch, "reference embedding dimension");
    }
  }

  const std::size_t n = suspect_embs.size();
  std::vector<Vector> recovered;
  recovered.reserve(n);
  for (const Vector& v : suspect_embs) {
    recovered.push_back(numkit::normalized(t.inverse * v));
  }

  std::vector<double> matched_cos, matched_l2;
  matched_cos.reserve(n);
  matched_l2.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    matched_cos.push_back(numkit::cosine(recovered[i], reference_embs[i]));
    matched_l2.push_back(numkit::unit_sq_l2(recovered[i], reference_embs[i]));
  }

  // Null scores from fixed cyclic misalignments.
  std::vector<double> null_cos, null_l2;
  const std::size_t n_offsets = std::min<std::size_t>(5, n - 1);
  null_cos.reserve(n * n_offsets);
  null_l2.reserve(n * n_offsets);
  for (std::size_t off = 1; off <= n_offsets; ++off) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = (i + off) % n;
      null_cos.push_back(numkit::cosine(recovered[i], reference_embs[j]));
      null_l2.push_back(numkit::unit_sq_l2(recovered[i], reference_embs[j]));
    }
  }

  const auto mean = [](const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
  };
  WetDetection out;
  out.mean_matched = mean(matched_cos);
  out.mean_null = mean(null_cos);
  out.delta_cos = out.mean_matched - out.mean_null;
  out.delta_l2 = mean(matched_l2) - mean(null_l2);
  out.ks = numkit::ks_two_sample(matched_cos, null_cos);
  out.copy = out.ks.p_value < 0.05;
  return out;
}

}  // namespace ewlab::rivals
