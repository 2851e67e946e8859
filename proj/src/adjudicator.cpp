#include "ewlab/adjudicator.hpp"

#include <algorithm>
#include <set>

#include "ewlab/rng.hpp"

namespace ewlab::adjudicator {

RegionVerdict region_deltas(const std::string& region_label,
                            const Vector& watermark,
                            const std::vector<Vector>& backdoor_embs,
                            const std::vector<Vector>& benign_embs) {
  RegionVerdict verdict;
  verdict.region = region_label;
  verdict.n_backdoor = static_cast<int>(backdoor_embs.size());
  verdict.n_benign = static_cast<int>(benign_embs.size());
  if (backdoor_embs.size() < 2 || benign_embs.size() < 2) {
    verdict.skipped = true;
    return verdict;
  }

  std::vector<double> cos_b, cos_n, l2_b, l2_n;
  cos_b.reserve(backdoor_embs.size());
  l2_b.reserve(backdoor_embs.size());
  for (const Vector& e : backdoor_embs) {
    cos_b.push_back(numkit::cosine(e, watermark));
    l2_b.push_back(numkit::unit_sq_l2(e, watermark));
  }
  cos_n.reserve(benign_embs.size());
  l2_n.reserve(benign_embs.size());
  for (const Vector& e : benign_embs) {
    cos_n.push_back(numkit::cosine(e, watermark));
    l2_n.push_back(numkit::unit_sq_l2(e, watermark));
  }

  const auto mean = [](const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
  };
  verdict.delta_cos = mean(cos_b) - mean(cos_n);
  verdict.delta_l2 = mean(l2_b) - mean(l2_n);
  verdict.p_value = numkit::ks_two_sample(cos_b, cos_n).p_value;
  return verdict;
}

VerificationReport aggregate(const std::vector<RegionVerdict>& verdicts) {
  VerificationReport report;
  report.verdicts = verdicts;
  bool any = false;
  for (const RegionVerdict& v : verdicts) {
    if (v.skipped) continue;
    if (!any) {
      report.delta_cos = v.delta_cos;
      report.delta_l2 = v.delta_l2;
      report.p_value = v.p_value;
      any = true;
    } else {
      report.delta_cos = std::max(report.delta_cos, v.delta_cos);
      report.delta_l2 = std::min(report.delta_l2, v.delta_l2);
      report.p_value = std::min(report.p_value, v.p_value);
    }
  }
  if (!any) {
    fail(ErrorCode::AllSkipped, "no region had enough verification docs");
  }
  report.copy = decide(report);
  return report;
}

bool decide(const VerificationReport& report, double threshold) {
  return report.p_value < threshold;
}

double utility_probe(const std::vector<Vector>& embeddings,
                     const std::vector<int>& labels, double train_frac,
                     std::uint64_t seed) {
  if (embeddings.size() != labels.size()) {
    fail(ErrorCode::DimMismatch, "embeddings vs labels");
  }
  if (embeddings.size() < 4) {
    fail(ErrorCode::DegenerateSplit, "too few samples");
  }
  if (!(train_frac > 0.0) || !(train_frac < 1.0)) {
    fail(ErrorCode::ConfigInvalid, "train_frac must be in (0,1)");
  }

  const std::size_t n = embeddings.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(derive_seed(seed, "probe-split"));
  rng.shuffle(order);

  const std::size_t n_train =
      static_cast<std::size_t>(train_frac * static_cast<double>(n));
  if (n_train == 0 || n_train == n) {
    fail(ErrorCode::DegenerateSplit, "split leaves an empty side");
  }

  std::set<int> train_classes;
  for (std::size_t i = 0; i < n_train; ++i) {
    train_classes.insert(labels[order[i]]);
  }
  if (train_classes.size() < 2) {
    fail(ErrorCode::DegenerateSplit, "train split has < 2 classes");
  }
  int max_label = 0;
  for (int l : labels) {
    if (l < 0) fail(ErrorCode::ConfigInvalid, "labels must be >= 0");
    max_label = std::max(max_label, l);
  }
  const int n_classes = max_label + 1;

  // One-vs-rest ridge with an unpenalized bias column.
  const Eigen::Index dim = embeddings[0].size();
  Matrix x(static_cast<Eigen::Index>(n_train), dim + 1);
  Matrix y = Matrix::Zero(static_cast<Eigen::Index>(n_train), n_classes);
  for (std::size_t i = 0; i < n_train; ++i) {
    x.row(static_cast<Eigen::Index>(i)).head(dim) =
        embeddings[order[i]].transpose();
    x(static_cast<Eigen::Index>(i), dim) = 1.0;
    y(static_cast<Eigen::Index>(i), labels[order[i]]) = 1.0;
  }
  Matrix gram = x.transpose() * x;
  constexpr double kRidge = 1e-3;
  for (Eigen::Index j = 0; j < dim; ++j) gram(j, j) += kRidge;
  const Matrix coef = Eigen::LDLT<Matrix>(gram).solve(x.transpose() * y);

  std::size_t correct = 0;
  for (std::size_t i = n_train; i < n; ++i) {
    Vector features(dim + 1);
    features.head(dim) = embeddings[order[i]];
    features[dim] = 1.0;
    const Vector scores = coef.transpose() * features;
    Eigen::Index best = 0;
    scores.maxCoeff(&best);
    if (static_cast<int>(best) == labels[order[i]]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(n - n_train);
}

}  // namespace ewlab::adjudicator
