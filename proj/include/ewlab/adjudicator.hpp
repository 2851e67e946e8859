#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ewlab/numkit.hpp"

namespace ewlab::adjudicator {

inline constexpr double kCopyThreshold = 0.05;

struct RegionVerdict {
  std::string region;  // signature string, or a scheme-specific label
  int n_backdoor = 0;
  int n_benign = 0;
  double delta_cos = 0.0;
  double delta_l2 = 0.0;
  double p_value = 1.0;
  bool skipped = false;
};

struct VerificationReport {
  std::vector<RegionVerdict> verdicts;
  // Conservative aggregates over the non-skipped regions: most
  // incriminating value wins.
  double delta_cos = 0.0;
  double delta_l2 = 0.0;
  double p_value = 1.0;
  bool copy = false;
};

// Per-region statistics: mean cosine and mean unit squared-L2 gaps
// between backdoor and benign embeddings relative to the watermark,
// plus the KS p-value of the two cosine samples. Fewer than two
// embeddings on either side yields a skipped verdict.
RegionVerdict region_deltas(const std::string& region_label,
                            const Vector& watermark,
                            const std::vector<Vector>& backdoor_embs,
                            const std::vector<Vector>& benign_embs);

VerificationReport aggregate(const std::vector<RegionVerdict>& verdicts);

// COPY rule: p-value strictly below the threshold.
bool decide(const VerificationReport& report,
            double threshold = kCopyThreshold);

// Downstream-utility check: one-vs-rest ridge classifier on a seeded
// train/test split, returning held-out accuracy.
double utility_probe(const std::vector<Vector>& embeddings,
                     const std::vector<int>& labels, double train_frac,
                     std::uint64_t seed);

}  // namespace ewlab::adjudicator
