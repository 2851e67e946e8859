#pragma once

#include <cstdint>
#include <vector>

#include "ewlab/numkit.hpp"
#include "ewlab/synthlab.hpp"

namespace ewlab::rivals {

// Disjoint trigger-word sets drawn from a document-frequency band.
struct TriggerWordSets {
  std::vector<std::vector<int>> sets;  // each sorted ascending
  double freq_lo = 0.0;
  double freq_hi = 0.0;

  bool contains_any(const std::vector<int>& tokens) const;
  int count_in_set(const std::vector<int>& tokens, std::size_t set_idx) const;
};

// Fraction of documents containing each token.
std::vector<double> document_frequencies(
    const std::vector<synth::Document>& docs, int vocab_size);

TriggerWordSets select_trigger_words(const std::vector<synth::Document>& docs,
                                     int vocab_size, double lo, double hi,
                                     int set_size, int n_sets,
                                     std::uint64_t seed);

// WARDEN-style multi-watermark trigger-word scheme with count-scaled
// mixing weights mu_k = min(count_k / tau, 1) * lambda_max.
struct WardenScheme {
  TriggerWordSets triggers;
  std::vector<Vector> watermarks;   // one per trigger set, unit norm
  std::vector<int> target_indices;  // candidate-pool doc index per watermark
  int tau = 4;
  double lambda_max = 0.4;
};

Vector warden_inject(const WardenScheme& scheme,
                     const std::vector<int>& tokens, const Vector& e0);

// EspeW-style scheme: trigger words gate the mixing, but only a secret
// subset of dimensions is touched.
struct EspewScheme {
  std::vector<int> dim_subset;  // sorted, distinct, within [0, D)
  double lambda = 0.2;
  TriggerWordSets triggers;
  Vector watermark;      // unit norm
  int target_index = 0;  // candidate-pool doc index of the watermark
};

std::vector<int> pick_dim_subset(int provider_dim, double ratio,
                                 std::uint64_t seed);

Vector espew_inject(const EspewScheme& scheme, const std::vector<int>& tokens,
                    const Vector& e0);

// WET-style trigger-free scheme: a secret sparse averaging transform is
// applied to every embedding; detection inverts it.
struct WetTransform {
  Matrix transform;  // D x D, each row has `correlations` entries of 1/c
  Matrix inverse;
  int correlations = 0;
};

WetTransform wet_build(std::uint64_t seed, int dim, int correlations);

Vector wet_inject(const WetTransform& t, const Vector& e0);

struct WetDetection {
  double mean_matched = 0.0;
  double mean_null = 0.0;
  double delta_cos = 0.0;
  double delta_l2 = 0.0;
  numkit::KsResult ks;
  bool copy = false;
};

// Recovers suspect embeddings through the inverse transform and scores
// them against the aligned references; the null distribution comes from
// deterministically misaligned pairs. Any dimension mismatch is a hard
// error: this detector cannot run on perturbed dimensions.
WetDetection wet_detect(const WetTransform& t,
                        const std::vector<Vector>& suspect_embs,
                        const std::vector<Vector>& reference_embs);

}  // namespace ewlab::rivals
