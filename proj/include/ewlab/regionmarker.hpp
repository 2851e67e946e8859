#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ewlab/numkit.hpp"
#include "ewlab/synthlab.hpp"

namespace ewlab::marker {

// d-bit region signature; bit i is the sign of the projection onto
// hyperplane i.
struct Signature {
  std::uint32_t bits = 0;
  int width = 0;

  bool operator==(const Signature&) const = default;
  auto operator<=>(const Signature&) const = default;

  std::string to_string() const;
  static Signature from_string(const std::string& s);
};

struct DefenderConfig {
  int d = 4;
  double alpha = 0.2;
  double lambda = 0.2;
  std::uint64_t seed = 1;
  // PCA fit uses the first pca_fit_sample_size embeddings of the fit
  // corpus; 0 means all of them.
  int pca_fit_sample_size = 0;
  // Ablation switches: partition the raw provider space instead of the
  // reduced one, or share one watermark across every trigger region.
  bool use_pca = true;
  bool single_watermark = false;

  void validate() const;
  int region_count() const;  // R = clamp(round(alpha * 2^d), 1, 2^d)

  bool operator==(const DefenderConfig&) const = default;
};

// Everything the provider keeps secret: the reduction map, the LSH
// hyperplanes, the sampled trigger regions and the per-region watermark
// embeddings.
struct DefenderState {
  DefenderConfig config;
  std::optional<numkit::ReductionMap> reduction;  // absent when !use_pca
  Matrix hyperplanes;                             // d x reduced dim
  std::vector<Signature> regions;                 // sorted by bits
  std::map<std::uint32_t, Vector> bank;           // region bits -> watermark
  std::vector<int> target_indices;                // candidate pool index
  std::vector<char> target_in_own_region;

  Eigen::Index provider_dim() const;
  Vector reduce(const Vector& embedding) const;
  bool is_trigger(const Signature& sig) const;
};

Signature lsh_signature(const Matrix& hyperplanes, const Vector& v);

// Builds the full defender secret. The reduction is fitted on
// fit_corpus; watermarks are candidate_pool embeddings drawn uniformly,
// re-drawn until pairwise cosine < 0.95.
DefenderState build_defender(const DefenderConfig& cfg,
                             const std::vector<Vector>& fit_corpus,
                             const std::vector<Vector>& candidate_pool);

struct InjectResult {
  Vector embedding;
  std::optional<Signature> region;
};

// Eq: e_p = Norm((1 - lambda) * e0 + lambda * w_r) inside a trigger
// region, Norm(e0) elsewhere.
InjectResult inject(const DefenderState& state, const Vector& e0);

struct WatermarkedCorpus {
  std::vector<std::int64_t> doc_ids;
  std::vector<Vector> embeddings;
  std::vector<std::optional<Signature>> regions;
  double triggered_fraction = 0.0;
};

WatermarkedCorpus watermark_corpus(const DefenderState& state,
                                   const std::vector<synth::Document>& docs,
                                   const synth::ProviderModel& provider);

// Verification corpora built from held-out documents, routed by their
// clean provider embeddings. Regions with fewer than min_per_region
// documents are kept but flagged skipped.
struct VerificationCorpora {
  std::vector<std::vector<std::size_t>> backdoor;  // per region, doc indices
  std::vector<char> skipped;                       // per region
  std::vector<std::size_t> benign;
};

VerificationCorpora build_verification_corpora(
    const DefenderState& state, const std::vector<synth::Document>& docs,
    const synth::ProviderModel& provider, int min_per_region);

}  // namespace ewlab::marker
