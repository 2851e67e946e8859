#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ewlab/numkit.hpp"
#include "ewlab/synthlab.hpp"

namespace ewlab::redteam {

// Clustering + suspicious-pair selection + principal-component removal.
struct CseConfig {
  int n_clusters = 20;
  int components = 50;
  double suspicion_margin = 0.08;
};

struct CseResult {
  std::vector<Vector> cleansed;          // aligned with the input
  std::vector<std::size_t> suspicious;   // sorted doc indices
  std::vector<char> zeroed;              // inputs collapsed by removal
  bool degenerate = false;               // no suspicious pair found
};

// victim and benchmark embeddings must align per document. When no pair
// exceeds the margin the attack degenerates: the victim embeddings come
// back unchanged with the degenerate flag set.
CseResult cse_attack(const std::vector<Vector>& victim_embs,
                     const std::vector<Vector>& benchmark_embs,
                     const CseConfig& cfg, std::uint64_t seed);

using EmbedQuery = std::function<Vector(const synth::Document&)>;

struct ParaphraseResult {
  Vector embedding;
  int kept = 0;
  bool fallback = false;  // every variant was filtered out
};

// Queries the defended provider on k simulated paraphrases, keeps the
// ones whose embedding stays within the cosine threshold of the
// original's, and averages them.
ParaphraseResult paraphrase_attack(const synth::CorpusConfig& corpus_cfg,
                                   const synth::Document& doc,
                                   const EmbedQuery& defended_query, int k,
                                   double threshold, double sigma,
                                   std::uint64_t seed);

inline constexpr double kDefaultParaphraseSigma = 0.12;

enum class PerturbKind {
  Shift,             // cyclic rotation by `amount`
  Truncate,          // keep the first `amount` coordinates
  Permute,           // seeded coordinate permutation
  TanhScale,         // elementwise tanh, then normalize
  RandomProjection,  // seeded dense non-orthogonal map, then normalize
};

struct DimPerturbSpec {
  PerturbKind kind = PerturbKind::Shift;
  int amount = 0;
  std::uint64_t seed = 0;
};

Vector perturb_dimensions(const Vector& e, const DimPerturbSpec& spec);

// Same transform with the permutation/projection materialized once for
// a whole batch of equal-dimension embeddings.
class DimPerturber {
 public:
  DimPerturber(const DimPerturbSpec& spec, int dim);
  Vector apply(const Vector& e) const;

 private:
  DimPerturbSpec spec_;
  int dim_;
  std::vector<int> permutation_;
  Matrix projection_;
};

}  // namespace ewlab::redteam
