#include "ewlab/redteam.hpp"

#include <algorithm>
#include <set>

#include "ewlab/rng.hpp"

namespace ewlab::redteam {

CseResult cse_attack(const std::vector<Vector>& victim_embs,
                     const std::vector<Vector>& benchmark_embs,
                     const CseConfig& cfg, std::uint64_t seed) {
  if (victim_embs.size() != benchmark_embs.size()) {
    fail(ErrorCode::DimMismatch, "victim/benchmark must align per document");
  }
  if (victim_embs.size() < static_cast<std::size_t>(cfg.n_clusters)) {
    fail(ErrorCode::InsufficientData, "fewer documents than clusters");
  }
  if (cfg.components < 1) {
    fail(ErrorCode::ConfigInvalid, "components must be >= 1");
  }

  const numkit::KmeansResult clusters =
      numkit::kmeans(victim_embs, cfg.n_clusters,
                     derive_seed(seed, "cse-kmeans"));

  std::vector<std::vector<std::size_t>> members(
      static_cast<std::size_t>(cfg.n_clusters));
  for (std::size_t i = 0; i < victim_embs.size(); ++i) {
    members[static_cast<std::size_t>(clusters.assignments[i])].push_back(i);
  }

  std::set<std::size_t> flagged;
  for (const std::vector<std::size_t>& cluster : members) {
    for (std::size_t a = 0; a < cluster.size(); ++a) {
      for (std::size_t b = a + 1; b < cluster.size(); ++b) {
        const std::size_t i = cluster[a];
        const std::size_t j = cluster[b];
        const double gap =
            numkit::cosine(victim_embs[i], victim_embs[j]) -
            numkit::cosine(benchmark_embs[i], benchmark_embs[j]);
        if (gap > cfg.suspicion_margin) {
          flagged.insert(i);
          flagged.insert(j);
        }
      }
    }
  }

  CseResult result;
  result.suspicious.assign(flagged.begin(), flagged.end());
  if (result.suspicious.empty()) {
    result.cleansed = victim_embs;
    result.zeroed.assign(victim_embs.size(), 0);
    result.degenerate = true;
    return result;
  }

  std::vector<Vector> suspicious_embs;
  suspicious_embs.reserve(result.suspicious.size());
  for (std::size_t i : result.suspicious) {
    suspicious_embs.push_back(victim_embs[i]);
  }
  const int k_eff = static_cast<int>(std::min<std::size_t>(
      static_cast<std::size_t>(cfg.components), suspicious_embs.size()));
  const std::vector<Vector> components =
      numkit::top_components(suspicious_embs, k_eff);

  numkit::GsRemoveResult removed = numkit::gs_remove(victim_embs, components);
  result.cleansed = std::move(removed.vectors);
  result.zeroed = std::move(removed.zeroed);
  return result;
}

ParaphraseResult paraphrase_attack(const synth::CorpusConfig& corpus_cfg,
                                   const synth::Document& doc,
                                   const EmbedQuery& defended_query, int k,
                                   double threshold, double sigma,
                                   std::uint64_t seed) {
  if (k < 1) fail(ErrorCode::ConfigInvalid, "paraphrase_attack: k >= 1");
  if (!(threshold > 0.0) || !(threshold < 1.0)) {
    fail(ErrorCode::ConfigInvalid, "threshold must be in (0,1)");
  }
  const Vector original = defended_query(doc);
  const std::vector<synth::Document> variants =
      synth::paraphrase_variants(corpus_cfg, doc, k, sigma, seed);

  ParaphraseResult result;
  Vector sum = Vector::Zero(original.size());
  for (const synth::Document& variant : variants) {
    const Vector e = defended_query(variant);
    if (numkit::cosine(e, original) >= threshold) {
      sum += e;
      ++result.kept;
    }
  }
  if (result.kept == 0) {
    result.embedding = original;
    result.fallback = true;
  } else {
    result.embedding = numkit::normalized(sum);
  }
  return result;
}

DimPerturber::DimPerturber(const DimPerturbSpec& spec, int dim)
    : spec_(spec), dim_(dim) {
  switch (spec.kind) {
    case PerturbKind::Shift:
      if (spec.amount < 1) fail(ErrorCode::SpecInvalid, "shift needs k >= 1");
      break;
    case PerturbKind::Truncate:
      if (spec.amount < 1 || spec.amount > dim) {
        fail(ErrorCode::SpecInvalid, "truncate length must be in [1, D]");
      }
      break;
    case PerturbKind::Permute: {
      Rng rng(derive_seed(spec.seed, "dim-permutation"));
      permutation_.resize(static_cast<std::size_t>(dim));
      for (int i = 0; i < dim; ++i) {
        permutation_[static_cast<std::size_t>(i)] = i;
      }
      rng.shuffle(permutation_);
      break;
    }
    case PerturbKind::TanhScale:
      break;
    case PerturbKind::RandomProjection: {
      Rng rng(derive_seed(spec.seed, "dim-projection"));
      projection_.resize(dim, dim);
      const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
      for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) {
          projection_(i, j) = scale * rng.gaussian();
        }
      }
      break;
    }
  }
}

Vector DimPerturber::apply(const Vector& e) const {
  if (e.size() != dim_) fail(ErrorCode::DimMismatch, "perturb input dim");
  switch (spec_.kind) {
    case PerturbKind::Shift: {
      const int d = dim_;
      const int k = ((spec_.amount % d) + d) % d;
      Vector out(d);
      // out[0] = e[D-k], matching a cyclic shift of the coordinate list.
      for (int i = 0; i < d; ++i) out[i] = e[(i + d - k) % d];
      return out;
    }
    case PerturbKind::Truncate:
      return e.head(spec_.amount);
    case PerturbKind::Permute: {
      Vector out(dim_);
      for (int i = 0; i < dim_; ++i) {
        out[permutation_[static_cast<std::size_t>(i)]] = e[i];
      }
      return out;
    }
    case PerturbKind::TanhScale:
      return numkit::normalized(e.array().tanh().matrix());
    case PerturbKind::RandomProjection:
      return numkit::normalized(projection_ * e);
  }
  fail(ErrorCode::SpecInvalid, "unknown perturbation kind");
}

Vector perturb_dimensions(const Vector& e, const DimPerturbSpec& spec) {
  return DimPerturber(spec, static_cast<int>(e.size())).apply(e);
}

}  // namespace ewlab::redteam
