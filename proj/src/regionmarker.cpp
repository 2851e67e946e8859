#include "ewlab/regionmarker.hpp"

#include <cmath>

#include "ewlab/rng.hpp"

namespace ewlab::marker {

std::string Signature::to_string() const {
  std::string s(static_cast<std::size_t>(width), '0');
  for (int i = 0; i < width; ++i) {
    if (bits & (1u << i)) s[static_cast<std::size_t>(i)] = '1';
  }
  return s;
}

Signature Signature::from_string(const std::string& s) {
  Signature sig;
  sig.width = static_cast<int>(s.size());
  for (int i = 0; i < sig.width; ++i) {
    const char c = s[static_cast<std::size_t>(i)];
    if (c == '1') {
      sig.bits |= (1u << i);
    } else if (c != '0') {
      fail(ErrorCode::ParseError, "signature must be a 0/1 string");
    }
  }
  return sig;
}

void DefenderConfig::validate() const {
  if (d < 1 || d > 16) fail(ErrorCode::ConfigInvalid, "d must be in [1,16]");
  if (!(alpha > 0.0) || alpha > 1.0) {
    fail(ErrorCode::ConfigInvalid, "alpha must be in (0,1]");
  }
  if (lambda < 0.0 || lambda > 1.0) {
    fail(ErrorCode::ConfigInvalid, "lambda must be in [0,1]");
  }
  if (pca_fit_sample_size < 0) {
    fail(ErrorCode::ConfigInvalid, "pca_fit_sample_size must be >= 0");
  }
}

int DefenderConfig::region_count() const {
  const int cells = 1 << d;
  const int r = static_cast<int>(std::lround(alpha * cells));
  return std::clamp(r, 1, cells);
}

Eigen::Index DefenderState::provider_dim() const {
  return reduction ? reduction->input_dim() : hyperplanes.cols();
}

Vector DefenderState::reduce(const Vector& embedding) const {
  if (reduction) return numkit::pca_transform(*reduction, embedding);
  if (embedding.size() != hyperplanes.cols()) {
    fail(ErrorCode::DimMismatch, "embedding vs partition dim");
  }
  return embedding;
}

bool DefenderState::is_trigger(const Signature& sig) const {
  return bank.count(sig.bits) > 0;
}

Signature lsh_signature(const Matrix& hyperplanes, const Vector& v) {
  if (v.size() != hyperplanes.cols()) {
    fail(ErrorCode::DimMismatch, "lsh_signature input dim");
  }
  Signature sig;
  sig.width = static_cast<int>(hyperplanes.rows());
  for (int i = 0; i < sig.width; ++i) {
    // Strict inequality: a projection exactly on the plane maps to 0.
    if (hyperplanes.row(i).dot(v) > 0.0) sig.bits |= (1u << i);
  }
  return sig;
}

namespace {

Matrix draw_hyperplanes(int count, Eigen::Index dim, Rng& rng) {
  Matrix planes(count, dim);
  for (int i = 0; i < count; ++i) {
    for (int attempt = 0;; ++attempt) {
      if (attempt >= 100) {
        fail(ErrorCode::RankDeficient, "could not orthogonalize hyperplanes");
      }
      Vector v(dim);
      for (Eigen::Index j = 0; j < dim; ++j) v[j] = rng.gaussian();
      for (int p = 0; p < i; ++p) {
        v -= planes.row(p).dot(v) * planes.row(p).transpose();
      }
      const double n = v.norm();
      if (n > 1e-9) {
        planes.row(i) = (v / n).transpose();
        break;
      }
    }
  }
  return planes;
}

}  // namespace

DefenderState build_defender(const DefenderConfig& cfg,
                             const std::vector<Vector>& fit_corpus,
                             const std::vector<Vector>& candidate_pool) {
  cfg.validate();
  if (fit_corpus.empty()) fail(ErrorCode::InsufficientData, "empty fit corpus");
  if (candidate_pool.empty()) {
    fail(ErrorCode::InsufficientData, "empty candidate pool");
  }

  DefenderState state;
  state.config = cfg;

  const Eigen::Index provider_dim = fit_corpus[0].size();
  if (cfg.use_pca) {
    std::size_t take = fit_corpus.size();
    if (cfg.pca_fit_sample_size > 0) {
      take = std::min<std::size_t>(
          take, static_cast<std::size_t>(cfg.pca_fit_sample_size));
    }
    std::vector<Vector> sample(fit_corpus.begin(),
                               fit_corpus.begin() +
                                   static_cast<std::ptrdiff_t>(take));
    state.reduction = numkit::pca_fit(sample, cfg.d);
  }

  const Eigen::Index partition_dim = cfg.use_pca ? cfg.d : provider_dim;
  Rng plane_rng(derive_seed(cfg.seed, "hyperplanes"));
  state.hyperplanes = draw_hyperplanes(cfg.d, partition_dim, plane_rng);

  const int cells = 1 << cfg.d;
  const int region_count = cfg.region_count();
  Rng region_rng(derive_seed(cfg.seed, "regions"));
  std::vector<std::size_t> picks = region_rng.sample_without_replacement(
      static_cast<std::size_t>(cells), static_cast<std::size_t>(region_count));
  std::sort(picks.begin(), picks.end());
  for (std::size_t p : picks) {
    state.regions.push_back(
        Signature{static_cast<std::uint32_t>(p), cfg.d});
  }

  Rng wm_rng(derive_seed(cfg.seed, "watermarks"));
  constexpr double kMaxWatermarkCos = 0.95;
  std::vector<Vector> chosen;
  std::vector<int> chosen_idx;
  const int wanted = cfg.single_watermark ? 1 : region_count;
  for (int r = 0; r < wanted; ++r) {
    for (int attempt = 0;; ++attempt) {
      if (attempt >= 1000) {
        fail(ErrorCode::ConfigInvalid,
             "candidate pool too correlated for distinct watermarks");
      }
      const std::size_t idx = wm_rng.uniform_int(candidate_pool.size());
      const Vector w = numkit::normalized(candidate_pool[idx]);
      bool ok = true;
      for (const Vector& prev : chosen) {
        if (numkit::cosine(w, prev) >= kMaxWatermarkCos) {
          ok = false;
          break;
        }
      }
      if (ok) {
        chosen.push_back(w);
        chosen_idx.push_back(static_cast<int>(idx));
        break;
      }
    }
  }

  for (std::size_t r = 0; r < state.regions.size(); ++r) {
    const std::size_t pick = cfg.single_watermark ? 0 : r;
    state.bank[state.regions[r].bits] = chosen[pick];
    state.target_indices.push_back(chosen_idx[pick]);
    const Signature home = lsh_signature(
        state.hyperplanes,
        state.reduce(candidate_pool[static_cast<std::size_t>(
            chosen_idx[pick])]));
    state.target_in_own_region.push_back(home == state.regions[r] ? 1 : 0);
  }
  return state;
}

InjectResult inject(const DefenderState& state, const Vector& e0) {
  const Signature sig = lsh_signature(state.hyperplanes, state.reduce(e0));
  InjectResult result;
  const auto it = state.bank.find(sig.bits);
  if (it != state.bank.end()) {
    const double lambda = state.config.lambda;
    result.embedding =
        numkit::normalized((1.0 - lambda) * e0 + lambda * it->second);
    result.region = sig;
  } else {
    result.embedding = numkit::normalized(e0);
  }
  return result;
}

WatermarkedCorpus watermark_corpus(const DefenderState& state,
                                   const std::vector<synth::Document>& docs,
                                   const synth::ProviderModel& provider) {
  WatermarkedCorpus out;
  out.doc_ids.reserve(docs.size());
  out.embeddings.reserve(docs.size());
  out.regions.reserve(docs.size());
  std::size_t triggered = 0;
  for (const synth::Document& doc : docs) {
    InjectResult r = inject(state, synth::provider_embed(provider, doc));
    if (r.region) ++triggered;
    out.doc_ids.push_back(doc.id);
    out.embeddings.push_back(std::move(r.embedding));
    out.regions.push_back(r.region);
  }
  out.triggered_fraction =
      docs.empty() ? 0.0
                   : static_cast<double>(triggered) /
                         static_cast<double>(docs.size());
  return out;
}

VerificationCorpora build_verification_corpora(
    const DefenderState& state, const std::vector<synth::Document>& docs,
    const synth::ProviderModel& provider, int min_per_region) {
  if (min_per_region < 2) {
    fail(ErrorCode::ConfigInvalid, "min_per_region must be >= 2");
  }
  VerificationCorpora out;
  out.backdoor.assign(state.regions.size(), {});
  out.skipped.assign(state.regions.size(), 0);
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const Vector e0 = synth::provider_embed(provider, docs[i]);
    const Signature sig = lsh_signature(state.hyperplanes, state.reduce(e0));
    bool matched = false;
    for (std::size_t r = 0; r < state.regions.size(); ++r) {
      if (sig == state.regions[r]) {
        out.backdoor[r].push_back(i);
        matched = true;
        break;
      }
    }
    if (!matched) out.benign.push_back(i);
  }
  std::size_t usable = 0;
  for (std::size_t r = 0; r < state.regions.size(); ++r) {
    if (out.backdoor[r].size() <
        static_cast<std::size_t>(min_per_region)) {
      out.skipped[r] = 1;
    } else {
      ++usable;
    }
  }
  if (out.benign.size() < static_cast<std::size_t>(min_per_region) ||
      usable == 0) {
    fail(ErrorCode::AllRegionsEmpty,
         "verification corpora below the per-region minimum");
  }
  return out;
}

}  // namespace ewlab::marker
