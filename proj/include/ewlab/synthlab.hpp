#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "ewlab/numkit.hpp"
#include "ewlab/rng.hpp"

namespace ewlab::synth {

// Synthetic text surrogate: a bag of token ids plus the latent semantic
// vector the embedders actually consume. Tokens only matter to the
// trigger-word watermark schemes.
struct Document {
  std::int64_t id = 0;
  std::vector<int> tokens;
  Vector latent;
  int label = 0;
};

struct CorpusConfig {
  std::uint64_t seed = 1;
  int n_docs = 4000;
  int n_clusters = 10;
  int latent_dim = 16;
  int provider_dim = 64;
  int vocab_size = 2000;
  double zipf_exponent = 1.05;
  double doc_noise_scale = 0.25;
  double provider_noise_scale = 0.01;

  void validate() const;

  bool operator==(const CorpusConfig&) const = default;
};

// Tokens per document is fixed; it only needs to be large enough that
// moderate-frequency trigger words actually occur in documents.
inline constexpr int kTokensPerDoc = 32;

// Cluster centers share a common direction of this relative strength,
// mimicking the anisotropy ("cone") of real sentence-embedding spaces.
inline constexpr double kClusterCone = 1.0;

// Cluster-mean and Zipf token machinery shared with the paraphrase
// oracle and with tests.
std::vector<double> zipf_cdf(int vocab_size, double exponent);
int sample_zipf(const std::vector<double>& cdf, Rng& rng);

std::vector<Document> gen_corpus(const CorpusConfig& cfg);

// Deterministic stand-in for the provider's embedding model: a fixed
// full-column-rank linear map from latent space followed by id-keyed
// observation noise and unit normalization. Re-querying a document
// returns the identical embedding.
struct ProviderModel {
  Matrix semantic_map;  // D x L
  double noise_scale = 0.0;
  std::uint64_t seed = 0;
};

ProviderModel build_provider(int provider_dim, int latent_dim,
                             double noise_scale, std::uint64_t seed);

// Benchmark embedder for attacks that compare against a second model:
// the same semantic geometry with a perturbed map and an independent
// noise stream.
ProviderModel perturb_provider(const ProviderModel& base, double epsilon,
                               std::uint64_t seed);

Vector provider_embed(const ProviderModel& provider, const Document& doc);

// Simulated paraphrase oracle: same meaning, nearby latent. Tokens are
// resampled from the generating token distribution, so surface triggers
// do not survive paraphrasing; the latent (and hence the semantic
// region) usually does.
std::vector<Document> paraphrase_variants(const CorpusConfig& cfg,
                                          const Document& doc, int k,
                                          double sigma, std::uint64_t seed);

// Extraction model: ridge regression from a fixed random tanh feature
// lift of the latent onto provider-space embeddings.
struct StealerModel {
  Matrix lift;              // F x L
  double input_scale = 1.0;
  Matrix weights;           // D x F
  Vector bias;              // D

  Vector features(const Vector& latent) const {
    return (lift * (latent * input_scale)).array().tanh();
  }
};

StealerModel train_stealer(
    const std::vector<std::pair<Document, Vector>>& pairs, double ridge,
    int feature_dim, std::uint64_t seed);

Vector stealer_embed(const StealerModel& model, const Document& doc);

StealerModel finetune_stealer(
    const StealerModel& model,
    const std::vector<std::pair<Document, Vector>>& clean_pairs, int steps,
    double learning_rate);

}  // namespace ewlab::synth
