#include "ewlab/synthlab.hpp"

#include <Eigen/SVD>
#include <cmath>

#include "ewlab/rng.hpp"

namespace ewlab::synth {

namespace {

Vector gaussian_vector(Rng& rng, int dim) {
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v[i] = rng.gaussian();
  return v;
}

std::vector<Vector> draw_cluster_means(const CorpusConfig& cfg) {
  Rng rng(derive_seed(cfg.seed, "cluster-means"));
  const Vector axis = numkit::normalized(gaussian_vector(rng, cfg.latent_dim));
  std::vector<Vector> means;
  means.reserve(static_cast<std::size_t>(cfg.n_clusters));
  constexpr double kMaxPairwiseCos = 0.9;
  for (int c = 0; c < cfg.n_clusters; ++c) {
    for (int attempt = 0;; ++attempt) {
      if (attempt >= 1000) {
        fail(ErrorCode::ConfigInvalid,
             "could not draw cluster means with pairwise cos < 0.9");
      }
      Vector dev = numkit::normalized(gaussian_vector(rng, cfg.latent_dim));
      Vector mean = numkit::normalized(axis + kClusterCone * dev);
      bool ok = true;
      for (const Vector& prev : means) {
        if (mean.dot(prev) >= kMaxPairwiseCos) {
          ok = false;
          break;
        }
      }
      if (ok) {
        means.push_back(std::move(mean));
        break;
      }
    }
  }
  return means;
}

}  // namespace

void CorpusConfig::validate() const {
  if (n_clusters < 2) fail(ErrorCode::ConfigInvalid, "n_clusters >= 2");
  if (n_docs < n_clusters) {
    fail(ErrorCode::ConfigInvalid, "n_docs >= n_clusters");
  }
  if (latent_dim < 2) fail(ErrorCode::ConfigInvalid, "latent_dim >= 2");
  if (provider_dim < latent_dim) {
    fail(ErrorCode::ConfigInvalid, "provider_dim >= latent_dim");
  }
  if (vocab_size < 2) fail(ErrorCode::ConfigInvalid, "vocab_size >= 2");
  if (!(zipf_exponent > 0.0)) {
    fail(ErrorCode::ConfigInvalid, "zipf_exponent > 0");
  }
  if (doc_noise_scale < 0.0 || provider_noise_scale < 0.0) {
    fail(ErrorCode::ConfigInvalid, "noise scales must be >= 0");
  }
}

std::vector<double> zipf_cdf(int vocab_size, double exponent) {
  std::vector<double> cdf(static_cast<std::size_t>(vocab_size));
  double total = 0.0;
  for (int k = 0; k < vocab_size; ++k) {
    total += std::pow(static_cast<double>(k + 1), -exponent);
    cdf[static_cast<std::size_t>(k)] = total;
  }
  for (double& v : cdf) v /= total;
  return cdf;
}

int sample_zipf(const std::vector<double>& cdf, Rng& rng) {
  const double u = rng.uniform();
  const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
  return static_cast<int>(std::min<std::ptrdiff_t>(
      it - cdf.begin(), static_cast<std::ptrdiff_t>(cdf.size()) - 1));
}

std::vector<Document> gen_corpus(const CorpusConfig& cfg) {
  cfg.validate();
  const std::vector<Vector> means = draw_cluster_means(cfg);
  const std::vector<double> cdf = zipf_cdf(cfg.vocab_size, cfg.zipf_exponent);

  Rng latent_rng(derive_seed(cfg.seed, "latents"));
  Rng token_rng(derive_seed(cfg.seed, "tokens"));

  std::vector<Document> docs(static_cast<std::size_t>(cfg.n_docs));
  for (int i = 0; i < cfg.n_docs; ++i) {
    Document& doc = docs[static_cast<std::size_t>(i)];
    doc.id = i;
    doc.label = i % cfg.n_clusters;
    doc.latent = means[static_cast<std::size_t>(doc.label)];
    if (cfg.doc_noise_scale > 0.0) {
      doc.latent +=
          cfg.doc_noise_scale * gaussian_vector(latent_rng, cfg.latent_dim);
    }
    doc.tokens.resize(kTokensPerDoc);
    for (int t = 0; t < kTokensPerDoc; ++t) {
      doc.tokens[static_cast<std::size_t>(t)] = sample_zipf(cdf, token_rng);
    }
  }
  return docs;
}

ProviderModel build_provider(int provider_dim, int latent_dim,
                             double noise_scale, std::uint64_t seed) {
  if (provider_dim < latent_dim) {
    fail(ErrorCode::ConfigInvalid, "provider_dim >= latent_dim");
  }
  ProviderModel model;
  model.noise_scale = noise_scale;
  model.seed = seed;
  Rng rng(derive_seed(seed, "semantic-map"));
  model.semantic_map.resize(provider_dim, latent_dim);
  const double scale = 1.0 / std::sqrt(static_cast<double>(latent_dim));
  for (int i = 0; i < provider_dim; ++i) {
    for (int j = 0; j < latent_dim; ++j) {
      model.semantic_map(i, j) = scale * rng.gaussian();
    }
  }
  Eigen::JacobiSVD<Matrix> svd(model.semantic_map);
  if (svd.singularValues().minCoeff() < 1e-8) {
    fail(ErrorCode::RankDeficient, "semantic map is rank deficient");
  }
  return model;
}

ProviderModel perturb_provider(const ProviderModel& base, double epsilon,
                               std::uint64_t seed) {
  ProviderModel model = base;
  model.seed = seed;
  Rng rng(derive_seed(seed, "map-perturbation"));
  const double scale =
      epsilon / std::sqrt(static_cast<double>(base.semantic_map.cols()));
  for (int i = 0; i < model.semantic_map.rows(); ++i) {
    for (int j = 0; j < model.semantic_map.cols(); ++j) {
      model.semantic_map(i, j) += scale * rng.gaussian();
    }
  }
  return model;
}

Vector provider_embed(const ProviderModel& provider, const Document& doc) {
  if (doc.latent.size() != provider.semantic_map.cols()) {
    fail(ErrorCode::DimMismatch, "document latent vs provider map");
  }
  Vector e = provider.semantic_map * doc.latent;
  if (provider.noise_scale > 0.0) {
    Rng rng(derive_seed(provider.seed, "query-noise",
                        static_cast<std::uint64_t>(doc.id)));
    e += provider.noise_scale *
         gaussian_vector(rng, static_cast<int>(e.size()));
  }
  return numkit::normalized(e);
}

std::vector<Document> paraphrase_variants(const CorpusConfig& cfg,
                                          const Document& doc, int k,
                                          double sigma, std::uint64_t seed) {
  if (k < 1) fail(ErrorCode::ConfigInvalid, "paraphrase_variants: k >= 1");
  if (sigma < 0.0) fail(ErrorCode::ConfigInvalid, "sigma >= 0");
  const std::vector<double> cdf = zipf_cdf(cfg.vocab_size, cfg.zipf_exponent);
  Rng rng(derive_seed(seed, "paraphrase",
                      static_cast<std::uint64_t>(doc.id)));
  std::vector<Document> variants(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    Document& v = variants[static_cast<std::size_t>(j)];
    v.id = static_cast<std::int64_t>(
        derive_seed(seed, "paraphrase-id",
                    static_cast<std::uint64_t>(doc.id) * 997 +
                        static_cast<std::uint64_t>(j)) >>
        1);
    v.label = doc.label;
    v.latent = doc.latent;
    if (sigma > 0.0) {
      v.latent += sigma * gaussian_vector(rng, cfg.latent_dim);
    }
    v.tokens.resize(kTokensPerDoc);
    for (int t = 0; t < kTokensPerDoc; ++t) {
      v.tokens[static_cast<std::size_t>(t)] = sample_zipf(cdf, rng);
    }
  }
  return variants;
}

StealerModel train_stealer(
    const std::vector<std::pair<Document, Vector>>& pairs, double ridge,
    int feature_dim, std::uint64_t seed) {
  if (!(ridge > 0.0)) fail(ErrorCode::ConfigInvalid, "ridge must be > 0");
  if (feature_dim < 1) fail(ErrorCode::ConfigInvalid, "feature_dim >= 1");
  if (pairs.size() * 4 <= static_cast<std::size_t>(feature_dim)) {
    fail(ErrorCode::InsufficientData, "need more than feature_dim/4 pairs");
  }

  const int latent_dim = static_cast<int>(pairs[0].first.latent.size());
  const Eigen::Index n = static_cast<Eigen::Index>(pairs.size());
  const Eigen::Index out_dim = pairs[0].second.size();

  StealerModel model;
  Rng rng(derive_seed(seed, "feature-lift"));
  model.lift.resize(feature_dim, latent_dim);
  for (int i = 0; i < feature_dim; ++i) {
    for (int j = 0; j < latent_dim; ++j) {
      model.lift(i, j) = rng.gaussian();
    }
  }
  double sq = 0.0;
  for (const auto& [doc, target] : pairs) sq += doc.latent.squaredNorm();
  const double rms = std::sqrt(sq / static_cast<double>(pairs.size()));
  model.input_scale = rms > 1e-12 ? 1.0 / rms : 1.0;

  Matrix phi(n, feature_dim);
  Matrix targets(n, out_dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& [doc, target] = pairs[static_cast<std::size_t>(i)];
    if (doc.latent.size() != latent_dim || target.size() != out_dim) {
      fail(ErrorCode::DimMismatch, "ragged training pairs");
    }
    phi.row(i) = model.features(doc.latent).transpose();
    targets.row(i) = target.transpose();
  }

  // Unpenalized bias via centering, then ridge normal equations.
  const Vector phi_mean = phi.colwise().mean();
  const Vector target_mean = targets.colwise().mean();
  phi.rowwise() -= phi_mean.transpose();
  targets.rowwise() -= target_mean.transpose();

  Matrix gram = phi.transpose() * phi;
  gram.diagonal().array() += ridge;
  const Matrix rhs = phi.transpose() * targets;
  Eigen::LDLT<Matrix> solver(gram);
  if (solver.info() != Eigen::Success) {
    fail(ErrorCode::SingularSystem, "normal equations not decomposable");
  }
  const Matrix solution = solver.solve(rhs);  // F x D
  const double residual = (gram * solution - rhs).norm();
  if (residual > 1e-6 * std::max(rhs.norm(), 1e-30)) {
    fail(ErrorCode::SingularSystem,
         "normal equations residual too large; increase ridge");
  }

  model.weights = solution.transpose();  // D x F
  model.bias = target_mean - model.weights * phi_mean;
  return model;
}

Vector stealer_embed(const StealerModel& model, const Document& doc) {
  return numkit::normalized(model.weights * model.features(doc.latent) +
                            model.bias);
}

StealerModel finetune_stealer(
    const StealerModel& model,
    const std::vector<std::pair<Document, Vector>>& clean_pairs, int steps,
    double learning_rate) {
  if (steps < 0) fail(ErrorCode::ConfigInvalid, "steps >= 0");
  StealerModel tuned = model;
  if (steps == 0 || clean_pairs.empty()) return tuned;

  const Eigen::Index n = static_cast<Eigen::Index>(clean_pairs.size());
  const Eigen::Index out_dim = clean_pairs[0].second.size();
  Matrix phi(n, tuned.lift.rows());
  Matrix targets(n, out_dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& [doc, target] = clean_pairs[static_cast<std::size_t>(i)];
    phi.row(i) = tuned.features(doc.latent).transpose();
    targets.row(i) = target.transpose();
  }

  const double inv_n = 1.0 / static_cast<double>(n);
  for (int step = 0; step < steps; ++step) {
    Matrix residual = phi * tuned.weights.transpose();
    residual.rowwise() += tuned.bias.transpose();
    residual -= targets;  // n x D
    const double loss = residual.squaredNorm() * inv_n;
    if (!std::isfinite(loss)) {
      fail(ErrorCode::Diverged, "fine-tuning loss is not finite");
    }
    tuned.weights -= learning_rate * 2.0 * inv_n *
                     (residual.transpose() * phi);
    tuned.bias -=
        learning_rate * 2.0 * inv_n * residual.colwise().sum().transpose();
  }
  return tuned;
}

}  // namespace ewlab::synth
