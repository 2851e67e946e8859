#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ewlab/regionmarker.hpp"
#include "ewlab/rivals.hpp"
#include "ewlab/synthlab.hpp"

namespace ewlab::io {

// Doubles are written with 17 significant digits, which round-trips
// every finite IEEE double exactly.
std::string format_double(double value);
double parse_double(const std::string& token);

nlohmann::json to_json(const synth::CorpusConfig& cfg);
synth::CorpusConfig corpus_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const marker::DefenderConfig& cfg);
marker::DefenderConfig defender_config_from_json(const nlohmann::json& j);

// Corpus file: a versioned header carrying the generating config, then
// one document per line (id, label, tokens, latent).
struct CorpusFile {
  synth::CorpusConfig config;
  std::vector<synth::Document> docs;
};

void save_corpus(std::ostream& out, const CorpusFile& corpus);
CorpusFile load_corpus(std::istream& in);
void save_corpus_file(const std::string& path, const CorpusFile& corpus);
CorpusFile load_corpus_file(const std::string& path);

// Embedding batches keyed by document id.
struct EmbeddingsFile {
  std::vector<std::int64_t> doc_ids;
  std::vector<Vector> embeddings;
};

void save_embeddings(std::ostream& out, const EmbeddingsFile& embs);
EmbeddingsFile load_embeddings(std::istream& in);
void save_embeddings_file(const std::string& path, const EmbeddingsFile& e);
EmbeddingsFile load_embeddings_file(const std::string& path);

// Defense secrets share one versioned container, tagged by scheme.
// The file is the key material for verification; treat it like a
// private key (the CLI documents 0600-style handling).
struct SecretFile {
  std::string scheme;  // regionmarker | warden | espew | wet
  std::optional<marker::DefenderState> regionmarker;
  std::optional<rivals::WardenScheme> warden;
  std::optional<rivals::EspewScheme> espew;
  std::optional<rivals::WetTransform> wet;
};

void save_secret(std::ostream& out, const SecretFile& secret);
SecretFile load_secret(std::istream& in);
void save_secret_file(const std::string& path, const SecretFile& secret);
SecretFile load_secret_file(const std::string& path);

void save_stealer(std::ostream& out, const synth::StealerModel& model);
synth::StealerModel load_stealer(std::istream& in);
void save_stealer_file(const std::string& path,
                       const synth::StealerModel& model);
synth::StealerModel load_stealer_file(const std::string& path);

}  // namespace ewlab::io
