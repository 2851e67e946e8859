#include "ewlab/serialize.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace ewlab::io {

namespace {

constexpr const char* kCorpusMagic = "ewlab-corpus v1";
constexpr const char* kEmbeddingsMagic = "ewlab-embeddings v1";
constexpr const char* kSecretMagic = "ewlab-secret v1";
constexpr const char* kStealerMagic = "ewlab-stealer v1";

void expect_line(std::istream& in, const std::string& expected) {
  std::string line;
  if (!std::getline(in, line) || line != expected) {
    fail(ErrorCode::ParseError, "expected '" + expected + "'");
  }
}

std::string next_line(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    fail(ErrorCode::ParseError, "unexpected end of file");
  }
  return line;
}

void write_vector(std::ostream& out, const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out << ' ' << format_double(v[i]);
  }
}

Vector read_vector(std::istringstream& in) {
  std::vector<double> values;
  std::string token;
  while (in >> token) values.push_back(parse_double(token));
  Vector v(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = values[i];
  }
  return v;
}

Vector read_vector_line(std::istream& in, const std::string& tag) {
  std::istringstream line(next_line(in));
  std::string word;
  line >> word;
  if (word != tag) fail(ErrorCode::ParseError, "expected '" + tag + "' line");
  return read_vector(line);
}

nlohmann::json parse_json_line(const std::string& line) {
  nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded()) fail(ErrorCode::ParseError, "malformed json line");
  return j;
}

template <typename T>
T require(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) {
    fail(ErrorCode::ParseError, std::string("missing key: ") + key);
  }
  return j.at(key).get<T>();
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot read " + path);
  return in;
}

}  // namespace

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

double parse_double(const std::string& token) {
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end == token.c_str() || *end != '\0') {
    fail(ErrorCode::ParseError, "bad number: " + token);
  }
  return v;
}

nlohmann::json to_json(const synth::CorpusConfig& cfg) {
  return {{"seed", cfg.seed},
          {"n_docs", cfg.n_docs},
          {"n_clusters", cfg.n_clusters},
          {"latent_dim", cfg.latent_dim},
          {"provider_dim", cfg.provider_dim},
          {"vocab_size", cfg.vocab_size},
          {"zipf_exponent", cfg.zipf_exponent},
          {"doc_noise_scale", cfg.doc_noise_scale},
          {"provider_noise_scale", cfg.provider_noise_scale}};
}

synth::CorpusConfig corpus_config_from_json(const nlohmann::json& j) {
  synth::CorpusConfig cfg;
  cfg.seed = require<std::uint64_t>(j, "seed");
  cfg.n_docs = require<int>(j, "n_docs");
  cfg.n_clusters = require<int>(j, "n_clusters");
  cfg.latent_dim = require<int>(j, "latent_dim");
  cfg.provider_dim = require<int>(j, "provider_dim");
  cfg.vocab_size = require<int>(j, "vocab_size");
  cfg.zipf_exponent = require<double>(j, "zipf_exponent");
  cfg.doc_noise_scale = require<double>(j, "doc_noise_scale");
  cfg.provider_noise_scale = require<double>(j, "provider_noise_scale");
  return cfg;
}

nlohmann::json to_json(const marker::DefenderConfig& cfg) {
  return {{"d", cfg.d},
          {"alpha", cfg.alpha},
          {"lambda", cfg.lambda},
          {"seed", cfg.seed},
          {"pca_fit_sample_size", cfg.pca_fit_sample_size},
          {"use_pca", cfg.use_pca},
          {"single_watermark", cfg.single_watermark}};
}

marker::DefenderConfig defender_config_from_json(const nlohmann::json& j) {
  marker::DefenderConfig cfg;
  cfg.d = require<int>(j, "d");
  cfg.alpha = require<double>(j, "alpha");
  cfg.lambda = require<double>(j, "lambda");
  cfg.seed = require<std::uint64_t>(j, "seed");
  cfg.pca_fit_sample_size = require<int>(j, "pca_fit_sample_size");
  cfg.use_pca = require<bool>(j, "use_pca");
  cfg.single_watermark = require<bool>(j, "single_watermark");
  return cfg;
}

void save_corpus(std::ostream& out, const CorpusFile& corpus) {
  out << kCorpusMagic << '\n';
  out << "config " << to_json(corpus.config).dump() << '\n';
  for (const synth::Document& doc : corpus.docs) {
    out << doc.id << ' ' << doc.label << ' ' << doc.tokens.size();
    for (int t : doc.tokens) out << ' ' << t;
    out << " |";
    write_vector(out, doc.latent);
    out << '\n';
  }
  out << "end\n";
}

CorpusFile load_corpus(std::istream& in) {
  expect_line(in, kCorpusMagic);
  CorpusFile corpus;
  {
    std::string line = next_line(in);
    if (line.rfind("config ", 0) != 0) {
      fail(ErrorCode::ParseError, "expected corpus config line");
    }
    corpus.config = corpus_config_from_json(parse_json_line(line.substr(7)));
  }
  for (std::string line; std::getline(in, line);) {
    if (line == "end") return corpus;
    std::istringstream is(line);
    synth::Document doc;
    std::size_t n_tokens = 0;
    if (!(is >> doc.id >> doc.label >> n_tokens)) {
      fail(ErrorCode::ParseError, "malformed document line");
    }
    doc.tokens.resize(n_tokens);
    for (std::size_t i = 0; i < n_tokens; ++i) {
      if (!(is >> doc.tokens[i])) {
        fail(ErrorCode::ParseError, "malformed token list");
      }
    }
    std::string sep;
    is >> sep;
    if (sep != "|") fail(ErrorCode::ParseError, "expected '|' separator");
    doc.latent = read_vector(is);
    corpus.docs.push_back(std::move(doc));
  }
  fail(ErrorCode::ParseError, "missing corpus terminator");
}

void save_embeddings(std::ostream& out, const EmbeddingsFile& embs) {
  if (embs.doc_ids.size() != embs.embeddings.size()) {
    fail(ErrorCode::DimMismatch, "ids vs embeddings");
  }
  out << kEmbeddingsMagic << '\n';
  out << "count " << embs.doc_ids.size() << '\n';
  for (std::size_t i = 0; i < embs.doc_ids.size(); ++i) {
    out << embs.doc_ids[i];
    write_vector(out, embs.embeddings[i]);
    out << '\n';
  }
  out << "end\n";
}

EmbeddingsFile load_embeddings(std::istream& in) {
  expect_line(in, kEmbeddingsMagic);
  std::istringstream header(next_line(in));
  std::string word;
  std::size_t count = 0;
  header >> word >> count;
  if (word != "count") fail(ErrorCode::ParseError, "expected count line");
  EmbeddingsFile out;
  out.doc_ids.reserve(count);
  out.embeddings.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::istringstream is(next_line(in));
    std::int64_t id = 0;
    if (!(is >> id)) fail(ErrorCode::ParseError, "malformed embedding line");
    out.doc_ids.push_back(id);
    out.embeddings.push_back(read_vector(is));
  }
  expect_line(in, "end");
  return out;
}

namespace {

void save_trigger_sets(std::ostream& out,
                       const rivals::TriggerWordSets& triggers) {
  out << "band " << format_double(triggers.freq_lo) << ' '
      << format_double(triggers.freq_hi) << '\n';
  out << "trigger-sets " << triggers.sets.size() << '\n';
  for (const std::vector<int>& set : triggers.sets) {
    out << "set";
    for (int t : set) out << ' ' << t;
    out << '\n';
  }
}

rivals::TriggerWordSets load_trigger_sets(std::istream& in) {
  rivals::TriggerWordSets triggers;
  {
    std::istringstream is(next_line(in));
    std::string word, lo, hi;
    is >> word >> lo >> hi;
    if (word != "band") fail(ErrorCode::ParseError, "expected band line");
    triggers.freq_lo = parse_double(lo);
    triggers.freq_hi = parse_double(hi);
  }
  std::size_t n_sets = 0;
  {
    std::istringstream is(next_line(in));
    std::string word;
    is >> word >> n_sets;
    if (word != "trigger-sets") {
      fail(ErrorCode::ParseError, "expected trigger-sets line");
    }
  }
  triggers.sets.resize(n_sets);
  for (std::size_t k = 0; k < n_sets; ++k) {
    std::istringstream is(next_line(in));
    std::string word;
    is >> word;
    if (word != "set") fail(ErrorCode::ParseError, "expected set line");
    int t = 0;
    while (is >> t) triggers.sets[k].push_back(t);
  }
  return triggers;
}

}  // namespace

void save_secret(std::ostream& out, const SecretFile& secret) {
  out << kSecretMagic << '\n';
  out << "scheme " << secret.scheme << '\n';
  // "none" carries a regionmarker state that is used for verification
  // but never applied at serving time.
  if (secret.scheme == "regionmarker" || secret.scheme == "none") {
    const marker::DefenderState& state = *secret.regionmarker;
    out << "config " << to_json(state.config).dump() << '\n';
    out << "reduction " << (state.reduction ? 1 : 0) << '\n';
    if (state.reduction) {
      out << "mean";
      write_vector(out, state.reduction->mean);
      out << '\n';
      for (Eigen::Index r = 0; r < state.reduction->basis.rows(); ++r) {
        out << "basis";
        write_vector(out, state.reduction->basis.row(r).transpose());
        out << '\n';
      }
    }
    for (Eigen::Index r = 0; r < state.hyperplanes.rows(); ++r) {
      out << "hyperplane";
      write_vector(out, state.hyperplanes.row(r).transpose());
      out << '\n';
    }
    out << "regions " << state.regions.size() << '\n';
    for (std::size_t r = 0; r < state.regions.size(); ++r) {
      out << "region " << state.regions[r].to_string() << ' '
          << state.target_indices[r] << ' '
          << static_cast<int>(state.target_in_own_region[r]) << '\n';
      out << "watermark";
      write_vector(out, state.bank.at(state.regions[r].bits));
      out << '\n';
    }
  } else if (secret.scheme == "warden") {
    const rivals::WardenScheme& scheme = *secret.warden;
    out << "config "
        << nlohmann::json{{"tau", scheme.tau},
                          {"lambda_max", scheme.lambda_max},
                          {"targets", scheme.target_indices}}
               .dump()
        << '\n';
    save_trigger_sets(out, scheme.triggers);
    for (const Vector& w : scheme.watermarks) {
      out << "watermark";
      write_vector(out, w);
      out << '\n';
    }
  } else if (secret.scheme == "espew") {
    const rivals::EspewScheme& scheme = *secret.espew;
    out << "config "
        << nlohmann::json{{"lambda", scheme.lambda},
                          {"target", scheme.target_index}}
               .dump()
        << '\n';
    out << "dims";
    for (int d : scheme.dim_subset) out << ' ' << d;
    out << '\n';
    save_trigger_sets(out, scheme.triggers);
    out << "watermark";
    write_vector(out, scheme.watermark);
    out << '\n';
  } else if (secret.scheme == "wet") {
    const rivals::WetTransform& t = *secret.wet;
    out << "config "
        << nlohmann::json{{"correlations", t.correlations},
                          {"dim", t.transform.rows()}}
               .dump()
        << '\n';
    for (Eigen::Index r = 0; r < t.transform.rows(); ++r) {
      out << "row";
      write_vector(out, t.transform.row(r).transpose());
      out << '\n';
    }
  } else {
    fail(ErrorCode::ConfigInvalid, "unknown scheme: " + secret.scheme);
  }
  out << "end\n";
}

SecretFile load_secret(std::istream& in) {
  expect_line(in, kSecretMagic);
  SecretFile secret;
  {
    std::istringstream is(next_line(in));
    std::string word;
    is >> word >> secret.scheme;
    if (word != "scheme") fail(ErrorCode::ParseError, "expected scheme line");
  }
  std::string config_line = next_line(in);
  if (config_line.rfind("config ", 0) != 0) {
    fail(ErrorCode::ParseError, "expected config line");
  }
  const nlohmann::json config = parse_json_line(config_line.substr(7));

  if (secret.scheme == "regionmarker" || secret.scheme == "none") {
    marker::DefenderState state;
    state.config = defender_config_from_json(config);
    {
      std::istringstream is(next_line(in));
      std::string word;
      int has_reduction = 0;
      is >> word >> has_reduction;
      if (word != "reduction") {
        fail(ErrorCode::ParseError, "expected reduction line");
      }
      if (has_reduction) {
        numkit::ReductionMap map;
        map.mean = read_vector_line(in, "mean");
        std::vector<Vector> rows;
        for (int r = 0; r < state.config.d; ++r) {
          rows.push_back(read_vector_line(in, "basis"));
        }
        map.basis.resize(state.config.d, map.mean.size());
        for (int r = 0; r < state.config.d; ++r) {
          map.basis.row(r) = rows[static_cast<std::size_t>(r)].transpose();
        }
        state.reduction = std::move(map);
      }
    }
    std::vector<Vector> planes;
    for (int r = 0; r < state.config.d; ++r) {
      planes.push_back(read_vector_line(in, "hyperplane"));
    }
    state.hyperplanes.resize(state.config.d, planes[0].size());
    for (int r = 0; r < state.config.d; ++r) {
      state.hyperplanes.row(r) =
          planes[static_cast<std::size_t>(r)].transpose();
    }
    std::size_t n_regions = 0;
    {
      std::istringstream is(next_line(in));
      std::string word;
      is >> word >> n_regions;
      if (word != "regions") {
        fail(ErrorCode::ParseError, "expected regions line");
      }
    }
    for (std::size_t r = 0; r < n_regions; ++r) {
      std::istringstream is(next_line(in));
      std::string word, sig;
      int target = 0;
      int in_own = 0;
      is >> word >> sig >> target >> in_own;
      if (word != "region") fail(ErrorCode::ParseError, "expected region");
      state.regions.push_back(marker::Signature::from_string(sig));
      state.target_indices.push_back(target);
      state.target_in_own_region.push_back(static_cast<char>(in_own));
      state.bank[state.regions.back().bits] =
          read_vector_line(in, "watermark");
    }
    secret.regionmarker = std::move(state);
  } else if (secret.scheme == "warden") {
    rivals::WardenScheme scheme;
    scheme.tau = require<int>(config, "tau");
    scheme.lambda_max = require<double>(config, "lambda_max");
    scheme.target_indices = require<std::vector<int>>(config, "targets");
    scheme.triggers = load_trigger_sets(in);
    for (std::size_t k = 0; k < scheme.triggers.sets.size(); ++k) {
      scheme.watermarks.push_back(read_vector_line(in, "watermark"));
    }
    secret.warden = std::move(scheme);
  } else if (secret.scheme == "espew") {
    rivals::EspewScheme scheme;
    scheme.lambda = require<double>(config, "lambda");
    scheme.target_index = require<int>(config, "target");
    {
      std::istringstream is(next_line(in));
      std::string word;
      is >> word;
      if (word != "dims") fail(ErrorCode::ParseError, "expected dims line");
      int d = 0;
      while (is >> d) scheme.dim_subset.push_back(d);
    }
    scheme.triggers = load_trigger_sets(in);
    scheme.watermark = read_vector_line(in, "watermark");
    secret.espew = std::move(scheme);
  } else if (secret.scheme == "wet") {
    rivals::WetTransform t;
    t.correlations = require<int>(config, "correlations");
    const int dim = require<int>(config, "dim");
    t.transform.resize(dim, dim);
    for (int r = 0; r < dim; ++r) {
      t.transform.row(r) = read_vector_line(in, "row").transpose();
    }
    t.inverse = t.transform.partialPivLu().inverse();
    secret.wet = std::move(t);
  } else {
    fail(ErrorCode::ParseError, "unknown scheme: " + secret.scheme);
  }
  expect_line(in, "end");
  return secret;
}

void save_stealer(std::ostream& out, const synth::StealerModel& model) {
  out << kStealerMagic << '\n';
  out << "dims " << model.lift.rows() << ' ' << model.lift.cols() << ' '
      << model.weights.rows() << ' ' << format_double(model.input_scale)
      << '\n';
  for (Eigen::Index r = 0; r < model.lift.rows(); ++r) {
    out << "lift";
    write_vector(out, model.lift.row(r).transpose());
    out << '\n';
  }
  for (Eigen::Index r = 0; r < model.weights.rows(); ++r) {
    out << "weights";
    write_vector(out, model.weights.row(r).transpose());
    out << '\n';
  }
  out << "bias";
  write_vector(out, model.bias);
  out << '\n';
  out << "end\n";
}

synth::StealerModel load_stealer(std::istream& in) {
  expect_line(in, kStealerMagic);
  synth::StealerModel model;
  Eigen::Index feature_dim = 0;
  Eigen::Index latent_dim = 0;
  Eigen::Index out_dim = 0;
  {
    std::istringstream is(next_line(in));
    std::string word, scale;
    is >> word >> feature_dim >> latent_dim >> out_dim >> scale;
    if (word != "dims") fail(ErrorCode::ParseError, "expected dims line");
    model.input_scale = parse_double(scale);
  }
  model.lift.resize(feature_dim, latent_dim);
  for (Eigen::Index r = 0; r < feature_dim; ++r) {
    model.lift.row(r) = read_vector_line(in, "lift").transpose();
  }
  model.weights.resize(out_dim, feature_dim);
  for (Eigen::Index r = 0; r < out_dim; ++r) {
    model.weights.row(r) = read_vector_line(in, "weights").transpose();
  }
  model.bias = read_vector_line(in, "bias");
  expect_line(in, "end");
  return model;
}

void save_corpus_file(const std::string& path, const CorpusFile& corpus) {
  auto out = open_out(path);
  save_corpus(out, corpus);
}

CorpusFile load_corpus_file(const std::string& path) {
  auto in = open_in(path);
  return load_corpus(in);
}

void save_embeddings_file(const std::string& path, const EmbeddingsFile& e) {
  auto out = open_out(path);
  save_embeddings(out, e);
}

EmbeddingsFile load_embeddings_file(const std::string& path) {
  auto in = open_in(path);
  return load_embeddings(in);
}

void save_secret_file(const std::string& path, const SecretFile& secret) {
  auto out = open_out(path);
  save_secret(out, secret);
}

SecretFile load_secret_file(const std::string& path) {
  auto in = open_in(path);
  return load_secret(in);
}

void save_stealer_file(const std::string& path,
                       const synth::StealerModel& model) {
  auto out = open_out(path);
  save_stealer(out, model);
}

synth::StealerModel load_stealer_file(const std::string& path) {
  auto in = open_in(path);
  return load_stealer(in);
}

}  // namespace ewlab::io
