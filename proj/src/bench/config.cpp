#include <fstream>
#include <set>

#include "ewlab/bench.hpp"

namespace ewlab::bench {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& allowed,
                const std::string& where) {
  if (!j.is_object()) fail(ErrorCode::ConfigInvalid, where + ": not an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) {
      fail(ErrorCode::ConfigInvalid, where + ": unknown key '" + key + "'");
    }
  }
}

template <typename T>
void read_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

synth::CorpusConfig parse_corpus(const json& j) {
  check_keys(j,
             {"seed", "n_docs", "n_clusters", "latent_dim", "provider_dim",
              "vocab_size", "zipf_exponent", "doc_noise_scale",
              "provider_noise_scale"},
             "corpus");
  synth::CorpusConfig cfg;
  read_if(j, "seed", cfg.seed);
  read_if(j, "n_docs", cfg.n_docs);
  read_if(j, "n_clusters", cfg.n_clusters);
  read_if(j, "latent_dim", cfg.latent_dim);
  read_if(j, "provider_dim", cfg.provider_dim);
  read_if(j, "vocab_size", cfg.vocab_size);
  read_if(j, "zipf_exponent", cfg.zipf_exponent);
  read_if(j, "doc_noise_scale", cfg.doc_noise_scale);
  read_if(j, "provider_noise_scale", cfg.provider_noise_scale);
  cfg.validate();
  return cfg;
}

DefenseSpec parse_defense(const json& j) {
  DefenseSpec spec;
  const std::string scheme = j.contains("scheme")
                                 ? j.at("scheme").get<std::string>()
                                 : std::string("regionmarker");
  if (scheme == "regionmarker" || scheme == "none") {
    check_keys(j,
               {"scheme", "d", "alpha", "lambda", "seed",
                "pca_fit_sample_size", "use_pca", "single_watermark"},
               "defense");
    spec.kind =
        scheme == "none" ? DefenseKind::None : DefenseKind::RegionMarker;
    read_if(j, "d", spec.regionmarker.d);
    read_if(j, "alpha", spec.regionmarker.alpha);
    read_if(j, "lambda", spec.regionmarker.lambda);
    read_if(j, "seed", spec.regionmarker.seed);
    read_if(j, "pca_fit_sample_size", spec.regionmarker.pca_fit_sample_size);
    read_if(j, "use_pca", spec.regionmarker.use_pca);
    read_if(j, "single_watermark", spec.regionmarker.single_watermark);
    spec.regionmarker.validate();
  } else if (scheme == "warden") {
    check_keys(j,
               {"scheme", "n_sets", "set_size", "freq_lo", "freq_hi", "tau",
                "lambda_max"},
               "defense");
    spec.kind = DefenseKind::Warden;
    read_if(j, "n_sets", spec.warden.n_sets);
    read_if(j, "set_size", spec.warden.set_size);
    read_if(j, "freq_lo", spec.warden.freq_lo);
    read_if(j, "freq_hi", spec.warden.freq_hi);
    read_if(j, "tau", spec.warden.tau);
    read_if(j, "lambda_max", spec.warden.lambda_max);
  } else if (scheme == "espew") {
    check_keys(j,
               {"scheme", "ratio", "lambda", "n_sets", "set_size", "freq_lo",
                "freq_hi"},
               "defense");
    spec.kind = DefenseKind::Espew;
    read_if(j, "ratio", spec.espew.ratio);
    read_if(j, "lambda", spec.espew.lambda);
    read_if(j, "n_sets", spec.espew.n_sets);
    read_if(j, "set_size", spec.espew.set_size);
    read_if(j, "freq_lo", spec.espew.freq_lo);
    read_if(j, "freq_hi", spec.espew.freq_hi);
  } else if (scheme == "wet") {
    check_keys(j, {"scheme", "correlations"}, "defense");
    spec.kind = DefenseKind::Wet;
    read_if(j, "correlations", spec.wet.correlations);
  } else {
    fail(ErrorCode::ConfigInvalid, "unknown defense scheme: " + scheme);
  }
  return spec;
}

AttackSpec parse_attack(const json& j) {
  AttackSpec spec;
  if (!j.contains("kind")) {
    fail(ErrorCode::ConfigInvalid, "attack entry needs a kind");
  }
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "cse") {
    check_keys(j, {"kind", "n_clusters", "components", "suspicion_margin"},
               "attack(cse)");
    spec.kind = AttackKind::Cse;
    read_if(j, "n_clusters", spec.cse.n_clusters);
    read_if(j, "components", spec.cse.components);
    read_if(j, "suspicion_margin", spec.cse.suspicion_margin);
  } else if (kind == "paraphrase") {
    check_keys(j, {"kind", "k", "threshold", "sigma"}, "attack(paraphrase)");
    spec.kind = AttackKind::Paraphrase;
    read_if(j, "k", spec.k);
    read_if(j, "threshold", spec.threshold);
    read_if(j, "sigma", spec.sigma);
  } else if (kind == "shift" || kind == "truncate") {
    check_keys(j, {"kind", "amount"}, "attack(" + kind + ")");
    spec.kind = kind == "shift" ? AttackKind::Shift : AttackKind::Truncate;
    read_if(j, "amount", spec.amount);
  } else if (kind == "permute") {
    check_keys(j, {"kind"}, "attack(permute)");
    spec.kind = AttackKind::Permute;
  } else if (kind == "tanh_scale") {
    check_keys(j, {"kind"}, "attack(tanh_scale)");
    spec.kind = AttackKind::TanhScale;
  } else if (kind == "random_projection") {
    check_keys(j, {"kind"}, "attack(random_projection)");
    spec.kind = AttackKind::RandomProjection;
  } else if (kind == "finetune") {
    check_keys(j, {"kind", "steps", "learning_rate", "n_docs"},
               "attack(finetune)");
    spec.kind = AttackKind::Finetune;
    read_if(j, "steps", spec.steps);
    read_if(j, "learning_rate", spec.learning_rate);
    read_if(j, "n_docs", spec.finetune_docs);
  } else {
    fail(ErrorCode::ConfigInvalid, "unknown attack kind: " + kind);
  }
  return spec;
}

}  // namespace

std::string defense_kind_name(DefenseKind kind) {
  switch (kind) {
    case DefenseKind::None: return "none";
    case DefenseKind::RegionMarker: return "regionmarker";
    case DefenseKind::Warden: return "warden";
    case DefenseKind::Espew: return "espew";
    case DefenseKind::Wet: return "wet";
  }
  return "unknown";
}

std::string AttackSpec::label() const {
  switch (kind) {
    case AttackKind::Cse: return "cse";
    case AttackKind::Paraphrase: return "paraphrase";
    case AttackKind::Shift: return "shift";
    case AttackKind::Truncate: return "truncate";
    case AttackKind::Permute: return "permute";
    case AttackKind::TanhScale: return "tanh_scale";
    case AttackKind::RandomProjection: return "random_projection";
    case AttackKind::Finetune: return "finetune";
  }
  return "unknown";
}

std::string ExperimentConfig::attack_label() const {
  if (attacks.empty()) return "none";
  std::string out;
  for (const AttackSpec& a : attacks) {
    if (!out.empty()) out += "+";
    out += a.label();
  }
  return out;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  check_keys(j,
             {"corpus", "defense", "attacks", "stealer", "n_seeds",
              "master_seed", "train_frac", "min_per_region",
              "benchmark_epsilon", "formats"},
             "config");
  ExperimentConfig cfg;
  if (j.contains("corpus")) cfg.corpus = parse_corpus(j.at("corpus"));
  if (j.contains("defense")) cfg.defense = parse_defense(j.at("defense"));
  if (j.contains("attacks")) {
    if (!j.at("attacks").is_array()) {
      fail(ErrorCode::ConfigInvalid, "attacks must be an array");
    }
    for (const auto& entry : j.at("attacks")) {
      cfg.attacks.push_back(parse_attack(entry));
    }
  }
  if (j.contains("stealer")) {
    const auto& s = j.at("stealer");
    check_keys(s, {"feature_dim", "ridge"}, "stealer");
    read_if(s, "feature_dim", cfg.stealer.feature_dim);
    read_if(s, "ridge", cfg.stealer.ridge);
  }
  read_if(j, "n_seeds", cfg.n_seeds);
  read_if(j, "master_seed", cfg.master_seed);
  read_if(j, "train_frac", cfg.train_frac);
  read_if(j, "min_per_region", cfg.min_per_region);
  read_if(j, "benchmark_epsilon", cfg.benchmark_epsilon);
  if (j.contains("formats")) {
    cfg.formats = j.at("formats").get<std::vector<std::string>>();
    for (const std::string& f : cfg.formats) {
      if (f != "table" && f != "csv" && f != "json") {
        fail(ErrorCode::ConfigInvalid, "unknown report format: " + f);
      }
    }
  }
  if (cfg.n_seeds < 1) fail(ErrorCode::ConfigInvalid, "n_seeds >= 1");
  if (!(cfg.train_frac > 0.0) || !(cfg.train_frac < 1.0)) {
    fail(ErrorCode::ConfigInvalid, "train_frac in (0,1)");
  }
  if (cfg.min_per_region < 2) {
    fail(ErrorCode::ConfigInvalid, "min_per_region >= 2");
  }
  return cfg;
}

nlohmann::json to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["corpus"] = io::to_json(cfg.corpus);
  nlohmann::json d;
  d["scheme"] = defense_kind_name(cfg.defense.kind);
  switch (cfg.defense.kind) {
    case DefenseKind::None:
    case DefenseKind::RegionMarker: {
      const auto& rm = cfg.defense.regionmarker;
      d["d"] = rm.d;
      d["alpha"] = rm.alpha;
      d["lambda"] = rm.lambda;
      d["seed"] = rm.seed;
      d["pca_fit_sample_size"] = rm.pca_fit_sample_size;
      d["use_pca"] = rm.use_pca;
      d["single_watermark"] = rm.single_watermark;
      break;
    }
    case DefenseKind::Warden: {
      const auto& w = cfg.defense.warden;
      d["n_sets"] = w.n_sets;
      d["set_size"] = w.set_size;
      d["freq_lo"] = w.freq_lo;
      d["freq_hi"] = w.freq_hi;
      d["tau"] = w.tau;
      d["lambda_max"] = w.lambda_max;
      break;
    }
    case DefenseKind::Espew: {
      const auto& e = cfg.defense.espew;
      d["ratio"] = e.ratio;
      d["lambda"] = e.lambda;
      d["n_sets"] = e.n_sets;
      d["set_size"] = e.set_size;
      d["freq_lo"] = e.freq_lo;
      d["freq_hi"] = e.freq_hi;
      break;
    }
    case DefenseKind::Wet:
      d["correlations"] = cfg.defense.wet.correlations;
      break;
  }
  j["defense"] = d;
  j["attacks"] = nlohmann::json::array();
  for (const AttackSpec& a : cfg.attacks) {
    nlohmann::json e;
    e["kind"] = a.label();
    switch (a.kind) {
      case AttackKind::Cse:
        e["n_clusters"] = a.cse.n_clusters;
        e["components"] = a.cse.components;
        e["suspicion_margin"] = a.cse.suspicion_margin;
        break;
      case AttackKind::Paraphrase:
        e["k"] = a.k;
        e["threshold"] = a.threshold;
        e["sigma"] = a.sigma;
        break;
      case AttackKind::Shift:
      case AttackKind::Truncate:
        e["amount"] = a.amount;
        break;
      case AttackKind::Finetune:
        e["steps"] = a.steps;
        e["learning_rate"] = a.learning_rate;
        e["n_docs"] = a.finetune_docs;
        break;
      default:
        break;
    }
    j["attacks"].push_back(e);
  }
  j["stealer"] = {{"feature_dim", cfg.stealer.feature_dim},
                  {"ridge", cfg.stealer.ridge}};
  j["n_seeds"] = cfg.n_seeds;
  j["master_seed"] = cfg.master_seed;
  j["train_frac"] = cfg.train_frac;
  j["min_per_region"] = cfg.min_per_region;
  j["benchmark_epsilon"] = cfg.benchmark_epsilon;
  j["formats"] = cfg.formats;
  return j;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot read " + path);
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) fail(ErrorCode::ParseError, "malformed config json");
  return config_from_json(j);
}

}  // namespace ewlab::bench
