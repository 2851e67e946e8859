#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ewlab/adjudicator.hpp"
#include "ewlab/redteam.hpp"
#include "ewlab/regionmarker.hpp"
#include "ewlab/rivals.hpp"
#include "ewlab/serialize.hpp"
#include "ewlab/synthlab.hpp"

namespace ewlab::bench {

enum class DefenseKind { None, RegionMarker, Warden, Espew, Wet };

std::string defense_kind_name(DefenseKind kind);

struct WardenParams {
  int n_sets = 2;
  int set_size = 20;
  double freq_lo = 0.005;
  double freq_hi = 0.01;
  int tau = 4;
  double lambda_max = 0.4;
};

struct EspewParams {
  double ratio = 0.2;
  double lambda = 0.2;
  int n_sets = 2;
  int set_size = 20;
  double freq_lo = 0.005;
  double freq_hi = 0.01;
};

struct WetParams {
  int correlations = 25;
};

// `regionmarker` doubles as the verifier's defense parameters when the
// scheme is None: the defender is built but never applied, which is the
// clean-provider false-positive arm.
struct DefenseSpec {
  DefenseKind kind = DefenseKind::RegionMarker;
  marker::DefenderConfig regionmarker;
  WardenParams warden;
  EspewParams espew;
  WetParams wet;
};

enum class AttackKind {
  Cse,
  Paraphrase,
  Shift,
  Truncate,
  Permute,
  TanhScale,
  RandomProjection,
  Finetune,
};

struct AttackSpec {
  AttackKind kind = AttackKind::Shift;
  // cse
  redteam::CseConfig cse;
  // paraphrase
  int k = 5;
  double threshold = 0.8;
  double sigma = redteam::kDefaultParaphraseSigma;
  // dimension perturbations; amount 0 picks the scale-aware default
  // (shift 100 mod D, truncate D/2)
  int amount = 0;
  // finetune
  int steps = 50;
  double learning_rate = 0.05;
  int finetune_docs = 1000;

  std::string label() const;
  bool is_pre_training() const {
    return kind == AttackKind::Cse || kind == AttackKind::Paraphrase;
  }
  bool is_output_perturbation() const {
    return kind == AttackKind::Shift || kind == AttackKind::Truncate ||
           kind == AttackKind::Permute || kind == AttackKind::TanhScale ||
           kind == AttackKind::RandomProjection;
  }
};

struct StealerParams {
  int feature_dim = 512;
  double ridge = 1e-3;
};

struct ExperimentConfig {
  synth::CorpusConfig corpus;
  DefenseSpec defense;
  std::vector<AttackSpec> attacks;
  StealerParams stealer;
  int n_seeds = 10;
  std::uint64_t master_seed = 1;
  double train_frac = 0.75;
  int min_per_region = 20;
  double benchmark_epsilon = 0.1;
  std::vector<std::string> formats = {"table", "csv", "json"};

  std::string attack_label() const;
};

// Strict parsing: unknown keys anywhere in the document are rejected.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config_file(const std::string& path);

struct RunRecord {
  int seed_index = 0;
  std::string defense;
  std::string attack;
  bool ok = false;
  std::string error;  // error code when !ok
  adjudicator::VerificationReport report;
  double utility_provided = 0.0;
  double utility_served = 0.0;
  double triggered_fraction = 0.0;
  double wall_seconds = 0.0;  // informational; never written to reports
};

// Everything the attack stage is allowed to see: public corpus data,
// the provided embeddings, benchmark embeddings and black-box query
// access to the defended API. No defender secrets.
struct AttackContext {
  const synth::CorpusConfig* corpus_cfg = nullptr;
  const std::vector<synth::Document>* docs = nullptr;
  std::vector<Vector> provided;
  std::vector<Vector> benchmark;
  redteam::EmbedQuery defended_query;
};

nlohmann::json attack_context_fields(const AttackContext& ctx);

std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg);
RunRecord run_single(const ExperimentConfig& cfg, int seed_index);

// Pieces shared by run_single and the step-by-step CLI subcommands.
io::SecretFile build_defense_secret(const ExperimentConfig& cfg,
                                    std::uint64_t defense_seed,
                                    const std::vector<synth::Document>& docs,
                                    const synth::ProviderModel& provider);

redteam::EmbedQuery make_defended_query(const io::SecretFile& secret,
                                        const synth::ProviderModel& provider);

adjudicator::VerificationReport verify_suspect(
    const io::SecretFile& secret, const std::vector<synth::Document>& pool_docs,
    const std::vector<synth::Document>& holdout_docs,
    const synth::ProviderModel& provider, const redteam::EmbedQuery& suspect,
    int min_per_region);

// Report emission. Aggregates records per (defense, attack) cell with
// mean +- std over the seeds; COPY? is the majority verdict. Returns
// the written paths. Timing is deliberately excluded so identical
// configurations produce byte-identical files.
std::vector<std::string> emit_report(const std::vector<RunRecord>& records,
                                     const std::vector<std::string>& formats,
                                     const std::string& out_dir);

std::string render_table(const std::vector<RunRecord>& records);
std::string render_csv(const std::vector<RunRecord>& records);
nlohmann::json render_json(const std::vector<RunRecord>& records);

struct SweepPoint {
  std::string param;
  double value = 0.0;
  int seed_index = 0;
  double delta_cos = 0.0;
  double p_value = 0.0;
};

// Runs the base config once per sweep value (alpha, d or lambda).
std::vector<SweepPoint> run_sweep(const ExperimentConfig& base,
                                  const std::string& param,
                                  const std::vector<double>& values);

std::string render_sweep_csv(const std::vector<SweepPoint>& points);

}  // namespace ewlab::bench
