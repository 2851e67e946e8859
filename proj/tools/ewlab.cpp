// Command-line front end: corpus generation, defense, attack, extraction
// and verification as separate steps, plus the config-driven experiment
// and sweep runners.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "ewlab/bench.hpp"
#include "ewlab/rng.hpp"
#include "ewlab/serialize.hpp"

namespace {

using namespace ewlab;

struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
  int seed_index = 0;
};

std::uint64_t run_seed_of(const bench::ExperimentConfig& cfg, int seed_index) {
  return derive_seed(cfg.master_seed, "run",
                     static_cast<std::uint64_t>(seed_index));
}

struct World {
  synth::CorpusConfig corpus_cfg;
  std::vector<synth::Document> docs;
  std::vector<synth::Document> train;
  std::vector<synth::Document> holdout;
  synth::ProviderModel provider;
};

World load_world(const bench::ExperimentConfig& cfg,
                 const std::string& corpus_path, int seed_index) {
  World world;
  io::CorpusFile corpus = io::load_corpus_file(corpus_path);
  world.corpus_cfg = corpus.config;
  world.docs = std::move(corpus.docs);
  const std::size_t n_train = static_cast<std::size_t>(
      cfg.train_frac * static_cast<double>(world.docs.size()));
  world.train.assign(world.docs.begin(), world.docs.begin() + n_train);
  world.holdout.assign(world.docs.begin() + n_train, world.docs.end());
  world.provider = synth::build_provider(
      world.corpus_cfg.provider_dim, world.corpus_cfg.latent_dim,
      world.corpus_cfg.provider_noise_scale,
      derive_seed(run_seed_of(cfg, seed_index), "provider"));
  return world;
}

redteam::EmbedQuery make_suspect(const bench::ExperimentConfig& cfg,
                                 const synth::StealerModel& stealer,
                                 std::uint64_t run_seed, int provider_dim,
                                 std::vector<redteam::DimPerturber>& chain) {
  int dim = provider_dim;
  for (const bench::AttackSpec& attack : cfg.attacks) {
    if (!attack.is_output_perturbation()) continue;
    redteam::DimPerturbSpec spec;
    spec.seed = derive_seed(run_seed, "attack-perturb");
    switch (attack.kind) {
      case bench::AttackKind::Shift:
        spec.kind = redteam::PerturbKind::Shift;
        spec.amount = attack.amount > 0 ? attack.amount : 100;
        spec.amount = ((spec.amount - 1) % dim) + 1;
        break;
      case bench::AttackKind::Truncate:
        spec.kind = redteam::PerturbKind::Truncate;
        spec.amount = attack.amount > 0 ? attack.amount : dim / 2;
        break;
      case bench::AttackKind::Permute:
        spec.kind = redteam::PerturbKind::Permute;
        break;
      case bench::AttackKind::TanhScale:
        spec.kind = redteam::PerturbKind::TanhScale;
        break;
      case bench::AttackKind::RandomProjection:
        spec.kind = redteam::PerturbKind::RandomProjection;
        break;
      default:
        break;
    }
    chain.emplace_back(spec, dim);
    if (spec.kind == redteam::PerturbKind::Truncate) dim = spec.amount;
  }
  const synth::StealerModel* model = &stealer;
  const std::vector<redteam::DimPerturber>* chain_ptr = &chain;
  return [model, chain_ptr](const synth::Document& doc) {
    Vector e = synth::stealer_embed(*model, doc);
    for (const redteam::DimPerturber& p : *chain_ptr) e = p.apply(e);
    return e;
  };
}

int cmd_gen_corpus(const CommonArgs& args) {
  bench::ExperimentConfig cfg = bench::load_config_file(args.config_path);
  synth::CorpusConfig corpus_cfg = cfg.corpus;
  corpus_cfg.seed =
      derive_seed(run_seed_of(cfg, args.seed_index), "corpus");
  io::CorpusFile corpus;
  corpus.config = corpus_cfg;
  corpus.docs = synth::gen_corpus(corpus_cfg);
  std::filesystem::create_directories(args.out_dir);
  const std::string path = args.out_dir + "/corpus.txt";
  io::save_corpus_file(path, corpus);
  std::cout << "wrote " << path << " (" << corpus.docs.size() << " docs)\n";
  return 0;
}

int cmd_defend(const CommonArgs& args, const std::string& corpus_path) {
  bench::ExperimentConfig cfg = bench::load_config_file(args.config_path);
  const std::uint64_t run_seed = run_seed_of(cfg, args.seed_index);
  World world = load_world(cfg, corpus_path, args.seed_index);

  const io::SecretFile secret = bench::build_defense_secret(
      cfg, derive_seed(run_seed, "defense"), world.train, world.provider);
  const redteam::EmbedQuery defended =
      bench::make_defended_query(secret, world.provider);

  io::EmbeddingsFile provided;
  for (const synth::Document& doc : world.train) {
    provided.doc_ids.push_back(doc.id);
    provided.embeddings.push_back(defended(doc));
  }
  std::filesystem::create_directories(args.out_dir);
  const std::string secret_path = args.out_dir + "/defender.secret";
  io::save_secret_file(secret_path, secret);
  std::filesystem::permissions(secret_path,
                               std::filesystem::perms::owner_read |
                                   std::filesystem::perms::owner_write,
                               std::filesystem::perm_options::replace);
  const std::string provided_path = args.out_dir + "/provided.txt";
  io::save_embeddings_file(provided_path, provided);
  std::cout << "wrote " << secret_path << " (keep this file private) and "
            << provided_path << "\n";
  return 0;
}

int cmd_attack(const CommonArgs& args, const std::string& corpus_path,
               const std::string& embeddings_path,
               const std::string& defender_path) {
  bench::ExperimentConfig cfg = bench::load_config_file(args.config_path);
  const std::uint64_t run_seed = run_seed_of(cfg, args.seed_index);
  World world = load_world(cfg, corpus_path, args.seed_index);
  io::EmbeddingsFile embs = io::load_embeddings_file(embeddings_path);
  if (embs.embeddings.size() != world.train.size()) {
    fail(ErrorCode::DimMismatch, "embeddings do not match the train split");
  }

  redteam::EmbedQuery defended;
  if (!defender_path.empty()) {
    // Black-box access to the defended API, for the paraphrase attack.
    static io::SecretFile secret;
    secret = io::load_secret_file(defender_path);
    defended = bench::make_defended_query(secret, world.provider);
  }

  std::vector<Vector> targets = embs.embeddings;
  for (const bench::AttackSpec& attack : cfg.attacks) {
    if (attack.kind == bench::AttackKind::Paraphrase) {
      if (!defended) {
        fail(ErrorCode::ConfigInvalid,
             "paraphrase attack needs --defender for API access");
      }
      const std::uint64_t seed = derive_seed(run_seed, "attack-paraphrase");
      for (std::size_t i = 0; i < world.train.size(); ++i) {
        targets[i] =
            redteam::paraphrase_attack(world.corpus_cfg, world.train[i],
                                       defended, attack.k, attack.threshold,
                                       attack.sigma, seed)
                .embedding;
      }
    } else if (attack.kind == bench::AttackKind::Cse) {
      const synth::ProviderModel benchmark = synth::perturb_provider(
          world.provider, cfg.benchmark_epsilon,
          derive_seed(run_seed, "benchmark"));
      std::vector<Vector> bench_embs;
      bench_embs.reserve(world.train.size());
      for (const synth::Document& doc : world.train) {
        bench_embs.push_back(synth::provider_embed(benchmark, doc));
      }
      redteam::CseResult result = redteam::cse_attack(
          targets, bench_embs, attack.cse, derive_seed(run_seed, "attack-cse"));
      targets = std::move(result.cleansed);
      std::cout << "cse: " << result.suspicious.size()
                << " suspicious docs\n";
    }
  }
  io::EmbeddingsFile out;
  out.doc_ids = embs.doc_ids;
  out.embeddings = std::move(targets);
  std::filesystem::create_directories(args.out_dir);
  const std::string path = args.out_dir + "/attacked.txt";
  io::save_embeddings_file(path, out);
  std::cout << "wrote " << path << "\n";
  return 0;
}

int cmd_extract(const CommonArgs& args, const std::string& corpus_path,
                const std::string& embeddings_path) {
  bench::ExperimentConfig cfg = bench::load_config_file(args.config_path);
  const std::uint64_t run_seed = run_seed_of(cfg, args.seed_index);
  World world = load_world(cfg, corpus_path, args.seed_index);
  io::EmbeddingsFile embs = io::load_embeddings_file(embeddings_path);
  if (embs.embeddings.size() != world.train.size()) {
    fail(ErrorCode::DimMismatch, "embeddings do not match the train split");
  }
  std::vector<std::pair<synth::Document, Vector>> pairs;
  pairs.reserve(world.train.size());
  for (std::size_t i = 0; i < world.train.size(); ++i) {
    if (embs.embeddings[i].norm() < 1e-12) continue;  // zeroed by an attack
    pairs.emplace_back(world.train[i], embs.embeddings[i]);
  }
  const synth::StealerModel stealer =
      synth::train_stealer(pairs, cfg.stealer.ridge, cfg.stealer.feature_dim,
                           derive_seed(run_seed, "stealer"));
  std::filesystem::create_directories(args.out_dir);
  const std::string path = args.out_dir + "/stealer.txt";
  io::save_stealer_file(path, stealer);
  std::cout << "wrote " << path << " (" << pairs.size()
            << " training pairs)\n";
  return 0;
}

int cmd_verify(const CommonArgs& args, const std::string& corpus_path,
               const std::string& defender_path,
               const std::string& stealer_path) {
  bench::ExperimentConfig cfg = bench::load_config_file(args.config_path);
  const std::uint64_t run_seed = run_seed_of(cfg, args.seed_index);
  World world = load_world(cfg, corpus_path, args.seed_index);
  const io::SecretFile secret = io::load_secret_file(defender_path);
  const synth::StealerModel stealer = io::load_stealer_file(stealer_path);

  std::vector<redteam::DimPerturber> chain;
  const redteam::EmbedQuery suspect = make_suspect(
      cfg, stealer, run_seed, world.corpus_cfg.provider_dim, chain);

  bench::RunRecord record;
  record.seed_index = args.seed_index;
  record.defense = secret.scheme;
  record.attack = cfg.attack_label();
  record.report = bench::verify_suspect(secret, world.train, world.holdout,
                                        world.provider, suspect,
                                        cfg.min_per_region);
  record.ok = true;
  const std::vector<std::string> written =
      bench::emit_report({record}, cfg.formats, args.out_dir);
  std::cout << bench::render_table({record});
  for (const std::string& path : written) std::cout << "wrote " << path << "\n";
  return record.report.copy ? 0 : 0;
}

int cmd_experiment(const CommonArgs& args, const std::string& format) {
  bench::ExperimentConfig cfg = bench::load_config_file(args.config_path);
  if (!format.empty()) cfg.formats = {format};
  const std::vector<bench::RunRecord> records = bench::run_experiment(cfg);
  const std::vector<std::string> written =
      bench::emit_report(records, cfg.formats, args.out_dir);
  std::cout << bench::render_table(records);
  double total = 0.0;
  for (const bench::RunRecord& r : records) total += r.wall_seconds;
  std::cerr << "total pipeline time: " << total << " s\n";
  for (const std::string& path : written) std::cout << "wrote " << path << "\n";
  return 0;
}

int cmd_sweep(const CommonArgs& args, const std::string& param,
              std::vector<double> values) {
  bench::ExperimentConfig cfg = bench::load_config_file(args.config_path);
  const std::vector<bench::SweepPoint> points =
      bench::run_sweep(cfg, param, values);
  std::filesystem::create_directories(args.out_dir);
  const std::string path = args.out_dir + "/sweep.csv";
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path);
  out << bench::render_sweep_csv(points);
  std::cout << "wrote " << path << " (" << points.size() << " points)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ewlab: embedding-watermarking laboratory"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string corpus_path, embeddings_path, defender_path, stealer_path;
  std::string format, sweep_param = "alpha";
  std::vector<double> sweep_values;

  auto add_common = [&](CLI::App* cmd, bool needs_out = true) {
    cmd->add_option("--config", args.config_path, "experiment config (json)")
        ->required();
    if (needs_out) cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--seed", args.seed_index, "seed index within the run");
  };

  CLI::App* gen = app.add_subcommand("gen-corpus", "generate a corpus file");
  add_common(gen);

  CLI::App* defend =
      app.add_subcommand("defend", "build the defense and provided embeddings");
  add_common(defend);
  defend->add_option("--corpus", corpus_path, "corpus file")->required();

  CLI::App* attack =
      app.add_subcommand("attack", "apply embedding-level attacks");
  add_common(attack);
  attack->add_option("--corpus", corpus_path, "corpus file")->required();
  attack->add_option("--embeddings", embeddings_path, "embeddings file")
      ->required();
  attack->add_option("--defender", defender_path,
                     "defense secret (black-box API for paraphrase)");

  CLI::App* extract = app.add_subcommand("extract", "train the stealer model");
  add_common(extract);
  extract->add_option("--corpus", corpus_path, "corpus file")->required();
  extract->add_option("--embeddings", embeddings_path, "embeddings file")
      ->required();

  CLI::App* verify = app.add_subcommand("verify", "run copyright verification");
  add_common(verify);
  verify->add_option("--corpus", corpus_path, "corpus file")->required();
  verify->add_option("--defender", defender_path, "defense secret")
      ->required();
  verify->add_option("--stealer", stealer_path, "stealer model")->required();

  CLI::App* experiment =
      app.add_subcommand("experiment", "run the full seed ensemble");
  add_common(experiment);
  experiment->add_option("--format", format, "table|csv|json (overrides config)");

  CLI::App* sweep = app.add_subcommand("sweep", "hyperparameter sweep");
  add_common(sweep);
  sweep->add_option("--param", sweep_param, "alpha|d|lambda");
  sweep->add_option("--values", sweep_values, "sweep values")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen_corpus(args);
    if (defend->parsed()) return cmd_defend(args, corpus_path);
    if (attack->parsed()) {
      return cmd_attack(args, corpus_path, embeddings_path, defender_path);
    }
    if (extract->parsed()) return cmd_extract(args, corpus_path, embeddings_path);
    if (verify->parsed()) {
      return cmd_verify(args, corpus_path, defender_path, stealer_path);
    }
    if (experiment->parsed()) return cmd_experiment(args, format);
    if (sweep->parsed()) return cmd_sweep(args, sweep_param, sweep_values);
  } catch (const ewlab::Error& e) {
    nlohmann::json err = {{"error", ewlab::error_code_name(e.code())},
                          {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    nlohmann::json err = {{"error", "Unhandled"}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 1;
  }
  return 1;
}
