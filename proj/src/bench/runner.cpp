#include <chrono>

#include "ewlab/bench.hpp"
#include "ewlab/rng.hpp"

namespace ewlab::bench {

namespace {

std::vector<Vector> clean_embeddings(const synth::ProviderModel& provider,
                                     const std::vector<synth::Document>& docs) {
  std::vector<Vector> out;
  out.reserve(docs.size());
  for (const synth::Document& doc : docs) {
    out.push_back(synth::provider_embed(provider, doc));
  }
  return out;
}

// Seeded-uniform target picks with pairwise cosine < 0.95, mirroring
// the defender's watermark-bank rule.
std::vector<int> pick_targets(const std::vector<Vector>& pool, int count,
                              Rng& rng) {
  std::vector<int> picks;
  std::vector<Vector> chosen;
  for (int r = 0; r < count; ++r) {
    for (int attempt = 0;; ++attempt) {
      if (attempt >= 1000) {
        fail(ErrorCode::ConfigInvalid, "candidate pool too correlated");
      }
      const std::size_t idx = rng.uniform_int(pool.size());
      const Vector w = numkit::normalized(pool[idx]);
      bool ok = true;
      for (const Vector& prev : chosen) {
        if (numkit::cosine(w, prev) >= 0.95) {
          ok = false;
          break;
        }
      }
      if (ok) {
        picks.push_back(static_cast<int>(idx));
        chosen.push_back(w);
        break;
      }
    }
  }
  return picks;
}

}  // namespace

io::SecretFile build_defense_secret(const ExperimentConfig& cfg,
                                    std::uint64_t defense_seed,
                                    const std::vector<synth::Document>& docs,
                                    const synth::ProviderModel& provider) {
  io::SecretFile secret;
  const std::vector<Vector> pool = clean_embeddings(provider, docs);
  switch (cfg.defense.kind) {
    case DefenseKind::None:
    case DefenseKind::RegionMarker: {
      marker::DefenderConfig dc = cfg.defense.regionmarker;
      dc.seed = defense_seed;
      secret.scheme =
          cfg.defense.kind == DefenseKind::None ? "none" : "regionmarker";
      secret.regionmarker = marker::build_defender(dc, pool, pool);
      break;
    }
    case DefenseKind::Warden: {
      const WardenParams& p = cfg.defense.warden;
      rivals::WardenScheme scheme;
      scheme.tau = p.tau;
      scheme.lambda_max = p.lambda_max;
      scheme.triggers = rivals::select_trigger_words(
          docs, cfg.corpus.vocab_size, p.freq_lo, p.freq_hi, p.set_size,
          p.n_sets, derive_seed(defense_seed, "warden-triggers"));
      Rng rng(derive_seed(defense_seed, "warden-watermarks"));
      scheme.target_indices = pick_targets(pool, p.n_sets, rng);
      for (int t : scheme.target_indices) {
        scheme.watermarks.push_back(
            numkit::normalized(pool[static_cast<std::size_t>(t)]));
      }
      secret.scheme = "warden";
      secret.warden = std::move(scheme);
      break;
    }
    case DefenseKind::Espew: {
      const EspewParams& p = cfg.defense.espew;
      rivals::EspewScheme scheme;
      scheme.lambda = p.lambda;
      scheme.dim_subset =
          rivals::pick_dim_subset(cfg.corpus.provider_dim, p.ratio,
                                  derive_seed(defense_seed, "espew-dims"));
      scheme.triggers = rivals::select_trigger_words(
          docs, cfg.corpus.vocab_size, p.freq_lo, p.freq_hi, p.set_size,
          p.n_sets, derive_seed(defense_seed, "espew-triggers"));
      Rng rng(derive_seed(defense_seed, "espew-watermark"));
      scheme.target_index = pick_targets(pool, 1, rng)[0];
      scheme.watermark = numkit::normalized(
          pool[static_cast<std::size_t>(scheme.target_index)]);
      secret.scheme = "espew";
      secret.espew = std::move(scheme);
      break;
    }
    case DefenseKind::Wet: {
      secret.scheme = "wet";
      secret.wet = rivals::wet_build(derive_seed(defense_seed, "wet"),
                                     cfg.corpus.provider_dim,
                                     cfg.defense.wet.correlations);
      break;
    }
  }
  return secret;
}

redteam::EmbedQuery make_defended_query(const io::SecretFile& secret,
                                        const synth::ProviderModel& provider) {
  if (secret.scheme == "none") {
    return [&provider](const synth::Document& doc) {
      return synth::provider_embed(provider, doc);
    };
  }
  if (secret.scheme == "regionmarker") {
    const marker::DefenderState* state = &*secret.regionmarker;
    return [state, &provider](const synth::Document& doc) {
      return marker::inject(*state, synth::provider_embed(provider, doc))
          .embedding;
    };
  }
  if (secret.scheme == "warden") {
    const rivals::WardenScheme* scheme = &*secret.warden;
    return [scheme, &provider](const synth::Document& doc) {
      return rivals::warden_inject(*scheme, doc.tokens,
                                   synth::provider_embed(provider, doc));
    };
  }
  if (secret.scheme == "espew") {
    const rivals::EspewScheme* scheme = &*secret.espew;
    return [scheme, &provider](const synth::Document& doc) {
      return rivals::espew_inject(*scheme, doc.tokens,
                                  synth::provider_embed(provider, doc));
    };
  }
  if (secret.scheme == "wet") {
    const rivals::WetTransform* t = &*secret.wet;
    return [t, &provider](const synth::Document& doc) {
      return rivals::wet_inject(*t, synth::provider_embed(provider, doc));
    };
  }
  fail(ErrorCode::ConfigInvalid, "unknown scheme: " + secret.scheme);
}

nlohmann::json attack_context_fields(const AttackContext& ctx) {
  return {{"corpus_config", ctx.corpus_cfg != nullptr},
          {"documents", ctx.docs ? ctx.docs->size() : 0},
          {"provided", ctx.provided.size()},
          {"benchmark", ctx.benchmark.size()},
          {"defended_query", ctx.defended_query ? "black-box" : "absent"}};
}

adjudicator::VerificationReport verify_suspect(
    const io::SecretFile& secret,
    const std::vector<synth::Document>& pool_docs,
    const std::vector<synth::Document>& holdout_docs,
    const synth::ProviderModel& provider, const redteam::EmbedQuery& suspect,
    int min_per_region) {
  std::vector<adjudicator::RegionVerdict> verdicts;

  if (secret.scheme == "regionmarker" || secret.scheme == "none") {
    const marker::DefenderState& state = *secret.regionmarker;
    const marker::VerificationCorpora corpora =
        marker::build_verification_corpora(state, holdout_docs, provider,
                                           min_per_region);
    std::vector<Vector> benign;
    benign.reserve(corpora.benign.size());
    for (std::size_t i : corpora.benign) {
      benign.push_back(suspect(holdout_docs[i]));
    }
    for (std::size_t r = 0; r < state.regions.size(); ++r) {
      const std::string label = state.regions[r].to_string();
      if (corpora.skipped[r]) {
        adjudicator::RegionVerdict v;
        v.region = label;
        v.n_backdoor = static_cast<int>(corpora.backdoor[r].size());
        v.n_benign = static_cast<int>(benign.size());
        v.skipped = true;
        verdicts.push_back(v);
        continue;
      }
      std::vector<Vector> backdoor;
      backdoor.reserve(corpora.backdoor[r].size());
      for (std::size_t i : corpora.backdoor[r]) {
        backdoor.push_back(suspect(holdout_docs[i]));
      }
      // The reference is the suspect's own embedding of the watermark's
      // target document, so verification stays inside whatever
      // representation the suspect serves.
      const Vector reference = suspect(
          pool_docs[static_cast<std::size_t>(state.target_indices[r])]);
      verdicts.push_back(
          adjudicator::region_deltas(label, reference, backdoor, benign));
    }
    return adjudicator::aggregate(verdicts);
  }

  if (secret.scheme == "warden" || secret.scheme == "espew") {
    const rivals::TriggerWordSets& triggers = secret.scheme == "warden"
                                                  ? secret.warden->triggers
                                                  : secret.espew->triggers;
    std::vector<std::size_t> benign_idx;
    for (std::size_t i = 0; i < holdout_docs.size(); ++i) {
      if (!triggers.contains_any(holdout_docs[i].tokens)) {
        benign_idx.push_back(i);
      }
    }
    if (benign_idx.size() < static_cast<std::size_t>(min_per_region)) {
      fail(ErrorCode::AllRegionsEmpty, "benign corpus below minimum");
    }
    std::vector<Vector> benign;
    benign.reserve(benign_idx.size());
    for (std::size_t i : benign_idx) benign.push_back(suspect(holdout_docs[i]));

    const std::size_t n_marks =
        secret.scheme == "warden" ? secret.warden->watermarks.size() : 1;
    std::size_t usable = 0;
    for (std::size_t k = 0; k < n_marks; ++k) {
      std::vector<Vector> backdoor;
      for (std::size_t i = 0; i < holdout_docs.size(); ++i) {
        const bool hit =
            secret.scheme == "warden"
                ? triggers.count_in_set(holdout_docs[i].tokens, k) > 0
                : triggers.contains_any(holdout_docs[i].tokens);
        if (hit) backdoor.push_back(suspect(holdout_docs[i]));
      }
      const std::string label =
          secret.scheme == "warden" ? "set" + std::to_string(k) : "espew";
      if (backdoor.size() < static_cast<std::size_t>(min_per_region)) {
        adjudicator::RegionVerdict v;
        v.region = label;
        v.n_backdoor = static_cast<int>(backdoor.size());
        v.n_benign = static_cast<int>(benign.size());
        v.skipped = true;
        verdicts.push_back(v);
        continue;
      }
      ++usable;
      const int target = secret.scheme == "warden"
                             ? secret.warden->target_indices[k]
                             : secret.espew->target_index;
      const Vector reference =
          suspect(pool_docs[static_cast<std::size_t>(target)]);
      verdicts.push_back(
          adjudicator::region_deltas(label, reference, backdoor, benign));
    }
    if (usable == 0) {
      fail(ErrorCode::AllRegionsEmpty, "no trigger set reached the minimum");
    }
    return adjudicator::aggregate(verdicts);
  }

  if (secret.scheme == "wet") {
    std::vector<Vector> suspect_embs;
    std::vector<Vector> references;
    suspect_embs.reserve(holdout_docs.size());
    references.reserve(holdout_docs.size());
    for (const synth::Document& doc : holdout_docs) {
      suspect_embs.push_back(suspect(doc));
      references.push_back(synth::provider_embed(provider, doc));
    }
    const rivals::WetDetection det =
        rivals::wet_detect(*secret.wet, suspect_embs, references);
    adjudicator::RegionVerdict v;
    v.region = "wet";
    v.n_backdoor = static_cast<int>(holdout_docs.size());
    v.n_benign = static_cast<int>(holdout_docs.size());
    v.delta_cos = det.delta_cos;
    v.delta_l2 = det.delta_l2;
    v.p_value = det.ks.p_value;
    verdicts.push_back(v);
    return adjudicator::aggregate(verdicts);
  }

  fail(ErrorCode::ConfigInvalid, "unknown scheme: " + secret.scheme);
}

RunRecord run_single(const ExperimentConfig& cfg, int seed_index) {
  RunRecord record;
  record.seed_index = seed_index;
  record.defense = defense_kind_name(cfg.defense.kind);
  record.attack = cfg.attack_label();
  const auto start = std::chrono::steady_clock::now();

  try {
    const std::uint64_t run_seed =
        derive_seed(cfg.master_seed, "run", static_cast<std::uint64_t>(seed_index));

    synth::CorpusConfig corpus_cfg = cfg.corpus;
    corpus_cfg.seed = derive_seed(run_seed, "corpus");
    const std::vector<synth::Document> docs = synth::gen_corpus(corpus_cfg);
    const std::size_t n_train = static_cast<std::size_t>(
        cfg.train_frac * static_cast<double>(docs.size()));
    if (n_train == 0 || n_train >= docs.size()) {
      fail(ErrorCode::ConfigInvalid, "train_frac leaves an empty split");
    }
    const std::vector<synth::Document> train(docs.begin(),
                                             docs.begin() + n_train);
    const std::vector<synth::Document> holdout(docs.begin() + n_train,
                                               docs.end());

    const synth::ProviderModel provider = synth::build_provider(
        corpus_cfg.provider_dim, corpus_cfg.latent_dim,
        corpus_cfg.provider_noise_scale, derive_seed(run_seed, "provider"));

    const io::SecretFile secret = build_defense_secret(
        cfg, derive_seed(run_seed, "defense"), train, provider);
    const redteam::EmbedQuery defended = make_defended_query(secret, provider);

    AttackContext ctx;
    ctx.corpus_cfg = &corpus_cfg;
    ctx.docs = &train;
    ctx.provided.reserve(train.size());
    std::size_t triggered = 0;
    for (const synth::Document& doc : train) {
      ctx.provided.push_back(defended(doc));
      switch (cfg.defense.kind) {
        case DefenseKind::RegionMarker:
          if (marker::inject(*secret.regionmarker,
                             synth::provider_embed(provider, doc))
                  .region) {
            ++triggered;
          }
          break;
        case DefenseKind::Warden:
          if (secret.warden->triggers.contains_any(doc.tokens)) ++triggered;
          break;
        case DefenseKind::Espew:
          if (secret.espew->triggers.contains_any(doc.tokens)) ++triggered;
          break;
        case DefenseKind::Wet:
          ++triggered;
          break;
        case DefenseKind::None:
          break;
      }
    }
    record.triggered_fraction =
        static_cast<double>(triggered) / static_cast<double>(train.size());
    ctx.defended_query = defended;

    bool needs_benchmark = false;
    for (const AttackSpec& a : cfg.attacks) {
      if (a.kind == AttackKind::Cse) needs_benchmark = true;
    }
    if (needs_benchmark) {
      const synth::ProviderModel benchmark = synth::perturb_provider(
          provider, cfg.benchmark_epsilon, derive_seed(run_seed, "benchmark"));
      ctx.benchmark = clean_embeddings(benchmark, train);
    }

    // Pre-training attacks transform the provided embeddings the
    // stealer will learn from.
    std::vector<Vector> targets = ctx.provided;
    std::vector<char> usable(train.size(), 1);
    for (const AttackSpec& attack : cfg.attacks) {
      if (attack.kind == AttackKind::Paraphrase) {
        const std::uint64_t seed = derive_seed(run_seed, "attack-paraphrase");
        for (std::size_t i = 0; i < train.size(); ++i) {
          targets[i] = redteam::paraphrase_attack(corpus_cfg, train[i],
                                                  defended, attack.k,
                                                  attack.threshold,
                                                  attack.sigma, seed)
                           .embedding;
        }
      } else if (attack.kind == AttackKind::Cse) {
        redteam::CseResult result =
            redteam::cse_attack(targets, ctx.benchmark, attack.cse,
                                derive_seed(run_seed, "attack-cse"));
        targets = std::move(result.cleansed);
        for (std::size_t i = 0; i < usable.size(); ++i) {
          if (result.zeroed[i]) usable[i] = 0;
        }
      }
    }

    std::vector<std::pair<synth::Document, Vector>> pairs;
    std::vector<Vector> train_embs;
    std::vector<int> train_labels;
    pairs.reserve(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) {
      if (!usable[i]) continue;
      pairs.emplace_back(train[i], targets[i]);
      train_embs.push_back(targets[i]);
      train_labels.push_back(train[i].label);
    }
    synth::StealerModel stealer =
        synth::train_stealer(pairs, cfg.stealer.ridge, cfg.stealer.feature_dim,
                             derive_seed(run_seed, "stealer"));

    for (const AttackSpec& attack : cfg.attacks) {
      if (attack.kind != AttackKind::Finetune) continue;
      synth::CorpusConfig clean_cfg = corpus_cfg;
      clean_cfg.seed = derive_seed(run_seed, "finetune-corpus");
      clean_cfg.n_docs = attack.finetune_docs;
      std::vector<synth::Document> clean_docs = synth::gen_corpus(clean_cfg);
      std::vector<std::pair<synth::Document, Vector>> clean_pairs;
      clean_pairs.reserve(clean_docs.size());
      for (synth::Document& doc : clean_docs) {
        doc.id += static_cast<std::int64_t>(1) << 40;  // fresh query ids
        clean_pairs.emplace_back(doc, synth::provider_embed(provider, doc));
      }
      stealer = synth::finetune_stealer(stealer, clean_pairs, attack.steps,
                                        attack.learning_rate);
    }

    // Output-side perturbations: the stealer serves transformed
    // embeddings, so every verification query goes through the chain.
    std::vector<redteam::DimPerturber> chain;
    int dim = corpus_cfg.provider_dim;
    for (const AttackSpec& attack : cfg.attacks) {
      if (!attack.is_output_perturbation()) continue;
      redteam::DimPerturbSpec spec;
      spec.seed = derive_seed(run_seed, "attack-perturb");
      switch (attack.kind) {
        case AttackKind::Shift:
          spec.kind = redteam::PerturbKind::Shift;
          spec.amount = attack.amount > 0 ? attack.amount : 100;
          spec.amount = ((spec.amount - 1) % dim) + 1;
          break;
        case AttackKind::Truncate:
          spec.kind = redteam::PerturbKind::Truncate;
          spec.amount = attack.amount > 0 ? attack.amount : dim / 2;
          break;
        case AttackKind::Permute:
          spec.kind = redteam::PerturbKind::Permute;
          break;
        case AttackKind::TanhScale:
          spec.kind = redteam::PerturbKind::TanhScale;
          break;
        case AttackKind::RandomProjection:
          spec.kind = redteam::PerturbKind::RandomProjection;
          break;
        default:
          break;
      }
      chain.emplace_back(spec, dim);
      if (spec.kind == redteam::PerturbKind::Truncate) dim = spec.amount;
    }
    const redteam::EmbedQuery suspect =
        [&stealer, &chain](const synth::Document& doc) {
          Vector e = synth::stealer_embed(stealer, doc);
          for (const redteam::DimPerturber& p : chain) e = p.apply(e);
          return e;
        };

    record.report = verify_suspect(secret, train, holdout, provider, suspect,
                                   cfg.min_per_region);

    record.utility_provided = adjudicator::utility_probe(
        train_embs, train_labels, 0.75, derive_seed(run_seed, "probe-provided"));
    std::vector<Vector> served;
    std::vector<int> holdout_labels;
    served.reserve(holdout.size());
    for (const synth::Document& doc : holdout) {
      served.push_back(suspect(doc));
      holdout_labels.push_back(doc.label);
    }
    record.utility_served = adjudicator::utility_probe(
        served, holdout_labels, 0.75, derive_seed(run_seed, "probe-served"));
    record.ok = true;
  } catch (const Error& e) {
    record.ok = false;
    record.error = error_code_name(e.code());
  } catch (const std::exception& e) {
    record.ok = false;
    record.error = e.what();
  }

  record.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return record;
}

std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg) {
  std::vector<RunRecord> records;
  records.reserve(static_cast<std::size_t>(cfg.n_seeds));
  for (int s = 0; s < cfg.n_seeds; ++s) {
    records.push_back(run_single(cfg, s));
  }
  return records;
}

std::vector<SweepPoint> run_sweep(const ExperimentConfig& base,
                                  const std::string& param,
                                  const std::vector<double>& values) {
  if (values.empty()) fail(ErrorCode::ConfigInvalid, "empty sweep values");
  std::vector<SweepPoint> points;
  for (double value : values) {
    ExperimentConfig cfg = base;
    if (param == "alpha") {
      cfg.defense.regionmarker.alpha = value;
    } else if (param == "d") {
      cfg.defense.regionmarker.d = static_cast<int>(value);
    } else if (param == "lambda") {
      cfg.defense.regionmarker.lambda = value;
    } else {
      fail(ErrorCode::ConfigInvalid, "sweep param must be alpha, d or lambda");
    }
    for (const RunRecord& record : run_experiment(cfg)) {
      if (!record.ok) continue;
      SweepPoint p;
      p.param = param;
      p.value = value;
      p.seed_index = record.seed_index;
      p.delta_cos = record.report.delta_cos;
      p.p_value = record.report.p_value;
      points.push_back(p);
    }
  }
  return points;
}

}  // namespace ewlab::bench
