#include "synse/pipeline.hpp"

#include <algorithm>
#include <set>

namespace synse {

namespace {

std::vector<ClassId> sorted(std::vector<ClassId> v) {
  std::sort(v.begin(), v.end());
  return v;
}

PosEmbeddingTable table_from_files(const DatasetPaths& d) {
  if (!d.pos_embeddings.empty()) return PosEmbeddingTable::load(d.pos_embeddings);
  const WordVectors words = WordVectors::load(d.word_vectors);
  const PosLexicon lexicon = load_lexicon(d.lexicon);
  const FillTable fill = d.fill_table.empty() ? default_fill_table() : load_fill_table(d.fill_table);
  std::vector<ClassDescription> descriptions;
  for (const auto& [id, name] : load_class_names(d.class_names)) {
    descriptions.push_back(fill_missing_pos(id, name, fill, lexicon));
  }
  return build_embedding_table(descriptions, words, words.dim());
}

std::size_t gate_side_count(const RunConfig& config, std::size_t seen_examples,
                            std::size_t unseen_classes) {
  if (config.gate.synthetic_per_class) return config.gate.synthetic_per_class;
  return std::max<std::size_t>(1, (seen_examples + unseen_classes - 1) / unseen_classes);
}

}  // namespace

PreparedData prepare_data(const RunConfig& config) {
  config.validate(true);
  PreparedData p;
  if (config.synth) {
    SynthSpec spec = *config.synth;
    spec.seed = config.seed;
    SynthDataset ds = generate(spec);
    p.data = std::move(ds.data);
    p.table = std::move(ds.table);
    p.split = std::move(ds.split);
  } else {
    const DatasetPaths& d = *config.dataset;
    p.data = load_feature_set(d.features, 0);
    p.table = table_from_files(d);
    const std::set<ClassId> unseen(d.unseen_ids.begin(), d.unseen_ids.end());
    for (ClassId id : p.data.catalog) {
      if (!unseen.count(id)) p.split.seen_ids.push_back(id);
    }
    p.split.unseen_ids = sorted(d.unseen_ids);
  }
  p.split.gate_train_fraction = config.gate_train_fraction;
  p.split.gate_val_fraction = config.gate_val_fraction;
  p.split.test_seen_fraction = config.test_seen_fraction;
  p.split.seed = config.split_seed();
  for (ClassId id : p.data.catalog) {
    if (!p.table.contains(id)) {
      throw Error(ErrorKind::Vocabulary, "no PoS embedding for class " + std::to_string(id));
    }
  }
  p.parts = partition(p.data, p.split);
  const auto violations = validate_zero_shot(p.parts, p.split);
  if (!violations.empty()) {
    const Violation& v = violations.front();
    throw Error(ErrorKind::Split, v.subset + " sample " + std::to_string(v.sample_index) + ": " +
                                      v.rule);
  }
  return p;
}

AlignedModel train_stage(const RunConfig& config, const PreparedData& data,
                         const TrainOptions& options) {
  const TrainConfig tc = config.effective_train_config();
  AlignedModel model = AlignedModel::initialize(data.data.dim(), data.table.dim, tc);
  return train(std::move(model), data.parts.train, data.table, options);
}

ZslOutcome run_zsl(const RunConfig& config, const PreparedData& data, const AlignedModel& model) {
  ZslOutcome out;
  out.latents = generate_unseen_latents(model, data.table, data.split.unseen_ids,
                                        config.zsl_per_class, config.latent_seed());
  out.classifier = train_softmax(out.latents, config.zsl_train_config());
  out.predictions = zsl_predict(model, out.classifier, data.parts.test_unseen.features);
  out.report = assemble_report(&out.predictions, nullptr, data.parts, data.split);
  return out;
}

SoftmaxClassifier train_seen_classifier(const RunConfig& config, const PreparedData& data) {
  return train_softmax(data.parts.train.features, data.parts.train.labels,
                       config.seen_train_config());
}

GzslOutcome run_gzsl(const RunConfig& config, const PreparedData& data, const AlignedModel& model,
                     const ZslOutcome& zsl, const SoftmaxClassifier* seen_classifier) {
  GzslOutcome out;
  const SplitResult& parts = data.parts;
  if (config.gate.mode == GateChoice::Off) {
    out.joint = train_joint_classifier(model, parts.train, zsl.latents, config.zsl_train_config());
    const Matrix mu_seen = visual_latent_means(model, parts.test_seen.features);
    const Matrix mu_unseen = visual_latent_means(model, parts.test_unseen.features);
    out.predictions.on_test_seen = out.joint->predict(mu_seen);
    out.predictions.on_test_unseen = out.joint->predict(mu_unseen);
  } else {
    SoftmaxClassifier trained;
    if (!seen_classifier) {
      trained = train_seen_classifier(config, data);
      seen_classifier = &trained;
    }
    const std::size_t u = data.split.unseen_ids.size();
    const std::uint64_t gseed = config.gate_seed();
    const LabeledFeatureSet fake_train = synthesize_unseen_visuals(
        model, data.table, data.split.unseen_ids,
        gate_side_count(config, parts.gate_train.size(), u), gseed);
    const LabeledFeatureSet fake_val = synthesize_unseen_visuals(
        model, data.table, data.split.unseen_ids,
        gate_side_count(config, parts.gate_val.size(), u), gseed + 1);

    auto inputs = [&](const LabeledFeatureSet& seen, const LabeledFeatureSet& unseen) {
      auto a = make_gate_inputs(seen.features, seen.labels, true, *seen_classifier, model,
                                zsl.classifier);
      auto b = make_gate_inputs(unseen.features, unseen.labels, false, *seen_classifier, model,
                                zsl.classifier);
      a.insert(a.end(), std::make_move_iterator(b.begin()), std::make_move_iterator(b.end()));
      return a;
    };
    out.gate = tune_gate(inputs(parts.gate_train, fake_train), inputs(parts.gate_val, fake_val),
                         data.split.seen_ids, data.split.unseen_ids, config.gate_tuning());
    auto labels_of = [&](const Matrix& x) {
      std::vector<ClassId> ids;
      for (const auto& d : gzsl_predict(x, *seen_classifier, model, zsl.classifier, out.gate->gate)) {
        ids.push_back(d.label);
      }
      return ids;
    };
    out.predictions.on_test_seen = labels_of(parts.test_seen.features);
    out.predictions.on_test_unseen = labels_of(parts.test_unseen.features);
  }
  out.report = assemble_report(nullptr, &out.predictions, parts, data.split);
  out.report.notes["gate"] = to_string(config.gate.mode);
  if (out.gate) {
    out.report.notes["temperature"] = format_real(out.gate->gate.temperature);
    out.report.notes["threshold"] = format_real(out.gate->gate.threshold);
  }
  return out;
}

MetricsReport combine_reports(const MetricsReport& zsl, const MetricsReport& gzsl) {
  MetricsReport r = gzsl;
  r.zsl_accuracy = zsl.zsl_accuracy;
  if (r.per_class.empty()) r.per_class = zsl.per_class;
  for (const auto& [k, v] : zsl.notes) r.notes.emplace(k, v);
  return r;
}

PipelineResult run_pipeline(const RunConfig& config, const TrainOptions& options) {
  const PreparedData data = prepare_data(config);
  PipelineResult r;
  r.model = train_stage(config, data, options);
  r.zsl = run_zsl(config, data, r.model);
  if (config.gate.mode != GateChoice::Off) r.seen_classifier = train_seen_classifier(config, data);
  r.gzsl = run_gzsl(config, data, r.model, r.zsl,
                    config.gate.mode == GateChoice::Off ? nullptr : &r.seen_classifier);
  r.report = combine_reports(r.zsl.report, r.gzsl.report);
  return r;
}

std::vector<std::pair<std::string, MetricsReport>> run_ablation(const RunConfig& config,
                                                                 const std::string& which) {
  const auto& ids = ablation_ids();
  if (std::find(ids.begin(), ids.end(), which) == ids.end()) {
    throw Error(ErrorKind::Usage, "unknown ablation '" + which + "'");
  }
  const PreparedData data = prepare_data(config);
  std::vector<std::pair<std::string, MetricsReport>> rows;

  if (which == "embedding-dims") {
    for (std::size_t dim : {50, 100, 200}) {
      RunConfig c = config;
      c.train.latent_dims = {dim, dim / 2};
      const AlignedModel model = train_stage(c, data);
      rows.emplace_back("latent " + std::to_string(dim), run_zsl(c, data, model).report);
    }
    return rows;
  }

  const AlignedModel model = train_stage(config, data);
  if (which == "sample-count") {
    for (std::size_t n : {250, 500, 1000}) {
      RunConfig c = config;
      c.zsl_per_class = n;
      rows.emplace_back("features " + std::to_string(n), run_zsl(c, data, model).report);
    }
    return rows;
  }

  const ZslOutcome zsl = run_zsl(config, data, model);
  const SoftmaxClassifier seen = train_seen_classifier(config, data);
  auto gated = [&](const std::string& label, RunConfig c) {
    const GzslOutcome g = run_gzsl(c, data, model, zsl, &seen);
    MetricsReport r = combine_reports(zsl.report, g.report);
    r.notes["skew"] = *r.seen_accuracy >= *r.unseen_accuracy ? "seen" : "unseen";
    rows.emplace_back(label, r);
  };
  RunConfig base = config;
  base.gate.mode = GateChoice::Hard;
  base.gate.temperature_scaling = true;
  gated("hard gating", base);
  RunConfig variant = base;
  if (which == "softgating") {
    variant.gate.mode = GateChoice::Soft;
    gated("soft gating", variant);
  } else if (which == "no-temp") {
    variant.gate.temperature_scaling = false;
    gated("- temp. scaling", variant);
  } else {
    variant.gate.mode = GateChoice::Off;
    gated("gate off (joint classifier)", variant);
  }
  return rows;
}

}  // namespace synse
