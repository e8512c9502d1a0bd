// Command-line driver: one subcommand per pipeline stage. Artifacts land under
// the output directory next to a manifest per stage.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "synse/manifest.hpp"
#include "synse/pipeline.hpp"
#include "synse/plot.hpp"

namespace fs = std::filesystem;
using namespace synse;

namespace {

struct OverwriteRefused : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool force = false;
  std::string spec = "default";
  std::string gate;
  bool no_temp_scaling = false;
  bool emit_plot = false;
  std::string ablation;
};

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::Config:
    case ErrorKind::Usage:
    case ErrorKind::Spec:
      return 2;
    case ErrorKind::Divergence:
    case ErrorKind::Training:
      return 3;
    case ErrorKind::Io:
    case ErrorKind::Format:
      return 4;
    default:
      return 1;
  }
}

fs::path out_dir_of(const Options& o, const RunConfig* c) {
  if (!o.out.empty()) return o.out;
  if (const char* env = std::getenv("SYNSE_OUT"); env && *env) return env;
  return c ? c->output_dir : fs::path("synse_out");
}

// --config wins, then <out>/config.json.
RunConfig resolve_config(const Options& o) {
  fs::path path = o.config_path;
  if (path.empty()) {
    path = out_dir_of(o, nullptr) / "config.json";
    if (!fs::exists(path)) {
      throw Error(ErrorKind::Config, "no --config given and " + path.string() +
                                         " does not exist (run `synse synth` first)");
    }
  }
  RunConfig c = load_config(path);
  apply_environment(c);
  if (o.seed) c.seed = *o.seed;
  if (!o.out.empty()) c.output_dir = o.out;
  if (!o.gate.empty()) c.gate.mode = gate_choice_from_string(o.gate);
  if (o.no_temp_scaling) c.gate.temperature_scaling = false;
  c.validate(true);
  return c;
}

void guard(const fs::path& out, const std::string& stage, const RunConfig& c, bool force) {
  const fs::path m = manifest_path(out, stage);
  if (fs::exists(m) && !force) {
    const Manifest old = read_manifest(m);
    throw OverwriteRefused("stage '" + stage + "' already has artifacts in " + out.string() +
                           " (config hash " + old.config_hash + ", current " +
                           hex64(config_hash(c)) + "); pass --force to overwrite");
  }
}

Manifest manifest_for(const std::string& stage, const RunConfig& c) {
  Manifest m;
  m.stage = stage;
  m.config_hash = hex64(config_hash(c));
  m.seed = c.seed;
  return m;
}

void write_report(const fs::path& out, const std::string& rel, MetricsReport r, const RunConfig& c,
                  const std::string& stage) {
  r.notes["config_hash"] = hex64(config_hash(c));
  r.notes["seed"] = std::to_string(c.seed);
  r.notes["stage"] = stage;
  write_file(out / rel, r.to_text());
}

SynthSpec load_spec(const std::string& spec) {
  if (spec == "default") return SynthSpec{};
  // A spec file holds the `synth` section of a run config.
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(spec));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::Config, spec + ": malformed JSON: " + e.what());
  }
  nlohmann::json wrapper{{"schema_version", kSchemaVersion}, {"synth", j}};
  return *parse_config(wrapper.dump()).synth;
}

int cmd_synth(const Options& o) {
  RunConfig c = default_synthetic_config();
  c.synth = load_spec(o.spec);
  apply_environment(c);
  if (o.seed) c.seed = *o.seed;
  const fs::path out = out_dir_of(o, &c);
  c.output_dir = out;
  guard(out, "synth", c, o.force);

  SynthSpec spec = *c.synth;
  spec.seed = c.seed;
  const SynthDataset ds = generate(spec);
  fs::create_directories(out / "data");
  save_feature_set(ds.data, out / "data/features.syn");
  ds.table.save(out / "data/pos_embeddings.syn");
  ds.word_vectors.save(out / "data/word_vectors.syn");
  save_class_names(ds.class_names, out / "data/class_names.tsv");
  save_lexicon(ds.lexicon, out / "data/lexicon.tsv");
  MetricsReport oracle;
  oracle.zsl_accuracy = oracle_ceiling(ds, spec);
  oracle.notes["kind"] = "oracle_ceiling";
  write_report(out, "data/oracle.txt", oracle, c, "synth");

  // Downstream stages read the written files, so they are source-agnostic.
  RunConfig run = c;
  run.synth.reset();
  DatasetPaths d;
  d.features = "data/features.syn";
  d.pos_embeddings = "data/pos_embeddings.syn";
  d.unseen_ids = ds.split.unseen_ids;
  run.dataset = d;
  save_config(run, out / "config.json");

  write_manifest(out, manifest_for("synth", c),
                 {"config.json", "data/features.syn", "data/pos_embeddings.syn",
                  "data/word_vectors.syn", "data/class_names.tsv", "data/lexicon.tsv",
                  "data/oracle.txt"});
  std::printf("wrote synthetic dataset (%zu samples, %zu classes) to %s\n", ds.data.size(),
              ds.data.catalog.size(), out.string().c_str());
  std::printf("oracle ceiling: %s\n", format_real(*oracle.zsl_accuracy).c_str());
  return 0;
}

int cmd_train(const Options& o) {
  const RunConfig c = resolve_config(o);
  const fs::path out = out_dir_of(o, &c);
  guard(out, "train", c, o.force);
  const PreparedData data = prepare_data(c);
  TrainOptions opts;
  const std::int64_t total = c.train.schedule.total_epochs();
  opts.on_epoch = [total](const EpochRecord& r) {
    if ((r.epoch + 1) % 50 == 0 || r.epoch + 1 == total) {
      std::printf("epoch %lld/%lld  beta %.3f  alpha %.1f  loss %.4f (vae %.4f, cross %.4f)\n",
                  static_cast<long long>(r.epoch + 1), static_cast<long long>(total), r.beta,
                  r.alpha, r.total_loss, r.vae_loss, r.cmr_loss);
      std::fflush(stdout);
    }
    return true;
  };
  const AlignedModel model = train_stage(c, data, opts);
  model.save(out / "model/aligned.syn");
  // Snapshot of the resolved config; config.json itself belongs to `synth`.
  save_config(c, out / "model/train.config.json");
  std::vector<std::string> files{"model/aligned.syn", "model/train.config.json"};
  if (o.emit_plot) {
    write_loss_plot(model.trajectory, out / "plots/loss.svg");
    files.push_back("plots/loss.svg");
  }
  write_manifest(out, manifest_for("train", c), files);
  std::printf("model written to %s\n", (out / "model/aligned.syn").string().c_str());
  return 0;
}

AlignedModel load_model(const fs::path& out) {
  const fs::path p = out / "model/aligned.syn";
  if (!fs::exists(p)) throw Error(ErrorKind::Io, p.string() + " not found (run `synse train`)");
  return AlignedModel::load(p);
}

int cmd_eval_zsl(const Options& o) {
  const RunConfig c = resolve_config(o);
  const fs::path out = out_dir_of(o, &c);
  guard(out, "eval-zsl", c, o.force);
  const PreparedData data = prepare_data(c);
  const AlignedModel model = load_model(out);
  const ZslOutcome z = run_zsl(c, data, model);
  z.classifier.save(out / "model/zsl_classifier.syn");
  write_report(out, "reports/zsl.txt", z.report, c, "eval-zsl");
  write_manifest(out, manifest_for("eval-zsl", c),
                 {"model/zsl_classifier.syn", "reports/zsl.txt"});
  std::printf("ZSL accuracy: %s\n", format_real(*z.report.zsl_accuracy).c_str());
  return 0;
}

int cmd_eval_gzsl(const Options& o) {
  const RunConfig c = resolve_config(o);
  const fs::path out = out_dir_of(o, &c);
  std::string variant = to_string(c.gate.mode);
  if (!c.gate.temperature_scaling && c.gate.mode != GateChoice::Off) variant += "-notemp";
  const std::string stage = "eval-gzsl-" + variant;
  guard(out, stage, c, o.force);
  const PreparedData data = prepare_data(c);
  const AlignedModel model = load_model(out);
  // Same seeds as eval-zsl, so this reproduces its classifier and latents.
  const ZslOutcome z = run_zsl(c, data, model);
  const GzslOutcome g = run_gzsl(c, data, model, z);
  std::vector<std::string> files;
  if (g.gate) {
    g.gate->gate.save(out / ("model/gate-" + variant + ".syn"));
    files.push_back("model/gate-" + variant + ".syn");
  }
  if (g.joint) {
    g.joint->save(out / "model/joint_classifier.syn");
    files.push_back("model/joint_classifier.syn");
  }
  const std::string report = "reports/gzsl-" + variant + ".txt";
  write_report(out, report, combine_reports(z.report, g.report), c, stage);
  files.push_back(report);
  write_manifest(out, manifest_for(stage, c), files);
  std::printf("GZSL (%s): s %s  u %s  h %s\n", variant.c_str(),
              format_real(*g.report.seen_accuracy).c_str(),
              format_real(*g.report.unseen_accuracy).c_str(),
              format_real(*g.report.harmonic_mean).c_str());
  return 0;
}

int cmd_ablate(const Options& o) {
  const RunConfig c = resolve_config(o);
  const fs::path out = out_dir_of(o, &c);
  const std::string stage = "ablate-" + o.ablation;
  const auto& ids = ablation_ids();
  if (std::find(ids.begin(), ids.end(), o.ablation) == ids.end()) {
    throw Error(ErrorKind::Usage, "unknown ablation '" + o.ablation + "'");
  }
  guard(out, stage, c, o.force);
  const auto rows = run_ablation(c, o.ablation);
  std::string text = render_table(rows);
  for (const auto& [name, r] : rows) {
    text += "\n[" + name + "]\n" + r.to_text();
  }
  const std::string rel = "reports/ablation-" + o.ablation + ".txt";
  write_file(out / rel, text);
  write_manifest(out, manifest_for(stage, c), {rel});
  std::fputs(render_table(rows).c_str(), stdout);
  for (const auto& [name, r] : rows) {
    if (r.notes.count("skew")) std::printf("%s: skewed towards %s classes\n", name.c_str(),
                                           r.notes.at("skew").c_str());
  }
  return 0;
}

int cmd_inspect(const Options& o) {
  const fs::path out = out_dir_of(o, nullptr);
  const auto manifests = read_manifests(out);
  if (manifests.empty()) throw Error(ErrorKind::Io, "no manifests in " + out.string());
  std::size_t bad = 0;
  for (const auto& m : manifests) {
    const auto problems = verify_manifest(out, m);
    std::printf("%-24s config %s  seed %llu  files %zu  %s\n", m.stage.c_str(),
                m.config_hash.c_str(), static_cast<unsigned long long>(m.seed), m.files.size(),
                problems.empty() ? "ok" : "CORRUPT");
    for (const auto& p : problems) std::printf("  %s\n", p.c_str());
    bad += problems.size();
  }
  if (bad) throw Error(ErrorKind::Io, std::to_string(bad) + " artifact(s) failed verification");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Syntactically guided generative zero-shot action recognition"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--config", o.config_path, "Run config (default: <out>/config.json)");
  app.add_option("--seed", o.seed, "Global seed override");
  app.add_option("--out", o.out, "Output directory");
  app.add_flag("--force", o.force, "Overwrite existing stage artifacts");

  auto* synth = app.add_subcommand("synth", "Generate the synthetic benchmark");
  synth->add_option("--spec", o.spec, "'default' or a JSON file with SynthSpec fields");
  auto* train = app.add_subcommand("train", "Train the aligned VAEs");
  train->add_flag("--emit-plot", o.emit_plot, "Write an SVG loss curve");
  app.add_subcommand("eval-zsl", "Train the ZSL classifier and report unseen accuracy");
  auto* gzsl = app.add_subcommand("eval-gzsl", "Gated generalized zero-shot evaluation");
  gzsl->add_option("--gate", o.gate, "hard | soft | off")
      ->check(CLI::IsMember({"hard", "soft", "off"}));
  gzsl->add_flag("--no-temp-scaling", o.no_temp_scaling, "Force temperature 1");
  auto* ablate = app.add_subcommand("ablate", "Run an ablation next to the default");
  ablate->add_option("which", o.ablation, "softgating | no-temp | gate-off | embedding-dims | sample-count")
      ->required();
  app.add_subcommand("inspect", "Verify artifacts against their manifests");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "synth") return cmd_synth(o);
    if (cmd == "train") return cmd_train(o);
    if (cmd == "eval-zsl") return cmd_eval_zsl(o);
    if (cmd == "eval-gzsl") return cmd_eval_gzsl(o);
    if (cmd == "ablate") return cmd_ablate(o);
    return cmd_inspect(o);
  } catch (const OverwriteRefused& e) {
    std::fprintf(stderr, "refused: %s\n", e.what());
    return 5;
  } catch (const Error& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
