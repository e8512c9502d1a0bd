#include "synse/config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "synse/container.hpp"

namespace synse {

using json = nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw Error(ErrorKind::Config, path + ": " + what);
}

// Walks one JSON object, remembering which keys were read so leftovers can be
// reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return j_.contains(key); }

  const json* get(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  template <class T>
  void read(const std::string& key, T& out) {
    const json* v = get(key);
    if (!v) return;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v->is_boolean()) fail(at(key), "expected a boolean");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v->is_number_integer()) fail(at(key), "expected an integer");
        if (std::is_unsigned_v<T> && v->is_number_integer() && !v->is_number_unsigned() &&
            v->get<std::int64_t>() < 0) {
          fail(at(key), "must be non-negative");
        }
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v->is_number()) fail(at(key), "expected a number");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v->is_string()) fail(at(key), "expected a string");
      }
      out = v->get<T>();
    } catch (const json::exception& e) {
      fail(at(key), e.what());
    }
  }

  void read_path(const std::string& key, std::filesystem::path& out,
                 const std::filesystem::path& base) {
    std::string s;
    read(key, s);
    if (s.empty()) return;
    std::filesystem::path p(s);
    if (p.is_relative()) p = std::filesystem::absolute(base / p).lexically_normal();
    out = p;
  }

  template <class T>
  void read_list(const std::string& key, std::vector<T>& out) {
    const json* v = get(key);
    if (!v) return;
    if (!v->is_array()) fail(at(key), "expected an array");
    out.clear();
    for (std::size_t i = 0; i < v->size(); ++i) {
      const json& e = (*v)[i];
      const std::string where = at(key) + "[" + std::to_string(i) + "]";
      if constexpr (std::is_integral_v<T>) {
        if (!e.is_number_integer()) fail(where, "expected an integer");
      } else {
        if (!e.is_number()) fail(where, "expected a number");
      }
      out.push_back(e.get<T>());
    }
  }

  Section child(const std::string& key) {
    const json* v = get(key);
    return Section(*v, at(key));
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) fail(at(it.key()), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_classifier(Section s, ClassifierSettings& c) {
  s.read("epochs", c.epochs);
  s.read("learning_rate", c.learning_rate);
  s.read("batch_size", c.batch_size);
  s.finish();
}

json classifier_json(const ClassifierSettings& c) {
  return json{{"epochs", c.epochs}, {"learning_rate", c.learning_rate}, {"batch_size", c.batch_size}};
}

std::uint64_t derive(std::uint64_t seed, std::uint64_t tag) {
  // splitmix64 finalizer over (seed, tag)
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void check_positive(bool ok, const std::string& path, const std::string& what) {
  if (!ok) fail(path, what);
}

}  // namespace

std::string to_string(GateChoice g) {
  switch (g) {
    case GateChoice::Hard: return "hard";
    case GateChoice::Soft: return "soft";
    case GateChoice::Off: return "off";
  }
  return "?";
}

GateChoice gate_choice_from_string(const std::string& s) {
  if (s == "hard") return GateChoice::Hard;
  if (s == "soft") return GateChoice::Soft;
  if (s == "off") return GateChoice::Off;
  throw Error(ErrorKind::Config, "gate.mode: expected hard, soft or off, got '" + s + "'");
}

std::uint64_t RunConfig::split_seed() const { return derive(seed, 1); }
std::uint64_t RunConfig::train_seed() const { return derive(seed, 2); }
std::uint64_t RunConfig::latent_seed() const { return derive(seed, 3); }
std::uint64_t RunConfig::zsl_classifier_seed() const { return derive(seed, 4); }
std::uint64_t RunConfig::seen_classifier_seed() const { return derive(seed, 5); }
std::uint64_t RunConfig::gate_seed() const { return derive(seed, 6); }

TrainConfig RunConfig::effective_train_config() const {
  TrainConfig t = train;
  t.seed = train_seed();
  return t;
}

SoftmaxTrainConfig RunConfig::zsl_train_config() const {
  return {zsl_classifier.epochs, zsl_classifier.learning_rate, zsl_classifier.batch_size,
          zsl_classifier_seed()};
}

SoftmaxTrainConfig RunConfig::seen_train_config() const {
  return {seen_classifier.epochs, seen_classifier.learning_rate, seen_classifier.batch_size,
          seen_classifier_seed()};
}

GateTuning RunConfig::gate_tuning() const {
  GateTuning t;
  t.temperatures = gate.temperature_scaling ? gate.temperatures : std::vector<double>{1.0};
  t.thresholds = gate.thresholds;
  t.k = gate.k;
  t.regularization = gate.regularization;
  t.mode = gate.mode == GateChoice::Soft ? GateMode::Soft : GateMode::Hard;
  return t;
}

void RunConfig::validate(bool check_files) const {
  if (schema_version != kSchemaVersion) {
    fail("schema_version", "unsupported version " + std::to_string(schema_version));
  }
  if (dataset.has_value() == synth.has_value()) {
    fail("<root>", "exactly one of 'dataset' and 'synth' must be present");
  }
  if (synth) {
    try {
      synth->validate();
    } catch (const Error& e) {
      fail("synth", e.what());
    }
  }
  if (dataset) {
    const DatasetPaths& d = *dataset;
    if (d.features.empty()) fail("dataset.features", "required");
    if (d.unseen_ids.empty()) fail("dataset.unseen_ids", "required and non-empty");
    const bool prebuilt = !d.pos_embeddings.empty();
    if (!prebuilt && (d.word_vectors.empty() || d.class_names.empty() || d.lexicon.empty())) {
      fail("dataset", "needs either pos_embeddings or word_vectors + class_names + lexicon");
    }
    if (check_files) {
      auto exists = [](const std::filesystem::path& p, const std::string& field) {
        if (!p.empty() && !std::filesystem::exists(p)) fail(field, "file not found: " + p.string());
      };
      exists(d.features, "dataset.features");
      exists(d.pos_embeddings, "dataset.pos_embeddings");
      exists(d.word_vectors, "dataset.word_vectors");
      exists(d.class_names, "dataset.class_names");
      exists(d.lexicon, "dataset.lexicon");
      exists(d.fill_table, "dataset.fill_table");
    }
  }
  auto fraction = [](double f, const std::string& field) {
    if (!(f > 0.0 && f < 1.0)) fail(field, "must lie in (0, 1)");
  };
  fraction(gate_train_fraction, "split.gate_train_fraction");
  fraction(gate_val_fraction, "split.gate_val_fraction");
  fraction(test_seen_fraction, "split.test_seen_fraction");
  if (gate_train_fraction + gate_val_fraction + test_seen_fraction >= 1.0) {
    fail("split", "held-out fractions must sum to less than 1");
  }
  try {
    train.validate();
  } catch (const Error& e) {
    fail("train", e.what());
  }
  check_positive(zsl_per_class > 0, "zsl.per_class", "must be positive");
  check_positive(zsl_classifier.batch_size > 0, "zsl.batch_size", "must be positive");
  check_positive(zsl_classifier.learning_rate > 0, "zsl.learning_rate", "must be positive");
  check_positive(seen_classifier.batch_size > 0, "seen_classifier.batch_size", "must be positive");
  check_positive(seen_classifier.learning_rate > 0, "seen_classifier.learning_rate",
                 "must be positive");
  if (gate.temperatures.empty()) fail("gate.temperatures", "must be non-empty");
  for (std::size_t i = 0; i < gate.temperatures.size(); ++i) {
    if (!(gate.temperatures[i] > 0.0) || !std::isfinite(gate.temperatures[i])) {
      fail("gate.temperatures[" + std::to_string(i) + "]", "must be finite and positive");
    }
  }
  if (gate.thresholds.empty()) fail("gate.thresholds", "must be non-empty");
  for (std::size_t i = 0; i < gate.thresholds.size(); ++i) {
    if (!(gate.thresholds[i] > 0.0 && gate.thresholds[i] < 1.0)) {
      fail("gate.thresholds[" + std::to_string(i) + "]", "must lie in (0, 1)");
    }
  }
  check_positive(gate.regularization > 0, "gate.regularization", "must be positive");
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Config, std::string("<root>: malformed JSON: ") + e.what());
  }
  RunConfig c;
  Section r(root, "");
  if (!r.has("schema_version")) fail("schema_version", "required");
  r.read("schema_version", c.schema_version);
  r.read("seed", c.seed);
  std::string out;
  r.read("output_dir", out);
  if (!out.empty()) c.output_dir = out;

  if (r.has("dataset")) {
    Section d = r.child("dataset");
    DatasetPaths p;
    d.read_path("features", p.features, base_dir);
    d.read_path("pos_embeddings", p.pos_embeddings, base_dir);
    d.read_path("word_vectors", p.word_vectors, base_dir);
    d.read_path("class_names", p.class_names, base_dir);
    d.read_path("lexicon", p.lexicon, base_dir);
    d.read_path("fill_table", p.fill_table, base_dir);
    d.read_list("unseen_ids", p.unseen_ids);
    d.finish();
    c.dataset = p;
  }
  if (r.has("synth")) {
    Section s = r.child("synth");
    SynthSpec spec;
    s.read("num_verbs", spec.num_verbs);
    s.read("num_nouns", spec.num_nouns);
    s.read("visual_dim", spec.visual_dim);
    s.read("embed_dim", spec.embed_dim);
    s.read("samples_per_class", spec.samples_per_class);
    s.read("noise_std", spec.noise_std);
    s.read("mixing_std", spec.mixing_std);
    if (const json* pairs = s.get("unseen_pairs")) {
      if (!pairs->is_array()) fail(s.at("unseen_pairs"), "expected an array of [verb, noun]");
      spec.unseen_pairs.clear();
      for (std::size_t i = 0; i < pairs->size(); ++i) {
        const json& e = (*pairs)[i];
        if (!e.is_array() || e.size() != 2 || !e[0].is_number_unsigned() ||
            !e[1].is_number_unsigned()) {
          fail(s.at("unseen_pairs") + "[" + std::to_string(i) + "]",
               "expected [verb, noun] with non-negative integers");
        }
        spec.unseen_pairs.emplace_back(e[0].get<std::size_t>(), e[1].get<std::size_t>());
      }
    }
    s.finish();
    c.synth = spec;
  }
  if (r.has("split")) {
    Section s = r.child("split");
    s.read("gate_train_fraction", c.gate_train_fraction);
    s.read("gate_val_fraction", c.gate_val_fraction);
    s.read("test_seen_fraction", c.test_seen_fraction);
    s.finish();
  }
  if (r.has("train")) {
    Section t = r.child("train");
    t.read("learning_rate", c.train.learning_rate);
    t.read("batch_size", c.train.batch_size);
    t.read("skeleton_latent", c.train.latent_dims.skeleton);
    t.read("pos_latent", c.train.latent_dims.pos);
    if (t.has("schedule")) {
      Section s = t.child("schedule");
      std::string preset;
      s.read("preset", preset);
      if (preset == "ntu60") {
        c.train.schedule = AnnealSchedule::ntu60();
      } else if (preset == "ntu120") {
        c.train.schedule = AnnealSchedule::ntu120();
      } else if (!preset.empty()) {
        fail(s.at("preset"), "expected ntu60 or ntu120");
      }
      AnnealSchedule& a = c.train.schedule;
      s.read("cycle_length_epochs", a.cycle_length_epochs);
      s.read("beta_start_epoch", a.beta_start_epoch);
      s.read("beta_rate_per_epoch", a.beta_rate_per_epoch);
      s.read("alpha_start_epoch", a.alpha_start_epoch);
      s.read("alpha_value", a.alpha_value);
      s.read("num_cycles", a.num_cycles);
      s.finish();
    }
    t.finish();
  }
  if (r.has("zsl")) {
    Section z = r.child("zsl");
    z.read("per_class", c.zsl_per_class);
    z.read("epochs", c.zsl_classifier.epochs);
    z.read("learning_rate", c.zsl_classifier.learning_rate);
    z.read("batch_size", c.zsl_classifier.batch_size);
    z.finish();
  }
  if (r.has("seen_classifier")) read_classifier(r.child("seen_classifier"), c.seen_classifier);
  if (r.has("gate")) {
    Section g = r.child("gate");
    std::string mode;
    g.read("mode", mode);
    if (!mode.empty()) {
      try {
        c.gate.mode = gate_choice_from_string(mode);
      } catch (const Error&) {
        fail(g.at("mode"), "expected hard, soft or off");
      }
    }
    g.read("temperature_scaling", c.gate.temperature_scaling);
    g.read_list("temperatures", c.gate.temperatures);
    g.read_list("thresholds", c.gate.thresholds);
    g.read("k", c.gate.k);
    g.read("regularization", c.gate.regularization);
    g.read("synthetic_per_class", c.gate.synthetic_per_class);
    g.finish();
  }
  r.finish();
  c.validate(false);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

namespace {

json to_json(const RunConfig& c, bool include_output) {
  json j;
  j["schema_version"] = c.schema_version;
  j["seed"] = c.seed;
  if (include_output) j["output_dir"] = c.output_dir.string();
  if (c.dataset) {
    const DatasetPaths& d = *c.dataset;
    json dj;
    auto put = [&](const char* k, const std::filesystem::path& p) {
      if (!p.empty()) dj[k] = p.string();
    };
    put("features", d.features);
    put("pos_embeddings", d.pos_embeddings);
    put("word_vectors", d.word_vectors);
    put("class_names", d.class_names);
    put("lexicon", d.lexicon);
    put("fill_table", d.fill_table);
    dj["unseen_ids"] = d.unseen_ids;
    j["dataset"] = dj;
  }
  if (c.synth) {
    const SynthSpec& s = *c.synth;
    json pairs = json::array();
    for (const auto& [v, n] : s.unseen_pairs) pairs.push_back({v, n});
    j["synth"] = {{"num_verbs", s.num_verbs},         {"num_nouns", s.num_nouns},
                  {"visual_dim", s.visual_dim},       {"embed_dim", s.embed_dim},
                  {"samples_per_class", s.samples_per_class},
                  {"noise_std", s.noise_std},         {"mixing_std", s.mixing_std},
                  {"unseen_pairs", pairs}};
  }
  j["split"] = {{"gate_train_fraction", c.gate_train_fraction},
                {"gate_val_fraction", c.gate_val_fraction},
                {"test_seen_fraction", c.test_seen_fraction}};
  const AnnealSchedule& a = c.train.schedule;
  j["train"] = {{"learning_rate", c.train.learning_rate},
                {"batch_size", c.train.batch_size},
                {"skeleton_latent", c.train.latent_dims.skeleton},
                {"pos_latent", c.train.latent_dims.pos},
                {"schedule",
                 {{"cycle_length_epochs", a.cycle_length_epochs},
                  {"beta_start_epoch", a.beta_start_epoch},
                  {"beta_rate_per_epoch", a.beta_rate_per_epoch},
                  {"alpha_start_epoch", a.alpha_start_epoch},
                  {"alpha_value", a.alpha_value},
                  {"num_cycles", a.num_cycles}}}};
  json z = classifier_json(c.zsl_classifier);
  z["per_class"] = c.zsl_per_class;
  j["zsl"] = z;
  j["seen_classifier"] = classifier_json(c.seen_classifier);
  j["gate"] = {{"mode", to_string(c.gate.mode)},
               {"temperature_scaling", c.gate.temperature_scaling},
               {"temperatures", c.gate.temperatures},
               {"thresholds", c.gate.thresholds},
               {"k", c.gate.k},
               {"regularization", c.gate.regularization},
               {"synthetic_per_class", c.gate.synthetic_per_class}};
  return j;
}

}  // namespace

std::string serialize_config(const RunConfig& c) { return to_json(c, true).dump(2) + "\n"; }

void save_config(const RunConfig& c, const std::filesystem::path& path) {
  write_file(path, serialize_config(c));
}

void apply_environment(RunConfig& c) {
  if (const char* s = std::getenv("SYNSE_SEED"); s && *s) {
    char* end = nullptr;
    errno = 0;
    const unsigned long long v = std::strtoull(s, &end, 10);
    if (errno || *end || s[0] == '-') fail("SYNSE_SEED", "expected a non-negative integer");
    c.seed = v;
  }
  if (const char* o = std::getenv("SYNSE_OUT"); o && *o) c.output_dir = o;
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h) {
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t config_hash(const RunConfig& c) { return fnv1a(to_json(c, false).dump()); }

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

RunConfig default_synthetic_config(std::uint64_t seed) {
  RunConfig c;
  c.seed = seed;
  c.synth = SynthSpec{};
  c.train.schedule = AnnealSchedule{170, 100, 0.021, 140, 1.0, 2};
  return c;
}

}  // namespace synse
