#include "synse/feature_store.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "synse/container.hpp"
#include "synse/kernels.hpp"

namespace synse {

void LabeledFeatureSet::validate() const {
  if (labels.empty()) throw Error(ErrorKind::Data, "feature set has no rows");
  if (features.rows() != labels.size()) {
    throw Error(ErrorKind::Data, "feature rows (" + std::to_string(features.rows()) +
                                     ") and labels (" + std::to_string(labels.size()) +
                                     ") disagree");
  }
  if (indices.size() != labels.size()) throw Error(ErrorKind::Data, "index vector size mismatch");
  for (std::size_t r = 0; r < features.rows(); ++r) {
    for (double v : features.row(r)) {
      if (!std::isfinite(v)) {
        throw Error(ErrorKind::Data, "non-finite feature value at row " + std::to_string(r));
      }
    }
  }
  for (std::size_t r = 0; r < labels.size(); ++r) {
    if (!std::binary_search(catalog.begin(), catalog.end(), labels[r])) {
      throw Error(ErrorKind::Catalog, "label " + std::to_string(labels[r]) + " at row " +
                                          std::to_string(r) + " is not in the class catalog");
    }
  }
}

LabeledFeatureSet LabeledFeatureSet::subset(const std::vector<std::size_t>& rows) const {
  LabeledFeatureSet out;
  out.features = kernels::gather_rows(features, rows);
  out.labels.reserve(rows.size());
  out.indices.reserve(rows.size());
  for (auto r : rows) {
    out.labels.push_back(labels[r]);
    out.indices.push_back(indices[r]);
  }
  out.catalog = catalog;
  out.source_tag = source_tag;
  return out;
}

LabeledFeatureSet make_feature_set(Matrix features, std::vector<ClassId> labels,
                                   std::vector<ClassId> catalog, std::string source_tag) {
  LabeledFeatureSet set;
  set.features = std::move(features);
  set.labels = std::move(labels);
  set.indices.resize(set.labels.size());
  std::iota(set.indices.begin(), set.indices.end(), std::size_t{0});
  std::sort(catalog.begin(), catalog.end());
  catalog.erase(std::unique(catalog.begin(), catalog.end()), catalog.end());
  set.catalog = std::move(catalog);
  set.source_tag = std::move(source_tag);
  set.validate();
  return set;
}

LabeledFeatureSet load_feature_set(const std::filesystem::path& path, std::size_t expected_dim) {
  const Container c = Container::load(path);
  const auto origin = path.string();
  if (c.get("kind") != "features") {
    throw Error(ErrorKind::Format, origin + ": not a feature file (kind=" + c.get("kind") + ")");
  }
  if (c.get("dtype") != "f32") {
    throw Error(ErrorKind::Format, origin + ": feature element type must be f32");
  }
  const std::size_t rows = std::stoul(c.get("rows"));
  const std::size_t cols = std::stoul(c.get("cols"));
  const auto& feats = c.array("features");
  if (feats.values.cols() != cols) {
    throw Error(ErrorKind::Format, origin + ": header declares width " + std::to_string(cols) +
                                       " but rows have " + std::to_string(feats.values.cols()) +
                                       " values");
  }
  if (expected_dim != 0 && cols != expected_dim) {
    throw Error(ErrorKind::Format, origin + ": found feature width " + std::to_string(cols) +
                                       ", expected " + std::to_string(expected_dim));
  }
  if (feats.values.rows() != rows) {
    throw Error(ErrorKind::Format, origin + ": header declares " + std::to_string(rows) +
                                       " rows, payload has " +
                                       std::to_string(feats.values.rows()));
  }
  auto label_ints = c.ints("labels");
  if (label_ints.size() != rows) {
    throw Error(ErrorKind::Format, origin + ": label vector length " +
                                       std::to_string(label_ints.size()) + " != row count");
  }
  std::vector<ClassId> catalog;
  for (const auto& tok : split_ws(c.get("classes"))) catalog.push_back(std::stoll(tok));
  std::vector<ClassId> labels(label_ints.begin(), label_ints.end());
  return make_feature_set(feats.values, std::move(labels), std::move(catalog),
                          c.find("source_tag").value_or(""));
}

void save_feature_set(const LabeledFeatureSet& set, const std::filesystem::path& path) {
  Container c;
  c.set("kind", "features");
  c.set("rows", std::to_string(set.size()));
  c.set("cols", std::to_string(set.dim()));
  std::vector<std::string> ids;
  for (auto id : set.catalog) ids.push_back(std::to_string(id));
  c.set("classes", join(ids));
  c.set("source_tag", set.source_tag);
  c.set("byte_order", "little-endian");
  c.set("dtype", "f32");
  c.add_array("features", ElementType::F32, set.features);
  c.add_ints("labels", std::vector<std::int64_t>(set.labels.begin(), set.labels.end()));
  c.save(path);
}

void SplitSpec::validate() const {
  if (seen_ids.empty() || unseen_ids.empty()) {
    throw Error(ErrorKind::Split, "seen and unseen class sets must both be non-empty");
  }
  std::set<ClassId> seen(seen_ids.begin(), seen_ids.end());
  if (seen.size() != seen_ids.size()) throw Error(ErrorKind::Split, "duplicate seen class id");
  std::set<ClassId> unseen(unseen_ids.begin(), unseen_ids.end());
  if (unseen.size() != unseen_ids.size()) throw Error(ErrorKind::Split, "duplicate unseen class id");
  for (auto id : unseen_ids) {
    if (seen.count(id)) {
      throw Error(ErrorKind::Split, "class " + std::to_string(id) + " is both seen and unseen");
    }
  }
  auto in_unit = [](double f) { return f > 0.0 && f < 1.0; };
  if (!in_unit(gate_train_fraction) || !in_unit(gate_val_fraction) ||
      !in_unit(test_seen_fraction)) {
    throw Error(ErrorKind::Split, "subset fractions must lie in (0, 1)");
  }
  if (gate_train_fraction + gate_val_fraction + test_seen_fraction >= 1.0) {
    throw Error(ErrorKind::Split, "subset fractions must sum to less than 1");
  }
}

SplitResult partition(const LabeledFeatureSet& data, const SplitSpec& spec) {
  spec.validate();
  const std::set<ClassId> seen(spec.seen_ids.begin(), spec.seen_ids.end());
  const std::set<ClassId> unseen(spec.unseen_ids.begin(), spec.unseen_ids.end());

  std::map<ClassId, std::vector<std::size_t>> by_class;
  std::vector<std::size_t> unseen_rows;
  for (std::size_t r = 0; r < data.size(); ++r) {
    const ClassId y = data.labels[r];
    if (seen.count(y)) {
      by_class[y].push_back(r);
    } else if (unseen.count(y)) {
      unseen_rows.push_back(r);
    } else {
      throw Error(ErrorKind::Split, "label " + std::to_string(y) + " at row " + std::to_string(r) +
                                        " is neither seen nor unseen");
    }
  }

  std::vector<std::size_t> train, test_seen, gate_train, gate_val;
  std::mt19937_64 rng(spec.seed);
  auto take = [](double fraction, std::size_t n) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(fraction * n)));
  };
  for (ClassId y : spec.seen_ids) {
    auto it = by_class.find(y);
    if (it == by_class.end()) {
      throw Error(ErrorKind::Split, "seen class " + std::to_string(y) + " has no samples");
    }
    auto rows = it->second;
    std::shuffle(rows.begin(), rows.end(), rng);
    const std::size_t n = rows.size();
    const std::size_t n_gt = take(spec.gate_train_fraction, n);
    const std::size_t n_gv = take(spec.gate_val_fraction, n);
    const std::size_t n_ts = take(spec.test_seen_fraction, n);
    if (n_gt + n_gv + n_ts >= n) {
      throw Error(ErrorKind::Split, "seen class " + std::to_string(y) + " has only " +
                                        std::to_string(n) +
                                        " samples; too few to populate every subset");
    }
    auto cursor = rows.begin();
    auto move_n = [&](std::vector<std::size_t>& dst, std::size_t count) {
      dst.insert(dst.end(), cursor, cursor + static_cast<std::ptrdiff_t>(count));
      cursor += static_cast<std::ptrdiff_t>(count);
    };
    move_n(gate_train, n_gt);
    move_n(gate_val, n_gv);
    move_n(test_seen, n_ts);
    move_n(train, static_cast<std::size_t>(rows.end() - cursor));
  }
  for (ClassId y : spec.unseen_ids) {
    if (std::none_of(unseen_rows.begin(), unseen_rows.end(),
                     [&](std::size_t r) { return data.labels[r] == y; })) {
      throw Error(ErrorKind::Split, "unseen class " + std::to_string(y) + " has no samples");
    }
  }

  auto sorted = [](std::vector<std::size_t> v) {
    std::sort(v.begin(), v.end());
    return v;
  };
  return SplitResult{data.subset(sorted(train)), data.subset(unseen_rows),
                     data.subset(sorted(test_seen)), data.subset(sorted(gate_train)),
                     data.subset(sorted(gate_val))};
}

std::vector<Violation> validate_zero_shot(const SplitResult& result, const SplitSpec& spec) {
  const std::set<ClassId> seen(spec.seen_ids.begin(), spec.seen_ids.end());
  const std::set<ClassId> unseen(spec.unseen_ids.begin(), spec.unseen_ids.end());
  std::vector<Violation> out;

  const std::pair<const char*, const LabeledFeatureSet*> subsets[] = {
      {"train", &result.train},
      {"test_unseen", &result.test_unseen},
      {"test_seen", &result.test_seen},
      {"gate_train", &result.gate_train},
      {"gate_val", &result.gate_val},
  };

  for (const auto& [name, set] : subsets) {
    const bool wants_unseen = std::string(name) == "test_unseen";
    const auto& allowed = wants_unseen ? unseen : seen;
    for (std::size_t r = 0; r < set->labels.size(); ++r) {
      if (!allowed.count(set->labels[r])) {
        out.push_back({name, set->indices[r],
                       std::string("label ") + std::to_string(set->labels[r]) + " not in " +
                           (wants_unseen ? "unseen" : "seen") + " classes"});
      }
    }
  }

  std::map<std::size_t, std::string> owner;
  for (const auto& [name, set] : subsets) {
    for (auto idx : set->indices) {
      auto [it, inserted] = owner.emplace(idx, name);
      if (!inserted) {
        out.push_back({name, idx, "sample also present in " + it->second + " (disjointness)"});
      }
    }
  }
  return out;
}

}  // namespace synse
