#include "synse/text_pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

#include "synse/container.hpp"
#include "synse/kernels.hpp"

namespace synse {

namespace {

std::string normalize(const std::string& phrase) { return join(tokenize(phrase)); }

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

void mean_of_tokens(const std::vector<std::string>& tokens, const WordVectors& wv,
                    ClassId class_id, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (const auto& tok : tokens) {
    if (!wv.contains(tok)) {
      throw Error(ErrorKind::Vocabulary,
                  "token '" + tok + "' of class " + std::to_string(class_id) + " has no vector");
    }
    auto v = wv.at(tok);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += v[j];
  }
  const double n = static_cast<double>(tokens.size());
  for (double& x : out) x /= n;
}

}  // namespace

std::vector<std::string> tokenize(const std::string& phrase) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : phrase) {
    if (std::isspace(static_cast<unsigned char>(ch)) || ch == '-') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

ClassDescription fill_missing_pos(ClassId class_id, const std::string& raw_name,
                                  const FillTable& fill_table, const PosLexicon& lexicon) {
  const std::string key = normalize(raw_name);
  if (key.empty()) throw Error(ErrorKind::Description, "empty class name");

  ClassDescription d;
  d.class_id = class_id;
  d.raw_name = raw_name;
  auto it = fill_table.find(key);
  d.filled_name = it != fill_table.end() ? normalize(it->second) : key;

  for (const auto& tok : tokenize(d.filled_name)) {
    auto lex = lexicon.find(tok);
    if (lex == lexicon.end()) continue;
    if (lex->second == PosTag::Verb) d.verb_tokens.push_back(tok);
    if (lex->second == PosTag::Noun) d.noun_tokens.push_back(tok);
  }
  if (d.verb_tokens.empty()) {
    throw Error(ErrorKind::Description, "class " + std::to_string(class_id) + " ('" + raw_name +
                                            "') has no verb token under the lexicon");
  }
  d.noun_is_placeholder = d.noun_tokens.empty();
  return d;
}

WordVectors::WordVectors(std::vector<std::string> tokens, Matrix vectors)
    : tokens_(std::move(tokens)), vectors_(std::move(vectors)) {
  require_shape(tokens_.size() == vectors_.rows(), "word vectors: token count != row count");
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], i).second) {
      throw Error(ErrorKind::Vocabulary, "duplicate token '" + tokens_[i] + "'");
    }
  }
  for (double v : vectors_.values()) {
    if (!std::isfinite(v)) throw Error(ErrorKind::Data, "non-finite word vector entry");
  }
}

std::span<const double> WordVectors::at(const std::string& token) const {
  auto it = index_.find(token);
  if (it == index_.end()) throw Error(ErrorKind::Vocabulary, "unknown token '" + token + "'");
  return vectors_.row(it->second);
}

WordVectors WordVectors::load(const std::filesystem::path& path) {
  const Container c = Container::load(path);
  if (c.get("kind") != "word_vectors") {
    throw Error(ErrorKind::Format, path.string() + ": not a word-vector file");
  }
  return WordVectors(split_ws(c.get("tokens")), c.array("vectors").values);
}

void WordVectors::save(const std::filesystem::path& path) const {
  Container c;
  c.set("kind", "word_vectors");
  c.set("rows", std::to_string(vectors_.rows()));
  c.set("cols", std::to_string(vectors_.cols()));
  c.set("tokens", join(tokens_));
  c.set("byte_order", "little-endian");
  c.set("dtype", "f32");
  c.add_array("vectors", ElementType::F32, vectors_);
  c.save(path);
}

bool PosEmbeddingTable::contains(ClassId id) const {
  return std::find(class_ids.begin(), class_ids.end(), id) != class_ids.end();
}

std::size_t PosEmbeddingTable::row_of(ClassId id) const {
  auto it = std::find(class_ids.begin(), class_ids.end(), id);
  if (it == class_ids.end()) {
    throw Error(ErrorKind::Vocabulary, "no PoS embedding for class " + std::to_string(id));
  }
  return static_cast<std::size_t>(it - class_ids.begin());
}

Matrix PosEmbeddingTable::verbs_for(std::span<const ClassId> labels) const {
  std::vector<std::size_t> rows;
  rows.reserve(labels.size());
  for (auto y : labels) rows.push_back(row_of(y));
  return kernels::gather_rows(verb_vec, rows);
}

Matrix PosEmbeddingTable::nouns_for(std::span<const ClassId> labels) const {
  std::vector<std::size_t> rows;
  rows.reserve(labels.size());
  for (auto y : labels) rows.push_back(row_of(y));
  return kernels::gather_rows(noun_vec, rows);
}

void PosEmbeddingTable::save(const std::filesystem::path& path) const {
  Container c;
  c.set("kind", "pos_embeddings");
  c.set("dim", std::to_string(dim));
  c.set("byte_order", "little-endian");
  c.add_ints("class_ids", std::vector<std::int64_t>(class_ids.begin(), class_ids.end()));
  c.add_array("verb", ElementType::F64, verb_vec);
  c.add_array("noun", ElementType::F64, noun_vec);
  c.add_ints("placeholder_ids",
             std::vector<std::int64_t>(placeholder_ids.begin(), placeholder_ids.end()));
  c.save(path);
}

PosEmbeddingTable PosEmbeddingTable::load(const std::filesystem::path& path) {
  const Container c = Container::load(path);
  if (c.get("kind") != "pos_embeddings") {
    throw Error(ErrorKind::Format, path.string() + ": not a PoS embedding table");
  }
  PosEmbeddingTable t;
  t.dim = std::stoul(c.get("dim"));
  for (auto id : c.ints("class_ids")) t.class_ids.push_back(id);
  t.verb_vec = c.array("verb").values;
  t.noun_vec = c.array("noun").values;
  for (auto id : c.ints("placeholder_ids")) t.placeholder_ids.insert(id);
  require_shape(t.verb_vec.rows() == t.class_ids.size() && t.noun_vec.rows() == t.class_ids.size(),
                path.string() + ": embedding rows disagree with class ids");
  require_shape(t.verb_vec.cols() == t.dim && t.noun_vec.cols() == t.dim,
                path.string() + ": embedding width disagrees with dim");
  return t;
}

PosEmbeddingTable build_embedding_table(const std::vector<ClassDescription>& descriptions,
                                        const WordVectors& word_vectors, std::size_t dim) {
  if (word_vectors.dim() != dim) {
    throw Error(ErrorKind::Shape, "word vectors have width " + std::to_string(word_vectors.dim()) +
                                      ", expected " + std::to_string(dim));
  }
  PosEmbeddingTable t;
  t.dim = dim;
  t.verb_vec = Matrix(descriptions.size(), dim);
  t.noun_vec = Matrix(descriptions.size(), dim);
  for (std::size_t i = 0; i < descriptions.size(); ++i) {
    const auto& d = descriptions[i];
    if (t.contains(d.class_id)) {
      throw Error(ErrorKind::Table, "duplicate class id " + std::to_string(d.class_id));
    }
    t.class_ids.push_back(d.class_id);
    mean_of_tokens(d.verb_tokens, word_vectors, d.class_id, t.verb_vec.row(i));
    if (d.noun_is_placeholder) {
      t.placeholder_ids.insert(d.class_id);
    } else {
      mean_of_tokens(d.noun_tokens, word_vectors, d.class_id, t.noun_vec.row(i));
    }
  }
  if (t.placeholder_ids.size() == descriptions.size()) {
    throw Error(ErrorKind::Table, "every class lacks a noun; placeholder mean is undefined");
  }

  // Accumulate in class-id order so the placeholder does not depend on input order.
  std::vector<std::size_t> order(descriptions.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return t.class_ids[a] < t.class_ids[b]; });
  Vector mean(dim, 0.0);
  std::size_t count = 0;
  for (auto i : order) {
    if (t.placeholder_ids.count(t.class_ids[i])) continue;
    auto row = t.noun_vec.row(i);
    for (std::size_t j = 0; j < dim; ++j) mean[j] += row[j];
    ++count;
  }
  for (double& x : mean) x /= static_cast<double>(count);
  for (std::size_t i = 0; i < descriptions.size(); ++i) {
    if (t.placeholder_ids.count(t.class_ids[i])) {
      std::copy(mean.begin(), mean.end(), t.noun_vec.row(i).begin());
    }
  }
  return t;
}

std::vector<std::pair<std::string, std::string>> read_tsv_pairs(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto tab = t.find('\t');
    if (tab == std::string::npos) {
      throw Error(ErrorKind::Format, path.string() + ":" + std::to_string(lineno) +
                                         ": expected 'key<TAB>value'");
    }
    out.emplace_back(trim(t.substr(0, tab)), trim(t.substr(tab + 1)));
  }
  return out;
}

FillTable load_fill_table(const std::filesystem::path& path) {
  FillTable t;
  for (auto& [k, v] : read_tsv_pairs(path)) t[normalize(k)] = normalize(v);
  return t;
}

PosLexicon load_lexicon(const std::filesystem::path& path) {
  PosLexicon lex;
  for (auto& [k, v] : read_tsv_pairs(path)) {
    PosTag tag;
    if (v == "verb") {
      tag = PosTag::Verb;
    } else if (v == "noun") {
      tag = PosTag::Noun;
    } else if (v == "other") {
      tag = PosTag::Other;
    } else {
      throw Error(ErrorKind::Format, path.string() + ": unknown tag '" + v + "' for '" + k + "'");
    }
    lex[normalize(k)] = tag;
  }
  return lex;
}

void save_fill_table(const FillTable& table, const std::filesystem::path& path) {
  std::string out;
  for (const auto& [k, v] : table) out += k + "\t" + v + "\n";
  write_file(path, out);
}

void save_lexicon(const PosLexicon& lexicon, const std::filesystem::path& path) {
  std::string out;
  for (const auto& [k, tag] : lexicon) {
    out += k + "\t" + (tag == PosTag::Verb ? "verb" : tag == PosTag::Noun ? "noun" : "other") +
           "\n";
  }
  write_file(path, out);
}

std::vector<std::pair<ClassId, std::string>> load_class_names(const std::filesystem::path& path) {
  std::vector<std::pair<ClassId, std::string>> out;
  for (auto& [k, v] : read_tsv_pairs(path)) out.emplace_back(std::stoll(k), v);
  return out;
}

void save_class_names(const std::vector<std::pair<ClassId, std::string>>& names,
                      const std::filesystem::path& path) {
  std::string out;
  for (const auto& [id, name] : names) out += std::to_string(id) + "\t" + name + "\n";
  write_file(path, out);
}

FillTable default_fill_table() {
  return {{"reading", "reading book"}, {"drop", "drop object"}, {"headache", "have headache"}};
}

}  // namespace synse
