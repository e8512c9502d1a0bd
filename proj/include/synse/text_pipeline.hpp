#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "synse/feature_store.hpp"
#include "synse/matrix.hpp"

namespace synse {

enum class PosTag { Verb, Noun, Other };

using FillTable = std::map<std::string, std::string>;
using PosLexicon = std::map<std::string, PosTag>;

struct ClassDescription {
  ClassId class_id = 0;
  std::string raw_name;
  std::string filled_name;
  std::vector<std::string> verb_tokens;
  std::vector<std::string> noun_tokens;
  bool noun_is_placeholder = false;

  friend bool operator==(const ClassDescription&, const ClassDescription&) = default;
};

// Lowercased tokens; whitespace and '-' both separate.
std::vector<std::string> tokenize(const std::string& phrase);

// Tokens absent from the lexicon are tagged Other and contribute nothing.
ClassDescription fill_missing_pos(ClassId class_id, const std::string& raw_name,
                                  const FillTable& fill_table, const PosLexicon& lexicon);

// Token -> vector lookup backed by a word-vector container.
class WordVectors {
 public:
  WordVectors() = default;
  WordVectors(std::vector<std::string> tokens, Matrix vectors);

  static WordVectors load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::size_t dim() const { return vectors_.cols(); }
  bool contains(const std::string& token) const { return index_.count(token) > 0; }
  std::span<const double> at(const std::string& token) const;  // throws Vocabulary
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  Matrix vectors_;
  std::map<std::string, std::size_t> index_;
};

// Per-class verb (e_v) and noun (e_n) embeddings, rows ordered as class_ids.
struct PosEmbeddingTable {
  std::size_t dim = 0;
  std::vector<ClassId> class_ids;
  Matrix verb_vec;
  Matrix noun_vec;
  std::set<ClassId> placeholder_ids;

  std::size_t row_of(ClassId id) const;  // throws Vocabulary when missing
  bool contains(ClassId id) const;
  // Rows of verb_vec / noun_vec for each label, in label order.
  Matrix verbs_for(std::span<const ClassId> labels) const;
  Matrix nouns_for(std::span<const ClassId> labels) const;

  void save(const std::filesystem::path& path) const;
  static PosEmbeddingTable load(const std::filesystem::path& path);
};

PosEmbeddingTable build_embedding_table(const std::vector<ClassDescription>& descriptions,
                                        const WordVectors& word_vectors, std::size_t dim);

// One entry per line: `key<TAB>value`; blank lines and '#' comments skipped.
std::vector<std::pair<std::string, std::string>> read_tsv_pairs(const std::filesystem::path& path);
FillTable load_fill_table(const std::filesystem::path& path);
PosLexicon load_lexicon(const std::filesystem::path& path);
void save_fill_table(const FillTable& table, const std::filesystem::path& path);
void save_lexicon(const PosLexicon& lexicon, const std::filesystem::path& path);

// `class_id<TAB>raw name` per line.
std::vector<std::pair<ClassId, std::string>> load_class_names(const std::filesystem::path& path);
void save_class_names(const std::vector<std::pair<ClassId, std::string>>& names,
                      const std::filesystem::path& path);

// The three documented completions: reading, drop, headache.
FillTable default_fill_table();

}  // namespace synse
