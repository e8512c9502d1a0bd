#include <numeric>

#include <gtest/gtest.h>

#include "synse/text_pipeline.hpp"
#include "test_util.hpp"

namespace synse {
namespace {

const PosLexicon& lexicon() {
  static const PosLexicon lex = load_lexicon(std::filesystem::path(SYNSE_DATA_DIR) / "pos_lexicon.tsv");
  return lex;
}

TEST(TextPipeline, TokenizeLowercasesAndSplitsHyphens) {
  EXPECT_EQ(tokenize("  Put ON jacket-and-Shoes "),
            (std::vector<std::string>{"put", "on", "jacket", "and", "shoes"}));
  EXPECT_TRUE(tokenize(" - ").empty());
}

TEST(TextPipeline, ShippedFillTableMatchesBuiltIn) {
  EXPECT_EQ(load_fill_table(std::filesystem::path(SYNSE_DATA_DIR) / "fill_table.tsv"),
            default_fill_table());
}

TEST(TextPipeline, ReadingBecomesReadingBook) {
  const auto d = fill_missing_pos(11, "reading", default_fill_table(), lexicon());
  EXPECT_EQ(d.filled_name, "reading book");
  EXPECT_EQ(d.verb_tokens, std::vector<std::string>{"reading"});
  EXPECT_EQ(d.noun_tokens, std::vector<std::string>{"book"});
  EXPECT_FALSE(d.noun_is_placeholder);
}

TEST(TextPipeline, DropBecomesDropObject) {
  const auto d = fill_missing_pos(5, "drop", default_fill_table(), lexicon());
  EXPECT_EQ(d.filled_name, "drop object");
  EXPECT_EQ(d.verb_tokens, std::vector<std::string>{"drop"});
  EXPECT_EQ(d.noun_tokens, std::vector<std::string>{"object"});
}

TEST(TextPipeline, HeadacheBecomesHaveHeadache) {
  const auto d = fill_missing_pos(44, "headache", default_fill_table(), lexicon());
  EXPECT_EQ(d.filled_name, "have headache");
  EXPECT_EQ(d.verb_tokens, std::vector<std::string>{"have"});
  EXPECT_EQ(d.noun_tokens, std::vector<std::string>{"headache"});
}

TEST(TextPipeline, JumpUpHasPlaceholderNoun) {
  const auto d = fill_missing_pos(27, "jump up", default_fill_table(), lexicon());
  EXPECT_EQ(d.filled_name, "jump up");
  EXPECT_EQ(d.verb_tokens, std::vector<std::string>{"jump"});
  EXPECT_TRUE(d.noun_tokens.empty());
  EXPECT_TRUE(d.noun_is_placeholder);
}

TEST(TextPipeline, NameWithoutVerbIsDescriptionError) {
  try {
    fill_missing_pos(1, "book", {}, lexicon());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Description);
  }
  EXPECT_THROW(fill_missing_pos(1, "   ", {}, lexicon()), Error);
}

TEST(TextPipeline, FillIsIdempotent) {
  for (const char* raw : {"reading", "drop", "headache", "jump up", "drink water"}) {
    const auto once = fill_missing_pos(3, raw, default_fill_table(), lexicon());
    const auto twice = fill_missing_pos(3, once.filled_name, default_fill_table(), lexicon());
    EXPECT_EQ(twice.filled_name, once.filled_name) << raw;
    EXPECT_EQ(twice.verb_tokens, once.verb_tokens) << raw;
    EXPECT_EQ(twice.noun_tokens, once.noun_tokens) << raw;
    EXPECT_EQ(twice.noun_is_placeholder, once.noun_is_placeholder) << raw;
  }
}

PosLexicon toy_lexicon() {
  return {{"walk", PosTag::Verb}, {"kick", PosTag::Verb}, {"ball", PosTag::Noun},
          {"door", PosTag::Noun}, {"jump", PosTag::Verb}, {"up", PosTag::Other},
          {"red", PosTag::Noun}};
}

WordVectors toy_vectors() {
  return WordVectors({"walk", "kick", "ball", "door", "jump", "up", "red"},
                     Matrix::from_rows({{1, 2}, {3, 4}, {1, 0}, {0, 1}, {5, 5}, {9, 9}, {3, 7}}));
}

TEST(TextPipeline, PlaceholderIsMeanOfRealNouns) {
  const auto lex = toy_lexicon();
  std::vector<ClassDescription> d{fill_missing_pos(0, "walk ball", {}, lex),
                                  fill_missing_pos(1, "kick door", {}, lex),
                                  fill_missing_pos(2, "jump up", {}, lex)};
  const auto t = build_embedding_table(d, toy_vectors(), 2);
  EXPECT_EQ(t.placeholder_ids, std::set<ClassId>{2});
  const auto row = t.noun_vec.row(t.row_of(2));
  EXPECT_EQ(row[0], 0.5);
  EXPECT_EQ(row[1], 0.5);
  const auto verb = t.verb_vec.row(t.row_of(2));
  EXPECT_EQ(verb[0], 5.0);
  EXPECT_EQ(verb[1], 5.0);
}

// Small-integer vectors make the mean exactly representable, so an exact
// rational recomputation is an equality check.
TEST(TextPipeline, MultiNounPhraseIsElementwiseMean) {
  const auto lex = toy_lexicon();
  std::vector<ClassDescription> d{fill_missing_pos(0, "kick red-ball", {}, lex)};
  const auto t = build_embedding_table(d, toy_vectors(), 2);
  const long num0 = 3 + 1, num1 = 7 + 0;  // sum of "red" and "ball"
  EXPECT_EQ(t.noun_vec(0, 0), static_cast<double>(num0) / 2.0);
  EXPECT_EQ(t.noun_vec(0, 1), static_cast<double>(num1) / 2.0);
  EXPECT_EQ(t.verb_vec(0, 0), 3.0);
}

TEST(TextPipeline, PermutingClassesPermutesRows) {
  const auto lex = toy_lexicon();
  std::vector<ClassDescription> d{fill_missing_pos(0, "walk ball", {}, lex),
                                  fill_missing_pos(1, "kick door", {}, lex),
                                  fill_missing_pos(2, "jump up", {}, lex),
                                  fill_missing_pos(3, "walk red door", {}, lex)};
  auto rev = d;
  std::reverse(rev.begin(), rev.end());
  const auto a = build_embedding_table(d, toy_vectors(), 2);
  const auto b = build_embedding_table(rev, toy_vectors(), 2);
  for (ClassId id = 0; id < 4; ++id) {
    for (std::size_t j = 0; j < 2; ++j) {
      EXPECT_EQ(a.verb_vec(a.row_of(id), j), b.verb_vec(b.row_of(id), j));
      EXPECT_EQ(a.noun_vec(a.row_of(id), j), b.noun_vec(b.row_of(id), j));
    }
  }
}

TEST(TextPipeline, UnknownTokenNamesTokenAndClass) {
  PosLexicon lex = toy_lexicon();
  lex["throw"] = PosTag::Verb;
  std::vector<ClassDescription> d{fill_missing_pos(7, "throw ball", {}, lex)};
  try {
    build_embedding_table(d, toy_vectors(), 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Vocabulary);
    EXPECT_NE(std::string(e.what()).find("throw"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("7"), std::string::npos);
  }
}

TEST(TextPipeline, AllPlaceholderTableIsError) {
  std::vector<ClassDescription> d{fill_missing_pos(0, "jump up", {}, toy_lexicon())};
  try {
    build_embedding_table(d, toy_vectors(), 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Table);
  }
}

TEST(TextPipeline, TableAndWordVectorsRoundTrip) {
  const auto dir = testing::scratch_dir();
  const auto lex = toy_lexicon();
  std::vector<ClassDescription> d{fill_missing_pos(4, "walk ball", {}, lex),
                                  fill_missing_pos(9, "jump up", {}, lex)};
  const auto t = build_embedding_table(d, toy_vectors(), 2);
  t.save(dir / "t.syn");
  const auto back = PosEmbeddingTable::load(dir / "t.syn");
  EXPECT_EQ(back.class_ids, t.class_ids);
  EXPECT_EQ(back.verb_vec, t.verb_vec);
  EXPECT_EQ(back.noun_vec, t.noun_vec);
  EXPECT_EQ(back.placeholder_ids, t.placeholder_ids);

  toy_vectors().save(dir / "w.syn");
  const auto w = WordVectors::load(dir / "w.syn");
  EXPECT_EQ(w.tokens(), toy_vectors().tokens());
  EXPECT_EQ(w.at("red")[1], 7.0);
}

TEST(TextPipeline, TsvFilesRoundTrip) {
  const auto dir = testing::scratch_dir();
  save_fill_table(default_fill_table(), dir / "fill.tsv");
  EXPECT_EQ(load_fill_table(dir / "fill.tsv"), default_fill_table());
  save_lexicon(toy_lexicon(), dir / "lex.tsv");
  EXPECT_EQ(load_lexicon(dir / "lex.tsv"), toy_lexicon());
  const std::vector<std::pair<ClassId, std::string>> names{{0, "walk ball"}, {12, "jump up"}};
  save_class_names(names, dir / "names.tsv");
  EXPECT_EQ(load_class_names(dir / "names.tsv"), names);
}

TEST(TextPipeline, ShippedLexiconCoversItsExamples) {
  for (const char* tok : {"reading", "drop", "have", "jump"}) {
    ASSERT_TRUE(lexicon().count(tok)) << tok;
    EXPECT_EQ(lexicon().at(tok), PosTag::Verb) << tok;
  }
  for (const char* tok : {"book", "object", "headache"}) {
    ASSERT_TRUE(lexicon().count(tok)) << tok;
    EXPECT_EQ(lexicon().at(tok), PosTag::Noun) << tok;
  }
}

}  // namespace
}  // namespace synse
