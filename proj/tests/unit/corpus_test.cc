#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "fixtures.h"
#include "screensum/corpus.h"
#include "screensum/embedding.h"

namespace screensum {
namespace {

const char* kTwoEpisodes = R"({"episode_id":"e1","main_characters":["A","B"],"scenes":[{"scene_id":"s0","index":0,"sentences":["Hello there."],"characters":["A"],"summary_label":1,"aspects":["victim","motive"]},{"scene_id":"s1","sentences":["Bye."],"characters":[],"summary_label":0}]}
{"episode_id":"e2","scenes":[{"scene_id":"x0","sentences":["a"]},{"scene_id":"x1","sentences":["b","c"]}]}
)";

TEST(Corpus, ParsesEpisodesAndScenes) {
  const Corpus corpus = parse_corpus(kTwoEpisodes);
  ASSERT_EQ(corpus.size(), 2u);
  const Screenplay& e1 = corpus[0];
  EXPECT_EQ(e1.episode_id, "e1");
  EXPECT_EQ(e1.main_characters, (std::set<std::string>{"A", "B"}));
  ASSERT_EQ(e1.size(), 2u);
  EXPECT_EQ(e1.scenes[1].index, 1u);
  EXPECT_EQ(e1.scenes[0].aspects, (std::set<AspectKind>{AspectKind::Victim, AspectKind::Motive}));
  EXPECT_TRUE(e1.has_labels());
  EXPECT_EQ(e1.gold_indices(), (std::set<std::size_t>{0}));
  EXPECT_EQ(e1.aspect_scenes().at(AspectKind::Motive), (std::set<std::size_t>{0}));
  EXPECT_FALSE(corpus[1].has_labels());
  EXPECT_EQ(corpus[1].scenes[1].sentences.size(), 2u);
}

TEST(Corpus, FormatRoundTrips) {
  const Corpus corpus = parse_corpus(kTwoEpisodes);
  const Corpus again = parse_corpus(format_corpus(corpus));
  EXPECT_EQ(format_corpus(again), format_corpus(corpus));
  ASSERT_EQ(again.size(), corpus.size());
  EXPECT_EQ(again[0].scenes[0].aspects, corpus[0].scenes[0].aspects);
  EXPECT_EQ(again[0].scenes[1].summary_label, corpus[0].scenes[1].summary_label);
}

TEST(Corpus, MalformedJsonReportsLine) {
  const std::string text = std::string(R"({"episode_id":"e","scenes":[{"scene_id":"a","sentences":["x"]},{"scene_id":"b","sentences":["y"]}]})") +
                           "\n{not json\n";
  try {
    parse_corpus(text);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(Corpus, RejectsBrokenInvariants) {
  // single scene
  EXPECT_THROW(parse_corpus(R"({"episode_id":"e","scenes":[{"scene_id":"a","sentences":["x"]}]})"), InvariantError);
  // aspects on a non-summary scene
  EXPECT_THROW(
      parse_corpus(
          R"({"episode_id":"e","scenes":[{"scene_id":"a","sentences":["x"],"summary_label":0,"aspects":["victim"]},{"scene_id":"b","sentences":["y"]}]})"),
      InvariantError);
  // non-contiguous index
  EXPECT_THROW(
      parse_corpus(
          R"({"episode_id":"e","scenes":[{"scene_id":"a","index":0,"sentences":["x"]},{"scene_id":"b","index":2,"sentences":["y"]}]})"),
      InvariantError);
  // unknown aspect and bad label
  EXPECT_THROW(
      parse_corpus(
          R"({"episode_id":"e","scenes":[{"scene_id":"a","sentences":["x"],"summary_label":1,"aspects":["weather"]},{"scene_id":"b","sentences":["y"]}]})"),
      FormatError);
  EXPECT_THROW(
      parse_corpus(
          R"({"episode_id":"e","scenes":[{"scene_id":"a","sentences":["x"],"summary_label":2},{"scene_id":"b","sentences":["y"]}]})"),
      FormatError);
  EXPECT_THROW(parse_corpus(""), FormatError);
}

TEST(Corpus, DuplicateEpisodeIdsRejected) {
  const std::string rec = R"({"episode_id":"e","scenes":[{"scene_id":"a","sentences":["x"]},{"scene_id":"b","sentences":["y"]}]})";
  EXPECT_THROW(parse_corpus(rec + "\n" + rec + "\n"), InvariantError);
}

TEST(Corpus, AspectNamesRoundTrip) {
  for (AspectKind kind : kAllAspects) EXPECT_EQ(parse_aspect(aspect_name(kind)), kind);
  EXPECT_FALSE(parse_aspect("nope").has_value());
}

TEST(SilverLabels, ParseValidateAndFormat) {
  const auto labels = parse_silver_labels(R"({"episode_id":"e","tp_scenes":[[0],[1,2],[3],[4],[5]]})");
  ASSERT_EQ(labels.size(), 1u);
  EXPECT_EQ(labels[0].tp_scenes[1], (std::set<std::size_t>{1, 2}));
  EXPECT_NO_THROW(validate(labels[0], 6));
  EXPECT_THROW(validate(labels[0], 5), InvariantError);
  EXPECT_EQ(parse_silver_labels(format_silver_labels(labels))[0].tp_scenes, labels[0].tp_scenes);
  EXPECT_THROW(parse_silver_labels(R"({"episode_id":"e","tp_scenes":[[0],[1],[2],[3]]})"), FormatError);
  EXPECT_THROW(parse_silver_labels(R"({"episode_id":"e","tp_scenes":[[0],[],[2],[3],[4]]})"), InvariantError);
}

TEST(Folds, BalancedDisjointAndDeterministic) {
  Corpus corpus;
  for (int i = 0; i < 23; ++i) corpus.push_back(testing::make_screenplay("ep" + std::to_string(i), 3));
  const FoldSplit a = split_folds(corpus, 5, 11);
  const FoldSplit b = split_folds(corpus, 5, 11);
  EXPECT_EQ(a.assignments, b.assignments);
  std::set<std::string> seen;
  for (std::size_t f = 0; f < 5; ++f) {
    const auto ids = a.fold(f);
    EXPECT_GE(ids.size(), 4u);
    EXPECT_LE(ids.size(), 5u);
    for (const auto& id : ids) EXPECT_TRUE(seen.insert(id).second);
  }
  EXPECT_EQ(seen.size(), 23u);
  EXPECT_NE(split_folds(corpus, 5, 12).assignments, a.assignments);
  EXPECT_THROW(split_folds(corpus, 1, 0), std::invalid_argument);
  EXPECT_THROW(split_folds(corpus, 24, 0), std::invalid_argument);
}

TEST(Synth, DeterministicAndAligned) {
  EmbeddingStore s1, s2;
  const SynthCorpus a = synth_corpus(3, 20, 8, 5, s1);
  const SynthCorpus b = synth_corpus(3, 20, 8, 5, s2);
  EXPECT_EQ(format_corpus(a.corpus), format_corpus(b.corpus));
  EXPECT_EQ(format_silver_labels(a.silver), format_silver_labels(b.silver));
  ASSERT_EQ(a.corpus.size(), 3u);
  EXPECT_NO_THROW(s1.check_alignment(a.corpus));
  EXPECT_EQ(s1.entries().begin()->second.data, s2.entries().begin()->second.data);
  for (std::size_t e = 0; e < a.corpus.size(); ++e) {
    EXPECT_NO_THROW(validate(a.corpus[e]));
    EXPECT_NO_THROW(validate(a.silver[e], a.corpus[e].size()));
    EXPECT_TRUE(a.corpus[e].has_labels());
  }
}

}  // namespace
}  // namespace screensum
