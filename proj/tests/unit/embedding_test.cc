#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <fstream>

#include "fixtures.h"
#include "screensum/embedding.h"

namespace screensum {
namespace {

// Independent little-endian writer for the binary embedding layout.
class RawFile {
 public:
  void u32(std::uint32_t v) { put(&v, 4); }
  void u64(std::uint64_t v) { put(&v, 8); }
  void f32(float v) { put(&v, 4); }
  void bytes(const std::string& s) { buf_ += s; }
  void save(const std::filesystem::path& p) const {
    std::ofstream out(p, std::ios::binary);
    out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
  }

 private:
  void put(const void* v, std::size_t n) {
    unsigned char tmp[8];
    std::memcpy(tmp, v, n);
    for (std::size_t i = 0; i < n; ++i) buf_.push_back(static_cast<char>(tmp[i]));
  }
  std::string buf_;
};

RawFile header(std::uint32_t dim, std::uint64_t count, std::uint32_t version = 1) {
  RawFile f;
  f.bytes(std::string("SSEMBED\0", 8));
  f.u32(version);
  f.u32(dim);
  f.u64(count);
  return f;
}

void record(RawFile& f, const std::string& id, std::uint32_t scene, const std::vector<std::vector<float>>& rows,
            std::uint32_t width) {
  f.u32(static_cast<std::uint32_t>(id.size()));
  f.bytes(id);
  f.u32(scene);
  f.u32(static_cast<std::uint32_t>(rows.size()));
  f.u32(width);
  for (const auto& r : rows)
    for (float v : r) f.f32(v);
}

Corpus two_scene_corpus() {
  Corpus c{testing::make_screenplay("ep", 2)};
  c[0].scenes[1].sentences = {"first.", "second."};
  return c;
}

TEST(EmbeddingFile, ReadsHandWrittenFile) {
  const auto dir = testing::temp_dir("emb-read");
  RawFile f = header(3, 2);
  record(f, "ep", 0, {{1, 2, 3}}, 3);
  record(f, "ep", 1, {{0.5f, 0, 0}, {0, 0.25f, 0}}, 3);
  f.save(dir / "e.bin");
  const EmbeddingStore store = load_embeddings(dir / "e.bin", two_scene_corpus());
  EXPECT_EQ(store.dim(), 3u);
  EXPECT_EQ(store.size(), 2u);
  EXPECT_EQ(store.sentences("ep", 1)(1, 1), 0.25);
  EXPECT_EQ(scene_mean(store, "ep", 1), (std::vector<double>{0.25, 0.125, 0.0}));
}

TEST(EmbeddingFile, WriteReadRoundTrip) {
  const auto dir = testing::temp_dir("emb-rt");
  Corpus corpus = two_scene_corpus();
  EmbeddingStore store = testing::random_store(corpus, 5, 3);
  write_embeddings(dir / "e.bin", store, &corpus);
  const EmbeddingStore back = read_embeddings(dir / "e.bin");
  for (const auto& [key, m] : store.entries()) {
    const Matrix& b = back.sentences(key.first, key.second);
    ASSERT_EQ(b.data.size(), m.data.size());
    for (std::size_t i = 0; i < m.data.size(); ++i) EXPECT_EQ(b.data[i], static_cast<double>(static_cast<float>(m.data[i])));
  }
}

TEST(EmbeddingFile, RejectsBadFiles) {
  const auto dir = testing::temp_dir("emb-bad");
  {
    RawFile f;
    f.bytes("NOTMAGIC");
    f.save(dir / "magic.bin");
    EXPECT_THROW(read_embeddings(dir / "magic.bin"), FormatError);
  }
  {
    header(3, 0, 2).save(dir / "version.bin");
    EXPECT_THROW(read_embeddings(dir / "version.bin"), FormatError);
  }
  {
    RawFile f = header(3, 1);
    record(f, "ep", 0, {{1, 2}}, 2);
    f.save(dir / "width.bin");
    EXPECT_THROW(read_embeddings(dir / "width.bin"), InvariantError);
  }
  {
    RawFile f = header(3, 2);
    record(f, "ep", 0, {{1, 2, 3}}, 3);
    f.save(dir / "short.bin");
    EXPECT_ANY_THROW(read_embeddings(dir / "short.bin"));
  }
  {
    RawFile f = header(3, 1);
    record(f, "ep", 0, {{1, 2, 3}}, 3);
    f.save(dir / "missing.bin");
    EXPECT_THROW(load_embeddings(dir / "missing.bin", two_scene_corpus()), InvariantError);
  }
  {
    RawFile f = header(3, 2);
    record(f, "ep", 0, {{1, 2, 3}}, 3);
    record(f, "ep", 1, {{1, 2, 3}}, 3);
    f.save(dir / "rows.bin");
    // scene 1 has two sentences in the corpus
    EXPECT_THROW(load_embeddings(dir / "rows.bin", two_scene_corpus()), InvariantError);
  }
}

TEST(Cosine, MatchesDefinition) {
  const std::vector<double> u{1, 2, 3}, v{-2, 0.5, 4};
  const double expected = (-2 + 1 + 12) / (std::sqrt(14.0) * std::sqrt(4 + 0.25 + 16));
  EXPECT_NEAR(cosine(u, v), expected, 1e-15);
  EXPECT_THROW(cosine(u, std::vector<double>{0, 0, 0}), std::invalid_argument);
  EXPECT_THROW(cosine(u, std::vector<double>{1, 2}), std::invalid_argument);
}

TEST(Tfidf, TokenizeLowercasesAndSplits) {
  EXPECT_EQ(tokenize("Hello, WORLD! it's 42x"), (std::vector<std::string>{"hello", "world", "it", "s", "42x"}));
  EXPECT_TRUE(tokenize(" ,;").empty());
}

TEST(Tfidf, WeightsFollowCountTimesLogIdf) {
  Corpus corpus{testing::make_screenplay("ep", 3)};
  corpus[0].scenes[0].sentences = {"gun gun knife"};
  corpus[0].scenes[1].sentences = {"gun rope"};
  corpus[0].scenes[2].sentences = {"rope"};
  const TfidfModel model = build_tfidf(corpus);
  const std::size_t gun = model.vocabulary.at("gun"), knife = model.vocabulary.at("knife");
  const auto& v0 = model.vector_for("ep", 0);
  ASSERT_EQ(v0.size(), 2u);
  for (const auto& [col, w] : v0) {
    if (col == gun) EXPECT_NEAR(w, 2 * std::log(3.0 / 2.0), 1e-15);
    if (col == knife) EXPECT_NEAR(w, std::log(3.0), 1e-15);
  }
  // scene 1 and 2 share "rope"; scene 0 and 2 share nothing
  EXPECT_EQ(sparse_cosine(v0, model.vector_for("ep", 2)), 0.0);
  EXPECT_GT(sparse_cosine(model.vector_for("ep", 1), model.vector_for("ep", 2)), 0.0);
  EXPECT_NEAR(sparse_cosine(v0, v0), 1.0, 1e-15);
  EXPECT_EQ(sparse_cosine(v0, {}), 0.0);
}

TEST(Store, InsertChecksWidth) {
  EmbeddingStore store(4);
  EXPECT_THROW(store.insert("ep", 0, Matrix(1, 3)), InvariantError);
  EXPECT_THROW(store.sentences("ep", 0), InvariantError);
}

}  // namespace
}  // namespace screensum
