#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "screensum/corpus.h"

namespace screensum {

// Row-major dense matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
};

using SceneKey = std::pair<std::string, std::size_t>;

// Sentence embeddings per (episode_id, scene_index), one row per sentence.
class EmbeddingStore {
 public:
  EmbeddingStore() = default;
  explicit EmbeddingStore(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return vectors_.size(); }
  bool contains(const std::string& episode_id, std::size_t scene_index) const;

  // Throws InvariantError on a missing entry.
  const Matrix& sentences(const std::string& episode_id, std::size_t scene_index) const;

  // Throws InvariantError when the row width differs from dim().
  void insert(const std::string& episode_id, std::size_t scene_index, Matrix rows);

  const std::map<SceneKey, Matrix>& entries() const { return vectors_; }

  // Checks an entry per scene with matching row counts; names the first offender.
  void check_alignment(const Corpus& corpus) const;

 private:
  std::size_t dim_ = 0;
  std::map<SceneKey, Matrix> vectors_;
};

// Binary embedding file, all integers and floats little-endian:
//   magic "SSEMBED\0" | u32 version (=1) | u32 dim | u64 record count
//   per record: u32 id length | id bytes (UTF-8) | u32 scene index |
//               u32 sentence count | u32 row width | float32[count * width]
inline constexpr std::uint32_t kEmbeddingFormatVersion = 1;

EmbeddingStore read_embeddings(const std::filesystem::path& path);
// Reads the file and checks it against the corpus (missing scene, row-count
// mismatch and width mismatch are all reported with episode and scene).
EmbeddingStore load_embeddings(const std::filesystem::path& path, const Corpus& corpus);
// Records are written in (episode, scene) corpus order when a corpus is given,
// otherwise in key order.
void write_embeddings(const std::filesystem::path& path, const EmbeddingStore& store,
                      const Corpus* order = nullptr);

std::vector<double> scene_mean(const EmbeddingStore& store, const std::string& episode_id,
                               std::size_t scene_index);
std::vector<std::vector<double>> scene_means(const EmbeddingStore& store, const Screenplay& screenplay);

// Throws std::invalid_argument on a zero-norm input or a length mismatch.
double cosine(std::span<const double> u, std::span<const double> v);

using SparseVector = std::vector<std::pair<std::size_t, double>>;  // sorted by column

struct TfidfModel {
  std::map<std::string, std::size_t> vocabulary;
  std::vector<double> idf;
  std::map<SceneKey, SparseVector> scene_vectors;

  const SparseVector& vector_for(const std::string& episode_id, std::size_t scene_index) const;
};

// Lowercases and splits on anything that is not an ASCII letter or digit.
std::vector<std::string> tokenize(std::string_view text);

// tf = raw count in scene, idf = ln(total scenes / document frequency).
TfidfModel build_tfidf(const Corpus& corpus);

// Cosine of sparse vectors; 0 when either vector is all-zero.
double sparse_cosine(const SparseVector& u, const SparseVector& v);

}  // namespace screensum
