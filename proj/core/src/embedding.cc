#include "screensum/embedding.h"

#include "binary_io.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

namespace screensum {

namespace {

constexpr char kMagic[8] = {'S', 'S', 'E', 'M', 'B', 'E', 'D', '\0'};

std::string scene_name(const std::string& episode_id, std::size_t scene_index) {
  return "(episode '" + episode_id + "', scene " + std::to_string(scene_index) + ")";
}

}  // namespace

bool EmbeddingStore::contains(const std::string& episode_id, std::size_t scene_index) const {
  return vectors_.count({episode_id, scene_index}) != 0;
}

const Matrix& EmbeddingStore::sentences(const std::string& episode_id, std::size_t scene_index) const {
  auto it = vectors_.find({episode_id, scene_index});
  if (it == vectors_.end())
    throw InvariantError("no embeddings for " + scene_name(episode_id, scene_index));
  return it->second;
}

void EmbeddingStore::insert(const std::string& episode_id, std::size_t scene_index, Matrix rows) {
  if (rows.cols != dim_)
    throw InvariantError("dim mismatch for " + scene_name(episode_id, scene_index) + ": store dim " +
                         std::to_string(dim_) + ", row width " + std::to_string(rows.cols));
  vectors_[{episode_id, scene_index}] = std::move(rows);
}

void EmbeddingStore::check_alignment(const Corpus& corpus) const {
  for (const auto& sp : corpus) {
    for (const auto& scene : sp.scenes) {
      auto it = vectors_.find({sp.episode_id, scene.index});
      if (it == vectors_.end())
        throw InvariantError("embedding store is missing " + scene_name(sp.episode_id, scene.index));
      if (it->second.rows != scene.sentences.size())
        throw InvariantError("row-count mismatch for " + scene_name(sp.episode_id, scene.index) +
                             ": " + std::to_string(it->second.rows) + " rows, " +
                             std::to_string(scene.sentences.size()) + " sentences");
    }
  }
}

EmbeddingStore read_embeddings(const std::filesystem::path& path) {
  auto reader = detail::ByteReader::from_file(path);

  if (reader.raw(sizeof kMagic) != std::string(kMagic, sizeof kMagic))
    throw FormatError("not an embedding file (bad magic): " + path.string());
  const std::uint32_t version = reader.u32();
  if (version != kEmbeddingFormatVersion)
    throw FormatError("unsupported embedding format version " + std::to_string(version));
  const std::uint32_t dim = reader.u32();
  if (dim == 0) throw FormatError("embedding header declares dim 0");
  const std::uint64_t count = reader.u64();

  EmbeddingStore store(dim);
  for (std::uint64_t r = 0; r < count; ++r) {
    std::string episode_id = reader.raw(reader.u32());
    const std::uint32_t scene_index = reader.u32();
    const std::uint32_t num_rows = reader.u32();
    const std::uint32_t width = reader.u32();
    if (width != dim)
      throw InvariantError("dim mismatch for " + scene_name(episode_id, scene_index) +
                           ": header dim " + std::to_string(dim) + ", row length " +
                           std::to_string(width));
    if (store.contains(episode_id, scene_index))
      throw InvariantError("duplicate embedding record for " + scene_name(episode_id, scene_index));
    Matrix rows(num_rows, dim);
    for (auto& value : rows.data) value = static_cast<double>(reader.f32());
    store.insert(episode_id, scene_index, std::move(rows));
  }
  if (!reader.done()) throw FormatError("trailing bytes after " + std::to_string(count) + " records");
  return store;
}

EmbeddingStore load_embeddings(const std::filesystem::path& path, const Corpus& corpus) {
  EmbeddingStore store = read_embeddings(path);
  store.check_alignment(corpus);
  return store;
}

void write_embeddings(const std::filesystem::path& path, const EmbeddingStore& store, const Corpus* order) {
  std::vector<const std::pair<const SceneKey, Matrix>*> records;
  if (order) {
    for (const auto& sp : *order) {
      for (const auto& scene : sp.scenes) {
        auto it = store.entries().find({sp.episode_id, scene.index});
        if (it == store.entries().end())
          throw InvariantError("embedding store is missing " + scene_name(sp.episode_id, scene.index));
        records.push_back(&*it);
      }
    }
  } else {
    for (const auto& entry : store.entries()) records.push_back(&entry);
  }

  detail::ByteWriter w;
  w.raw(kMagic, sizeof kMagic);
  w.u32(kEmbeddingFormatVersion);
  w.u32(static_cast<std::uint32_t>(store.dim()));
  w.u64(records.size());
  for (const auto* rec : records) {
    const auto& [key, rows] = *rec;
    w.u32(static_cast<std::uint32_t>(key.first.size()));
    w.raw(key.first.data(), key.first.size());
    w.u32(static_cast<std::uint32_t>(key.second));
    w.u32(static_cast<std::uint32_t>(rows.rows));
    w.u32(static_cast<std::uint32_t>(rows.cols));
    for (double v : rows.data) w.f32(static_cast<float>(v));
  }
  w.save(path);
}

std::vector<double> scene_mean(const EmbeddingStore& store, const std::string& episode_id,
                               std::size_t scene_index) {
  const Matrix& rows = store.sentences(episode_id, scene_index);
  if (rows.rows == 0)
    throw InvariantError("no sentence rows for " + scene_name(episode_id, scene_index));
  std::vector<double> mean(rows.cols, 0.0);
  for (std::size_t r = 0; r < rows.rows; ++r) {
    auto row = rows.row(r);
    for (std::size_t c = 0; c < rows.cols; ++c) mean[c] += row[c];
  }
  for (double& v : mean) v /= static_cast<double>(rows.rows);
  return mean;
}

std::vector<std::vector<double>> scene_means(const EmbeddingStore& store, const Screenplay& screenplay) {
  std::vector<std::vector<double>> out;
  out.reserve(screenplay.size());
  for (const auto& scene : screenplay.scenes)
    out.push_back(scene_mean(store, screenplay.episode_id, scene.index));
  return out;
}

double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size())
    throw std::invalid_argument("cosine: length mismatch " + std::to_string(u.size()) + " vs " +
                                std::to_string(v.size()));
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) throw std::invalid_argument("cosine: zero-norm input");
  return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

const SparseVector& TfidfModel::vector_for(const std::string& episode_id, std::size_t scene_index) const {
  auto it = scene_vectors.find({episode_id, scene_index});
  if (it == scene_vectors.end())
    throw InvariantError("no tf*idf vector for " + scene_name(episode_id, scene_index));
  return it->second;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    const auto uc = static_cast<unsigned char>(ch);
    if (std::isalnum(uc) && uc < 0x80) {
      current.push_back(static_cast<char>(std::tolower(uc)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

TfidfModel build_tfidf(const Corpus& corpus) {
  if (corpus.empty()) throw std::invalid_argument("build_tfidf: empty corpus");
  TfidfModel model;
  std::map<SceneKey, std::map<std::string, double>> counts;
  std::map<std::string, std::size_t> df;
  std::size_t total_scenes = 0;

  for (const auto& sp : corpus) {
    for (const auto& scene : sp.scenes) {
      ++total_scenes;
      auto& tf = counts[{sp.episode_id, scene.index}];
      for (const auto& sentence : scene.sentences) {
        for (auto& token : tokenize(sentence)) tf[std::move(token)] += 1.0;
      }
      for (const auto& [token, _] : tf) ++df[token];
    }
  }

  // Columns follow lexicographic token order so the model does not depend on scene order.
  model.idf.reserve(df.size());
  for (const auto& [token, freq] : df) {
    model.vocabulary.emplace(token, model.idf.size());
    model.idf.push_back(std::log(static_cast<double>(total_scenes) / static_cast<double>(freq)));
  }

  for (auto& [key, tf] : counts) {
    SparseVector vec;
    for (const auto& [token, count] : tf) {
      const std::size_t col = model.vocabulary.at(token);
      const double w = count * model.idf[col];
      if (w != 0.0) vec.emplace_back(col, w);
    }
    model.scene_vectors.emplace(key, std::move(vec));
  }
  return model;
}

double sparse_cosine(const SparseVector& u, const SparseVector& v) {
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (const auto& [_, w] : u) nu += w * w;
  for (const auto& [_, w] : v) nv += w * w;
  if (nu == 0.0 || nv == 0.0) return 0.0;
  std::size_t i = 0, j = 0;
  while (i < u.size() && j < v.size()) {
    if (u[i].first == v[j].first) {
      dot += u[i].second * v[j].second;
      ++i;
      ++j;
    } else if (u[i].first < v[j].first) {
      ++i;
    } else {
      ++j;
    }
  }
  return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

}  // namespace screensum
