#include "screensum/corpus.h"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "screensum/rng.h"

namespace screensum {

using Json = nlohmann::ordered_json;

namespace {

constexpr std::array<std::string_view, kNumAspects> kAspectNames = {
    "crime_scene", "victim", "death_cause", "perpetrator", "evidence", "motive"};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

// Calls fn(line_text, line_number) for every non-blank line.
template <typename Fn>
void for_each_record(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") != std::string_view::npos) fn(line, line_no);
    pos = end + 1;
  }
}

std::vector<std::string> string_array(const Json& value, const char* field, std::size_t line) {
  if (!value.is_array()) throw FormatError(std::string("field '") + field + "' must be an array", line);
  std::vector<std::string> out;
  out.reserve(value.size());
  for (const auto& item : value) {
    if (!item.is_string())
      throw FormatError(std::string("field '") + field + "' must contain strings", line);
    out.push_back(item.get<std::string>());
  }
  return out;
}

const Json& require(const Json& record, const char* field, std::size_t line) {
  auto it = record.find(field);
  if (it == record.end()) throw FormatError(std::string("missing field '") + field + "'", line);
  return *it;
}

Scene parse_scene(const Json& record, std::size_t position, std::size_t line) {
  if (!record.is_object()) throw FormatError("scene record must be an object", line);
  Scene scene;
  scene.index = position;
  const Json& id = require(record, "scene_id", line);
  if (!id.is_string()) throw FormatError("scene_id must be a string", line);
  scene.scene_id = id.get<std::string>();
  if (auto it = record.find("index"); it != record.end()) {
    if (!it->is_number_unsigned() || it->get<std::size_t>() != position)
      throw InvariantError("scene '" + scene.scene_id + "' has index " + it->dump() +
                           " but appears at position " + std::to_string(position) +
                           " (indices must be contiguous from 0)");
  }
  scene.sentences = string_array(require(record, "sentences", line), "sentences", line);
  if (auto it = record.find("characters"); it != record.end()) {
    for (auto& name : string_array(*it, "characters", line)) scene.characters.insert(std::move(name));
  }
  if (auto it = record.find("summary_label"); it != record.end() && !it->is_null()) {
    if (!it->is_number_integer() || (it->get<int>() != 0 && it->get<int>() != 1))
      throw FormatError("summary_label must be 0 or 1", line);
    scene.summary_label = it->get<int>();
  }
  if (auto it = record.find("aspects"); it != record.end()) {
    for (const auto& name : string_array(*it, "aspects", line)) {
      auto kind = parse_aspect(name);
      if (!kind) throw FormatError("unknown aspect '" + name + "'", line);
      scene.aspects.insert(*kind);
    }
  }
  return scene;
}

Json scene_to_json(const Scene& scene) {
  Json record;
  record["scene_id"] = scene.scene_id;
  record["sentences"] = scene.sentences;
  record["characters"] = Json(std::vector<std::string>(scene.characters.begin(), scene.characters.end()));
  if (scene.summary_label) record["summary_label"] = *scene.summary_label;
  Json aspects = Json::array();
  for (AspectKind a : scene.aspects) aspects.push_back(std::string(aspect_name(a)));
  record["aspects"] = std::move(aspects);
  return record;
}

}  // namespace

std::string_view aspect_name(AspectKind kind) { return kAspectNames[static_cast<std::size_t>(kind)]; }

std::optional<AspectKind> parse_aspect(std::string_view name) {
  for (std::size_t i = 0; i < kNumAspects; ++i) {
    if (kAspectNames[i] == name) return kAllAspects[i];
  }
  return std::nullopt;
}

bool Screenplay::has_labels() const {
  return std::any_of(scenes.begin(), scenes.end(),
                     [](const Scene& s) { return s.summary_label.has_value(); });
}

std::set<std::size_t> Screenplay::gold_indices() const {
  std::set<std::size_t> gold;
  for (const auto& s : scenes) {
    if (s.summary_label.value_or(0) == 1) gold.insert(s.index);
  }
  return gold;
}

std::map<AspectKind, std::set<std::size_t>> Screenplay::aspect_scenes() const {
  std::map<AspectKind, std::set<std::size_t>> out;
  for (const auto& s : scenes) {
    for (AspectKind a : s.aspects) out[a].insert(s.index);
  }
  return out;
}

std::vector<std::string> FoldSplit::fold(std::size_t f) const {
  std::vector<std::string> ids;
  for (const auto& [id, assigned] : assignments) {
    if (assigned == f) ids.push_back(id);
  }
  return ids;
}

void validate(const Screenplay& screenplay) {
  const std::string& ep = screenplay.episode_id;
  if (ep.empty()) throw InvariantError("episode_id must be non-empty");
  if (screenplay.scenes.size() < 2)
    throw InvariantError("episode '" + ep + "' has fewer than 2 scenes");
  for (std::size_t i = 0; i < screenplay.scenes.size(); ++i) {
    const Scene& s = screenplay.scenes[i];
    if (s.index != i)
      throw InvariantError("episode '" + ep + "': scene indices are not contiguous at position " +
                           std::to_string(i));
    if (s.sentences.empty())
      throw InvariantError("episode '" + ep + "' scene " + std::to_string(i) + " has no sentences");
    if (!s.aspects.empty() && s.summary_label.value_or(0) != 1)
      throw InvariantError("episode '" + ep + "' scene " + std::to_string(i) +
                           " has aspects but is not labeled as a summary scene");
  }
}

void validate(const SilverTpLabels& labels, std::size_t num_scenes) {
  for (std::size_t j = 0; j < kNumTurningPoints; ++j) {
    if (labels.tp_scenes[j].empty())
      throw InvariantError("silver labels for '" + labels.episode_id + "': TP " +
                           std::to_string(j + 1) + " has no scenes");
    for (std::size_t idx : labels.tp_scenes[j]) {
      if (idx >= num_scenes)
        throw InvariantError("silver labels for '" + labels.episode_id + "': TP " +
                             std::to_string(j + 1) + " references scene " + std::to_string(idx) +
                             " but the episode has " + std::to_string(num_scenes) + " scenes");
    }
  }
}

Corpus parse_corpus(std::string_view text) {
  Corpus corpus;
  std::unordered_set<std::string> seen;
  for_each_record(text, [&](std::string_view line, std::size_t line_no) {
    Json record;
    try {
      record = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw FormatError(std::string("malformed corpus record: ") + e.what(), line_no);
    }
    if (!record.is_object()) throw FormatError("corpus record must be an object", line_no);
    Screenplay sp;
    const Json& id = require(record, "episode_id", line_no);
    if (!id.is_string()) throw FormatError("episode_id must be a string", line_no);
    sp.episode_id = id.get<std::string>();
    if (auto it = record.find("main_characters"); it != record.end()) {
      for (auto& name : string_array(*it, "main_characters", line_no))
        sp.main_characters.insert(std::move(name));
    }
    const Json& scenes = require(record, "scenes", line_no);
    if (!scenes.is_array()) throw FormatError("field 'scenes' must be an array", line_no);
    for (std::size_t i = 0; i < scenes.size(); ++i) sp.scenes.push_back(parse_scene(scenes[i], i, line_no));
    if (!seen.insert(sp.episode_id).second)
      throw InvariantError("duplicate episode_id '" + sp.episode_id + "' (line " +
                           std::to_string(line_no) + ")");
    validate(sp);
    corpus.push_back(std::move(sp));
  });
  if (corpus.empty()) throw FormatError("corpus file contains no episodes");
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path) { return parse_corpus(read_file(path)); }

std::string format_corpus(const Corpus& corpus) {
  std::string out;
  for (const auto& sp : corpus) {
    Json record;
    record["episode_id"] = sp.episode_id;
    record["main_characters"] =
        Json(std::vector<std::string>(sp.main_characters.begin(), sp.main_characters.end()));
    Json scenes = Json::array();
    for (const auto& s : sp.scenes) scenes.push_back(scene_to_json(s));
    record["scenes"] = std::move(scenes);
    out += record.dump();
    out += '\n';
  }
  return out;
}

void write_corpus(const std::filesystem::path& path, const Corpus& corpus) {
  write_file(path, format_corpus(corpus));
}

std::vector<SilverTpLabels> parse_silver_labels(std::string_view text) {
  std::vector<SilverTpLabels> out;
  for_each_record(text, [&](std::string_view line, std::size_t line_no) {
    Json record;
    try {
      record = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw FormatError(std::string("malformed silver-label record: ") + e.what(), line_no);
    }
    SilverTpLabels labels;
    const Json& id = require(record, "episode_id", line_no);
    if (!id.is_string()) throw FormatError("episode_id must be a string", line_no);
    labels.episode_id = id.get<std::string>();
    const Json& tps = require(record, "tp_scenes", line_no);
    if (!tps.is_array() || tps.size() != kNumTurningPoints)
      throw FormatError("tp_scenes must be an array of 5 index arrays", line_no);
    for (std::size_t j = 0; j < kNumTurningPoints; ++j) {
      if (!tps[j].is_array()) throw FormatError("tp_scenes entries must be arrays", line_no);
      for (const auto& idx : tps[j]) {
        if (!idx.is_number_unsigned()) throw FormatError("scene indices must be non-negative integers", line_no);
        labels.tp_scenes[j].insert(idx.get<std::size_t>());
      }
      if (labels.tp_scenes[j].empty())
        throw InvariantError("silver labels for '" + labels.episode_id + "': TP " +
                             std::to_string(j + 1) + " has no scenes (line " +
                             std::to_string(line_no) + ")");
    }
    out.push_back(std::move(labels));
  });
  return out;
}

std::vector<SilverTpLabels> load_silver_labels(const std::filesystem::path& path) {
  return parse_silver_labels(read_file(path));
}

std::string format_silver_labels(const std::vector<SilverTpLabels>& labels) {
  std::string out;
  for (const auto& l : labels) {
    Json record;
    record["episode_id"] = l.episode_id;
    Json tps = Json::array();
    for (const auto& set : l.tp_scenes) tps.push_back(std::vector<std::size_t>(set.begin(), set.end()));
    record["tp_scenes"] = std::move(tps);
    out += record.dump();
    out += '\n';
  }
  return out;
}

void write_silver_labels(const std::filesystem::path& path, const std::vector<SilverTpLabels>& labels) {
  write_file(path, format_silver_labels(labels));
}

FoldSplit split_folds(const Corpus& corpus, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("split_folds: k must be at least 2");
  if (k > corpus.size())
    throw std::invalid_argument("split_folds: k = " + std::to_string(k) + " exceeds corpus size " +
                                std::to_string(corpus.size()));
  std::vector<std::size_t> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  FoldSplit split;
  split.k = k;
  // Round-robin over the shuffled order keeps fold sizes within one of each other.
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const std::string& id = corpus[order[pos]].episode_id;
    if (!split.assignments.emplace(id, pos % k).second)
      throw InvariantError("split_folds: duplicate episode_id '" + id + "'");
  }
  return split;
}

}  // namespace screensum
