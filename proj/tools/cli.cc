#include "cli.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "json.hpp"
#include "report.h"
#include "screensum/corpus.h"
#include "screensum/embedding.h"
#include "screensum/eval.h"
#include "screensum/model_io.h"
#include "screensum/rng.h"
#include "screensum/summarizers.h"
#include "screensum/train.h"
#include "screensum/tpnet.h"

namespace screensum::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string file_hash(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a(buf.str())));
  return hex;
}

std::vector<double> parse_values(const std::string& spec) {
  std::vector<double> out;
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size()) throw std::invalid_argument("--values: '" + s + "' is not a number");
    return v;
  };
  if (spec.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.size() != 3) throw std::invalid_argument("--values: range must look like lo:hi:step");
    const double lo = number(parts[0]), hi = number(parts[1]), step = number(parts[2]);
    if (!(step > 0.0) || hi < lo) throw std::invalid_argument("--values: need lo <= hi and step > 0");
    const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
    for (std::size_t i = 0; i < count; ++i) {
      // Round away accumulated binary noise so 0.1:0.9:0.1 yields 0.3, not 0.30000000000000004.
      out.push_back(std::round((lo + static_cast<double>(i) * step) * 1e12) / 1e12);
    }
  } else {
    std::stringstream ss(spec);
    for (std::string p; std::getline(ss, p, ',');) out.push_back(number(p));
  }
  if (out.empty()) throw std::invalid_argument("--values: no values given");
  return out;
}

namespace {

// Output directory with a provenance manifest: every artifact is hashed.
class Artifacts {
 public:
  explicit Artifacts(fs::path root) : root_(std::move(root)) { fs::create_directories(root_); }

  fs::path path(const std::string& rel) const { return root_ / rel; }

  fs::path prepare(const std::string& rel) const {
    fs::path p = path(rel);
    fs::create_directories(p.parent_path());
    return p;
  }

  void write(const std::string& rel, const std::string& content) {
    const fs::path p = prepare(rel);
    const fs::path tmp = p.string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary);
      out << content;
      if (!out) throw std::runtime_error("cannot write " + p.string());
    }
    fs::rename(tmp, p);
    record(rel);
  }

  void record(const std::string& rel) { outputs_[rel] = file_hash(path(rel)); }

  void input(const std::string& role, const fs::path& p) {
    inputs_[role] = {{"path", p.string()}, {"fnv1a", file_hash(p)}};
  }

  void finish(const std::string& command, const std::vector<std::string>& argv, const std::string& config,
              std::uint64_t seed) {
    ordered_json m;
    m["tool"] = "screensum";
    m["command"] = command;
    m["argv"] = argv;
    m["seed"] = seed;
    m["config"] = config;
    m["inputs"] = inputs_;
    m["outputs"] = outputs_;
    std::ofstream out(root_ / "manifest.json");
    out << m.dump(2) << "\n";
  }

 private:
  fs::path root_;
  ordered_json inputs_ = ordered_json::object();
  std::map<std::string, std::string> outputs_;
};

std::string jsonl(const std::vector<ordered_json>& records) {
  std::string out;
  for (const auto& r : records) out += r.dump() + "\n";
  return out;
}

struct NetOpts {
  double tau = 0.01;
  double window = 0.2;
  double dropout = 0.2;
  std::size_t hidden = 64;

  TpNetConfig config(std::size_t embed_dim) const {
    TpNetConfig c;
    c.embed_dim = embed_dim;
    c.hidden = hidden;
    c.tau = tau;
    c.window_fraction = window;
    c.dropout = dropout;
    return c;
  }
};

void add_net_options(CLI::App* sub, NetOpts& o) {
  sub->add_option("--tau", o.tau, "TP attention softmax temperature")->check(CLI::PositiveNumber);
  sub->add_option("--window", o.window, "CIL context window as a fraction of the scene count")
      ->check(CLI::Range(0.0, 1.0));
  sub->add_option("--dropout", o.dropout, "dropout on scene and contextual vectors")->check(CLI::Range(0.0, 0.95));
  sub->add_option("--hidden", o.hidden, "LSTM units per direction")->check(CLI::PositiveNumber);
}

struct UnsupOpts {
  std::string algo;
  double lambda1 = kDefaultLambda1;
  double ratio = kDefaultRatio;
  double threshold = kDefaultPruneThreshold;
  double tp_threshold = kDefaultTpThreshold;
  bool power_iteration = false;
  bool charscore_union = false;
  std::vector<double> centers{kDefaultTpCenters.begin(), kDefaultTpCenters.end()};
  double sigma = kDefaultSigmaFraction;
  std::string tp_checkpoint;
};

const std::vector<std::string> kAlgoChoices = {"textrank-tfidf", "textrank-neural", "summer-unsup", "summer-prior",
                                               "scenesum",       "lead",            "last",         "mixed"};

void add_centers_options(CLI::App* sub, std::vector<double>& centers, double& sigma) {
  sub->add_option("--centers", centers, "expected TP positions as fractions of the screenplay (5 values)")
      ->expected(5);
  sub->add_option("--sigma", sigma, "expected-position spread as a fraction of the scene count")
      ->check(CLI::PositiveNumber);
}

void add_unsup_options(CLI::App* sub, UnsupOpts& o, bool with_algo, bool algo_required) {
  if (with_algo) {
    auto* opt = sub->add_option("--algo", o.algo, "unsupervised summarizer")->check(CLI::IsMember(kAlgoChoices));
    if (algo_required) opt->required();
  }
  sub->add_option("--lambda1", o.lambda1, "weight of preceding scenes in directed centrality")
      ->check(CLI::Range(0.0, 1.0));
  sub->add_option("--ratio", o.ratio, "compression ratio (fraction of scenes selected)")
      ->check(CLI::Range(1e-9, 1.0));
  sub->add_option("--threshold", o.threshold, "similarity graph pruning threshold h")->check(CLI::Range(0.0, 0.999999));
  sub->add_option("--tp-threshold", o.tp_threshold, "attention above which a scene counts as a TP scene")
      ->check(CLI::Range(1e-9, 0.999999));
  sub->add_flag("--power-iteration", o.power_iteration, "textrank-tfidf: eigenvector centrality instead of degree");
  sub->add_flag("--charscore-union", o.charscore_union, "scenesum: literal union reading of the character score");
  add_centers_options(sub, o.centers, o.sigma);
  sub->add_option("--tp-checkpoint", o.tp_checkpoint, "pretrained TP network (summer-unsup)")
      ->check(CLI::ExistingFile);
}

std::array<double, kNumTurningPoints> centers_array(const std::vector<double>& v) {
  std::array<double, kNumTurningPoints> out{};
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

UnsupervisedConfig unsup_config(const UnsupOpts& o, std::uint64_t seed) {
  UnsupervisedConfig c;
  c.algo = *parse_algo(o.algo);
  c.lambda1 = o.lambda1;
  c.ratio = o.ratio;
  c.threshold = o.threshold;
  c.seed = seed;
  c.power_iteration = o.power_iteration;
  c.charscore_union = o.charscore_union;
  c.centers = centers_array(o.centers);
  c.sigma_fraction = o.sigma;
  return c;
}

struct TrainOpts {
  std::string model = "summer";
  std::string pretrained;
  bool no_reg = false;
  std::string fixed_tps = "none";
  bool freeze_encoder = false;
  std::size_t epochs = 300;
  std::size_t patience = 20;
  double lr = 1e-3;
  double a = 0.15;
  double b = 0.1;
  double epsilon = 1e-4;
  double ratio = kDefaultRatio;
  double target_f1 = 0.0;
  std::size_t dev_episodes = 4;
  bool charscore_union = false;
  std::vector<double> centers{kDefaultTpCenters.begin(), kDefaultTpCenters.end()};
  double sigma = kDefaultSigmaFraction;
  double tp_threshold = kDefaultTpThreshold;
  NetOpts net;
};

void add_train_options(CLI::App* sub, TrainOpts& o, bool with_model) {
  if (with_model)
    sub->add_option("--model", o.model, "supervised head")->check(CLI::IsMember({"summarunner", "summer", "scenesum"}));
  sub->add_option("--pretrained", o.pretrained, "TP network checkpoint used to initialize the encoder (+P)")
      ->check(CLI::ExistingFile);
  sub->add_flag("--no-reg", o.no_reg, "drop the orthogonality and focal regularizers (-R)");
  sub->add_option("--fixed-tps", o.fixed_tps, "freeze TP attention to the pretrained argmax or the position prior")
      ->check(CLI::IsMember({"none", "onehot", "prior"}));
  sub->add_flag("--freeze-encoder", o.freeze_encoder, "keep encoder weights fixed during fine-tuning");
  sub->add_option("--epochs", o.epochs, "maximum training epochs")->check(CLI::PositiveNumber);
  sub->add_option("--patience", o.patience, "early-stopping patience in epochs")->check(CLI::PositiveNumber);
  sub->add_option("--lr", o.lr, "Adam learning rate")->check(CLI::PositiveNumber);
  sub->add_option("--a", o.a, "orthogonality regularizer weight")->check(CLI::NonNegativeNumber);
  sub->add_option("--b", o.b, "focal regularizer weight")->check(CLI::NonNegativeNumber);
  sub->add_option("--epsilon", o.epsilon, "KL floor inside the orthogonality term")->check(CLI::PositiveNumber);
  sub->add_option("--ratio", o.ratio, "compression ratio used for selection and F1")->check(CLI::Range(1e-9, 1.0));
  sub->add_option("--target-f1", o.target_f1, "stop once the monitored F1 reaches this value (0 disables)")
      ->check(CLI::Range(0.0, 100.0));
  sub->add_option("--dev-episodes", o.dev_episodes, "episodes carved from the training pool for early stopping");
  sub->add_flag("--charscore-union", o.charscore_union, "scenesum: literal union reading of the character score");
  sub->add_option("--tp-threshold", o.tp_threshold, "attention above which a scene counts as a TP scene")
      ->check(CLI::Range(1e-9, 0.999999));
  add_centers_options(sub, o.centers, o.sigma);
  add_net_options(sub, o.net);
}

struct TrainSetup {
  ModelConfig model;
  TrainConfig train;
  std::optional<nc::ParameterSet> pretrained;
};

TrainSetup train_setup(const TrainOpts& o, std::size_t embed_dim, std::uint64_t seed, Artifacts& art) {
  TrainSetup s;
  s.model.kind = *parse_model(o.model);
  s.model.net = o.net.config(embed_dim);
  s.model.fixed_tps = *parse_fixed_tps(o.fixed_tps);
  s.model.charscore_union = o.charscore_union;
  s.model.centers = centers_array(o.centers);
  s.model.sigma_fraction = o.sigma;
  if (!o.pretrained.empty()) {
    TpNetCheckpoint ckpt = load_tpnet(o.pretrained);
    if (ckpt.config.embed_dim != embed_dim)
      throw std::invalid_argument("--pretrained: checkpoint expects " + std::to_string(ckpt.config.embed_dim) +
                                  "-dim embeddings, the embedding file has " + std::to_string(embed_dim));
    s.model.net.hidden = ckpt.config.hidden;
    s.pretrained = std::move(ckpt.params);
    art.input("pretrained", o.pretrained);
  }
  s.train.max_epochs = o.epochs;
  s.train.patience = o.patience;
  if (o.target_f1 > 0.0) s.train.target_f1 = o.target_f1;
  s.train.ratio = o.ratio;
  s.train.adam.learning_rate = o.lr;
  s.train.loss.a = o.a;
  s.train.loss.b = o.b;
  s.train.loss.epsilon = o.epsilon;
  s.train.loss.regularizers = !o.no_reg;
  s.train.freeze_encoder = o.freeze_encoder;
  s.train.seed = seed;
  return s;
}

struct Inputs {
  Corpus corpus;
  std::optional<EmbeddingStore> store;
};

Inputs load_inputs(const std::string& corpus_path, const std::string& embeddings_path, Artifacts& art) {
  Inputs in;
  in.corpus = load_corpus(corpus_path);
  art.input("corpus", corpus_path);
  if (!embeddings_path.empty()) {
    in.store = load_embeddings(embeddings_path, in.corpus);
    art.input("embeddings", embeddings_path);
  }
  return in;
}

const EmbeddingStore& need_store(const Inputs& in, const std::string& why) {
  if (!in.store) throw std::invalid_argument(why + " needs --embeddings");
  return *in.store;
}

ordered_json tp_sets_json(const TpSets& sets) {
  ordered_json out = ordered_json::array();
  for (const auto& s : sets) out.push_back(std::vector<std::size_t>(s.begin(), s.end()));
  return out;
}

void write_report(Artifacts& art, const EvalReport& report, const std::string& title) {
  art.write("report.json", report_to_json(report).dump(2) + "\n");
  art.write("report.txt", report_to_text(report, title));
}

bool any_labels(const Corpus& corpus) {
  return std::any_of(corpus.begin(), corpus.end(), [](const Screenplay& sp) { return sp.has_labels(); });
}

// --------------------------------------------------------------------------

struct Common {
  std::string out = "screensum-out";
  std::uint64_t seed = 0;
};

struct SynthOpts {
  std::size_t episodes = 4, scenes = 40, dim = 16;
};

int cmd_synth(const SynthOpts& o, const Common& c, Artifacts& art, std::ostream& out) {
  EmbeddingStore store;
  SynthCorpus sc = synth_corpus(o.episodes, o.scenes, o.dim, c.seed, store);
  art.write("corpus.jsonl", format_corpus(sc.corpus));
  art.write("silver.jsonl", format_silver_labels(sc.silver));
  write_embeddings(art.prepare("embeddings.bin"), store, &sc.corpus);
  art.record("embeddings.bin");
  out << "wrote " << sc.corpus.size() << " episodes to " << art.path("").string() << "\n";
  return 0;
}

struct SummarizeOpts {
  std::string corpus, embeddings, model_checkpoint;
  UnsupOpts unsup;
};

int cmd_summarize(SummarizeOpts& o, const Common& c, Artifacts& art, std::ostream& out) {
  if (o.unsup.algo == "summer-unsup" && o.unsup.tp_checkpoint.empty())
    throw std::invalid_argument("--algo summer-unsup requires --tp-checkpoint (a pretrained TP network)");
  if (o.unsup.algo == "supervised" && o.model_checkpoint.empty())
    throw std::invalid_argument("--algo supervised requires --model-checkpoint");
  Inputs in = load_inputs(o.corpus, o.embeddings, art);

  EvalReport report;
  std::vector<ordered_json> records;
  auto add = [&](const std::string& id, const std::vector<std::size_t>& sel, const std::vector<double>& scores,
                 const std::optional<TpSets>& tps) {
    ordered_json r;
    r["episode_id"] = id;
    r["selected"] = sel;
    r["scores"] = scores;
    if (tps) r["tp_scenes"] = tp_sets_json(*tps);
    records.push_back(r);
    EpisodeResult ep;
    ep.episode_id = id;
    ep.selected = sel;
    ep.scores = scores;
    ep.tp_sets = tps;
    report.episodes.push_back(ep);
  };

  if (o.unsup.algo == "supervised") {
    Model model = load_model(o.model_checkpoint);
    art.input("model", o.model_checkpoint);
    const EmbeddingStore& store = need_store(in, "--algo supervised");
    for (const auto& sp : in.corpus) {
      Prediction pred = predict(model, sp, store);
      std::optional<TpSets> tps;
      if (pred.posterior) tps = predict_tp_scenes(*pred.posterior, o.unsup.tp_threshold);
      add(sp.episode_id, select_top(CentralityScores{pred.probs}, o.unsup.ratio).selected, pred.probs, tps);
    }
  } else {
    const UnsupervisedConfig cfg = unsup_config(o.unsup, c.seed);
    UnsupervisedResources res;
    if (in.store) res.embeddings = &*in.store;
    std::optional<TfidfModel> tfidf;
    if (cfg.algo == UnsupervisedAlgo::TextrankTfidf) {
      tfidf = build_tfidf(in.corpus);
      res.tfidf = &*tfidf;
    }
    std::optional<TpNetCheckpoint> tp;
    if (cfg.algo == UnsupervisedAlgo::SummerUnsup) {
      tp = load_tpnet(o.unsup.tp_checkpoint);
      art.input("tp_checkpoint", o.unsup.tp_checkpoint);
      res.tp_params = &tp->params;
      res.tp_config = &tp->config;
      need_store(in, "--algo summer-unsup");
    }
    for (const auto& sp : in.corpus) {
      EpisodeSummary s = summarize_unsupervised(sp, cfg, res);
      std::optional<TpSets> tps;
      if (tp) tps = predict_tp_scenes(infer_posterior(tp->params, tp->config, make_input(sp, *in.store)), o.unsup.tp_threshold);
      add(sp.episode_id, s.selection.selected, s.scores, tps);
    }
  }
  art.write("summaries/summaries.jsonl", jsonl(records));
  if (any_labels(in.corpus)) {
    finalize_report(report, in.corpus);
    write_report(art, report, "summarize --algo " + o.unsup.algo);
    out << report_to_text(report, "summarize --algo " + o.unsup.algo);
  } else {
    out << "summarized " << records.size() << " episodes (no labels, no report)\n";
  }
  return 0;
}

struct EvaluateOpts {
  std::string corpus, summaries;
};

int cmd_evaluate(const EvaluateOpts& o, Artifacts& art, std::ostream& out) {
  Corpus corpus = load_corpus(o.corpus);
  art.input("corpus", o.corpus);
  art.input("summaries", o.summaries);
  std::ifstream in(o.summaries);
  if (!in) throw std::runtime_error("cannot read " + o.summaries);
  EvalReport report;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      EpisodeResult ep;
      ep.episode_id = j.at("episode_id").get<std::string>();
      ep.selected = j.at("selected").get<std::vector<std::size_t>>();
      if (j.contains("scores")) ep.scores = j.at("scores").get<std::vector<double>>();
      if (j.contains("tp_scenes")) {
        const auto sets = j.at("tp_scenes").get<std::vector<std::vector<std::size_t>>>();
        if (sets.size() != kNumTurningPoints) throw FormatError("tp_scenes must hold 5 sets", line_no);
        TpSets tps;
        for (std::size_t t = 0; t < kNumTurningPoints; ++t) tps[t] = {sets[t].begin(), sets[t].end()};
        ep.tp_sets = tps;
      }
      report.episodes.push_back(std::move(ep));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("summaries: ") + e.what(), line_no);
    }
  }
  finalize_report(report, corpus);
  write_report(art, report, "evaluate");
  out << report_to_text(report, "evaluate");
  return 0;
}

struct PretrainOpts {
  std::string corpus, embeddings, silver, out_checkpoint;
  std::size_t epochs = 50;
  double lr = 1e-3;
  NetOpts net;
};

int cmd_pretrain(const PretrainOpts& o, const Common& c, Artifacts& art, std::ostream& out) {
  Inputs in = load_inputs(o.corpus, o.embeddings, art);
  auto silver = load_silver_labels(o.silver);
  art.input("silver_labels", o.silver);
  const TpNetConfig cfg = o.net.config(in.store->dim());
  nc::AdamConfig adam;
  adam.learning_rate = o.lr;
  PretrainResult r = pretrain_tpnet(in.corpus, *in.store, silver, cfg, o.epochs, c.seed, adam);
  std::vector<ordered_json> log;
  for (std::size_t e = 0; e < r.epoch_losses.size(); ++e) log.push_back({{"epoch", e + 1}, {"loss", r.epoch_losses[e]}});
  art.write("logs/pretrain.jsonl", jsonl(log));
  const std::string rel = "checkpoints/tpnet.ckpt";
  save_tpnet(art.prepare(rel), cfg, r.params);
  art.record(rel);
  if (!o.out_checkpoint.empty()) {
    fs::create_directories(fs::absolute(o.out_checkpoint).parent_path());
    fs::copy_file(art.path(rel), o.out_checkpoint, fs::copy_options::overwrite_existing);
  }
  out << "pretrained " << o.epochs << " epochs, final loss "
      << (r.epoch_losses.empty() ? 0.0 : r.epoch_losses.back()) << "\n";
  return 0;
}

struct TrainCmdOpts {
  std::string corpus, embeddings, fold_spec;
  TrainOpts train;
};

int cmd_train(const TrainCmdOpts& o, const Common& c, Artifacts& art, std::ostream& out) {
  Inputs in = load_inputs(o.corpus, o.embeddings, art);
  const EmbeddingStore& store = need_store(in, "train");
  TrainSetup setup = train_setup(o.train, store.dim(), c.seed, art);

  // Optional held-out fold "K:F".
  Corpus pool, test;
  if (!o.fold_spec.empty()) {
    std::size_t k = 0, f = 0;
    char colon = 0;
    std::istringstream ss(o.fold_spec);
    if (!(ss >> k >> colon >> f) || colon != ':' || !ss.eof() || f >= k)
      throw std::invalid_argument("--fold-spec must be K:F with 0 <= F < K, got '" + o.fold_spec + "'");
    const FoldSplit split = split_folds(in.corpus, k, c.seed);
    for (const auto& sp : in.corpus) (split.assignments.at(sp.episode_id) == f ? test : pool).push_back(sp);
  } else {
    pool = in.corpus;
  }
  Corpus train_fold, dev;
  const std::size_t n_dev = pool.size() > o.train.dev_episodes ? o.train.dev_episodes : 0;
  {
    std::vector<std::size_t> order(pool.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(c.seed + 1000);
    rng.shuffle(order);
    std::vector<bool> is_dev(pool.size(), false);
    for (std::size_t i = 0; i < n_dev; ++i) is_dev[order[i]] = true;
    for (std::size_t i = 0; i < pool.size(); ++i) (is_dev[i] ? dev : train_fold).push_back(pool[i]);
  }

  std::vector<ordered_json> log;
  TrainResult r = train(train_fold, dev, store, setup.model, setup.train,
                        setup.pretrained ? &*setup.pretrained : nullptr,
                        [&](const EpochRecord& rec) { log.push_back(epoch_to_json(rec)); });
  art.write("logs/train.jsonl", jsonl(log));
  save_model(art.prepare("checkpoints/model.ckpt"), r.model);
  art.record("checkpoints/model.ckpt");
  out << "trained " << o.train.model << ": best monitored F1 " << r.best_f1 << " at epoch " << r.best_epoch << "\n";

  if (!test.empty()) {
    EvalReport report;
    for (const auto& sp : test) {
      Prediction pred = predict(r.model, sp, store);
      EpisodeResult ep;
      ep.episode_id = sp.episode_id;
      ep.selected = select_top(CentralityScores{pred.probs}, o.train.ratio).selected;
      ep.scores = pred.probs;
      if (pred.posterior) ep.tp_sets = predict_tp_scenes(*pred.posterior, o.train.tp_threshold);
      report.episodes.push_back(std::move(ep));
    }
    finalize_report(report, test);
    write_report(art, report, "train --model " + o.train.model + " (held-out fold " + o.fold_spec + ")");
    out << report_to_text(report, "held-out fold " + o.fold_spec);
  }
  return 0;
}

struct CvOpts {
  std::string corpus, embeddings, model;
  bool gold_oracle = false;
  std::size_t k = 10, jobs = 1;
  std::vector<std::string> exclude;
  UnsupOpts unsup;
  TrainOpts train;
};

int cmd_cv(CvOpts& o, const Common& c, Artifacts& art, std::ostream& out) {
  const int modes = (o.gold_oracle ? 1 : 0) + (o.model.empty() ? 0 : 1) + (o.unsup.algo.empty() ? 0 : 1);
  if (modes != 1) throw std::invalid_argument("cv needs exactly one of --algo, --model or --gold-oracle");
  Inputs in = load_inputs(o.corpus, o.embeddings, art);

  CvSpec spec;
  spec.k = o.k;
  spec.seed = c.seed;
  spec.jobs = o.jobs;
  spec.exclude = o.exclude;
  spec.dev_episodes = o.train.dev_episodes;
  std::optional<TpNetCheckpoint> tp;
  std::optional<TrainSetup> setup;
  std::string title;
  if (o.gold_oracle) {
    spec.kind = CvModelKind::GoldOracle;
    title = "cv gold oracle";
  } else if (!o.model.empty()) {
    spec.kind = CvModelKind::Supervised;
    o.train.model = o.model;
    setup = train_setup(o.train, need_store(in, "cv --model").dim(), c.seed, art);
    spec.model = setup->model;
    spec.train = setup->train;
    spec.pretrained = setup->pretrained ? &*setup->pretrained : nullptr;
    spec.tp_threshold = o.train.tp_threshold;
    title = "cv --model " + o.model;
  } else {
    spec.kind = CvModelKind::Unsupervised;
    spec.unsupervised = unsup_config(o.unsup, c.seed);
    spec.tp_threshold = o.unsup.tp_threshold;
    if (spec.unsupervised.algo == UnsupervisedAlgo::SummerUnsup) {
      if (o.unsup.tp_checkpoint.empty())
        throw std::invalid_argument("--algo summer-unsup requires --tp-checkpoint (a pretrained TP network)");
      tp = load_tpnet(o.unsup.tp_checkpoint);
      art.input("tp_checkpoint", o.unsup.tp_checkpoint);
      spec.resources.tp_params = &tp->params;
      spec.resources.tp_config = &tp->config;
    }
    title = "cv --algo " + o.unsup.algo;
  }
  const EvalReport report = cross_validate(in.corpus, in.store ? &*in.store : nullptr, spec);
  for (const auto& f : report.folds) {
    if (f.log.empty()) continue;
    std::vector<ordered_json> log;
    for (const auto& rec : f.log) log.push_back(epoch_to_json(rec));
    art.write("logs/fold-" + std::to_string(f.fold) + ".jsonl", jsonl(log));
  }
  write_report(art, report, title);
  out << report_to_text(report, title);
  return report.failed() ? 1 : 0;
}

struct SweepOpts {
  std::string corpus, embeddings, param = "lambda1", values = "0.1:0.9:0.1";
  UnsupOpts unsup;
};

int cmd_sweep(SweepOpts& o, const Common& c, Artifacts& art, std::ostream& out) {
  if (o.unsup.algo == "summer-unsup" && o.unsup.tp_checkpoint.empty())
    throw std::invalid_argument("--algo summer-unsup requires --tp-checkpoint (a pretrained TP network)");
  Inputs in = load_inputs(o.corpus, o.embeddings, art);
  if (!any_labels(in.corpus)) throw std::invalid_argument("sweep needs a corpus with summary labels");
  const std::vector<double> values = parse_values(o.values);

  UnsupervisedResources res;
  if (in.store) res.embeddings = &*in.store;
  std::optional<TfidfModel> tfidf;
  std::optional<TpNetCheckpoint> tp;
  UnsupervisedConfig base = unsup_config(o.unsup, c.seed);
  if (base.algo == UnsupervisedAlgo::TextrankTfidf) {
    tfidf = build_tfidf(in.corpus);
    res.tfidf = &*tfidf;
  }
  if (base.algo == UnsupervisedAlgo::SummerUnsup) {
    tp = load_tpnet(o.unsup.tp_checkpoint);
    art.input("tp_checkpoint", o.unsup.tp_checkpoint);
    res.tp_params = &tp->params;
    res.tp_config = &tp->config;
  }

  ordered_json rows = ordered_json::array();
  std::ostringstream text;
  text << "sweep --algo " << o.unsup.algo << " --param " << o.param << "\n  value     F1 (macro)  F1 (micro)\n";
  std::optional<std::size_t> peak;
  std::vector<double> f1s;
  for (double v : values) {
    UnsupervisedConfig cfg = base;
    if (o.param == "lambda1") cfg.lambda1 = v;
    else if (o.param == "threshold") cfg.threshold = v;
    else cfg.ratio = v;
    EvalReport report;
    for (const auto& sp : in.corpus) {
      EpisodeSummary s = summarize_unsupervised(sp, cfg, res);
      EpisodeResult ep;
      ep.episode_id = sp.episode_id;
      ep.selected = s.selection.selected;
      report.episodes.push_back(std::move(ep));
    }
    finalize_report(report, in.corpus);
    const double f1 = report.macro_f1.value_or(0.0);
    f1s.push_back(f1);
    if (!peak || f1 > f1s[*peak]) peak = f1s.size() - 1;
    rows.push_back({{"value", v}, {"macro_f1", f1}, {"micro_f1", report.micro_f1.value_or(0.0)}});
    char buf[96];
    std::snprintf(buf, sizeof buf, "  %-9g %-11.2f %.2f\n", v, f1, report.micro_f1.value_or(0.0));
    text << buf;
  }
  ordered_json j;
  j["param"] = o.param;
  j["algo"] = o.unsup.algo;
  j["rows"] = rows;
  j["peak"] = {{"value", values[*peak]}, {"macro_f1", f1s[*peak]}};
  text << "  peak at " << o.param << " = " << values[*peak] << "\n";
  art.write("report.json", j.dump(2) + "\n");
  art.write("report.txt", text.str());
  out << text.str();
  return 0;
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--out", c.out, "output directory (manifest, report, summaries/, checkpoints/, logs/)");
  sub->add_option("--seed", c.seed, "random seed; every stochastic step derives from it");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"screensum: scene-level screenplay summarization"};
  app.name("screensum");
  app.set_config("--config", "", "TOML/INI configuration file; command-line flags override its values");
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  Common common;
  SynthOpts synth;
  SummarizeOpts summarize;
  EvaluateOpts evaluate;
  PretrainOpts pretrain;
  TrainCmdOpts train_opts;
  CvOpts cv;
  SweepOpts sweep;

  auto* s_synth = app.add_subcommand("synth", "write a deterministic synthetic corpus, silver TP labels and embeddings");
  s_synth->add_option("--episodes", synth.episodes, "number of episodes")->check(CLI::PositiveNumber);
  s_synth->add_option("--scenes", synth.scenes, "scenes per episode")->check(CLI::Range(2, 100000));
  s_synth->add_option("--dim", synth.dim, "sentence embedding width")->check(CLI::PositiveNumber);
  add_common(s_synth, common);

  auto* s_sum = app.add_subcommand("summarize", "select summary scenes per episode");
  s_sum->add_option("--corpus", summarize.corpus, "corpus JSONL file")->required()->check(CLI::ExistingFile);
  s_sum->add_option("--embeddings", summarize.embeddings, "sentence embedding file")->check(CLI::ExistingFile);
  {
    std::vector<std::string> choices = kAlgoChoices;
    choices.push_back("supervised");
    s_sum->add_option("--algo", summarize.unsup.algo, "summarizer")->required()->check(CLI::IsMember(choices));
  }
  s_sum->add_option("--model-checkpoint", summarize.model_checkpoint, "trained model (--algo supervised)")
      ->check(CLI::ExistingFile);
  add_unsup_options(s_sum, summarize.unsup, false, false);
  add_common(s_sum, common);

  auto* s_eval = app.add_subcommand("evaluate", "score a summaries file against the corpus labels");
  s_eval->add_option("--corpus", evaluate.corpus, "corpus JSONL file")->required()->check(CLI::ExistingFile);
  s_eval->add_option("--summaries", evaluate.summaries, "summaries JSONL written by summarize")
      ->required()
      ->check(CLI::ExistingFile);
  add_common(s_eval, common);

  auto* s_pre = app.add_subcommand("pretrain-tp", "pretrain the TP identification network on silver labels");
  s_pre->add_option("--corpus", pretrain.corpus, "corpus JSONL file")->required()->check(CLI::ExistingFile);
  s_pre->add_option("--embeddings", pretrain.embeddings, "sentence embedding file")->required()->check(CLI::ExistingFile);
  s_pre->add_option("--silver-labels", pretrain.silver, "silver TP labels JSONL")->required()->check(CLI::ExistingFile);
  s_pre->add_option("--epochs", pretrain.epochs, "passes over the labeled episodes")->check(CLI::PositiveNumber);
  s_pre->add_option("--lr", pretrain.lr, "Adam learning rate")->check(CLI::PositiveNumber);
  s_pre->add_option("--out-checkpoint", pretrain.out_checkpoint, "extra copy of the checkpoint at this path");
  add_net_options(s_pre, pretrain.net);
  add_common(s_pre, common);

  auto* s_train = app.add_subcommand("train", "train a supervised summarizer");
  s_train->add_option("--corpus", train_opts.corpus, "corpus JSONL file")->required()->check(CLI::ExistingFile);
  s_train->add_option("--embeddings", train_opts.embeddings, "sentence embedding file")
      ->required()
      ->check(CLI::ExistingFile);
  s_train->add_option("--fold-spec", train_opts.fold_spec, "K:F holds out fold F of a K-fold split for testing");
  add_train_options(s_train, train_opts.train, true);
  add_common(s_train, common);

  auto* s_cv = app.add_subcommand("cv", "k-fold cross-validation of a summarizer");
  s_cv->add_option("--corpus", cv.corpus, "corpus JSONL file")->required()->check(CLI::ExistingFile);
  s_cv->add_option("--embeddings", cv.embeddings, "sentence embedding file")->check(CLI::ExistingFile);
  s_cv->add_option("--algo", cv.unsup.algo, "unsupervised summarizer")->check(CLI::IsMember(kAlgoChoices));
  s_cv->add_option("--model", cv.model, "supervised head")->check(CLI::IsMember({"summarunner", "summer", "scenesum"}));
  s_cv->add_flag("--gold-oracle", cv.gold_oracle, "harness check: select exactly the gold scenes");
  s_cv->add_option("--k", cv.k, "number of folds")->check(CLI::Range(2, 1000000));
  s_cv->add_option("--exclude", cv.exclude, "episode ids removed before splitting");
  s_cv->add_option("--jobs", cv.jobs, "folds evaluated in parallel")->check(CLI::PositiveNumber);
  add_unsup_options(s_cv, cv.unsup, false, false);
  // Shared flags (--ratio, --charscore-union, --centers, --sigma, --tp-threshold) come from the unsupervised set.
  s_cv->add_option("--pretrained", cv.train.pretrained, "TP network checkpoint for the encoder (+P)")
      ->check(CLI::ExistingFile);
  s_cv->add_flag("--no-reg", cv.train.no_reg, "drop the orthogonality and focal regularizers (-R)");
  s_cv->add_option("--fixed-tps", cv.train.fixed_tps, "freeze TP attention to the pretrained argmax or the prior")
      ->check(CLI::IsMember({"none", "onehot", "prior"}));
  s_cv->add_flag("--freeze-encoder", cv.train.freeze_encoder, "keep encoder weights fixed during fine-tuning");
  s_cv->add_option("--epochs", cv.train.epochs, "maximum training epochs")->check(CLI::PositiveNumber);
  s_cv->add_option("--patience", cv.train.patience, "early-stopping patience in epochs")->check(CLI::PositiveNumber);
  s_cv->add_option("--lr", cv.train.lr, "Adam learning rate")->check(CLI::PositiveNumber);
  s_cv->add_option("--a", cv.train.a, "orthogonality regularizer weight")->check(CLI::NonNegativeNumber);
  s_cv->add_option("--b", cv.train.b, "focal regularizer weight")->check(CLI::NonNegativeNumber);
  s_cv->add_option("--epsilon", cv.train.epsilon, "KL floor inside the orthogonality term")->check(CLI::PositiveNumber);
  s_cv->add_option("--target-f1", cv.train.target_f1, "stop once the monitored F1 reaches this value (0 disables)")
      ->check(CLI::Range(0.0, 100.0));
  s_cv->add_option("--dev-episodes", cv.train.dev_episodes, "dev episodes carved from each training pool");
  add_net_options(s_cv, cv.train.net);
  add_common(s_cv, common);

  sweep.unsup.algo = "textrank-neural";
  auto* s_sweep = app.add_subcommand("sweep", "grid over one unsupervised hyperparameter");
  s_sweep->add_option("--corpus", sweep.corpus, "corpus JSONL file")->required()->check(CLI::ExistingFile);
  s_sweep->add_option("--embeddings", sweep.embeddings, "sentence embedding file")->check(CLI::ExistingFile);
  s_sweep->add_option("--algo", sweep.unsup.algo, "unsupervised summarizer")->check(CLI::IsMember(kAlgoChoices));
  s_sweep->add_option("--param", sweep.param, "swept hyperparameter")
      ->check(CLI::IsMember({"lambda1", "threshold", "ratio"}));
  s_sweep->add_option("--values", sweep.values, "lo:hi:step (inclusive) or a comma list");
  add_unsup_options(s_sweep, sweep.unsup, false, false);
  add_common(s_sweep, common);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  // Resolved values of the active subcommand, defaults included, in config-file syntax.
  // Unset paths and empty lists are left out; replaying them would fail validation.
  std::string config = "[" + app.get_subcommands().front()->get_name() + "]\n";
  {
    std::istringstream lines(app.get_subcommands().front()->config_to_str(true, false));
    for (std::string line; std::getline(lines, line);) {
      const auto ends_with = [&](std::string_view tail) {
        return line.size() >= tail.size() && line.compare(line.size() - tail.size(), tail.size(), tail) == 0;
      };
      if (!ends_with("=\"\"") && !ends_with("=\"{}\"")) config += line + "\n";
    }
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    if (name == "cv") {
      // cv shares --ratio and the prior options between both model families.
      cv.train.ratio = cv.unsup.ratio;
      cv.train.charscore_union = cv.unsup.charscore_union;
      cv.train.centers = cv.unsup.centers;
      cv.train.sigma = cv.unsup.sigma;
      cv.train.tp_threshold = cv.unsup.tp_threshold;
    }
    Artifacts art(common.out);
    int status = 0;
    if (name == "synth") status = cmd_synth(synth, common, art, out);
    else if (name == "summarize") status = cmd_summarize(summarize, common, art, out);
    else if (name == "evaluate") status = cmd_evaluate(evaluate, art, out);
    else if (name == "pretrain-tp") status = cmd_pretrain(pretrain, common, art, out);
    else if (name == "train") status = cmd_train(train_opts, common, art, out);
    else if (name == "cv") status = cmd_cv(cv, common, art, out);
    else if (name == "sweep") status = cmd_sweep(sweep, common, art, out);
    art.finish(name, args, config, common.seed);
    return status;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace screensum::cli
