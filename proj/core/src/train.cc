#include "screensum/train.h"

#include <numeric>
#include <stdexcept>

#include "screensum/eval.h"
#include "screensum/rng.h"

namespace screensum {

namespace {

struct Prepared {
  const Screenplay* screenplay;
  EpisodeInput input;
  std::vector<double> labels;
  std::optional<TpColumns> fixed;
  std::optional<PositionPrior> prior;
};

std::vector<double> label_vector(const Screenplay& sp) {
  std::vector<double> y;
  y.reserve(sp.size());
  for (const auto& scene : sp.scenes) y.push_back(scene.summary_label.value_or(0) == 1 ? 1.0 : 0.0);
  return y;
}

}  // namespace

std::array<double, 2> inverse_frequency_weights(const Corpus& train) {
  std::array<std::size_t, 2> counts{0, 0};
  for (const auto& sp : train) {
    for (const auto& scene : sp.scenes) {
      if (scene.summary_label) ++counts[*scene.summary_label == 1 ? 1 : 0];
    }
  }
  if (counts[0] == 0 || counts[1] == 0)
    throw std::invalid_argument("class weights: training fold needs both positive and negative scenes");
  const double n = static_cast<double>(counts[0] + counts[1]);
  return {n / (2.0 * static_cast<double>(counts[0])), n / (2.0 * static_cast<double>(counts[1]))};
}

double selection_f1(Model& model, const Corpus& episodes, const EmbeddingStore& store, double ratio) {
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& sp : episodes) {
    if (!sp.has_labels()) continue;
    const auto probs = predict_probabilities(model, sp, store);
    const auto sel = select_top(CentralityScores{probs}, ratio);
    total += f1_score({sel.selected.begin(), sel.selected.end()}, sp.gold_indices(), sp.size());
    ++count;
  }
  return count ? total / static_cast<double>(count) : 0.0;
}

TrainResult train(const Corpus& train_fold, const Corpus& dev, const EmbeddingStore& store,
                  const ModelConfig& model_config, const TrainConfig& config, const nc::ParameterSet* pretrained,
                  const EpochCallback& on_epoch) {
  if (train_fold.empty()) throw std::invalid_argument("train: empty training fold");
  for (const auto& sp : train_fold) {
    if (!sp.has_labels())
      throw std::invalid_argument("train: episode '" + sp.episode_id + "' has no summary labels");
  }
  LossConfig loss_cfg = config.loss;
  loss_cfg.class_weights = inverse_frequency_weights(train_fold);

  TrainResult result{init_model(model_config, config.seed, pretrained), {}, 0, -1.0};
  Model& model = result.model;
  if (config.freeze_encoder) model.params.set_frozen("enc.", true);

  std::vector<Prepared> items;
  for (const auto& sp : train_fold) {
    Prepared p{&sp, make_input(sp, store), label_vector(sp), std::nullopt, std::nullopt};
    p.fixed = fixed_columns(model, p.input);
    if (sp.size() >= kNumTurningPoints) p.prior = position_prior(sp.size(), model_config.centers, model_config.sigma_fraction);
    items.push_back(std::move(p));
  }

  nc::Adam optimizer(config.adam);
  Rng order_rng(config.seed + 0x51);
  Rng dropout_rng(config.seed + 0x52);
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), 0);
  nc::ParameterSet best = model.params;
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    order_rng.shuffle(order);
    EpochRecord rec;
    rec.epoch = epoch;
    for (std::size_t idx : order) {
      Prepared& item = items[idx];
      try {
        model.params.zero_grad();
        nc::Tape tape;
        NetContext ctx{tape, model.params, model_config.net, &dropout_rng, ""};
        const ModelForward fw =
            model_forward(ctx, model_config, item.input, *item.screenplay, item.fixed ? &*item.fixed : nullptr);
        LossBreakdown parts;
        nc::Var loss = loss_total(tape, fw.logits, item.labels, fw.columns_learned ? &*fw.columns : nullptr,
                                  item.prior ? &*item.prior : nullptr, loss_cfg, &parts, true);
        tape.backward(loss);
        optimizer.step(model.params);
        rec.loss += parts.total;
        rec.bce += parts.bce;
        rec.orthogonality += parts.orthogonality;
        rec.focal += parts.focal;
      } catch (const nc::NumericError& e) {
        throw nc::NumericError("training diverged at epoch " + std::to_string(epoch) + ", episode '" +
                               item.screenplay->episode_id + "': " + e.what());
      }
    }
    const double count = static_cast<double>(items.size());
    rec.loss /= count;
    rec.bce /= count;
    rec.orthogonality /= count;
    rec.focal /= count;
    rec.train_f1 = selection_f1(model, train_fold, store, config.ratio);
    if (!dev.empty()) rec.dev_f1 = selection_f1(model, dev, store, config.ratio);
    result.log.push_back(rec);
    if (on_epoch) on_epoch(rec);

    const double monitored = rec.dev_f1.value_or(rec.train_f1);
    if (monitored > result.best_f1) {
      result.best_f1 = monitored;
      result.best_epoch = epoch;
      best = model.params;
      since_best = 0;
    } else {
      ++since_best;
    }
    if (config.target_f1 && monitored >= *config.target_f1) break;
    if (since_best >= config.patience) break;
  }
  model.params = best;
  return result;
}

}  // namespace screensum
