#include "report.h"

#include <cstdio>
#include <sstream>

namespace screensum::cli {

using nlohmann::ordered_json;

namespace {

ordered_json opt(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

std::string fmt(const std::optional<double>& v, int precision = 2) {
  if (!v) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, *v);
  return buf;
}

ordered_json tp_sets_json(const TpSets& sets) {
  ordered_json out = ordered_json::array();
  for (const auto& s : sets) out.push_back(ordered_json(std::vector<std::size_t>(s.begin(), s.end())));
  return out;
}

}  // namespace

ordered_json epoch_to_json(const EpochRecord& rec) {
  ordered_json j;
  j["epoch"] = rec.epoch;
  j["loss"] = rec.loss;
  j["bce"] = rec.bce;
  j["orthogonality"] = rec.orthogonality;
  j["focal"] = rec.focal;
  j["train_f1"] = rec.train_f1;
  j["dev_f1"] = opt(rec.dev_f1);
  return j;
}

ordered_json report_to_json(const EvalReport& report) {
  ordered_json j;
  j["macro_f1"] = opt(report.macro_f1);
  j["episode_mean_f1"] = opt(report.episode_mean_f1);
  j["micro_f1"] = opt(report.micro_f1);
  j["coverage"] = opt(report.coverage);
  j["coverage_literal"] = opt(report.coverage_literal);
  j["scenes_per_tp"] = opt(report.scenes_per_tp);
  j["coverage_skipped_episodes"] = report.coverage_skipped;
  if (report.aspect_table) {
    ordered_json table;
    for (std::size_t j_tp = 0; j_tp < kNumTurningPoints; ++j_tp) {
      ordered_json row;
      for (std::size_t a = 0; a < kNumAspects; ++a)
        row[std::string(aspect_name(kAllAspects[a]))] = opt(report.aspect_table->cells[j_tp][a]);
      table[std::string(kTurningPointNames[j_tp])] = row;
    }
    j["tp_aspect_table"] = table;
  } else {
    j["tp_aspect_table"] = nullptr;
  }
  ordered_json folds = ordered_json::array();
  for (const auto& f : report.folds) {
    ordered_json fj;
    fj["fold"] = f.fold;
    fj["f1"] = opt(f.f1);
    fj["test"] = f.test;
    fj["dev"] = f.dev;
    fj["error"] = f.error ? ordered_json(*f.error) : ordered_json(nullptr);
    fj["epochs"] = f.log.size();
    folds.push_back(fj);
  }
  j["folds"] = folds;
  ordered_json eps = ordered_json::array();
  for (const auto& e : report.episodes) {
    ordered_json ej;
    ej["episode_id"] = e.episode_id;
    ej["fold"] = e.fold;
    ej["selected"] = e.selected;
    ej["f1"] = opt(e.f1);
    if (e.tp_sets) ej["tp_scenes"] = tp_sets_json(*e.tp_sets);
    if (e.coverage) {
      ej["coverage"] = e.coverage->clamped;
      ej["coverage_literal"] = e.coverage->literal;
    }
    eps.push_back(ej);
  }
  j["episodes"] = eps;
  return j;
}

std::string report_to_text(const EvalReport& report, const std::string& title) {
  std::ostringstream out;
  out << title << "\n";
  out << "  F1 (macro)          " << fmt(report.macro_f1) << "\n";
  out << "  F1 (micro)          " << fmt(report.micro_f1) << "\n";
  out << "  Coverage of aspects " << fmt(report.coverage) << "   (unclamped " << fmt(report.coverage_literal) << ")\n";
  out << "  # scenes per TP     " << fmt(report.scenes_per_tp) << "\n";
  if (report.aspect_table) {
    out << "\n  TP x aspect (% of aspect instances within one scene of the TP)\n";
    char buf[64];
    std::snprintf(buf, sizeof buf, "  %-20s", "");
    out << buf;
    for (auto a : kAllAspects) {
      std::snprintf(buf, sizeof buf, "%13s", std::string(aspect_name(a)).c_str());
      out << buf;
    }
    out << "\n";
    for (std::size_t j = 0; j < kNumTurningPoints; ++j) {
      std::snprintf(buf, sizeof buf, "  %-20s", std::string(kTurningPointNames[j]).c_str());
      out << buf;
      for (std::size_t a = 0; a < kNumAspects; ++a) {
        std::snprintf(buf, sizeof buf, "%13s", fmt(report.aspect_table->cells[j][a]).c_str());
        out << buf;
      }
      out << "\n";
    }
  }
  if (!report.folds.empty()) {
    out << "\n  fold  F1      status\n";
    for (const auto& f : report.folds) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "  %4zu  %-7s ", f.fold, fmt(f.f1).c_str());
      out << buf << (f.error ? *f.error : "ok") << "\n";
    }
  }
  return out.str();
}

}  // namespace screensum::cli
