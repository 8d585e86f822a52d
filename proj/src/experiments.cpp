#include "bdst/experiments.hpp"

#include <chrono>
#include <sstream>

#include <json.hpp>

namespace bdst {
inline namespace BDST_ABI_NAMESPACE {

namespace {

std::string num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << std::fixed << v;
  return os.str();
}

}  // namespace

std::vector<std::string> detect_oov_slots(const DialogueCorpus& train, const DialogueCorpus& test) {
  const auto st = corpus_stats(test, &train);
  std::vector<std::string> out;
  for (const auto& s : test.slots) {
    auto it = st.slots.find(s);
    if (it != st.slots.end() && it->second.oov_values > 0) out.push_back(s);
  }
  return out;
}

SvdAblation run_svd_ablation(const DialogueCorpus& train_corpus, const DialogueCorpus& dev,
                             const DialogueCorpus& test, const TrainConfig& base_cfg,
                             const std::vector<double>& grid, std::vector<std::string> oov_slots) {
  if (grid.empty()) throw ArgumentError("ablation grid is empty");
  for (double p : grid) {
    if (!(p >= 0.0 && p < 1.0)) throw ArgumentError("ablation grid value " + num(p) + " outside [0, 1)");
  }
  SvdAblation out;
  out.oov_slots = oov_slots.empty() ? detect_oov_slots(train_corpus, test) : std::move(oov_slots);
  for (double p : grid) {
    TrainConfig cfg = base_cfg;
    cfg.slot_value_dropout = p;
    auto result = train(train_corpus, dev, cfg);
    SvdRow row;
    row.p = p;
    row.report = evaluate(result.model, test);
    row.report.seed = cfg.seed;
    row.epochs_run = result.history.epochs.size();
    row.best_epoch = result.history.best_epoch;
    if (!out.oov_slots.empty()) {
      double sum = 0.0;
      for (const auto& s : out.oov_slots) sum += row.report.per_slot_accuracy.at(s);
      row.oov_accuracy = sum / static_cast<double>(out.oov_slots.size());
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

std::string SvdAblation::to_csv() const {
  std::ostringstream os;
  os << "p,joint_goal_accuracy,oov_accuracy,epochs_run,best_epoch";
  const auto slots = rows.empty() ? std::vector<std::string>{} : [&] {
    std::vector<std::string> v;
    for (const auto& [s, _] : rows.front().report.per_slot_accuracy) v.push_back(s);
    return v;
  }();
  for (const auto& s : slots) os << "," << s;
  os << "\n";
  for (const auto& r : rows) {
    os << num(r.p) << "," << num(r.report.joint_goal_accuracy) << "," << num(r.oov_accuracy) << ","
       << r.epochs_run << "," << r.best_epoch;
    for (const auto& s : slots) os << "," << num(r.report.per_slot_accuracy.at(s));
    os << "\n";
  }
  return os.str();
}

std::string SvdAblation::to_dat() const {
  std::ostringstream os;
  os << "# slot value dropout ablation; OOV slots:";
  for (const auto& s : oov_slots) os << " " << s;
  os << "\n# p joint_goal_accuracy oov_accuracy\n";
  for (const auto& r : rows) os << num(r.p) << " " << num(r.report.joint_goal_accuracy) << " " << num(r.oov_accuracy) << "\n";
  return os.str();
}

SharingComparison run_sharing_comparison(const DialogueCorpus& train_corpus, const DialogueCorpus& dev,
                                         const DialogueCorpus& test, const TrainConfig& base_cfg) {
  SharingComparison out;
  for (SharingMode mode : {SharingMode::SlotSpecific, SharingMode::Shared}) {
    TrainConfig cfg = base_cfg;
    cfg.sharing = mode;
    const auto t0 = std::chrono::steady_clock::now();
    auto result = train(train_corpus, dev, cfg);
    SharingRow row;
    row.mode = mode;
    row.report = evaluate(result.model, test);
    row.report.seed = cfg.seed;
    row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    row.parameter_count = result.model.parameter_count();
    row.encoder_parameter_count = parameter_count(result.model.encoder_config);
    row.serialized_scalars = inspect_model_bytes(serialize_model(result.model)).stored_scalars;
    out.rows.push_back(std::move(row));
  }
  return out;
}

std::string SharingComparison::to_csv() const {
  std::ostringstream os;
  os << "mode,joint_goal_accuracy,parameter_count,encoder_parameter_count,serialized_scalars,wall_seconds\n";
  for (const auto& r : rows) {
    os << sharing_mode_name(r.mode) << "," << num(r.report.joint_goal_accuracy) << "," << r.parameter_count
       << "," << r.encoder_parameter_count << "," << r.serialized_scalars << "," << num(r.wall_seconds) << "\n";
  }
  return os.str();
}

std::string SharingComparison::to_json() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json row;
    row["mode"] = sharing_mode_name(r.mode);
    row["parameter_count"] = r.parameter_count;
    row["encoder_parameter_count"] = r.encoder_parameter_count;
    row["serialized_scalars"] = r.serialized_scalars;
    row["wall_seconds"] = r.wall_seconds;
    row["report"] = nlohmann::ordered_json::parse(r.report.to_json());
    j.push_back(std::move(row));
  }
  return j.dump(2) + "\n";
}

}  // namespace BDST_ABI_NAMESPACE
}  // namespace bdst
