#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "ual/metrics.hpp"
#include "ual/trainer.hpp"

namespace ual::pipeline {

struct Prediction {
  heads::SegPrediction seg;
  heads::DetPrediction det;
};

/// Runs infer on every sample.
std::vector<Prediction> predict(const Network &net, const std::vector<Sample> &samples);
/// Ground truth standing in for predictions (probabilities = mask, class
/// one-hot, box = ground-truth box).
std::vector<Prediction> oracle_predictions(const std::vector<Sample> &samples);

/// Metrics of predictions against the samples. A predicted box is scored
/// only when the predicted class is a tumour class.
metrics::EvalReport score(const std::vector<Sample> &samples,
                          const std::vector<Prediction> &preds);

/// eval.csv, summary.txt and, when `figures` is set, per-sample
/// <id>_<modality>_overlay.png and <id>_heatmap.png under out_dir/figures.
void write_eval_outputs(const std::filesystem::path &out_dir, const metrics::EvalReport &report,
                        const std::vector<Sample> &samples, const std::vector<Prediction> &preds,
                        const std::vector<Modality> &modalities, bool figures);

enum class SweepKind { Modalities, Phases, Ablations };
SweepKind parse_sweep_kind(const std::string &s);

struct SweepEntry {
  std::string label;
  TrainConfig cfg;
};

inline constexpr const char *kSweepCsvHeader = "combo,dsc,p_acc,iou,tpr,tnr,acc";

/// Default grids: the six proper combos plus the full set (modalities,
/// phases), or full plus each single ablation. `custom` is a ';'-separated
/// list of combos ("t1;t2,dwi") or ablation names ("full;mpr"); duplicates
/// throw ConfigError.
std::vector<SweepEntry> sweep_entries(SweepKind kind, const TrainConfig &base,
                                      const std::string &custom = "");

struct SweepRow {
  std::string label;
  metrics::EvalReport report;
};

/// Trains every entry on `train_set` and scores it on `eval_set`. With
/// parallel > 1 entries run on worker threads; results do not depend on it.
std::vector<SweepRow> run_sweep(const std::vector<SweepEntry> &entries,
                                const std::vector<Sample> &train_set,
                                const std::vector<Sample> &eval_set, int parallel = 1,
                                std::ostream *progress = nullptr);
void write_sweep_csv(const std::vector<SweepRow> &rows, std::ostream &out);

} // namespace ual::pipeline
