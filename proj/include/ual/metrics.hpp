#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ual/grid.hpp"

namespace ual::metrics {

inline constexpr double kMaskThreshold = 0.5;
inline constexpr const char *kEvalCsvHeader = "sample_id,dsc,p_acc,iou,gt_cls,pred_cls";

/// Cells >= 0.5 become 1, the rest 0.
Grid binarize(const Grid &g, double threshold = kMaskThreshold);

/// Dice overlap in percent of the binarized masks; two empty masks give 100.
double dsc(const Grid &pred, const Grid &gt);
/// Share of agreeing cells after binarization, in percent.
double pixel_accuracy(const Grid &pred, const Grid &gt);
/// |A n B| / |A u B| in percent; two empty masks give 100.
double mask_iou(const Grid &pred, const Grid &gt);
/// Intersection over union of two axis-aligned squares, in percent.
double box_iou(const BoxTuple &pred, const BoxTuple &gt);

struct Confusion {
  int tp = 0; // hemangioma predicted hemangioma
  int fn = 0; // hemangioma predicted otherwise
  int tn = 0; // HCC predicted HCC
  int fp = 0; // HCC predicted otherwise
  int background_total = 0;
  int background_correct = 0;
};

struct ClassReport {
  double tpr = 0;
  double tnr = 0;
  double acc = 0;
  double background_acc = 0; // share of cls-0 samples predicted 0
  Confusion counts;
};

/// Hemangioma (1) is positive, HCC (2) negative. Ground-truth cls-0
/// samples are tallied separately. Empty denominators give 100.
ClassReport classification_report(const std::vector<int> &preds, const std::vector<int> &gts);

struct SampleRecord {
  std::string sample_id;
  double dsc = 0;
  double p_acc = 0;
  double iou = 0; // box IoU; 100 when neither box exists, 0 when one is missing
  int gt_cls = 0;
  int pred_cls = 0;
};

struct EvalReport {
  double dsc = 0, p_acc = 0, iou = 0, tpr = 0, tnr = 0, acc = 0;
  ClassReport classes;
  std::vector<SampleRecord> per_sample;
};

struct EvalInput {
  std::string sample_id;
  const Grid *pred_mask = nullptr;
  const Grid *gt_mask = nullptr;
  std::optional<BoxTuple> pred_box; // absent when the predicted class is 0
  std::optional<BoxTuple> gt_box;
  int pred_cls = 0;
  int gt_cls = 0;
};

/// Per-sample metrics plus means. DSC and p-Acc average over all samples;
/// IoU averages over samples with a ground-truth box.
EvalReport evaluate(const std::vector<EvalInput> &inputs);

void write_eval_csv(const EvalReport &report, std::ostream &out);
void write_eval_csv(const EvalReport &report, const std::filesystem::path &path);
/// Human-readable summary, columns DSC p-Acc IoU TPR TNR Acc.
void write_summary(const EvalReport &report, std::ostream &out);

} // namespace ual::metrics
