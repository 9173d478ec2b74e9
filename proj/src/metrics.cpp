#include "ual/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ual/errors.hpp"
#include "ual/uald_io.hpp"

namespace ual::metrics {

namespace {

void check_same(const Grid &a, const Grid &b, const char *what) {
  if (a.height != b.height || a.width != b.width)
    throw DimensionError(std::string(what) + ": " + std::to_string(a.height) + "x" +
                         std::to_string(a.width) + " vs " + std::to_string(b.height) + "x" +
                         std::to_string(b.width));
}

struct Overlap {
  long a = 0, b = 0, both = 0, agree = 0, total = 0;
};

Overlap overlap(const Grid &pred, const Grid &gt, const char *what) {
  check_same(pred, gt, what);
  Overlap o;
  o.total = static_cast<long>(pred.values.size());
  for (std::size_t i = 0; i < pred.values.size(); ++i) {
    const bool p = pred.values[i] >= kMaskThreshold;
    const bool g = gt.values[i] >= kMaskThreshold;
    o.a += p;
    o.b += g;
    o.both += p && g;
    o.agree += p == g;
  }
  return o;
}

double percent(long num, long den) {
  return den == 0 ? 100.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

} // namespace

Grid binarize(const Grid &g, double threshold) {
  Grid out = g;
  for (float &v : out.values)
    v = v >= threshold ? 1.0F : 0.0F;
  return out;
}

double dsc(const Grid &pred, const Grid &gt) {
  const Overlap o = overlap(pred, gt, "dsc");
  return percent(2 * o.both, o.a + o.b);
}

double pixel_accuracy(const Grid &pred, const Grid &gt) {
  const Overlap o = overlap(pred, gt, "pixel_accuracy");
  if (o.total == 0)
    throw DimensionError("pixel_accuracy: empty grids");
  return percent(o.agree, o.total);
}

double mask_iou(const Grid &pred, const Grid &gt) {
  const Overlap o = overlap(pred, gt, "mask_iou");
  return percent(o.both, o.a + o.b - o.both);
}

double box_iou(const BoxTuple &pred, const BoxTuple &gt) {
  auto overlap_1d = [](double c1, double s1, double c2, double s2) {
    const double lo = std::max(c1 - s1 / 2, c2 - s2 / 2);
    const double hi = std::min(c1 + s1 / 2, c2 + s2 / 2);
    return std::max(0.0, hi - lo);
  };
  const double inter = overlap_1d(pred.cx, pred.side, gt.cx, gt.side) *
                       overlap_1d(pred.cy, pred.side, gt.cy, gt.side);
  const double uni = pred.side * pred.side + gt.side * gt.side - inter;
  if (uni <= 0)
    return pred.cx == gt.cx && pred.cy == gt.cy ? 100.0 : 0.0;
  return 100.0 * inter / uni;
}

ClassReport classification_report(const std::vector<int> &preds, const std::vector<int> &gts) {
  if (preds.size() != gts.size())
    throw DimensionError("classification_report: " + std::to_string(preds.size()) +
                         " predictions vs " + std::to_string(gts.size()) + " labels");
  ClassReport r;
  Confusion &c = r.counts;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    switch (gts[i]) {
    case 0:
      ++c.background_total;
      c.background_correct += preds[i] == 0;
      break;
    case 1:
      (preds[i] == 1 ? c.tp : c.fn)++;
      break;
    case 2:
      (preds[i] == 2 ? c.tn : c.fp)++;
      break;
    default:
      throw DataError("classification_report: label " + std::to_string(gts[i]) +
                      " out of range");
    }
  }
  r.tpr = percent(c.tp, c.tp + c.fn);
  r.tnr = percent(c.tn, c.tn + c.fp);
  r.acc = percent(c.tp + c.tn, c.tp + c.tn + c.fp + c.fn);
  r.background_acc = percent(c.background_correct, c.background_total);
  return r;
}

EvalReport evaluate(const std::vector<EvalInput> &inputs) {
  EvalReport rep;
  std::vector<int> preds, gts;
  double dsc_sum = 0, pacc_sum = 0, iou_sum = 0;
  int iou_n = 0;
  for (const EvalInput &in : inputs) {
    if (in.pred_mask == nullptr || in.gt_mask == nullptr)
      throw DataError("evaluate: sample " + in.sample_id + " has no mask");
    SampleRecord rec;
    rec.sample_id = in.sample_id;
    rec.dsc = dsc(*in.pred_mask, *in.gt_mask);
    rec.p_acc = pixel_accuracy(*in.pred_mask, *in.gt_mask);
    if (in.gt_box && in.pred_box)
      rec.iou = box_iou(*in.pred_box, *in.gt_box);
    else
      rec.iou = !in.gt_box && !in.pred_box ? 100.0 : 0.0;
    rec.gt_cls = in.gt_cls;
    rec.pred_cls = in.pred_cls;
    dsc_sum += rec.dsc;
    pacc_sum += rec.p_acc;
    if (in.gt_box) {
      iou_sum += rec.iou;
      ++iou_n;
    }
    preds.push_back(in.pred_cls);
    gts.push_back(in.gt_cls);
    rep.per_sample.push_back(std::move(rec));
  }
  const double n = inputs.empty() ? 1.0 : static_cast<double>(inputs.size());
  rep.dsc = inputs.empty() ? 0.0 : dsc_sum / n;
  rep.p_acc = inputs.empty() ? 0.0 : pacc_sum / n;
  rep.iou = iou_n == 0 ? 100.0 : iou_sum / iou_n;
  rep.classes = classification_report(preds, gts);
  rep.tpr = rep.classes.tpr;
  rep.tnr = rep.classes.tnr;
  rep.acc = rep.classes.acc;
  return rep;
}

void write_eval_csv(const EvalReport &report, std::ostream &out) {
  out << kEvalCsvHeader << '\n';
  char buf[160];
  for (const SampleRecord &r : report.per_sample) {
    std::snprintf(buf, sizeof buf, ",%.4f,%.4f,%.4f,%d,%d\n", r.dsc, r.p_acc, r.iou, r.gt_cls,
                  r.pred_cls);
    out << r.sample_id << buf;
  }
}

void write_eval_csv(const EvalReport &report, const std::filesystem::path &path) {
  std::ostringstream os;
  write_eval_csv(report, os);
  io::write_file_atomic(path, os.str());
}

void write_summary(const EvalReport &report, std::ostream &out) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%8s %8s %8s %8s %8s %8s\n", "DSC", "p-Acc", "IoU", "TPR",
                "TNR", "Acc");
  out << buf;
  std::snprintf(buf, sizeof buf, "%8.2f %8.2f %8.2f %8.2f %8.2f %8.2f\n", report.dsc,
                report.p_acc, report.iou, report.tpr, report.tnr, report.acc);
  out << buf;
  const Confusion &c = report.classes.counts;
  std::snprintf(buf, sizeof buf, "TP=%d FN=%d TN=%d FP=%d background %d/%d\n", c.tp, c.fn, c.tn,
                c.fp, c.background_correct, c.background_total);
  out << buf;
}

} // namespace ual::metrics
