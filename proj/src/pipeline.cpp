#include "ual/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "ual/errors.hpp"
#include "ual/figures.hpp"
#include "ual/uald_io.hpp"

namespace ual::pipeline {

std::vector<Prediction> predict(const Network &net, const std::vector<Sample> &samples) {
  std::vector<Prediction> out;
  out.reserve(samples.size());
  for (const Sample &s : samples) {
    auto [seg, det] = infer(s, net);
    out.push_back({std::move(seg), det});
  }
  return out;
}

std::vector<Prediction> oracle_predictions(const std::vector<Sample> &samples) {
  std::vector<Prediction> out;
  for (const Sample &s : samples) {
    Prediction p;
    p.seg.probs = s.mask;
    p.det.class_probs = {0, 0, 0};
    p.det.class_probs[s.cls] = 1.0;
    p.det.box = s.box.value_or(BoxTuple{s.width() / 2.0, s.height() / 2.0, 1.0});
    out.push_back(std::move(p));
  }
  return out;
}

metrics::EvalReport score(const std::vector<Sample> &samples,
                          const std::vector<Prediction> &preds) {
  if (samples.size() != preds.size())
    throw DimensionError("score: sample and prediction counts differ");
  std::vector<metrics::EvalInput> in;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    metrics::EvalInput e;
    e.sample_id = samples[i].id;
    e.pred_mask = &preds[i].seg.probs;
    e.gt_mask = &samples[i].mask;
    e.gt_box = samples[i].box;
    e.gt_cls = samples[i].cls;
    e.pred_cls = preds[i].det.cls();
    if (e.pred_cls >= 1)
      e.pred_box = preds[i].det.box;
    in.push_back(e);
  }
  return metrics::evaluate(in);
}

void write_eval_outputs(const std::filesystem::path &out_dir, const metrics::EvalReport &report,
                        const std::vector<Sample> &samples, const std::vector<Prediction> &preds,
                        const std::vector<Modality> &modalities, bool figures) {
  std::filesystem::create_directories(out_dir);
  metrics::write_eval_csv(report, out_dir / "eval.csv");
  std::ostringstream summary;
  metrics::write_summary(report, summary);
  io::write_file_atomic(out_dir / "summary.txt", summary.str());
  if (!figures)
    return;
  const auto fig_dir = out_dir / "figures";
  std::filesystem::create_directories(fig_dir);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Sample &s = samples[i];
    const Prediction &p = preds[i];
    std::optional<BoxTuple> box;
    if (p.det.cls() >= 1)
      box = p.det.box;
    for (Modality m : modalities)
      figures::write_png(fig_dir / (s.id + "_" + modality_name(m) + "_overlay.png"),
                         figures::overlay(s.modality(m), p.seg.probs, &s.mask, box));
    figures::write_png(fig_dir / (s.id + "_heatmap.png"), figures::heatmap(p.seg.probs));
  }
}

SweepKind parse_sweep_kind(const std::string &s) {
  if (s == "modalities")
    return SweepKind::Modalities;
  if (s == "phases")
    return SweepKind::Phases;
  if (s == "ablations")
    return SweepKind::Ablations;
  throw ConfigError("unknown sweep kind '" + s + "' (expected modalities, phases or ablations)");
}

namespace {

std::vector<std::string> split(const std::string &s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, sep);)
    if (!item.empty())
      out.push_back(item);
  return out;
}

std::string plus_joined(const std::string &csv) {
  std::string out = csv;
  std::replace(out.begin(), out.end(), ',', '+');
  return out;
}

} // namespace

std::vector<SweepEntry> sweep_entries(SweepKind kind, const TrainConfig &base,
                                      const std::string &custom) {
  std::vector<std::string> items;
  if (!custom.empty()) {
    items = split(custom, ';');
  } else if (kind == SweepKind::Modalities) {
    items = {"t1", "t2", "dwi", "t1,t2", "t1,dwi", "t2,dwi", "t1,t2,dwi"};
  } else if (kind == SweepKind::Phases) {
    items = {"a", "pv", "delay", "a,pv", "a,delay", "pv,delay", "a,pv,delay"};
  } else {
    items = {"full", "edfpm", "fsc", "cswp", "mpr", "mprgd"};
  }
  if (items.empty())
    throw ConfigError("sweep: no combos given");
  std::vector<SweepEntry> out;
  std::set<std::string> seen;
  for (const std::string &item : items) {
    SweepEntry e{"", base};
    if (kind == SweepKind::Modalities) {
      e.cfg.model.modalities = parse_modalities(item);
      e.label = join_modalities(e.cfg.model.modalities, '+');
    } else if (kind == SweepKind::Phases) {
      e.cfg.model.phases = parse_phases(item);
      e.label = join_phases(e.cfg.model.phases, '+');
    } else if (item == "full") {
      e.label = "full";
    } else {
      ablate(e.cfg.model.components, item);
      e.label = "no_" + plus_joined(item);
    }
    if (!seen.insert(e.label).second)
      throw ConfigError("sweep: duplicate combo '" + e.label + "'");
    e.cfg.validate();
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<SweepRow> run_sweep(const std::vector<SweepEntry> &entries,
                                const std::vector<Sample> &train_set,
                                const std::vector<Sample> &eval_set, int parallel,
                                std::ostream *progress) {
  std::vector<SweepRow> rows(entries.size());
  std::vector<std::exception_ptr> errors(entries.size());
  std::mutex log_mutex;
  auto run_one = [&](std::size_t i) {
    try {
      Trainer tr(entries[i].cfg, train_set);
      while (tr.steps_done() < entries[i].cfg.iterations)
        tr.step();
      rows[i] = {entries[i].label, score(eval_set, predict(tr.network(), eval_set))};
      if (progress) {
        std::lock_guard lock(log_mutex);
        char buf[160];
        std::snprintf(buf, sizeof buf, "%-16s DSC %6.2f  Acc %6.2f\n", entries[i].label.c_str(),
                      rows[i].report.dsc, rows[i].report.acc);
        *progress << buf << std::flush;
      }
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const int workers = std::clamp(parallel, 1, static_cast<int>(entries.size()));
  if (workers == 1) {
    for (std::size_t i = 0; i < entries.size(); ++i)
      run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i; (i = next++) < entries.size();)
          run_one(i);
      });
    for (auto &t : pool)
      t.join();
  }
  for (auto &e : errors)
    if (e)
      std::rethrow_exception(e);
  return rows;
}

void write_sweep_csv(const std::vector<SweepRow> &rows, std::ostream &out) {
  out << kSweepCsvHeader << '\n';
  char buf[200];
  for (const auto &r : rows) {
    std::snprintf(buf, sizeof buf, ",%.4f,%.4f,%.4f,%.4f,%.4f,%.4f\n", r.report.dsc,
                  r.report.p_acc, r.report.iou, r.report.tpr, r.report.tnr, r.report.acc);
    out << r.label << buf;
  }
}

} // namespace ual::pipeline
