#include "ual/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "ual/errors.hpp"
#include "ual/pipeline.hpp"
#include "ual/trainer.hpp"
#include "ual/uald_io.hpp"

namespace ual::cli {

namespace fs = std::filesystem;

namespace {

const std::set<std::string> kBoolFlags = {"swap-disc-labels", "oracle", "no-figures"};

std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

struct TrainArgs {
  std::string data, out, config, resume;
  long iterations = 100;
  int batch_size = 2;
  double learning_rate = 1e-4;
  std::string optimizer = "sgd";
  std::uint64_t seed = 7;
  int base_channels = 64;
  std::vector<std::string> ablate;
  std::string modalities = "t1,t2,dwi";
  std::string phases = "a,pv,delay";
  bool swap_disc_labels = false;
  std::string cswp_mode = "soft";
  double cswp_sharpness = 4.0;
  double lambda1 = 1.0, lambda2 = 1.0, lambda3 = 1.0;
  long checkpoint_every = 0;
};

void add_train_options(CLI::App *app, TrainArgs &a) {
  app->add_option("--data", a.data, "Training corpus directory")->required();
  app->add_option("--out", a.out, "Output directory")->required();
  app->add_option("--config", a.config, "Flat key = value config file; flags override it");
  app->add_option("--iterations", a.iterations, "Training steps")->capture_default_str();
  app->add_option("--batch-size", a.batch_size)->capture_default_str();
  app->add_option("--lr", a.learning_rate, "Learning rate")->capture_default_str();
  app->add_option("--optimizer", a.optimizer)
      ->check(CLI::IsMember({"sgd", "adam"}))
      ->capture_default_str();
  app->add_option("--seed", a.seed)->capture_default_str();
  app->add_option("--base-channels", a.base_channels, "Width multiplier (64 = encoder widths 64/128/256/512)")
      ->capture_default_str();
  app->add_option("--ablate", a.ablate, "Disable components: edfpm, fsc, cswp, mpr, mprgd")
      ->delimiter(',');
  app->add_option("--modalities", a.modalities, "NCMRI combo, e.g. t1,dwi")
      ->capture_default_str();
  app->add_option("--phases", a.phases, "CEMRI phase combo, e.g. a,delay")->capture_default_str();
  app->add_flag("--swap-disc-labels", a.swap_disc_labels,
                "Discriminator labels fake->1, real->0");
  app->add_option("--cswp-mode", a.cswp_mode)
      ->check(CLI::IsMember({"hard", "soft"}))
      ->capture_default_str();
  app->add_option("--cswp-sharpness", a.cswp_sharpness)->capture_default_str();
  app->add_option("--lambda1", a.lambda1)->capture_default_str();
  app->add_option("--lambda2", a.lambda2)->capture_default_str();
  app->add_option("--lambda3", a.lambda3)->capture_default_str();
  app->add_option("--checkpoint-every", a.checkpoint_every, "0 = final checkpoint only")
      ->capture_default_str();
}

TrainConfig to_config(const TrainArgs &a) {
  TrainConfig c;
  c.model.base_channels = a.base_channels;
  c.model.modalities = parse_modalities(a.modalities);
  c.model.phases = parse_phases(a.phases);
  for (const auto &name : a.ablate)
    ablate(c.model.components, trim(name));
  c.model.cswp_mode = a.cswp_mode == "hard" ? cswp::WindowMode::Hard : cswp::WindowMode::Soft;
  c.model.cswp_sharpness = a.cswp_sharpness;
  c.batch_size = a.batch_size;
  c.iterations = a.iterations;
  c.learning_rate = a.learning_rate;
  c.optimizer = a.optimizer == "adam" ? OptimizerKind::Adam : OptimizerKind::Sgd;
  c.seed = a.seed;
  c.disc_labels =
      a.swap_disc_labels ? objectives::DiscLabels::Printed : objectives::DiscLabels::Conventional;
  c.weights = {a.lambda1, a.lambda2, a.lambda3};
  c.checkpoint_every = a.checkpoint_every;
  c.validate();
  return c;
}

std::vector<Sample> load_split(const std::string &dir) {
  if (!fs::is_directory(dir))
    throw ConfigError("data directory '" + dir + "' does not exist");
  auto samples = read_corpus(dir);
  if (samples.empty())
    throw ConfigError("data directory '" + dir + "' holds no samples");
  return samples;
}

std::array<double, 3> parse_mix(const std::string &s) {
  std::array<double, 3> mix{};
  std::stringstream ss(s);
  std::string item;
  int i = 0;
  while (std::getline(ss, item, ',')) {
    if (i >= 3)
      throw ConfigError("--mix takes three fractions, got more");
    try {
      std::size_t pos = 0;
      mix[i] = std::stod(item, &pos);
      if (trim(item.substr(pos)) != "")
        throw std::invalid_argument(item);
    } catch (const std::logic_error &) {
      throw ConfigError("--mix: '" + item + "' is not a number");
    }
    ++i;
  }
  if (i != 3)
    throw ConfigError("--mix takes three fractions (no tumour, hemangioma, HCC)");
  return mix;
}

int cmd_generate(const CorpusSpec &spec, const std::string &out_dir, std::ostream &out) {
  auto corpus = generate_corpus(spec);
  write_corpus(corpus, out_dir);
  std::array<int, 3> counts{};
  for (const auto &s : corpus)
    ++counts[s.cls];
  out << "wrote " << corpus.size() << " samples to " << out_dir << "\n";
  out << "class counts: no_tumor=" << counts[0] << " hemangioma=" << counts[1]
      << " hcc=" << counts[2] << "\n";
  return kExitOk;
}

int cmd_train(const TrainArgs &a, const CLI::App &sub, std::ostream &out, std::ostream &err) {
  TrainConfig cfg = to_config(a);
  if (!a.resume.empty()) {
    // the run continues under the checkpoint's own config
    const long iterations = cfg.iterations;
    cfg = load_model(a.resume).cfg;
    if (sub.count("--iterations") > 0)
      cfg.iterations = iterations;
  }
  auto corpus = load_split(a.data);
  Trainer trainer(cfg, std::move(corpus));
  TrainOptions opts;
  opts.out_dir = a.out;
  opts.resume_from = a.resume;
  const long every = std::max<long>(1, cfg.iterations / 10);
  opts.on_step = [&](const StepRecord &r) {
    if (r.empty_regions > 0)
      err << "step " << r.step << ": " << r.empty_regions
          << " empty predicted region(s), zero radiomics vector used\n";
    if (r.step % every == 0 || r.step == cfg.iterations)
      out << format_log_row(r) << "\n" << std::flush;
  };
  out << kTrainLogHeader << "\n";
  train(trainer, opts);
  out << "final checkpoint: " << (fs::path(a.out) / "final.ual").string() << "\n";
  return kExitOk;
}

int cmd_eval(const std::string &data, const std::string &checkpoint, const std::string &out_dir,
             bool oracle, bool no_figures, std::ostream &out) {
  const auto samples = load_split(data);
  std::vector<pipeline::Prediction> preds;
  std::vector<Modality> modalities{kAllModalities.begin(), kAllModalities.end()};
  if (oracle) {
    preds = pipeline::oracle_predictions(samples);
  } else {
    if (checkpoint.empty())
      throw ConfigError("eval needs --checkpoint unless --oracle is given");
    const LoadedModel m = load_model(checkpoint);
    modalities = m.cfg.model.modalities;
    preds = pipeline::predict(m.net, samples);
  }
  const auto report = pipeline::score(samples, preds);
  pipeline::write_eval_outputs(out_dir, report, samples, preds, modalities, !no_figures);
  metrics::write_summary(report, out);
  return kExitOk;
}

int cmd_sweep(const TrainArgs &a, const std::string &kind, const std::string &combos,
              const std::string &eval_data, int parallel, std::ostream &out) {
  const TrainConfig base = to_config(a);
  const auto entries = pipeline::sweep_entries(pipeline::parse_sweep_kind(kind), base, combos);
  const auto train_set = load_split(a.data);
  const auto eval_set = eval_data.empty() ? train_set : load_split(eval_data);
  const auto rows = pipeline::run_sweep(entries, train_set, eval_set, parallel, &out);
  fs::create_directories(a.out);
  std::ostringstream csv;
  pipeline::write_sweep_csv(rows, csv);
  const fs::path path = fs::path(a.out) / ("sweep_" + kind + ".csv");
  io::write_file_atomic(path, csv.str());
  out << csv.str() << "wrote " << path.string() << "\n";
  return kExitOk;
}

int cmd_features(const std::string &data, const std::string &out_path, const std::string &phases,
                 std::ostream &out) {
  const auto samples = load_split(data);
  const auto ps = parse_phases(phases);
  std::ostringstream csv;
  csv << "sample_id,cls";
  for (const auto &name : radiomics::feature_names(ps))
    csv << ',' << name;
  csv << '\n';
  int rows = 0;
  char buf[64];
  for (const Sample &s : samples) {
    if (s.cls == 0)
      continue;
    std::vector<const Grid *> planes;
    for (Phase p : ps)
      planes.push_back(&s.phase(p));
    csv << s.id << ',' << s.cls;
    for (double v : radiomics::region_features(s.mask, planes)) {
      std::snprintf(buf, sizeof buf, ",%.9g", v);
      csv << buf;
    }
    csv << '\n';
    ++rows;
  }
  io::write_file_atomic(out_path, csv.str());
  out << "wrote " << rows << " rows to " << out_path << "\n";
  return kExitOk;
}

} // namespace

std::map<std::string, std::string> read_config_file(const fs::path &path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot read config file '" + path.string() + "'");
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty())
      continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty())
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": empty key");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

std::vector<std::string> merge_config(const std::vector<std::string> &args) {
  std::string file;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size())
      file = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0)
      file = args[i].substr(9);
  }
  if (file.empty())
    return args;
  std::vector<std::string> merged = args;
  for (const auto &[key, value] : read_config_file(file)) {
    const std::string flag = "--" + key;
    const bool given = std::any_of(args.begin(), args.end(), [&](const std::string &a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
    if (given)
      continue;
    if (kBoolFlags.count(key)) {
      if (value == "true" || value == "1")
        merged.push_back(flag);
      else if (value != "false" && value != "0")
        throw ConfigError("config key '" + key + "' expects true or false");
    } else {
      merged.push_back(flag);
      merged.push_back(value);
    }
  }
  return merged;
}

int run(const std::vector<std::string> &raw_args, std::ostream &out, std::ostream &err) {
  CLI::App app{"Joint adversarial liver tumour segmentation and detection", "ual"};
  app.require_subcommand(1);

  CorpusSpec gen;
  std::string gen_out, mix = "0.2,0.4,0.4";
  auto *g = app.add_subcommand("generate", "Write a synthetic phantom corpus");
  g->add_option("--seed", gen.seed)->capture_default_str();
  g->add_option("--count", gen.count)->capture_default_str();
  g->add_option("--height", gen.height)->capture_default_str();
  g->add_option("--width", gen.width)->capture_default_str();
  g->add_option("--mix", mix, "Class fractions: no tumour, hemangioma, HCC")
      ->capture_default_str();
  g->add_option("--out", gen_out)->required();

  TrainArgs targs;
  auto *t = app.add_subcommand("train", "Train on a corpus");
  add_train_options(t, targs);
  t->add_option("--resume", targs.resume, "Checkpoint to continue from");

  std::string e_data, e_ckpt, e_out;
  bool oracle = false, no_figures = false;
  auto *e = app.add_subcommand("eval", "Evaluate a checkpoint on a corpus");
  e->add_option("--data", e_data)->required();
  e->add_option("--checkpoint", e_ckpt);
  e->add_option("--out", e_out)->required();
  e->add_flag("--oracle", oracle, "Score ground truth against itself");
  e->add_flag("--no-figures", no_figures, "Skip PNG overlays and heatmaps");

  TrainArgs sargs;
  std::string kind, combos, eval_data;
  int parallel = 1;
  auto *s = app.add_subcommand("sweep", "Train and score a grid of combos or ablations");
  add_train_options(s, sargs);
  s->add_option("--kind", kind)
      ->required()
      ->check(CLI::IsMember({"modalities", "phases", "ablations"}));
  s->add_option("--combos", combos, "';'-separated combos, e.g. \"t1;t2,dwi\"");
  s->add_option("--eval-data", eval_data, "Corpus to score on (default: --data)");
  s->add_option("--parallel", parallel)->capture_default_str()->check(CLI::PositiveNumber);

  std::string f_data, f_out, f_phases = "a,pv,delay";
  auto *f = app.add_subcommand("features", "Dump ground-truth radiomics features as CSV");
  f->add_option("--data", f_data)->required();
  f->add_option("--out", f_out)->required();
  f->add_option("--phases", f_phases)->capture_default_str();

  try {
    std::vector<std::string> args = merge_config(raw_args);
    std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
    app.parse(rev);
    if (*g)
      return cmd_generate([&] {
        gen.class_mix = parse_mix(mix);
        return gen;
      }(), gen_out, out);
    if (*t)
      return cmd_train(targs, *t, out, err);
    if (*e)
      return cmd_eval(e_data, e_ckpt, e_out, oracle, no_figures, out);
    if (*s)
      return cmd_sweep(sargs, kind, combos, eval_data, parallel, out);
    if (*f)
      return cmd_features(f_data, f_out, f_phases, out);
    return kExitConfig;
  } catch (const CLI::ParseError &ex) {
    const int code = app.exit(ex, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  } catch (const ConfigError &ex) {
    err << "error: " << ex.what() << "\n";
    return kExitConfig;
  } catch (const NumericError &ex) {
    err << "numeric error: " << ex.what() << "\n";
    return kExitNumeric;
  } catch (const DataError &ex) {
    err << "data error: " << ex.what() << "\n";
    return kExitData;
  } catch (const fs::filesystem_error &ex) {
    err << "data error: " << ex.what() << "\n";
    return kExitData;
  } catch (const std::exception &ex) {
    err << "error: " << ex.what() << "\n";
    return 1;
  }
}

} // namespace ual::cli
