#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ual/network.hpp"
#include "ual/objectives.hpp"
#include "ual/radiomics.hpp"

namespace ual {

enum class OptimizerKind { Sgd, Adam };

struct TrainConfig {
  ModelConfig model;
  int batch_size = 2;
  long iterations = 100;
  double learning_rate = 1e-4;
  objectives::LossWeights weights;
  OptimizerKind optimizer = OptimizerKind::Sgd;
  objectives::DiscLabels disc_labels = objectives::DiscLabels::Conventional;
  std::uint64_t seed = 7;
  long checkpoint_every = 0; // 0: final checkpoint only

  /// Throws ConfigError on invalid values.
  void validate() const;
};

nlohmann::ordered_json to_json(const TrainConfig &cfg);
/// Throws ConfigError on missing or invalid fields.
TrainConfig train_config_from_json(const nlohmann::ordered_json &j);

struct StepRecord {
  long step = 0;
  double l_seg = 0, l_pixce = 0, l_adv_seg = 0, l_cls = 0, l_reg = 0, l_adv_dec = 0, l_disc = 0;
  int empty_regions = 0; // positive samples whose predicted region was empty (zero radiomics)
};

inline constexpr const char *kTrainLogHeader =
    "step,l_seg,l_pixce,l_adv_seg,l_cls,l_reg,l_adv_dec,l_disc";
std::string format_log_row(const StepRecord &r);

/// Owns the network, optimizers and per-sample caches of one training run.
class Trainer {
public:
  /// Throws ConfigError for an empty corpus or invalid config, DataError for
  /// samples whose size does not fit the network.
  Trainer(TrainConfig cfg, std::vector<Sample> corpus);
  ~Trainer();
  Trainer(const Trainer &) = delete;
  Trainer &operator=(const Trainer &) = delete;

  /// Corpus indices of the batch for 1-based `step`: consecutive slices of
  /// per-epoch permutations drawn from the seed.
  [[nodiscard]] std::vector<std::size_t> batch_indices(long step) const;

  /// One discriminator update then one generator update on the given batch.
  /// Throws NumericError (with the loss breakdown) on a non-finite loss.
  StepRecord train_step(const std::vector<std::size_t> &batch);
  /// train_step on batch_indices(steps_done() + 1).
  StepRecord step();

  [[nodiscard]] long steps_done() const { return step_; }
  [[nodiscard]] const TrainConfig &config() const { return cfg_; }
  [[nodiscard]] Network &network() { return net_; }
  [[nodiscard]] const Network &network() const { return net_; }
  [[nodiscard]] const radiomics::Normalizer &normalizer() const { return normalizer_; }
  [[nodiscard]] const std::vector<Sample> &corpus() const { return corpus_; }

  void save_checkpoint(const std::filesystem::path &path) const;
  /// Restores parameters, optimizer state and step. The checkpoint's model
  /// config must match this trainer's. Throws FormatError naming the file.
  void load_checkpoint(const std::filesystem::path &path);

private:
  struct Prepared;
  const Prepared &prepared(std::size_t index);

  TrainConfig cfg_;
  std::vector<Sample> corpus_;
  Network net_;
  radiomics::Normalizer normalizer_;
  std::unique_ptr<nn::Optimizer> opt_seg_, opt_dec_, opt_dis_;
  std::vector<std::unique_ptr<Prepared>> cache_;
  mutable std::vector<std::vector<std::size_t>> perms_;
  long step_ = 0;
};

struct TrainOptions {
  std::filesystem::path out_dir;                 // train_log.csv and checkpoints
  std::filesystem::path resume_from;             // empty: fresh run
  std::function<void(const StepRecord &)> on_step; // progress hook
};

/// Runs steps up to cfg.iterations, appending to train_log.csv and writing
/// checkpoint_<step>.ual every checkpoint_every steps plus final.ual.
/// On resume, log rows past the checkpoint step are dropped first.
void train(Trainer &trainer, const TrainOptions &opts);

/// Network rebuilt from a checkpoint's config echo and parameters.
struct LoadedModel {
  TrainConfig cfg;
  Network net;
  long step = 0;
};
LoadedModel load_model(const std::filesystem::path &path);

} // namespace ual
