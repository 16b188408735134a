#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mweparse/model.hpp"
#include "mweparse/util.hpp"

namespace mweparse {

struct TrainConfig {
  double learning_rate = 1e-3;  // 3e-5 is the preset for fine-tuning regimes
  int batch_size = 10;
  int epochs = 10;
  std::uint64_t seed = 1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double grad_clip = 0;   // max global norm, 0 disables
  bool merge_dev = false;  // fold the dev corpus into training

  void validate() const;
};

// Standard Adam with bias correction over the named parameter tensors.
// Gradients are read from each tensor's grad buffer.
class Adam {
 public:
  Adam(Parameters& params, const TrainConfig& cfg);
  void step();
  long steps() const { return t_; }

 private:
  Parameters& params_;
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

// Seeded shuffle of the usable sentences, chunked; the last partial batch is
// kept. Throws DegenerateInputError when nothing fits under max_len.
std::vector<std::vector<int>> make_batches(const std::vector<SentenceEncoding>& encoded,
                                           int batch_size, int max_len, Rng& shuffler);

struct EpochStats {
  int epoch = 0;
  LossBreakdown loss;  // batch-size-weighted means over the epoch
  double dev_global_f1 = 0;
  double dev_unseen_f1 = 0;
};

struct TrainResult {
  ModelConfig config;  // vocabularies filled in
  Parameters params;
  std::vector<EpochStats> log;
  int excluded_overlong = 0;
  int dropped_gold_mwes = 0;
  int skipped_tree_sentences = 0;  // per-epoch count of unusable gold trees
  bool mwe_loss_rose = false;      // loss_mwe increased after epoch 3

  std::string log_text() const;  // tab-separated, one line per epoch
};

// Fixed-epoch regimen: shuffle, batch, combined loss, Adam step; dev scores
// are logged each epoch and the final-epoch parameters are returned.
TrainResult train(const Corpus& train_corpus, const Corpus* dev_corpus, ModelConfig cfg,
                  const TrainConfig& tcfg);

}  // namespace mweparse
