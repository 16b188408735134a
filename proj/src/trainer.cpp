#include "mweparse/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mweparse/eval.hpp"

namespace mweparse {

void TrainConfig::validate() const {
  if (epochs < 1) throw ContractError("epochs must be >= 1");
  if (batch_size < 1) throw ContractError("batch_size must be >= 1");
  if (learning_rate <= 0) throw ContractError("learning_rate must be positive");
  if (grad_clip < 0) throw ContractError("grad_clip must be >= 0");
}

Adam::Adam(Parameters& params, const TrainConfig& cfg)
    : params_(params), lr_(cfg.learning_rate), beta1_(cfg.beta1), beta2_(cfg.beta2),
      eps_(cfg.eps) {
  params_.for_each([this](const std::string&, Tensor& t) {
    m_.emplace_back(t.size(), 0.0);
    v_.emplace_back(t.size(), 0.0);
  });
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  std::size_t slot = 0;
  params_.for_each([&](const std::string& name, Tensor& t) {
    if (!t.has_grad()) t.zero_grad();
    const std::vector<double>& g = t.grad();
    std::vector<double>& m = m_[slot];
    std::vector<double>& v = v_[slot];
    ++slot;
    for (int i = 0; i < t.size(); ++i) {
      if (!std::isfinite(g[i])) {
        throw NumericalDegeneracyError("non-finite gradient in parameter '" + name + "'");
      }
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      t.mut_data()[i] -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
    }
  });
}

std::vector<std::vector<int>> make_batches(const std::vector<SentenceEncoding>& encoded,
                                           int batch_size, int max_len, Rng& shuffler) {
  if (batch_size < 1) throw ContractError("batch_size must be >= 1");
  std::vector<int> usable;
  for (std::size_t i = 0; i < encoded.size(); ++i)
    if (encoded[i].subtokens() <= max_len) usable.push_back(static_cast<int>(i));
  if (usable.empty()) throw DegenerateInputError("no trainable sentences under max_len");
  shuffler.shuffle(usable);
  std::vector<std::vector<int>> batches;
  for (std::size_t i = 0; i < usable.size(); i += batch_size) {
    batches.emplace_back(usable.begin() + i,
                         usable.begin() + std::min(usable.size(), i + batch_size));
  }
  return batches;
}

namespace {

void clip_gradients(Parameters& params, double max_norm) {
  double sq = 0;
  params.for_each([&sq](const std::string&, Tensor& t) {
    if (!t.has_grad()) return;
    for (double g : t.grad()) sq += g * g;
  });
  const double norm = std::sqrt(sq);
  if (norm <= max_norm || norm == 0) return;
  const double factor = max_norm / norm;
  params.for_each([&](const std::string&, Tensor& t) {
    if (!t.has_grad()) return;
    for (double& g : t.mut_grad()) g *= factor;
  });
}

std::pair<double, double> dev_scores(const Corpus& dev, const Parameters& params,
                                     const ModelConfig& cfg, const SeenIndex& index) {
  std::vector<SentenceInstances> gold, predicted;
  gold.reserve(dev.size());
  predicted.reserve(dev.size());
  for (const Sentence& sent : dev) {
    gold.push_back(extract_mwes(sent));
    predicted.push_back(decode_tags(predict(params, cfg, sent).tags));
  }
  PRF global = mwe_based_prf(gold, predicted);
  PRF unseen = unseen_prf(dev, gold, predicted, index);
  return {global.f1, unseen.f1};
}

}  // namespace

std::string TrainResult::log_text() const {
  std::ostringstream out;
  out << "epoch\tloss_mwe\tloss_dep\tcombined\tdev_global_f1\tdev_unseen_f1\n";
  for (const EpochStats& e : log) {
    out << e.epoch << '\t' << format_fixed(e.loss.loss_mwe, 6) << '\t'
        << format_fixed(e.loss.loss_dep, 6) << '\t' << format_fixed(e.loss.combined, 6)
        << '\t' << format_fixed(100.0 * e.dev_global_f1, 2) << '\t'
        << format_fixed(100.0 * e.dev_unseen_f1, 2) << '\n';
  }
  return out.str();
}

TrainResult train(const Corpus& train_corpus, const Corpus* dev_corpus, ModelConfig cfg,
                  const TrainConfig& tcfg) {
  tcfg.validate();
  Corpus merged;
  const Corpus* effective_train = &train_corpus;
  if (tcfg.merge_dev && dev_corpus != nullptr) {
    merged = train_corpus;
    merged.insert(merged.end(), dev_corpus->begin(), dev_corpus->end());
    effective_train = &merged;
  }
  if (effective_train->empty()) throw DegenerateInputError("empty training corpus");

  cfg.words = build_word_vocab(*effective_train, cfg.subtoken_chunk);
  cfg.labels = build_label_vocab(*effective_train);
  cfg.validate();

  TrainResult result;
  result.params = Parameters::init(cfg);

  std::vector<SentenceEncoding> encoded;
  encoded.reserve(effective_train->size());
  for (const Sentence& sent : *effective_train) {
    encoded.push_back(encode_sentence(sent, cfg, true, &result.dropped_gold_mwes));
  }
  for (const SentenceEncoding& enc : encoded)
    result.excluded_overlong += enc.subtokens() > cfg.max_len;
  if (result.excluded_overlong > 0) {
    warn(std::to_string(result.excluded_overlong) +
         " sentence(s) longer than max_len excluded from training");
  }

  const SeenIndex seen = dev_corpus ? build_seen_index(*effective_train) : SeenIndex{};
  Rng shuffler(tcfg.seed);
  Adam adam(result.params, tcfg);

  for (int epoch = 1; epoch <= tcfg.epochs; ++epoch) {
    auto batches = make_batches(encoded, tcfg.batch_size, cfg.max_len, shuffler);
    LossBreakdown epoch_loss;
    long seen_sentences = 0;
    int skipped = 0;
    for (const std::vector<int>& batch_ids : batches) {
      std::vector<SentenceEncoding> batch;
      batch.reserve(batch_ids.size());
      for (int id : batch_ids) batch.push_back(encoded[id]);
      result.params.for_each([](const std::string&, Tensor& t) { t.zero_grad(); });
      BatchLoss loss = combined_loss(result.params, cfg, batch);
      backward(loss.root);
      if (tcfg.grad_clip > 0) clip_gradients(result.params, tcfg.grad_clip);
      adam.step();
      const long bs = static_cast<long>(batch.size());
      epoch_loss.loss_mwe += loss.values.loss_mwe * bs;
      epoch_loss.loss_dep += loss.values.loss_dep * bs;
      epoch_loss.combined += loss.values.combined * bs;
      seen_sentences += bs;
      skipped += loss.skipped_trees;
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.loss.loss_mwe = epoch_loss.loss_mwe / seen_sentences;
    stats.loss.loss_dep = epoch_loss.loss_dep / seen_sentences;
    stats.loss.combined = epoch_loss.combined / seen_sentences;
    if (dev_corpus != nullptr) {
      auto [global_f1, unseen_f1] = dev_scores(*dev_corpus, result.params, cfg, seen);
      stats.dev_global_f1 = global_f1;
      stats.dev_unseen_f1 = unseen_f1;
    }
    result.skipped_tree_sentences = skipped;
    if (epoch > 3 && stats.loss.loss_mwe > result.log.back().loss.loss_mwe) {
      result.mwe_loss_rose = true;
      warn("tagging loss rose in epoch " + std::to_string(epoch));
    }
    result.log.push_back(stats);
  }
  result.config = std::move(cfg);
  return result;
}

}  // namespace mweparse
