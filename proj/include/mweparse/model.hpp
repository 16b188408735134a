#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mweparse/cupt.hpp"
#include "mweparse/tags.hpp"
#include "mweparse/tensor.hpp"
#include "mweparse/tree_crf.hpp"

namespace mweparse {

enum class TaskMode { SingleTask, MultiTask };
enum class ArcNonlinearity { Tanh, Identity };

struct Vocabulary {
  std::vector<std::string> id_to_word{ "<unk>" };
  std::unordered_map<std::string, int> word_to_id;

  int add(const std::string& w);
  int id_of(const std::string& w) const;  // 0 for unknown words
  int size() const { return static_cast<int>(id_to_word.size()); }
};

struct ModelConfig {
  int embedding_dim = 16;
  int encoder_layers = 2;
  int hidden_dim = 32;    // feedforward width inside a block
  int arc_proj_dim = 12;  // head/dependent projection width
  // weight on the dependency loss; < 0 means "unset", resolved by
  // effective_alpha() to 1/300 in multi-task mode and 0 in single-task
  double alpha = -1.0;
  TaskMode mode = TaskMode::MultiTask;
  Regime regime = Regime::NonProjective;
  int max_len = 64;  // maximum subtokens per sentence
  std::uint64_t seed = 1;
  int subtoken_chunk = 0;  // > 0 splits forms into chunks of that many codepoints
  ArcNonlinearity arc_phi = ArcNonlinearity::Tanh;
  Vocabulary words;
  LabelVocabulary labels;

  int vocab_size() const { return words.size(); }
  double effective_alpha() const;
  void validate() const;
};

struct Parameters {
  struct Block {
    Tensor wq, wk, wv, wo;          // attention projections
    Tensor ff_w1, ff_b1, ff_w2, ff_b2;
  };
  Tensor tok_emb;  // vocab x d
  Tensor pos_emb;  // max_len x d
  std::vector<Block> blocks;
  Tensor mwe_w, mwe_b;              // d x labels, 1 x labels
  Tensor arc_head_w, arc_dep_w;     // d x p
  Tensor arc_u;                     // p x p
  Tensor arc_root;                  // 1 x p

  // All weights drawn from seeded uniform(-0.1, 0.1) in a fixed order.
  static Parameters init(const ModelConfig& cfg);

  template <class F>
  void for_each(F&& f) {
    f("tok_emb", tok_emb);
    f("pos_emb", pos_emb);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      const std::string p = "block" + std::to_string(i) + ".";
      f(p + "wq", blocks[i].wq);
      f(p + "wk", blocks[i].wk);
      f(p + "wv", blocks[i].wv);
      f(p + "wo", blocks[i].wo);
      f(p + "ff_w1", blocks[i].ff_w1);
      f(p + "ff_b1", blocks[i].ff_b1);
      f(p + "ff_w2", blocks[i].ff_w2);
      f(p + "ff_b2", blocks[i].ff_b2);
    }
    f("mwe_w", mwe_w);
    f("mwe_b", mwe_b);
    f("arc_head_w", arc_head_w);
    f("arc_dep_w", arc_dep_w);
    f("arc_u", arc_u);
    f("arc_root", arc_root);
  }

  std::size_t scalar_count();
};

// One sentence ready for the network.
struct SentenceEncoding {
  std::vector<int> token_ids;            // per subtoken
  std::vector<int> word_first_subtoken;  // alignment, one entry per word
  std::vector<bool> first_piece;         // mask over subtokens
  std::vector<int> gold_tags;            // per word; -1 = no trainable label
  std::vector<int> gold_heads;           // per word; empty when unknown
  bool has_gold_tree = false;

  int words() const { return static_cast<int>(word_first_subtoken.size()); }
  int subtokens() const { return static_cast<int>(token_ids.size()); }
};

// Tokenize + align a sentence; gold fields are filled when with_gold is set
// (unencodable gold expressions are dropped, counted via *dropped_mwes).
SentenceEncoding encode_sentence(const Sentence& sentence, const ModelConfig& cfg,
                                 bool with_gold, int* dropped_mwes = nullptr);

// Vocabulary over training forms (plus subtoken chunks when enabled).
Vocabulary build_word_vocab(const Corpus& corpus, int subtoken_chunk);

// Shared encoder: embeddings + positions, then the self-attention blocks.
// One row per subtoken.
Tensor encoder_forward(const Parameters& params, const ModelConfig& cfg,
                       const SentenceEncoding& enc);

// Tag logits from the first-subtoken row of each word.
Tensor mwe_logits(const Parameters& params, const Tensor& hidden,
                  const std::vector<int>& word_first_subtoken);

// (n+1) x n arc log-potentials: projected head/dependent representations
// through the bilinear form, learned root row on top.
Tensor arc_score_tensor(const Parameters& params, const ModelConfig& cfg,
                        const Tensor& hidden,
                        const std::vector<int>& word_first_subtoken);

struct LossBreakdown {
  double loss_mwe = 0;
  double loss_dep = 0;
  double combined = 0;
};

struct BatchLoss {
  Tensor root;  // scalar on the tape
  LossBreakdown values;
  int tree_sentences = 0;        // sentences that fed the dependency loss
  int skipped_trees = 0;         // invalid gold or regime mismatch
};

BatchLoss combined_loss(const Parameters& params, const ModelConfig& cfg,
                        const std::vector<SentenceEncoding>& batch);

struct Prediction {
  TagSequence tags;
  DepTree tree;
};

// Argmax tags (lowest label index wins ties) and the MAP tree; single-task
// mode and over-long sentences fall back to the right-branching tree.
Prediction predict(const Parameters& params, const ModelConfig& cfg,
                   const Sentence& sentence);

DepTree right_branching(int n);

// Versioned JSON container holding config, vocabularies and parameters.
std::string checkpoint_to_json(const ModelConfig& cfg, Parameters& params);
std::pair<ModelConfig, Parameters> checkpoint_from_json(const std::string& text);
void save_checkpoint(const std::string& path, const ModelConfig& cfg, Parameters& params);
std::pair<ModelConfig, Parameters> load_checkpoint(const std::string& path);

}  // namespace mweparse
