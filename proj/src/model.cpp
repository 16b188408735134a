#include "mweparse/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "mweparse/util.hpp"

namespace mweparse {

namespace {

using nlohmann::json;

std::vector<std::string> codepoint_chunks(const std::string& form, int chunk) {
  std::vector<std::string> pieces;
  std::size_t start = 0;
  int count = 0;
  for (std::size_t i = 0; i <= form.size(); ++i) {
    bool boundary = i == form.size() || (form[i] & 0xC0) != 0x80;  // not a continuation byte
    if (!boundary) continue;
    if (i > start && count == chunk) {
      pieces.push_back(form.substr(start, i - start));
      start = i;
      count = 0;
    }
    if (i < form.size()) ++count;
  }
  if (start < form.size()) pieces.push_back(form.substr(start));
  if (pieces.empty()) pieces.push_back(form);
  return pieces;
}

std::vector<std::string> subtoken_pieces(const std::string& form, int chunk) {
  if (chunk <= 0) return {form};
  return codepoint_chunks(form, chunk);
}

ArcScores arc_scores_from_tensor(const Tensor& t) {
  ArcScores s;
  s.n = t.cols();
  s.scores = t.data();
  return s;
}

}  // namespace

int Vocabulary::add(const std::string& w) {
  if (w == id_to_word[0]) return 0;
  auto it = word_to_id.find(w);
  if (it != word_to_id.end()) return it->second;
  int id = size();
  id_to_word.push_back(w);
  word_to_id.emplace(w, id);
  return id;
}

int Vocabulary::id_of(const std::string& w) const {
  auto it = word_to_id.find(w);
  return it == word_to_id.end() ? 0 : it->second;
}

double ModelConfig::effective_alpha() const {
  if (alpha >= 0) return alpha;
  return mode == TaskMode::MultiTask ? 1.0 / 300.0 : 0.0;
}

void ModelConfig::validate() const {
  if (embedding_dim < 1 || hidden_dim < 1 || arc_proj_dim < 1) {
    throw ContractError("model dimensions must be positive");
  }
  if (encoder_layers < 0) throw ContractError("encoder_layers must be >= 0");
  if (max_len < 1) throw ContractError("max_len must be >= 1");
  if (alpha >= 0 && mode == TaskMode::SingleTask && alpha != 0) {
    throw ContractError("single-task mode cannot weight a dependency loss");
  }
}

Parameters Parameters::init(const ModelConfig& cfg) {
  const int d = cfg.embedding_dim;
  Parameters p;
  p.tok_emb = Tensor::zeros(std::max(cfg.vocab_size(), 1), d, true);
  p.pos_emb = Tensor::zeros(cfg.max_len, d, true);
  p.blocks.resize(cfg.encoder_layers);
  for (Block& b : p.blocks) {
    b.wq = Tensor::zeros(d, d, true);
    b.wk = Tensor::zeros(d, d, true);
    b.wv = Tensor::zeros(d, d, true);
    b.wo = Tensor::zeros(d, d, true);
    b.ff_w1 = Tensor::zeros(d, cfg.hidden_dim, true);
    b.ff_b1 = Tensor::zeros(1, cfg.hidden_dim, true);
    b.ff_w2 = Tensor::zeros(cfg.hidden_dim, d, true);
    b.ff_b2 = Tensor::zeros(1, d, true);
  }
  p.mwe_w = Tensor::zeros(d, std::max(cfg.labels.size(), 1), true);
  p.mwe_b = Tensor::zeros(1, std::max(cfg.labels.size(), 1), true);
  p.arc_head_w = Tensor::zeros(d, cfg.arc_proj_dim, true);
  p.arc_dep_w = Tensor::zeros(d, cfg.arc_proj_dim, true);
  p.arc_u = Tensor::zeros(cfg.arc_proj_dim, cfg.arc_proj_dim, true);
  p.arc_root = Tensor::zeros(1, cfg.arc_proj_dim, true);

  Rng rng(cfg.seed);
  p.for_each([&rng](const std::string&, Tensor& t) {
    for (double& v : t.mut_data()) v = rng.uniform(-0.1, 0.1);
  });
  return p;
}

std::size_t Parameters::scalar_count() {
  std::size_t total = 0;
  for_each([&total](const std::string&, Tensor& t) { total += t.size(); });
  return total;
}

Vocabulary build_word_vocab(const Corpus& corpus, int subtoken_chunk) {
  Vocabulary vocab;
  for (const Sentence& sent : corpus)
    for (const Token& tok : sent.tokens)
      for (const std::string& piece : subtoken_pieces(tok.form, subtoken_chunk))
        vocab.add(piece);
  return vocab;
}

SentenceEncoding encode_sentence(const Sentence& sentence, const ModelConfig& cfg,
                                 bool with_gold, int* dropped_mwes) {
  SentenceEncoding enc;
  for (const Token& tok : sentence.tokens) {
    enc.word_first_subtoken.push_back(enc.subtokens());
    bool first = true;
    for (const std::string& piece : subtoken_pieces(tok.form, cfg.subtoken_chunk)) {
      enc.token_ids.push_back(cfg.words.id_of(piece));
      enc.first_piece.push_back(first);
      first = false;
    }
  }
  if (!with_gold) return enc;

  std::vector<MweInstance> gold =
      drop_encoding_conflicts(extract_mwes(sentence), dropped_mwes);
  TagSequence tags = encode_tags(sentence.size(), gold);
  enc.gold_tags.reserve(tags.size());
  for (const std::string& t : tags) enc.gold_tags.push_back(cfg.labels.index_of(t));
  if (sentence.heads_known()) {
    enc.gold_heads = sentence.heads();
    enc.has_gold_tree = is_valid_tree(enc.gold_heads);
  }
  return enc;
}

Tensor encoder_forward(const Parameters& params, const ModelConfig& cfg,
                       const SentenceEncoding& enc) {
  const int n_sub = enc.subtokens();
  if (n_sub == 0) throw ContractError("cannot encode an empty sentence");
  if (n_sub > cfg.max_len) {
    throw ContractError("sentence has " + std::to_string(n_sub) +
                        " subtokens, max_len is " + std::to_string(cfg.max_len));
  }
  std::vector<int> positions(n_sub);
  for (int i = 0; i < n_sub; ++i) positions[i] = i;
  Tensor h = add(gather_rows(params.tok_emb, enc.token_ids),
                 gather_rows(params.pos_emb, positions));
  const double att_scale = 1.0 / std::sqrt(static_cast<double>(cfg.embedding_dim));
  for (const Parameters::Block& b : params.blocks) {
    Tensor q = matmul(h, b.wq);
    Tensor k = matmul(h, b.wk);
    Tensor v = matmul(h, b.wv);
    Tensor att = softmax_rows(scale(matmul(q, transpose(k)), att_scale));
    h = add(h, matmul(matmul(att, v), b.wo));
    Tensor inner = tanh(add_row(matmul(h, b.ff_w1), b.ff_b1));
    h = add(h, add_row(matmul(inner, b.ff_w2), b.ff_b2));
  }
  return h;
}

Tensor mwe_logits(const Parameters& params, const Tensor& hidden,
                  const std::vector<int>& word_first_subtoken) {
  Tensor words = gather_rows(hidden, word_first_subtoken);
  return add_row(matmul(words, params.mwe_w), params.mwe_b);
}

Tensor arc_score_tensor(const Parameters& params, const ModelConfig& cfg,
                        const Tensor& hidden,
                        const std::vector<int>& word_first_subtoken) {
  Tensor words = gather_rows(hidden, word_first_subtoken);
  Tensor heads = matmul(words, params.arc_head_w);
  Tensor deps = matmul(words, params.arc_dep_w);
  if (cfg.arc_phi == ArcNonlinearity::Tanh) {
    heads = tanh(heads);
    deps = tanh(deps);
  }
  Tensor head_rows = concat_rows(params.arc_root, heads);  // root row on top
  return matmul(matmul(head_rows, params.arc_u), transpose(deps));
}

BatchLoss combined_loss(const Parameters& params, const ModelConfig& cfg,
                        const std::vector<SentenceEncoding>& batch) {
  if (batch.empty()) throw DegenerateInputError("empty batch");
  long total_tagged = 0;
  for (const SentenceEncoding& enc : batch)
    for (int t : enc.gold_tags) total_tagged += t >= 0;
  if (total_tagged == 0) {
    throw DegenerateInputError("no trainable tag positions in batch");
  }

  BatchLoss out;
  Tensor mwe_total, dep_total;
  for (const SentenceEncoding& enc : batch) {
    if (static_cast<int>(enc.gold_tags.size()) != enc.words()) {
      throw ContractError("batch sentence is missing gold tags");
    }
    long tagged = 0;
    std::vector<bool> mask(enc.gold_tags.size());
    std::vector<int> targets(enc.gold_tags.size());
    for (std::size_t i = 0; i < enc.gold_tags.size(); ++i) {
      mask[i] = enc.gold_tags[i] >= 0;
      targets[i] = std::max(enc.gold_tags[i], 0);
      tagged += mask[i];
    }
    Tensor h = encoder_forward(params, cfg, enc);
    if (tagged > 0) {
      Tensor ce = softmax_cross_entropy(mwe_logits(params, h, enc.word_first_subtoken),
                                        targets, mask);
      Tensor term = scale(ce, static_cast<double>(tagged) / total_tagged);
      mwe_total = mwe_total.defined() ? add(mwe_total, term) : term;
    }
    if (cfg.mode == TaskMode::MultiTask) {
      bool usable = enc.has_gold_tree && (cfg.regime == Regime::NonProjective ||
                                          is_projective(enc.gold_heads));
      if (usable) {
        Tensor scores = arc_score_tensor(params, cfg, h, enc.word_first_subtoken);
        Tensor nll = tree_nll_op(scores, DepTree{enc.gold_heads}, cfg.regime);
        dep_total = dep_total.defined() ? add(dep_total, nll) : nll;
        ++out.tree_sentences;
      } else {
        ++out.skipped_trees;
      }
    }
  }

  out.values.loss_mwe = mwe_total.item();
  Tensor root = mwe_total;
  if (cfg.mode == TaskMode::MultiTask) {
    if (out.tree_sentences > 0) {
      Tensor dep_mean = scale(dep_total, 1.0 / out.tree_sentences);
      out.values.loss_dep = dep_mean.item();
      root = add(root, scale(dep_mean, cfg.effective_alpha()));
    } else {
      warn("batch contains no usable gold tree; dependency loss is 0");
    }
  }
  out.values.combined = root.item();
  out.root = root;
  return out;
}

DepTree right_branching(int n) {
  DepTree t;
  t.heads.resize(n);
  for (int d = 1; d <= n; ++d) t.heads[d - 1] = d - 1;
  return t;
}

Prediction predict(const Parameters& params, const ModelConfig& cfg,
                   const Sentence& sentence) {
  const int n = sentence.size();
  Prediction pred;
  SentenceEncoding enc = encode_sentence(sentence, cfg, false);
  if (enc.subtokens() > cfg.max_len) {
    warn("sentence longer than max_len; emitting O tags and a right-branching tree");
    pred.tags.assign(n, "O");
    pred.tree = right_branching(n);
    return pred;
  }
  Tensor h = encoder_forward(params, cfg, enc);
  Tensor logits = mwe_logits(params, h, enc.word_first_subtoken);
  pred.tags.reserve(n);
  for (int i = 0; i < n; ++i) {
    int best = 0;
    for (int j = 1; j < logits.cols(); ++j)
      if (logits.at(i, j) > logits.at(i, best)) best = j;  // ties keep the lowest index
    pred.tags.push_back(cfg.labels.label_of(best));
  }
  if (cfg.mode == TaskMode::MultiTask) {
    Tensor scores = arc_score_tensor(params, cfg, h, enc.word_first_subtoken);
    pred.tree = map_tree(arc_scores_from_tensor(scores), cfg.regime);
  } else {
    pred.tree = right_branching(n);
  }
  return pred;
}

// --- checkpoint container ---

namespace {

constexpr const char* kCheckpointFormat = "mweparse-checkpoint";
constexpr int kCheckpointVersion = 1;

json tensor_to_json(const Tensor& t) {
  return json{{"rows", t.rows()}, {"cols", t.cols()}, {"data", t.data()}};
}

Tensor tensor_from_json(const json& j, const std::string& name) {
  if (!j.contains("rows") || !j.contains("cols") || !j.contains("data")) {
    throw CheckpointError("parameter '" + name + "' is malformed");
  }
  std::vector<double> data = j.at("data").get<std::vector<double>>();
  return Tensor::from_data(j.at("rows").get<int>(), j.at("cols").get<int>(),
                           std::move(data), true);
}

}  // namespace

std::string checkpoint_to_json(const ModelConfig& cfg, Parameters& params) {
  json j;
  j["format"] = kCheckpointFormat;
  j["version"] = kCheckpointVersion;
  json c;
  c["embedding_dim"] = cfg.embedding_dim;
  c["encoder_layers"] = cfg.encoder_layers;
  c["hidden_dim"] = cfg.hidden_dim;
  c["arc_proj_dim"] = cfg.arc_proj_dim;
  c["alpha"] = cfg.alpha;
  c["mode"] = cfg.mode == TaskMode::MultiTask ? "multi-task" : "single-task";
  c["regime"] = cfg.regime == Regime::NonProjective ? "nonprojective" : "projective";
  c["max_len"] = cfg.max_len;
  c["seed"] = cfg.seed;
  c["subtoken_chunk"] = cfg.subtoken_chunk;
  c["arc_phi"] = cfg.arc_phi == ArcNonlinearity::Tanh ? "tanh" : "identity";
  c["labels"] = cfg.labels.labels();
  c["words"] = cfg.words.id_to_word;
  j["config"] = std::move(c);
  json p;
  params.for_each([&p](const std::string& name, Tensor& t) { p[name] = tensor_to_json(t); });
  j["params"] = std::move(p);
  return j.dump();
}

std::pair<ModelConfig, Parameters> checkpoint_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || j.value("format", "") != kCheckpointFormat) {
    throw CheckpointError("not a model checkpoint");
  }
  if (j.value("version", -1) != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version");
  }
  try {
    const json& c = j.at("config");
    ModelConfig cfg;
    cfg.embedding_dim = c.at("embedding_dim").get<int>();
    cfg.encoder_layers = c.at("encoder_layers").get<int>();
    cfg.hidden_dim = c.at("hidden_dim").get<int>();
    cfg.arc_proj_dim = c.at("arc_proj_dim").get<int>();
    cfg.alpha = c.at("alpha").get<double>();
    cfg.mode = c.at("mode").get<std::string>() == "multi-task" ? TaskMode::MultiTask
                                                               : TaskMode::SingleTask;
    cfg.regime = c.at("regime").get<std::string>() == "projective"
                     ? Regime::Projective
                     : Regime::NonProjective;
    cfg.max_len = c.at("max_len").get<int>();
    cfg.seed = c.at("seed").get<std::uint64_t>();
    cfg.subtoken_chunk = c.at("subtoken_chunk").get<int>();
    cfg.arc_phi = c.at("arc_phi").get<std::string>() == "identity"
                      ? ArcNonlinearity::Identity
                      : ArcNonlinearity::Tanh;
    for (const auto& label : c.at("labels").get<std::vector<std::string>>())
      cfg.labels.add(label);
    for (const auto& word : c.at("words").get<std::vector<std::string>>())
      cfg.words.add(word);

    Parameters params = Parameters::init(cfg);
    const json& p = j.at("params");
    params.for_each([&p](const std::string& name, Tensor& t) {
      if (!p.contains(name)) {
        throw CheckpointError("checkpoint is missing parameter '" + name + "'");
      }
      Tensor loaded = tensor_from_json(p.at(name), name);
      if (loaded.rows() != t.rows() || loaded.cols() != t.cols()) {
        throw CheckpointError("parameter '" + name + "' has mismatched shape");
      }
      t = loaded;
    });
    return {std::move(cfg), std::move(params)};
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::string& path, const ModelConfig& cfg, Parameters& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint to " + path);
  out << checkpoint_to_json(cfg, params) << '\n';
}

std::pair<ModelConfig, Parameters> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_json(ss.str());
}

}  // namespace mweparse
