#include "mweparse/cli.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "mweparse/cupt.hpp"
#include "mweparse/eval.hpp"
#include "mweparse/model.hpp"
#include "mweparse/trainer.hpp"
#include "mweparse/util.hpp"

namespace mweparse {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ContractError("cannot open config file " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ContractError("config line " + std::to_string(line_no) + " is not key=value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ContractError("config line " + std::to_string(line_no) + ": empty key");
    if (!kv.emplace(key, value).second) {
      throw ContractError("config key '" + key + "' given twice");
    }
  }
  return kv;
}

struct RunConfig {
  std::string train_path, dev_path, checkpoint_path, log_path, language;
  ModelConfig model;
  TrainConfig training;
};

long to_long(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    long v = std::stol(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ContractError("config key '" + key + "' expects an integer, got '" + value + "'");
  }
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ContractError("config key '" + key + "' expects a number, got '" + value + "'");
  }
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ContractError("config key '" + key + "' expects true/false, got '" + value + "'");
}

RunConfig build_run_config(const std::map<std::string, std::string>& kv) {
  RunConfig rc;
  for (const auto& [key, value] : kv) {
    if (key == "train") rc.train_path = value;
    else if (key == "dev") rc.dev_path = value;
    else if (key == "checkpoint") rc.checkpoint_path = value;
    else if (key == "log") rc.log_path = value;
    else if (key == "language") rc.language = value;
    else if (key == "mode") {
      if (value == "single-task") rc.model.mode = TaskMode::SingleTask;
      else if (value == "multi-task") rc.model.mode = TaskMode::MultiTask;
      else throw ContractError("mode must be single-task or multi-task");
    } else if (key == "regime") {
      if (value == "projective") rc.model.regime = Regime::Projective;
      else if (value == "nonprojective") rc.model.regime = Regime::NonProjective;
      else throw ContractError("regime must be projective or nonprojective");
    } else if (key == "arc_nonlinearity") {
      if (value == "tanh") rc.model.arc_phi = ArcNonlinearity::Tanh;
      else if (value == "identity") rc.model.arc_phi = ArcNonlinearity::Identity;
      else throw ContractError("arc_nonlinearity must be tanh or identity");
    } else if (key == "alpha") rc.model.alpha = to_double(key, value);
    else if (key == "embedding_dim") rc.model.embedding_dim = static_cast<int>(to_long(key, value));
    else if (key == "encoder_layers") rc.model.encoder_layers = static_cast<int>(to_long(key, value));
    else if (key == "hidden_dim") rc.model.hidden_dim = static_cast<int>(to_long(key, value));
    else if (key == "arc_proj_dim") rc.model.arc_proj_dim = static_cast<int>(to_long(key, value));
    else if (key == "max_len") rc.model.max_len = static_cast<int>(to_long(key, value));
    else if (key == "subtoken_chunk") rc.model.subtoken_chunk = static_cast<int>(to_long(key, value));
    else if (key == "seed") {
      rc.model.seed = static_cast<std::uint64_t>(to_long(key, value));
      rc.training.seed = rc.model.seed;
    } else if (key == "epochs") rc.training.epochs = static_cast<int>(to_long(key, value));
    else if (key == "batch_size") rc.training.batch_size = static_cast<int>(to_long(key, value));
    else if (key == "learning_rate") rc.training.learning_rate = to_double(key, value);
    else if (key == "grad_clip") rc.training.grad_clip = to_double(key, value);
    else if (key == "merge_dev") rc.training.merge_dev = to_bool(key, value);
    else throw ContractError("unknown config key '" + key + "'");
  }
  if (rc.train_path.empty()) throw ContractError("config is missing 'train'");
  if (rc.checkpoint_path.empty()) throw ContractError("config is missing 'checkpoint'");
  for (const std::string& path : {rc.train_path, rc.dev_path}) {
    if (!path.empty() && !std::filesystem::exists(path)) {
      throw ContractError("input path does not exist: " + path);
    }
  }
  rc.model.validate();
  rc.training.validate();
  return rc;
}

}  // namespace

int run_train(const std::string& config_path, std::ostream& out, std::ostream& err) {
  RunConfig rc;
  try {
    rc = build_run_config(parse_config_file(config_path));
  } catch (const std::exception& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  try {
    Corpus train_corpus = parse_cupt_file(rc.train_path);
    Corpus dev_corpus;
    bool have_dev = !rc.dev_path.empty();
    if (have_dev) dev_corpus = parse_cupt_file(rc.dev_path);

    TrainResult result =
        train(train_corpus, have_dev ? &dev_corpus : nullptr, rc.model, rc.training);

    save_checkpoint(rc.checkpoint_path, result.config, result.params);
    if (!rc.log_path.empty()) {
      std::ofstream log(rc.log_path, std::ios::binary);
      if (!log) throw ContractError("cannot write log to " + rc.log_path);
      log << result.log_text();
    }
    out << result.log_text();
    out << "excluded_overlong: " << result.excluded_overlong << "\n";
    out << "dropped_gold_mwes: " << result.dropped_gold_mwes << "\n";
    out << "skipped_tree_sentences: " << result.skipped_tree_sentences << "\n";
    out << "checkpoint: " << rc.checkpoint_path << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
}

int run_predict(const std::string& model_path, const std::string& input_path,
                const std::string& output_path, bool emit_heads, std::ostream& err) {
  ModelConfig cfg;
  Parameters params;
  try {
    std::tie(cfg, params) = load_checkpoint(model_path);
  } catch (const std::exception& e) {
    err << "checkpoint error: " << e.what() << "\n";
    return kExitCheckpoint;
  }
  try {
    Corpus corpus = parse_cupt_file(input_path);
    for (Sentence& sent : corpus) {
      Prediction pred = predict(params, cfg, sent);
      assign_mwes(sent, decode_tags(pred.tags));
      if (emit_heads) {
        for (int d = 1; d <= sent.size(); ++d) sent.tokens[d - 1].head = pred.tree.heads[d - 1];
      }
    }
    write_cupt_file(corpus, output_path);
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
}

int run_evaluate(const std::string& gold_path, const std::string& pred_path,
                 const std::string& train_path, std::ostream& out, std::ostream& err) {
  try {
    Corpus gold = parse_cupt_file(gold_path);
    Corpus pred = parse_cupt_file(pred_path);
    Corpus train_corpus = parse_cupt_file(train_path);

    if (gold.size() != pred.size()) {
      err << "alignment error: gold has " << gold.size() << " sentences, predictions have "
          << pred.size() << "\n";
      return kExitAlignment;
    }
    for (std::size_t s = 0; s < gold.size(); ++s) {
      if (gold[s].size() != pred[s].size()) {
        err << "alignment error: sentence " << s + 1 << " ("
            << gold[s].source_id.value_or("no id") << ") has " << gold[s].size()
            << " gold tokens vs " << pred[s].size() << " predicted\n";
        return kExitAlignment;
      }
    }

    EvalReport report = evaluate_corpora(gold, pred, train_corpus);
    out << render_report(report);
    out << render_report_machine(report);
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace mweparse
