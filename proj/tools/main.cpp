#include <string>

#include "CLI11.hpp"
#include "mweparse/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"joint verbal-MWE tagger and dependency-tree predictor"};
  app.require_subcommand(1);

  std::string config_path;
  CLI::App* train = app.add_subcommand("train", "train a model from a key=value config file");
  train->add_option("--config", config_path, "run configuration file")->required();

  std::string model_path, input_path, output_path;
  bool emit_heads = false;
  CLI::App* predict = app.add_subcommand("predict", "tag a corpus with a trained model");
  predict->add_option("--model", model_path, "model checkpoint")->required();
  predict->add_option("--input", input_path, "input .cupt file")->required();
  predict->add_option("--output", output_path, "output .cupt file")->required();
  predict->add_flag("--emit-heads", emit_heads, "also fill the head column from the parser");

  std::string gold_path, pred_path, train_path;
  CLI::App* evaluate = app.add_subcommand("evaluate", "score predictions against gold");
  evaluate->add_option("--gold", gold_path, "gold .cupt file")->required();
  evaluate->add_option("--pred", pred_path, "predicted .cupt file")->required();
  evaluate->add_option("--train", train_path, "training .cupt file for the seen index")->required();

  CLI11_PARSE(app, argc, argv);

  if (train->parsed()) return mweparse::run_train(config_path);
  if (predict->parsed()) return mweparse::run_predict(model_path, input_path, output_path, emit_heads);
  return mweparse::run_evaluate(gold_path, pred_path, train_path);
}
