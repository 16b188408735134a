#pragma once

#include <iostream>
#include <string>

namespace mweparse {

// Exit codes shared by every subcommand.
enum ExitCode {
  kExitOk = 0,
  kExitConfig = 2,
  kExitData = 3,
  kExitCheckpoint = 4,
  kExitAlignment = 5,
};

// Flat key=value run configuration ('#' comments, blank lines ignored).
// Recognised keys are documented in the README; unknown keys are an error.
int run_train(const std::string& config_path, std::ostream& out = std::cout,
              std::ostream& err = std::cerr);

int run_predict(const std::string& model_path, const std::string& input_path,
                const std::string& output_path, bool emit_heads,
                std::ostream& err = std::cerr);

int run_evaluate(const std::string& gold_path, const std::string& pred_path,
                 const std::string& train_path, std::ostream& out = std::cout,
                 std::ostream& err = std::cerr);

}  // namespace mweparse
