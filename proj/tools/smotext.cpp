// smotext — SMOTE-style text augmentation in embedding space.
//
// Subcommands: augment, eval, inspect, encode, clean. Configuration comes
// from a JSON file (--config) with every key overridable by a same-named
// flag. Exit codes: 0 success, 2 config error, 3 backend error, 4 data
// error.

#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "smotext/pipeline.hpp"
#include "smotext/version.hpp"

namespace {

struct CliOverrides {
  std::string config_path;
  std::vector<std::pair<std::string, std::string>> pairs;
};

// Register every config key as a same-named string option on a subcommand.
void add_config_flags(CLI::App* cmd, CliOverrides& ov) {
  static const char* keys[] = {
      "corpus", "format", "clean", "subsample_total", "split_fraction",
      "encoder", "mock_dim", "projector", "plan_target", "budget",
      "per_class", "k_neighbors", "lambda_policy", "lambda_value", "metric",
      "renormalize", "decoder", "decode_mode", "prompt_template", "max_tokens",
      "timeout_seconds", "head", "lr", "iters", "l2", "seed", "out", "threads",
      "store"};
  cmd->add_option("--config", ov.config_path, "JSON config file");
  for (const char* key : keys) {
    std::string name = std::string("--") + key;
    cmd->add_option_function<std::string>(
        name,
        [&ov, key](const std::string& value) { ov.pairs.emplace_back(key, value); },
        std::string("override config key ") + key);
  }
}

smotext::PipelineConfig resolve_config(const CliOverrides& ov) {
  smotext::PipelineConfig cfg;
  if (!ov.config_path.empty()) cfg = smotext::load_config(ov.config_path);
  for (const auto& [key, value] : ov.pairs) smotext::apply_override(cfg, key, value);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SMOTE-style text augmentation via embedding interpolation"};
  app.set_version_flag("--version", smotext::kVersion);
  app.require_subcommand(1);

  CliOverrides ov;
  CLI::App* augment = app.add_subcommand(
      "augment", "generate synthetic records from a labeled corpus");
  CLI::App* eval = app.add_subcommand(
      "eval", "run the three-condition evaluation (real / real+synthetic / synthetic)");
  CLI::App* inspect = app.add_subcommand("inspect", "summarize a vector store file");
  CLI::App* encode = app.add_subcommand("encode", "encode a corpus into a vector store");
  CLI::App* clean = app.add_subcommand("clean", "apply newsgroup cleaning to a corpus");
  for (CLI::App* cmd : {augment, eval, inspect, encode, clean})
    add_config_flags(cmd, ov);

  std::string inspect_path;
  inspect->add_option("path", inspect_path, "store file to inspect");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    smotext::PipelineConfig cfg = resolve_config(ov);
    if (augment->parsed()) {
      smotext::cmd_augment(cfg);
    } else if (eval->parsed()) {
      smotext::cmd_eval(cfg);
    } else if (inspect->parsed()) {
      std::string path = !inspect_path.empty() ? inspect_path : cfg.store;
      if (path.empty())
        throw smotext::ConfigError("inspect: missing store path (positional or --store)");
      smotext::cmd_inspect(path);
    } else if (encode->parsed()) {
      smotext::cmd_encode(cfg);
    } else if (clean->parsed()) {
      smotext::cmd_clean(cfg);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return smotext::exit_code_for(e);
  }
  return 0;
}
