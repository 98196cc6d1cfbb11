#include "mcqf/cli/cli.hpp"

#include <algorithm>
#include <optional>

#include <CLI11.hpp>

#include "mcqf/pipeline/workspace.hpp"

namespace mcqf::cli {

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Student answer forecasting for multiple-choice questions.\n"
               "Stages reuse the outputs already present in <output_dir>/run-<config hash>;\n"
               "MCQF_OUTPUT_DIR overrides output_dir.",
               "mcqf"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  bool quiet = false;
  app.add_option("-c,--config", config_path, "Run configuration file (JSON)");
  app.add_flag("-q,--quiet", quiet, "Suppress progress lines");

  auto* simulate = app.add_subcommand("simulate", "Generate (or import) the corpus and build the vocabulary");
  std::string lm;
  auto* pretrain = app.add_subcommand("pretrain", "Pretrain the masked LM (mlm) or the history causal LMs (clm)");
  pretrain->add_option("model", lm, "mlm or clm")->required()->check(CLI::IsMember({"mlm", "clm"}));
  auto* train_mcqbert = app.add_subcommand("train-mcqbert", "Fine-tune MCQBert (retention model and exp1 models)");
  auto* train_embeddings = app.add_subcommand("train-embeddings", "Fit the student embedders listed in grid.embedders");
  auto* train_forecaster = app.add_subcommand("train-forecaster", "Train every (embedder, strategy) forecaster");
  std::string experiment;
  auto* evaluate = app.add_subcommand("evaluate", "Write results/<exp1|exp2|grid>.csv");
  evaluate->add_option("experiment", experiment, "exp1, exp2 or grid")
      ->required()
      ->check(CLI::IsMember({"exp1", "exp2", "grid"}));
  std::string embedder;
  std::optional<std::uint64_t> seed;
  auto* export_cmd = app.add_subcommand("export-embeddings", "Write one embedding table and its 2-D projection");
  export_cmd->add_option("-e,--embedder", embedder, "Registry id, e.g. clm_pool_L10")->required();
  export_cmd->add_option("-s,--seed", seed, "Split seed (default: first configured seed)");
  auto* run_all = app.add_subcommand("run", "Run every stage and write all results");
  std::string validate_path;
  auto* validate = app.add_subcommand("validate-config", "Check a config and list every problem");
  validate->add_option("path", validate_path, "Config file (alternative to --config)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  if (validate->parsed() && !validate_path.empty()) config_path = validate_path;
  if (config_path.empty()) {
    err << "error: a config file is required (--config PATH)\n" << "Run with --help for more information.\n";
    return kExitUsage;
  }
  auto loaded = pipeline::load_config(config_path);
  if (!loaded.config) {
    err << "invalid config '" << config_path << "':\n" << pipeline::format_issues(loaded.errors);
    return kExitFailure;
  }
  auto cfg = std::move(*loaded.config);
  if (validate->parsed()) {
    out << "config OK, hash " << pipeline::config_hash(cfg) << '\n';
    return kExitOk;
  }
  pipeline::apply_environment(cfg);

  std::optional<pipeline::Workspace> ws;
  try {
    ws.emplace(cfg, quiet ? nullptr : &err);
  } catch (const std::exception& e) {
    err << "error: cannot prepare output directory: " << e.what() << '\n';
    return kExitFailure;
  }
  int code = kExitOk;
  try {
    if (simulate->parsed()) {
      ws->simulate();
    } else if (pretrain->parsed()) {
      lm == "mlm" ? ws->pretrain_mlm() : ws->pretrain_clm();
    } else if (train_mcqbert->parsed()) {
      ws->train_mcqbert();
    } else if (train_embeddings->parsed()) {
      ws->train_embeddings();
    } else if (train_forecaster->parsed()) {
      ws->train_forecasters();
    } else if (evaluate->parsed()) {
      const auto path = experiment == "exp1"   ? ws->evaluate_exp1()
                        : experiment == "exp2" ? ws->evaluate_exp2()
                                               : ws->evaluate_grid();
      out << path.string() << '\n';
    } else if (export_cmd->parsed()) {
      out << ws->export_embeddings(embedder, seed.value_or(cfg.seeds.front())).string() << '\n';
    } else if (run_all->parsed()) {
      ws->run_all();
      out << ws->dir().string() << '\n';
    }
  } catch (const pipeline::StageError& e) {
    err << "error: " << e.what() << '\n';
    code = kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    code = kExitFailure;
  }
  try {
    ws->write_manifest();
  } catch (const std::exception& e) {
    err << "error: cannot write manifest: " << e.what() << '\n';
    code = kExitFailure;
  }
  return code;
}

}  // namespace mcqf::cli
