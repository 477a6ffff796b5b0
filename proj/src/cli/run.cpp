// Copyright 2026 The LKCA Authors
// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>
#include <ostream>

#include "lkca/cli.hpp"

namespace lkca::cli {

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Shared-kernel convolutional attention: equivalence, gradients, training, benchmarks"};
  app.name("lkca");
  app.require_subcommand(1);

  EquivOptions equiv;
  CLI::App* c_equiv = app.add_subcommand("equiv", "Compare every built view on random layers");
  c_equiv->add_option("--grid", equiv.grid, "Token grid GhxGw")->capture_default_str();
  c_equiv->add_option("--dim", equiv.dim, "Channels")->capture_default_str();
  c_equiv->add_option("--batch", equiv.batch, "Batch size")->capture_default_str();
  c_equiv->add_option("--cases", equiv.cases, "Random cases")->capture_default_str();
  c_equiv->add_option("--seed", equiv.seed, "Seed")->capture_default_str();
  c_equiv->add_option("--precision", equiv.precision, "f32 or f64")->capture_default_str();

  GradCheckOptions grad;
  CLI::App* c_grad = app.add_subcommand("grad-check", "Full-model gradient check in f64");
  c_grad->add_option("--config", grad.config, "Config file")->required();
  c_grad->add_flag("--inject-fault", grad.inject_fault)->group("");

  std::filesystem::path train_config, train_out;
  CLI::App* c_train = app.add_subcommand("train", "Train and write metrics.csv and checkpoint.bin");
  c_train->add_option("--config", train_config, "Config file")->required();
  c_train->add_option("--out", train_out, "Output directory")->required();

  EvalOptions eval;
  CLI::App* c_eval = app.add_subcommand("eval", "Accuracy of a checkpoint");
  c_eval->add_option("--config", eval.config, "Config file the checkpoint was trained with")->required();
  c_eval->add_option("--checkpoint", eval.checkpoint, "Checkpoint file")->required();
  c_eval->add_option("--data", eval.data, "images.idx,labels.idx (default: the config's test set)");

  std::filesystem::path params_config;
  CLI::App* c_params = app.add_subcommand("params", "Per-tensor parameter accounting");
  c_params->add_option("--config", params_config, "Config file")->required();

  BenchOptions bench;
  CLI::App* c_bench = app.add_subcommand("bench", "Time the views over a list of cases");
  c_bench->add_option("--cases", bench.cases, "Cases CSV")->required();
  c_bench->add_option("--out", bench.out, "Results CSV")->required();
  c_bench->add_option("--seed", bench.seed, "Input seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    const CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return kExitUsage;
  }

  if (c_equiv->parsed()) return cmd_equiv(equiv, out, err);
  if (c_grad->parsed()) return cmd_grad_check(grad, out, err);
  if (c_train->parsed()) return cmd_train(train_config, train_out, out, err);
  if (c_eval->parsed()) return cmd_eval(eval, out, err);
  if (c_params->parsed()) return cmd_params(params_config, out, err);
  return cmd_bench(bench, out, err);
}

}  // namespace lkca::cli
