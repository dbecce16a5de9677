#include <CLI11.hpp>
#include <iostream>

#include "commands.hpp"
#include "victr/version.hpp"

using namespace victr::cli;

namespace {

void add_common(CLI::App* app, CommonOptions& common) {
  app->add_option("--preset", common.preset, "Named preset (toy, desk, b16-charades, l14-kinetics)");
  app->add_option("--config", common.config_path, "key = value config file applied after the preset");
  app->add_option("--set", common.sets, "Override one key, e.g. --set head.num_layers=1")->take_all();
  app->add_option("--seed", common.seed, "Sets train.seed and data.seed");
  app->add_option("--out-dir", common.out_dir, "Directory for artifacts and the run manifest");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"VicTR video head: training, evaluation and analysis on frozen embeddings"};
  app.require_subcommand(0, 1);
  app.set_version_flag("--version", std::string(victr::kVersion));

  CommonOptions common;
  SynthOptions synth;
  TrainOptions train;
  EvalOptions eval;
  ZeroShotOptions zeroshot;
  AblateOptions ablate;
  GradCheckOptions gradcheck;
  FlopsOptions flops;

  auto* s_synth = app.add_subcommand("synth", "Write a synthetic bundle file");
  add_common(s_synth, common);
  s_synth->add_option("-o,--output", synth.out, "Bundle file path (default <out-dir>/bundles.vctr)");

  auto* s_train = app.add_subcommand("train", "Train a head and write a checkpoint");
  add_common(s_train, common);
  s_train->add_option("--data", train.data, "Bundle file (default: synthetic data from data.*)");
  s_train->add_option("--checkpoint", train.checkpoint, "Checkpoint path (default <out-dir>/checkpoint.vckp)");

  auto* s_eval = app.add_subcommand("eval", "Evaluate a checkpoint on one split");
  add_common(s_eval, common);
  s_eval->add_option("--checkpoint", eval.checkpoint)->required();
  s_eval->add_option("--data", eval.data, "Bundle file (default: synthetic data from data.*)");
  s_eval->add_option("--split", eval.split);

  auto* s_zs = app.add_subcommand("zeroshot", "Evaluate a checkpoint on unseen class vocabularies");
  add_common(s_zs, common);
  s_zs->add_option("--checkpoint", zeroshot.checkpoint)->required();
  s_zs->add_option("--data", zeroshot.data, "One bundle file per split (default: three synthetic splits)");
  s_zs->add_option("--split", zeroshot.split);

  auto* s_ablate = app.add_subcommand("ablate", "Train and evaluate ablation rows");
  add_common(s_ablate, common);
  s_ablate->add_option("--row", ablate.rows, "Row name; repeatable (default: every row)");
  s_ablate->add_option("--data", ablate.data);

  auto* s_grad = app.add_subcommand("gradcheck", "Compare analytic and finite-difference gradients");
  add_common(s_grad, common);
  s_grad->add_flag("--all-toggles", gradcheck.all_toggles, "Sweep every switchboard combination");
  s_grad->add_option("--tolerance", gradcheck.tolerance);

  auto* s_flops = app.add_subcommand("flops", "Analytic FLOP count of one forward pass");
  add_common(s_flops, common);
  s_flops->add_option("--scope", flops.scope)->check(CLI::IsMember({"single_logit", "full_video"}));
  s_flops->add_option("--convention", flops.convention)->check(CLI::IsMember({"mac", "mul_add"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (s_synth->parsed()) return run_synth(common, synth, std::cout);
    if (s_train->parsed()) return run_train(common, train, std::cout);
    if (s_eval->parsed()) return run_eval(common, eval, std::cout);
    if (s_zs->parsed()) return run_zeroshot(common, zeroshot, std::cout);
    if (s_ablate->parsed()) return run_ablate(common, ablate, std::cout);
    if (s_grad->parsed()) return run_gradcheck(common, gradcheck, std::cout);
    if (s_flops->parsed()) return run_flops(common, flops, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  std::cerr << app.help();
  return kUsage;
}
