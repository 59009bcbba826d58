#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "certmark/error.hpp"
#include "config.hpp"
#include "pipeline.hpp"

namespace {

using namespace certmark;
using namespace certmark::cli;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig: return 2;
    case ErrorKind::kIngestion:
    case ErrorKind::kCorruptCorpus: return 3;
    case ErrorKind::kIo:
    case ErrorKind::kCheckpoint: return 4;
    case ErrorKind::kVerification: return 5;
    case ErrorKind::kShape:
    case ErrorKind::kContract: return 6;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"certmark: watermarked federated graph learning with certified ensembles"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::string out = "run";
  std::string scale;
  app.add_option("--config", config_path, "Run configuration (TOML subset); defaults apply when omitted")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Override the configured seed");
  app.add_option("--out", out, "Run directory for reports and checkpoints")->capture_default_str();
  app.add_option("--threads", threads, "Worker threads; results do not depend on it")->check(CLI::PositiveNumber);
  app.add_option("--scale", scale, "Size preset: ci (T=10, 40 rounds, MUTAG) or full");

  auto* ingest = app.add_subcommand("ingest", "Parse, split and partition the corpus");
  auto* train = app.add_subcommand("train", "Federated training with per-client watermarks");
  std::optional<std::string> resume;
  std::optional<std::size_t> until;
  train->add_option("--resume", resume, "Continue from a checkpoint")->check(CLI::ExistingFile);
  train->add_option("--until", until, "Stop after this many rounds");
  auto* attack = app.add_subcommand("attack", "Run watermark-removal attacks against a checkpoint");
  auto* certify = app.add_subcommand("certify", "Certified perturbed-layer radii and CWA curve");
  auto* verify = app.add_subcommand("verify", "Ownership verification by majority over clients");
  auto* report = app.add_subcommand("report", "Consolidate reports in the run directory");
  std::optional<std::string> checkpoint;
  for (auto* sub : {attack, certify, verify}) {
    sub->add_option("--checkpoint", checkpoint, "Checkpoint to load (default <out>/checkpoint.cmrk)");
  }

  CLI11_PARSE(app, argc, argv);

  try {
    CommandOptions opts;
    opts.out = out;
    if (checkpoint) opts.checkpoint = *checkpoint;
    if (resume) opts.resume = *resume;
    opts.until = until;
    if (report->parsed()) {
      const auto j = run_report(opts);
      std::cout << read_file(opts.out / "report.txt");
      return 0;
    }

    RunConfig config = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    if (config_path.empty()) apply_dataset_profile(config);
    apply_scale(config, scale);
    if (seed) config.seed = *seed;
    if (threads) config.threads = *threads;

    std::string name;
    if (ingest->parsed()) {
      run_ingest(config, opts);
      name = "ingest";
    } else if (train->parsed()) {
      run_train(config, opts);
      name = "train";
    } else if (attack->parsed()) {
      run_attack_command(config, opts);
      name = "attack";
    } else if (certify->parsed()) {
      run_certify(config, opts);
      name = "certify";
    } else if (verify->parsed()) {
      run_verify(config, opts);
      name = "verify";
    }
    std::cout << read_file(opts.out / (name + ".txt"));
    return 0;
  } catch (const Error& e) {
    std::cerr << "certmark: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "certmark: " << e.what() << "\n";
    return 1;
  }
}
