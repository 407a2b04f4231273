#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "dbmi/error.hpp"

namespace {

int dispatch(const std::function<int()>& fn) {
  try {
    return fn();
  } catch (const dbmi::IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return dbmi::cli::kExitIo;
  } catch (const dbmi::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return dbmi::cli::kExitValidation;
  } catch (const dbmi::SizeError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return dbmi::cli::kExitValidation;
  } catch (const dbmi::Error& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return dbmi::cli::kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "dbmi: mutual information estimation for discrete random vectors via "
      "discrete bridge matching.\n"
      "Environment: DBMI_THREADS overrides the worker count (default 1)."};
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "Config file (TOML/INI; keys are long option names, one "
                 "[section] per subcommand)");

  using namespace dbmi::cli;

  GenArgs gen;
  CLI::App* cmd_gen = app.add_subcommand(
      "gen", "Generate a benchmark task and its train/test datasets");
  cmd_gen->add_option("--task", gen.task, "Task kind: lowdim | image")
      ->check(CLI::IsMember({"lowdim", "image"}))
      ->capture_default_str();
  cmd_gen->add_option("--dims", gen.dims, "Dimensions D (lowdim)")
      ->capture_default_str();
  cmd_gen->add_option("--cats", gen.cats, "Categories S (lowdim)")
      ->capture_default_str();
  cmd_gen->add_option("--sigma", gen.sigma, "Conditional-matrix bandwidth")
      ->capture_default_str();
  cmd_gen->add_option("--side", gen.side, "Image side length (image)")
      ->capture_default_str();
  cmd_gen->add_option("--latent-bound", gen.latent_bound,
                      "Latent alphabet bound V (image; default 10 for side "
                      ">= 32, else 5)");
  cmd_gen->add_option("--min-side", gen.min_side,
                      "Minimum rectangle side (image; same default as V)");
  cmd_gen->add_option("--target-mi", gen.target_mi,
                      "Exact total MI target in nats (image)")
      ->capture_default_str();
  cmd_gen->add_option("--count", gen.count, "Training pairs")
      ->capture_default_str();
  cmd_gen->add_option("--test-count", gen.test_count, "Test pairs")
      ->capture_default_str();
  cmd_gen->add_option("--seed", gen.seed, "Master seed")
      ->capture_default_str();
  cmd_gen->add_option("--out", gen.out, "Output path prefix")
      ->capture_default_str();
  cmd_gen->callback([&] { std::exit(dispatch([&] { return run_gen(gen); })); });

  TrainArgs train;
  CLI::App* cmd_train = app.add_subcommand(
      "train", "Train the transition model on a generated dataset");
  cmd_train->add_option("--data", train.data, "Training dataset file")
      ->required();
  cmd_train->add_option("--out", train.out, "Checkpoint output path")
      ->capture_default_str();
  cmd_train->add_option("--log", train.log,
                        "Training log path (default: <out>.log)");
  cmd_train->add_option("--resume", train.resume,
                        "Checkpoint to continue from");
  cmd_train->add_option("--epochs", train.epochs, "Epoch budget")
      ->capture_default_str();
  cmd_train->add_option("--batch", train.batch, "Batch size K")
      ->capture_default_str();
  cmd_train->add_option("--m-train", train.m_train,
                        "Inner bridge samples per pair")
      ->capture_default_str();
  cmd_train->add_option("--lr", train.lr, "Learning rate")
      ->capture_default_str();
  cmd_train->add_option("--lambda-ce", train.lambda_ce,
                        "Endpoint cross-entropy weight (default 1e-3 for "
                        "image tasks, else 0)");
  cmd_train->add_option("--alpha", train.alpha,
                        "Reference stochasticity (default 1e-2 for image "
                        "tasks, else 1e-4)");
  cmd_train->add_option("--n-steps", train.n_steps, "Inner time points N")
      ->capture_default_str();
  cmd_train->add_option("--embed-dim", train.embed_dim, "Embedding width")
      ->capture_default_str();
  cmd_train->add_option("--hidden", train.hidden,
                        "Hidden layer widths (repeatable)")
      ->capture_default_str();
  cmd_train->add_option("--seed", train.seed, "Seed")
      ->capture_default_str();
  cmd_train->add_option("--checkpoint-every", train.checkpoint_every,
                        "Write the checkpoint every E epochs (0: final only)")
      ->capture_default_str();
  cmd_train->callback(
      [&] { std::exit(dispatch([&] { return run_train(train); })); });

  EstimateArgs est;
  CLI::App* cmd_est = app.add_subcommand(
      "estimate", "Estimate MI on a test dataset and append a report row");
  cmd_est->add_option("--data", est.data, "Test dataset file")->required();
  cmd_est->add_option("--checkpoint", est.checkpoint,
                      "Trained model checkpoint");
  cmd_est->add_flag("--oracle-mode", est.oracle_mode,
                    "Use exact tabulated transitions instead of the model "
                    "(small lowdim tasks only)");
  cmd_est->add_option("--estimator", est.estimator,
                      "Estimator: dbmi | plugin")
      ->check(CLI::IsMember({"dbmi", "plugin"}))
      ->capture_default_str();
  cmd_est->add_option("--k", est.outer, "Outer Monte-Carlo samples K")
      ->capture_default_str();
  cmd_est->add_option("--m", est.inner, "Inner bridge samples M")
      ->capture_default_str();
  cmd_est->add_option("--alpha", est.alpha,
                      "Reference stochasticity (oracle mode)");
  cmd_est->add_option("--n-steps", est.n_steps,
                      "Inner time points N (oracle mode)")
      ->capture_default_str();
  cmd_est->add_option("--seed", est.seed, "Seed")->capture_default_str();
  cmd_est->add_option("--report", est.report, "Report file (TSV, upserted)")
      ->capture_default_str();
  cmd_est->add_option("--task-id", est.task_id,
                      "Report row key (default: derived from the dataset)");
  cmd_est->callback(
      [&] { std::exit(dispatch([&] { return run_estimate(est); })); });

  OracleCheckArgs oc;
  CLI::App* cmd_oc = app.add_subcommand(
      "oracle-check",
      "Verify the decomposition/path-space identities and the Markov "
      "property on a seeded battery");
  cmd_oc->add_option("--instances", oc.instances, "Battery size")
      ->capture_default_str();
  cmd_oc->add_option("--seed", oc.seed, "Seed")->capture_default_str();
  cmd_oc->add_option("--inject-bug", oc.inject_bug,
                     "Regression harness: 'no-step-scale' drops the "
                     "estimator's step-count factor; the battery must fail")
      ->check(CLI::IsMember({"no-step-scale"}));
  cmd_oc->callback(
      [&] { std::exit(dispatch([&] { return run_oracle_check(oc); })); });

  SamplesArgs samples;
  CLI::App* cmd_samples = app.add_subcommand(
      "samples", "Write 5x2 PGM grids of data and model rollouts");
  cmd_samples->add_option("--checkpoint", samples.checkpoint, "Checkpoint")
      ->required();
  cmd_samples->add_option("--data", samples.data, "Image dataset")
      ->required();
  cmd_samples->add_option("--out", samples.out, "Output path prefix")
      ->capture_default_str();
  cmd_samples->add_option("--seed", samples.seed, "Seed")
      ->capture_default_str();
  cmd_samples->callback(
      [&] { std::exit(dispatch([&] { return run_samples(samples); })); });

  ReportArgs report;
  CLI::App* cmd_report =
      app.add_subcommand("report", "Render a report file as a table");
  cmd_report->add_option("--report", report.report, "Report file")
      ->capture_default_str();
  cmd_report->add_option("--baselines", report.baselines,
                         "Reference-results file to print alongside");
  cmd_report->add_flag("--bits", report.bits, "Convert nats to bits");
  cmd_report->callback(
      [&] { std::exit(dispatch([&] { return run_report(report); })); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : dbmi::cli::kExitValidation;
  }
  return 0;
}
