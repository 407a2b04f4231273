#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "dbmi/checkpoint.hpp"
#include "dbmi/dataset.hpp"
#include "dbmi/error.hpp"
#include "dbmi/estimate.hpp"
#include "dbmi/lowdim.hpp"
#include "dbmi/pgm.hpp"
#include "dbmi/rectangles.hpp"
#include "dbmi/reciprocal.hpp"
#include "dbmi/report.hpp"
#include "dbmi/rng.hpp"
#include "dbmi/train.hpp"

namespace dbmi::cli {

namespace {

std::string default_task_id(const Dataset& ds) {
  char buf[128];
  if (ds.task.kind == "lowdim") {
    std::snprintf(buf, sizeof(buf), "lowdim-d%d-s%d-seed%llu",
                  ds.space.num_dims, ds.space.num_categories,
                  static_cast<unsigned long long>(ds.task.seed));
  } else if (ds.task.kind == "image") {
    std::snprintf(buf, sizeof(buf), "image-%dx%d-mi%g-seed%llu", ds.task.side,
                  ds.task.side, ds.task.target_mi,
                  static_cast<unsigned long long>(ds.task.seed));
  } else {
    std::snprintf(buf, sizeof(buf), "dataset-seed%llu",
                  static_cast<unsigned long long>(ds.task.seed));
  }
  return buf;
}

double default_alpha(const std::string& kind) {
  return kind == "image" ? 1e-2 : 1e-4;
}

}  // namespace

int run_gen(const GenArgs& args) {
  if (args.count < 1 || args.test_count < 0) {
    throw ValidationError("gen: counts must be positive");
  }
  Dataset train_ds, test_ds;
  if (args.task == "lowdim") {
    RngStream task_rng(substream_seed(args.seed, 0));
    LowDimTask task = gen_lowdim_task(args.dims, args.cats, args.sigma,
                                      task_rng);
    task.seed = args.seed;
    RngStream train_rng(substream_seed(args.seed, 1));
    RngStream test_rng(substream_seed(args.seed, 2));
    train_ds = sample_lowdim(task, static_cast<std::size_t>(args.count),
                             train_rng);
    test_ds = sample_lowdim(task, static_cast<std::size_t>(args.test_count),
                            test_rng);
    std::printf("lowdim task: D=%d S=%d sigma=%g exact MI %.6f nats\n",
                args.dims, args.cats, args.sigma, task.total_mi);
  } else if (args.task == "image") {
    const std::int32_t v =
        args.latent_bound >= 0 ? args.latent_bound : (args.side >= 32 ? 10 : 5);
    const std::int32_t vmin =
        args.min_side >= 0 ? args.min_side : (args.side >= 32 ? 10 : 5);
    ImageTask task = gen_image_task(args.side, v, vmin, args.target_mi);
    task.seed = args.seed;
    RngStream train_rng(substream_seed(args.seed, 1));
    RngStream test_rng(substream_seed(args.seed, 2));
    train_ds = sample_image(task, static_cast<std::size_t>(args.count),
                            train_rng);
    test_ds = sample_image(task, static_cast<std::size_t>(args.test_count),
                           test_rng);
    std::printf(
        "image task: %dx%d V=%d Vmin=%d eps=%.8f exact MI %.6f nats\n",
        args.side, args.side, v, vmin, task.channel_eps, task.exact_mi);
  } else {
    throw ValidationError("gen: unknown task kind '" + args.task + "'");
  }
  save_dataset(args.out + ".train.ds", train_ds);
  save_dataset(args.out + ".test.ds", test_ds);
  std::printf("wrote %s.train.ds (%zu pairs), %s.test.ds (%zu pairs)\n",
              args.out.c_str(), train_ds.size(), args.out.c_str(),
              test_ds.size());
  return kExitOk;
}

int run_train(const TrainArgs& args) {
  const Dataset ds = load_dataset(args.data);
  const double alpha =
      args.alpha >= 0.0 ? args.alpha : default_alpha(ds.task.kind);
  const double lambda_ce =
      args.lambda_ce >= 0.0 ? args.lambda_ce
                            : (ds.task.kind == "image" ? 1e-3 : 0.0);

  TrainConfig tc;
  tc.epochs = args.epochs;
  tc.batch_size = args.batch;
  tc.inner_samples = args.m_train;
  tc.learning_rate = args.lr;
  tc.lambda_ce = lambda_ce;
  tc.seed = args.seed;

  std::unique_ptr<Trainer> trainer;
  if (!args.resume.empty()) {
    const Checkpoint resume = load_checkpoint(args.resume);
    tc.seed = resume.train_seed;
    tc.lambda_ce = resume.lambda_ce;
    trainer = std::make_unique<Trainer>(resume, tc);
    std::printf("resuming from %s at epoch %lld\n", args.resume.c_str(),
                static_cast<long long>(resume.epochs_done));
  } else {
    ModelConfig mc;
    mc.kernel = UniformKernel(ds.space, alpha);
    mc.grid = TimeGrid(args.n_steps);
    mc.embed_dim = args.embed_dim;
    mc.hidden_dims = args.hidden;
    trainer = std::make_unique<Trainer>(mc, tc);
  }

  const std::string log_path =
      args.log.empty() ? args.out + ".log" : args.log;
  std::ofstream log(log_path,
                    args.resume.empty() ? std::ios::trunc : std::ios::app);
  if (!log) {
    throw IoError("cannot open training log: " + log_path);
  }
  if (args.resume.empty()) {
    log << "step\tepoch\tloss_v0\tloss_v1\n";
  }

  TrainReport total_report;
  const std::int32_t target = args.epochs;
  std::int32_t next_stop = trainer->epochs_done() < target
                               ? static_cast<std::int32_t>(
                                     trainer->epochs_done()) +
                                     (args.checkpoint_every > 0
                                          ? args.checkpoint_every
                                          : target)
                               : target;
  while (trainer->epochs_done() < target) {
    const std::int32_t stop = std::min(next_stop, target);
    const TrainReport rep = trainer->run(ds, stop, &log);
    total_report.steps += rep.steps;
    total_report.tuples += rep.tuples;
    total_report.wall_seconds += rep.wall_seconds;
    for (std::size_t i = 0; i < rep.epoch_loss_joint.size(); ++i) {
      total_report.epoch_loss_joint.push_back(rep.epoch_loss_joint[i]);
      total_report.epoch_loss_independent.push_back(
          rep.epoch_loss_independent[i]);
    }
    save_checkpoint(args.out, trainer->checkpoint());
    next_stop = stop + (args.checkpoint_every > 0 ? args.checkpoint_every
                                                  : target);
  }
  log.flush();

  if (!total_report.epoch_loss_joint.empty()) {
    std::printf("trained %lld steps (%.1f s); final epoch loss v1=%.6f "
                "v0=%.6f\n",
                static_cast<long long>(total_report.steps),
                total_report.wall_seconds,
                total_report.epoch_loss_joint.back(),
                total_report.epoch_loss_independent.back());
  }
  std::printf("checkpoint: %s\nlog: %s\n", args.out.c_str(),
              log_path.c_str());
  return kExitOk;
}

int run_estimate(const EstimateArgs& args) {
  const Dataset ds = load_dataset(args.data);
  const std::string task_id =
      args.task_id.empty() ? default_task_id(ds) : args.task_id;
  const auto t0 = std::chrono::steady_clock::now();

  MIEstimate est;
  double alpha = args.alpha;
  std::int32_t n_steps = args.n_steps;
  if (args.estimator == "plugin") {
    est = estimate_plugin(ds);
    alpha = 0.0;
    n_steps = 0;
  } else if (args.estimator == "dbmi") {
    if (args.oracle_mode) {
      if (ds.task.kind != "lowdim") {
        throw ValidationError(
            "oracle mode needs a tabulated joint; only lowdim datasets carry "
            "one");
      }
      if (alpha < 0.0) alpha = default_alpha(ds.task.kind);
      const LowDimTask task = lowdim_task_from_info(ds.space, ds.task);
      const JointPMF joint = assemble_joint(task);  // enforces the cap
      const OracleTransitionSource source(
          joint, UniformKernel(ds.space, alpha), TimeGrid(n_steps));
      est = estimate_dbmi(source, ds, static_cast<std::size_t>(args.outer),
                          static_cast<std::size_t>(args.inner), args.seed);
    } else {
      if (args.checkpoint.empty()) {
        throw ValidationError("estimate: need --checkpoint or --oracle-mode");
      }
      const Checkpoint ckpt = load_checkpoint(args.checkpoint);
      if (!(ckpt.config.kernel.space == ds.space)) {
        throw ValidationError("estimate: checkpoint/dataset space mismatch");
      }
      TransitionModel model(ckpt.config, 0);
      model.params() = ckpt.params;
      const ModelTransitionSource source(model);
      alpha = ckpt.config.kernel.alpha;
      n_steps = ckpt.config.grid.num_inner;
      est = estimate_dbmi(source, ds, static_cast<std::size_t>(args.outer),
                          static_cast<std::size_t>(args.inner), args.seed);
    }
  } else {
    throw ValidationError("estimate: unknown estimator '" + args.estimator +
                          "'");
  }

  ReportRow row;
  row.task_id = task_id;
  row.estimator = est.estimator;
  row.mi_true = ds.task.exact_mi;
  row.mi_hat = est.value;
  row.std_error = est.std_error;
  row.outer = est.outer;
  row.inner = est.inner;
  row.n_steps = est.estimator == "plugin" ? 0 : n_steps;
  row.alpha = est.estimator == "plugin" ? 0.0 : alpha;
  row.seed = args.seed;
  row.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  upsert_report_row(args.report, row);

  std::printf("%s\t%s\tMI_true=%.6f\tMI_hat=%.6f\tstderr=%.6f\n",
              task_id.c_str(), est.estimator.c_str(), row.mi_true, row.mi_hat,
              row.std_error);
  std::printf("report: %s\n", args.report.c_str());
  return kExitOk;
}

int run_oracle_check(const OracleCheckArgs& args) {
  if (args.instances < 1) {
    throw ValidationError("oracle-check: need at least one instance");
  }
  const std::int32_t cats[] = {2, 3};
  const std::int32_t dims[] = {1, 2};
  const std::int32_t inner[] = {1, 2, 4, 8};
  const double alphas[] = {0.05, 0.3};

  bool ok = true;
  double worst_theorem = 0.0, worst_markov = 0.0;
  std::int32_t idx = 0;
  for (std::int32_t i = 0; i < args.instances; ++i, ++idx) {
    const std::int32_t s = cats[(idx / 1) % 2];
    const std::int32_t d = dims[(idx / 2) % 2];
    const std::int32_t n = inner[(idx / 4) % 4];
    const double alpha = alphas[(idx / 16) % 2];
    const StateSpace space(s, d);
    RngStream rng(substream_seed(args.seed, static_cast<std::uint64_t>(i)));
    const JointPMF joint = random_joint(space, rng);
    const UniformKernel kernel(space, alpha);
    const TimeGrid grid(n);
    const ReciprocalOracle oracle(joint, kernel, grid);

    const double direct = exact_mi_direct(joint);
    const double decomposed = oracle.mi_decomposed();
    const double dev_dec = std::abs(decomposed - direct);
    worst_theorem = std::max(worst_theorem, dev_dec);

    double dev_path = -1.0;
    double dev_markov = -1.0;
    bool enumerable = true;
    try {
      oracle.path_count();
    } catch (const SizeError&) {
      enumerable = false;
    }
    if (enumerable) {
      dev_path = std::abs(oracle.path_kl() - direct);
      worst_theorem = std::max(worst_theorem, dev_path);
      dev_markov = std::max(oracle.markov_deviation(Coupling::kJoint),
                            oracle.markov_deviation(Coupling::kIndependent));
      worst_markov = std::max(worst_markov, dev_markov);
    }

    const bool inst_ok = dev_dec <= 1e-9 &&
                         (dev_path < 0.0 || dev_path <= 1e-9) &&
                         (dev_markov < 0.0 || dev_markov <= 1e-12);
    ok = ok && inst_ok;
    char path_buf[32] = "n/a", markov_buf[32] = "n/a";
    if (dev_path >= 0.0) std::snprintf(path_buf, sizeof(path_buf), "%.3e", dev_path);
    if (dev_markov >= 0.0) {
      std::snprintf(markov_buf, sizeof(markov_buf), "%.3e", dev_markov);
    }
    std::printf(
        "instance %2d: S=%d D=%d N=%d alpha=%.2f |dec-direct|=%.3e "
        "|path-direct|=%s markov=%s %s\n",
        i, s, d, n, alpha, dev_dec, path_buf, markov_buf,
        inst_ok ? "ok" : "FAIL");
  }

  // Estimator consistency: the Monte-Carlo estimator with exact transitions
  // must agree with the decomposition within Monte-Carlo error; the
  // injected-bug mode drops the step-count factor and must be caught here.
  {
    const StateSpace space(2, 1);
    std::vector<double> diag(4, 0.0);
    diag[0] = diag[3] = 0.5;
    const JointPMF joint(space, diag);
    const UniformKernel kernel(space, 0.2);
    const TimeGrid grid(4);
    const double exact =
        ReciprocalOracle(joint, kernel, grid).mi_decomposed();

    Dataset ds;
    ds.space = space;
    RngStream rng(substream_seed(args.seed, 999));
    for (int i = 0; i < 20000; ++i) {
      const Category c = static_cast<Category>(rng.uniform_below(2));
      ds.x0.push_back({c});
      ds.x1.push_back({c});
    }
    EstimateOptions opts;
    opts.scale_by_step_count = args.inject_bug != "no-step-scale";
    const OracleTransitionSource source(joint, kernel, grid);
    const MIEstimate est =
        estimate_dbmi(source, ds, 20000, 1, substream_seed(args.seed, 998),
                      opts);
    // 5 sigma plus a small allowance for the empirical coupling of the
    // finite sample
    const double tol = 5.0 * est.std_error + 0.02;
    const bool est_ok = std::abs(est.value - exact) <= tol;
    ok = ok && est_ok;
    std::printf("estimator: exact=%.6f estimate=%.6f +- %.6f %s\n", exact,
                est.value, est.std_error, est_ok ? "ok" : "FAIL");
  }

  std::printf("battery: %d instances, worst theorem deviation %.3e, worst "
              "markov deviation %.3e -> %s\n",
              args.instances, worst_theorem, worst_markov,
              ok ? "PASS" : "FAIL");
  return ok ? kExitOk : kExitNumeric;
}

int run_samples(const SamplesArgs& args) {
  const Dataset ds = load_dataset(args.data);
  if (ds.task.kind != "image") {
    throw ValidationError("samples: needs an image-task dataset");
  }
  const std::int32_t side = ds.task.side;
  const Checkpoint ckpt = load_checkpoint(args.checkpoint);
  if (!(ckpt.config.kernel.space == ds.space)) {
    throw ValidationError("samples: checkpoint/dataset space mismatch");
  }
  TransitionModel model(ckpt.config, 0);
  model.params() = ckpt.params;

  constexpr std::int32_t kRows = 2, kCols = 5;
  const std::size_t count = kRows * kCols;
  if (ds.size() < count) {
    throw ValidationError("samples: dataset too small for a grid");
  }
  RngStream rng(args.seed);
  std::vector<State> x0s, x1s, roll0, roll1;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t idx = rng.uniform_below(ds.size());
    x0s.push_back(ds.x0[idx]);
    x1s.push_back(ds.x1[idx]);
    roll1.push_back(ancestral_rollout(model, ds.x0[idx], 1, rng));
    roll0.push_back(ancestral_rollout(model, ds.x0[idx], 0, rng));
  }
  write_pgm_grid(args.out + ".x0.pgm", x0s, side, kRows, kCols);
  write_pgm_grid(args.out + ".x1.pgm", x1s, side, kRows, kCols);
  write_pgm_grid(args.out + ".gen_v1.pgm", roll1, side, kRows, kCols);
  write_pgm_grid(args.out + ".gen_v0.pgm", roll0, side, kRows, kCols);
  std::printf("wrote %s.{x0,x1,gen_v1,gen_v0}.pgm (%dx%d grids)\n",
              args.out.c_str(), kCols, kRows);
  return kExitOk;
}

int run_report(const ReportArgs& args) {
  const std::vector<ReportRow> rows = read_report(args.report);
  const double unit = args.bits ? 1.0 / std::log(2.0) : 1.0;
  const char* unit_name = args.bits ? "bits" : "nats";
  std::printf("%-28s %-12s %12s %12s %10s %8s %4s %4s %10s %8s\n", "task",
              "estimator", args.bits ? "mi_true(b)" : "mi_true",
              args.bits ? "mi_hat(b)" : "mi_hat", "stderr", "k", "m", "n",
              "alpha", "seed");
  for (const ReportRow& r : rows) {
    std::printf("%-28s %-12s %12.4f %12.4f %10.4f %8lld %4d %4d %10.2e %8llu\n",
                r.task_id.c_str(), r.estimator.c_str(), r.mi_true * unit,
                r.mi_hat * unit, r.std_error * unit,
                static_cast<long long>(r.outer), r.inner, r.n_steps, r.alpha,
                static_cast<unsigned long long>(r.seed));
  }
  std::printf("(%zu rows, %s)\n", rows.size(), unit_name);

  if (!args.baselines.empty()) {
    std::ifstream in(args.baselines);
    if (!in) {
      throw IoError("cannot open baselines file: " + args.baselines);
    }
    std::printf("\nreference results (quoted from the published evaluation, "
                "%s):\n",
                unit_name);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::printf("  %s\n", line.c_str());
    }
  }
  return kExitOk;
}

}  // namespace dbmi::cli
