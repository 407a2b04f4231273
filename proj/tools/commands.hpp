#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dbmi::cli {

// Exit codes, also documented in the README:
//   0 success, 2 validation/config, 3 numeric/infeasible, 4 I/O.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumeric = 3;
inline constexpr int kExitIo = 4;

struct GenArgs {
  std::string task = "lowdim";  // lowdim | image
  std::int32_t dims = 2;
  std::int32_t cats = 10;
  double sigma = 0.5;
  std::int32_t side = 16;
  std::int32_t latent_bound = -1;  // default derived from side
  std::int32_t min_side = -1;
  double target_mi = 2.0;
  std::int64_t count = 10000;
  std::int64_t test_count = 10000;
  std::uint64_t seed = 0;
  std::string out = "task";
};

struct TrainArgs {
  std::string data;
  std::string out = "model.ckpt";
  std::string log;  // default: <out>.log
  std::string resume;
  std::int32_t epochs = 150;
  std::int32_t batch = 512;
  std::int32_t m_train = 1;
  double lr = 3e-4;
  double lambda_ce = -1.0;  // default by task kind
  double alpha = -1.0;      // default by task kind
  std::int32_t n_steps = 32;
  std::int32_t embed_dim = 32;
  std::vector<std::int32_t> hidden = {128, 128};
  std::uint64_t seed = 0;
  std::int32_t checkpoint_every = 0;  // epochs; 0 = final only
};

struct EstimateArgs {
  std::string data;
  std::string checkpoint;
  bool oracle_mode = false;
  std::string estimator = "dbmi";  // dbmi | plugin
  std::int64_t outer = 10000;      // K
  std::int32_t inner = 10;         // M
  double alpha = -1.0;             // oracle mode only
  std::int32_t n_steps = 32;       // oracle mode only
  std::uint64_t seed = 0;
  std::string report = "report.tsv";
  std::string task_id;  // default derived from the dataset header
};

struct OracleCheckArgs {
  std::int32_t instances = 50;
  std::uint64_t seed = 0;
  std::string inject_bug;  // "" | "no-step-scale"
};

struct SamplesArgs {
  std::string checkpoint;
  std::string data;
  std::string out = "samples";
  std::uint64_t seed = 0;
};

struct ReportArgs {
  std::string report = "report.tsv";
  std::string baselines;
  bool bits = false;
};

int run_gen(const GenArgs& args);
int run_train(const TrainArgs& args);
int run_estimate(const EstimateArgs& args);
int run_oracle_check(const OracleCheckArgs& args);
int run_samples(const SamplesArgs& args);
int run_report(const ReportArgs& args);

}  // namespace dbmi::cli
