#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <iterator>
#include <set>
#include <vector>

#include "dbmi/dataset.hpp"
#include "dbmi/error.hpp"
#include "dbmi/estimate.hpp"
#include "dbmi/lowdim.hpp"
#include "dbmi/pgm.hpp"
#include "dbmi/rectangles.hpp"
#include "dbmi/report.hpp"
#include "testutil.hpp"

using namespace dbmi;

TEST_CASE("gen_conditional_matrix: row-stochastic with positive entries") {
  RngStream rng(1);
  for (std::int32_t s : {2, 5, 10}) {
    const std::vector<double> m = gen_conditional_matrix(s, 0.5, rng);
    for (std::int32_t i = 0; i < s; ++i) {
      double sum = 0.0;
      for (std::int32_t j = 0; j < s; ++j) {
        const double v = m[static_cast<std::size_t>(i * s + j)];
        CHECK(v > 0.0);
        sum += v;
      }
      CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("gen_conditional_matrix: huge bandwidth degenerates the kernel") {
  // kernel ~ 1 everywhere: rows are normalized uniforms, so row maxima stay
  // far from the concentrated small-sigma regime
  RngStream rng(2);
  const std::int32_t s = 10;
  const std::vector<double> wide = gen_conditional_matrix(s, 1e9, rng);
  RngStream rng2(2);
  const std::vector<double> narrow = gen_conditional_matrix(s, 0.25, rng2);
  double wide_max = 0.0, narrow_min = 1.0;
  for (std::int32_t i = 0; i < s; ++i) {
    double wmax = 0.0, nmax = 0.0;
    for (std::int32_t j = 0; j < s; ++j) {
      wmax = std::max(wmax, wide[static_cast<std::size_t>(i * s + j)]);
      nmax = std::max(nmax, narrow[static_cast<std::size_t>(i * s + j)]);
    }
    wide_max = std::max(wide_max, wmax);
    narrow_min = std::min(narrow_min, nmax);
  }
  CHECK(wide_max < 0.5);
  CHECK(narrow_min > 0.5);
}

TEST_CASE("gen_conditional_matrix: bit-identical under a fixed seed") {
  RngStream a(33), b(33);
  CHECK(gen_conditional_matrix(8, 0.5, a) == gen_conditional_matrix(8, 0.5, b));
}

TEST_CASE("conditional_mi: closed-form endpoints") {
  const std::int32_t s = 6;
  std::vector<double> ident(static_cast<std::size_t>(s * s), 0.0);
  for (std::int32_t i = 0; i < s; ++i) {
    ident[static_cast<std::size_t>(i * s + i)] = 1.0;
  }
  CHECK(conditional_mi(ident, s) ==
        doctest::Approx(std::log(6.0)).epsilon(1e-12));

  std::vector<double> flat(static_cast<std::size_t>(s * s), 1.0 / s);
  CHECK(conditional_mi(flat, s) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("gen_lowdim_task: exact MI cross-checked against the oracle") {
  RngStream rng(5);
  const LowDimTask task = gen_lowdim_task(2, 10, 0.5, rng);
  CHECK(task.per_dim_mi.size() == 2);
  double sum = 0.0;
  for (double mi : task.per_dim_mi) sum += mi;
  CHECK(std::abs(sum - task.total_mi) <= 1e-12);

  const JointPMF joint = assemble_joint(task);
  CHECK(std::abs(exact_mi_direct(joint) - task.total_mi) <= 1e-10);
}

TEST_CASE("gen_lowdim_task: oracle cross-check across sizes") {
  RngStream rng(6);
  for (std::int32_t d : {1, 2, 3}) {
    for (std::int32_t s : {2, 4}) {
      const LowDimTask task = gen_lowdim_task(d, s, 0.5, rng);
      const JointPMF joint = assemble_joint(task);
      CHECK(std::abs(exact_mi_direct(joint) - task.total_mi) <= 1e-10);
    }
  }
}

TEST_CASE("sample_lowdim: plug-in estimate converges to the exact MI") {
  RngStream task_rng(7);
  const LowDimTask task = gen_lowdim_task(1, 4, 0.5, task_rng);
  RngStream rng(8);
  const Dataset ds = sample_lowdim(task, 100000, rng);
  CHECK(std::abs(estimate_plugin(ds).value - task.total_mi) <= 0.02);
}

TEST_CASE("sample_lowdim: x0 marginal is uniform") {
  RngStream task_rng(9);
  const LowDimTask task = gen_lowdim_task(1, 5, 0.5, task_rng);
  RngStream rng(10);
  const Dataset ds = sample_lowdim(task, 50000, rng);
  std::vector<int> counts(5, 0);
  for (const State& x : ds.x0) ++counts[static_cast<std::size_t>(x[0])];
  const double p = 0.2;
  const double sigma = std::sqrt(50000.0 * p * (1 - p));
  for (int c : counts) {
    CHECK(std::abs(c - 50000.0 * p) <= 3.0 * sigma);
  }
}

TEST_CASE("sample_lowdim: identity conditionals copy the input") {
  LowDimTask task;
  task.space = StateSpace(3, 2);
  task.sigma = 0.5;
  std::vector<double> ident(9, 0.0);
  for (int i = 0; i < 3; ++i) ident[static_cast<std::size_t>(i * 3 + i)] = 1.0;
  task.conditional = {ident, ident};
  task.per_dim_mi = {std::log(3.0), std::log(3.0)};
  task.total_mi = 2 * std::log(3.0);
  RngStream rng(11);
  const Dataset ds = sample_lowdim(task, 200, rng);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(ds.x0[i] == ds.x1[i]);
  }
}

TEST_CASE("channel_mi: endpoints and oracle cross-check") {
  CHECK(channel_mi(10, 0.0) ==
        doctest::Approx(std::log(11.0)).epsilon(1e-12));
  CHECK(channel_mi(10, 10.0 / 11.0) == doctest::Approx(0.0).epsilon(1e-12));

  // explicit (V+1)^2 joint through the direct MI formula
  for (double eps : {0.1, 0.35, 0.6}) {
    const std::int32_t v = 5;
    const std::int32_t a = v + 1;
    const StateSpace space(a, 1);
    std::vector<double> table(static_cast<std::size_t>(a) * a);
    for (std::int32_t i = 0; i < a; ++i) {
      for (std::int32_t j = 0; j < a; ++j) {
        const double cond = i == j ? 1.0 - eps : eps / (a - 1.0);
        table[static_cast<std::size_t>(i * a + j)] = cond / a;
      }
    }
    const double direct = exact_mi_direct(JointPMF(space, table));
    CHECK(std::abs(channel_mi(v, eps) - direct) <= 1e-12);
  }
}

TEST_CASE("channel_mi: strictly decreasing up to the uniform point") {
  const std::int32_t v = 10;
  double prev = channel_mi(v, 0.0);
  for (int i = 1; i <= 20; ++i) {
    const double eps = (v / (v + 1.0)) * i / 20.0;
    const double mi = channel_mi(v, eps);
    CHECK(mi < prev);
    prev = mi;
  }
}

TEST_CASE("solve_eps: endpoints and round trip") {
  CHECK(solve_eps(10, std::log(11.0)) == 0.0);
  CHECK(solve_eps(10, 0.0) == doctest::Approx(10.0 / 11.0).epsilon(1e-15));
  const double eps = solve_eps(10, 0.25);
  CHECK(std::abs(channel_mi(10, eps) - 0.25) <= 1e-10);
  CHECK_THROWS_AS(solve_eps(10, 5.0), ValidationError);
  CHECK_THROWS_AS(solve_eps(10, -0.1), ValidationError);
}

TEST_CASE("render_rectangle: pixel counts and bounds") {
  const State img = render_rectangle({0, 0, 0, 0}, 32, 10);
  int on = 0;
  for (Category p : img) on += p;
  CHECK(on == 100);  // 10x10 block

  const State big = render_rectangle({10, 10, 10, 10}, 32, 10);
  int on_big = 0;
  for (Category p : big) on_big += p;
  CHECK(on_big == 400);  // 20x20 anchored at (10,10), inside bounds

  CHECK_THROWS_AS(render_rectangle({30, 0, 10, 0}, 32, 10), ValidationError);
}

TEST_CASE("render_rectangle: injective over all latent tuples at V=5") {
  std::set<State> images;
  for (std::int32_t left = 0; left <= 5; ++left) {
    for (std::int32_t top = 0; top <= 5; ++top) {
      for (std::int32_t w = 0; w <= 5; ++w) {
        for (std::int32_t h = 0; h <= 5; ++h) {
          images.insert(render_rectangle({left, top, w, h}, 16, 5));
        }
      }
    }
  }
  CHECK(images.size() == 6u * 6 * 6 * 6);
}

TEST_CASE("gen_image_task: geometry validation and exact MI") {
  CHECK_THROWS_AS(gen_image_task(16, 10, 10, 2.0), ValidationError);

  const ImageTask task = gen_image_task(16, 5, 5, 2.0);
  CHECK(std::abs(task.exact_mi - 2.0) <= 1e-9);
  CHECK(std::abs(4.0 * channel_mi(5, task.channel_eps) - task.exact_mi) <=
        1e-12);

  const ImageTask null_task = gen_image_task(16, 5, 5, 0.0);
  CHECK(null_task.channel_eps == doctest::Approx(5.0 / 6.0).epsilon(1e-15));
}

TEST_CASE("gen_image_task: latent channel matches channel_mi empirically") {
  const ImageTask task = gen_image_task(16, 5, 5, 2.0);
  RngStream rng(42);
  const std::vector<LatentPair> pairs = sample_latents(task, 1000000, rng);
  // per-coordinate plug-in on the first coordinate
  Dataset coord;
  coord.space = StateSpace(6, 1);
  for (const LatentPair& p : pairs) {
    coord.x0.push_back({p.x0[0]});
    coord.x1.push_back({p.x1[0]});
  }
  const double plug = estimate_plugin(coord).value;
  CHECK(std::abs(plug - channel_mi(5, task.channel_eps)) <= 0.01);
}

TEST_CASE("image benchmark: MI invariant under the rendering bijection") {
  const ImageTask task = gen_image_task(16, 5, 5, 3.0);
  RngStream rng(77);
  const std::vector<LatentPair> pairs = sample_latents(task, 5000, rng);
  Dataset latents;
  latents.space = StateSpace(6, 4);
  for (const LatentPair& p : pairs) {
    latents.x0.push_back({p.x0[0], p.x0[1], p.x0[2], p.x0[3]});
    latents.x1.push_back({p.x1[0], p.x1[1], p.x1[2], p.x1[3]});
  }
  const Dataset images = render_dataset(task, pairs);
  const double mi_lat = estimate_plugin(latents).value;
  const double mi_img = estimate_plugin(images).value;
  CHECK(std::abs(mi_lat - mi_img) <= 1e-12);
}

TEST_CASE("image task: independent endpoints at target zero") {
  const ImageTask task = gen_image_task(16, 5, 5, 0.0);
  RngStream rng(3);
  const std::vector<LatentPair> pairs = sample_latents(task, 60000, rng);
  // channel keep-probability equals the uniform chance 1/6
  int kept = 0;
  for (const LatentPair& p : pairs) kept += (p.x0[0] == p.x1[0]) ? 1 : 0;
  const double frac = kept / 60000.0;
  CHECK(std::abs(frac - 1.0 / 6.0) <= 3.0 * std::sqrt((1.0 / 6) * (5.0 / 6) /
                                                      60000.0));
}

TEST_CASE("dataset files: bit-exact round trip") {
  RngStream task_rng(50);
  const LowDimTask task = gen_lowdim_task(2, 10, 0.5, task_rng);
  RngStream rng(51);
  Dataset ds = sample_lowdim(task, 500, rng);
  ds.task.seed = 123456789;

  const std::string path = "/tmp/dbmi_test_ds.bin";
  save_dataset(path, ds);
  const Dataset loaded = load_dataset(path);
  CHECK(loaded.x0 == ds.x0);
  CHECK(loaded.x1 == ds.x1);
  CHECK(loaded.task.exact_mi == ds.task.exact_mi);
  CHECK(loaded.task.conditional == ds.task.conditional);
  CHECK(loaded.task.seed == ds.task.seed);

  const std::string path2 = "/tmp/dbmi_test_ds2.bin";
  save_dataset(path2, loaded);
  std::ifstream a(path, std::ios::binary), b(path2, std::ios::binary);
  const std::string bytes_a((std::istreambuf_iterator<char>(a)),
                            std::istreambuf_iterator<char>());
  const std::string bytes_b((std::istreambuf_iterator<char>(b)),
                            std::istreambuf_iterator<char>());
  CHECK(bytes_a == bytes_b);
  CHECK(!bytes_a.empty());
}

TEST_CASE("lowdim task info: reconstruction matches the original joint") {
  RngStream rng(60);
  const LowDimTask task = gen_lowdim_task(2, 4, 0.5, rng);
  const TaskInfo info = lowdim_task_info(task);
  const LowDimTask back = lowdim_task_from_info(task.space, info);
  CHECK(back.conditional == task.conditional);
  CHECK(back.total_mi == task.total_mi);
}

TEST_CASE("pgm: grid geometry and value set") {
  std::vector<State> images;
  for (int i = 0; i < 10; ++i) {
    images.push_back(render_rectangle({i % 3, i % 2, 1, 2}, 16, 5));
  }
  const std::string path = "/tmp/dbmi_test_grid.pgm";
  write_pgm_grid(path, images, 16, 2, 5);
  std::ifstream in(path);
  std::string magic;
  int width = 0, height = 0, maxval = 0;
  in >> magic >> width >> height >> maxval;
  CHECK(magic == "P2");
  CHECK(width == 5 * 16 + 4);
  CHECK(height == 2 * 16 + 1);
  CHECK(maxval == 255);
  int value = 0;
  std::set<int> values;
  while (in >> value) values.insert(value);
  CHECK(values == std::set<int>{0, 128, 255});
}

TEST_CASE("report: upsert is idempotent per key") {
  const std::string path = "/tmp/dbmi_test_report.tsv";
  std::remove(path.c_str());
  ReportRow row;
  row.task_id = "lowdim-d2-s10";
  row.estimator = "dbmi";
  row.mi_true = 3.375;
  row.mi_hat = 3.41;
  row.std_error = 0.02;
  row.outer = 10000;
  row.inner = 10;
  row.n_steps = 32;
  row.alpha = 1e-4;
  row.seed = 7;
  row.wall_seconds = 12.5;
  upsert_report_row(path, row);
  row.mi_hat = 3.39;
  upsert_report_row(path, row);
  ReportRow other = row;
  other.seed = 8;
  upsert_report_row(path, other);

  const std::vector<ReportRow> rows = read_report(path);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].mi_hat == 3.39);
  CHECK(rows[0].alpha == 1e-4);
  CHECK(rows[1].seed == 8);
}
