#include "dbmi/model.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "dbmi/error.hpp"
#include "dbmi/parallel.hpp"
#include "dbmi/rng.hpp"

namespace dbmi {

const ParamLayout::Entry& ParamLayout::find(const std::string& name) const {
  for (const Entry& e : entries) {
    if (e.name == name) return e;
  }
  throw ValidationError("unknown parameter group: " + name);
}

struct TransitionModel::Workspace {
  std::vector<double> feat;                  // time features
  std::vector<double> input;                 // embed_dim
  std::vector<std::vector<double>> pre;      // hidden pre-activations
  std::vector<std::vector<double>> act;      // hidden activations
  std::vector<double> logits;                // D*S
  std::vector<double> soft;                  // per-dim softmax
  std::vector<double> endpoint;              // floored prediction
  std::vector<double> mixed;                 // posterior mixture
  std::vector<double> target;                // S scratch (KL target row)
  std::vector<double> d_end;                 // dL/d endpoint
  std::vector<double> d_logits;
  std::vector<double> d_input;
  std::vector<std::vector<double>> d_act;

  explicit Workspace(const ModelConfig& cfg) {
    const std::size_t out = static_cast<std::size_t>(cfg.output_dim());
    feat.resize(static_cast<std::size_t>(cfg.num_time_features()));
    input.resize(static_cast<std::size_t>(cfg.embed_dim));
    d_input.resize(input.size());
    for (std::int32_t h : cfg.hidden_dims) {
      pre.emplace_back(static_cast<std::size_t>(h));
      act.emplace_back(static_cast<std::size_t>(h));
      d_act.emplace_back(static_cast<std::size_t>(h));
    }
    logits.resize(out);
    soft.resize(out);
    endpoint.resize(out);
    mixed.resize(out);
    d_end.resize(out);
    d_logits.resize(out);
    target.resize(
        static_cast<std::size_t>(cfg.kernel.space.num_categories));
  }
};

namespace {

ParamLayout build_layout(const ModelConfig& cfg) {
  const std::size_t d = static_cast<std::size_t>(cfg.kernel.space.num_dims);
  const std::size_t s =
      static_cast<std::size_t>(cfg.kernel.space.num_categories);
  const std::size_t e = static_cast<std::size_t>(cfg.embed_dim);
  ParamLayout layout;
  auto add = [&](const std::string& name, std::size_t rows, std::size_t cols) {
    layout.entries.push_back({name, layout.total, rows, cols});
    layout.total += rows * cols;
  };
  add("embed.prev", d * s, e);
  add("embed.x0", d * s, e);
  add("embed.flag", 2, e);
  add("time.proj", static_cast<std::size_t>(cfg.num_time_features()), e);
  std::size_t in = e;
  for (std::size_t l = 0; l < cfg.hidden_dims.size(); ++l) {
    const std::size_t out = static_cast<std::size_t>(cfg.hidden_dims[l]);
    add("dense." + std::to_string(l) + ".w", in, out);
    add("dense." + std::to_string(l) + ".b", 1, out);
    in = out;
  }
  add("head.w", in, static_cast<std::size_t>(cfg.output_dim()));
  add("head.b", 1, static_cast<std::size_t>(cfg.output_dim()));
  return layout;
}

void time_features(std::int32_t n, const TimeGrid& grid,
                   std::vector<double>& feat) {
  const double u = static_cast<double>(n) / grid.num_steps();
  const std::size_t half = feat.size() / 2;
  double omega = 3.14159265358979323846;
  for (std::size_t i = 0; i < half; ++i) {
    feat[2 * i] = std::sin(omega * u);
    feat[2 * i + 1] = std::cos(omega * u);
    omega *= 2.0;
  }
}

}  // namespace

TransitionModel::TransitionModel(ModelConfig config, std::uint64_t init_seed)
    : config_(std::move(config)), layout_(build_layout(config_)) {
  if (config_.embed_dim < 1 || config_.embed_dim % 2 != 0) {
    throw ValidationError("embed_dim must be a positive even number");
  }
  for (std::int32_t h : config_.hidden_dims) {
    if (h < 1) throw ValidationError("hidden dims must be >= 1");
  }
  params_.assign(layout_.total, 0.0);
  RngStream rng(init_seed);
  const double inv_sqrt_e = 1.0 / std::sqrt(config_.embed_dim);
  auto fill_uniform = [&](const ParamLayout::Entry& e, double scale) {
    double* p = params_.data() + e.offset;
    for (std::size_t i = 0; i < e.size(); ++i) {
      p[i] = (2.0 * rng.uniform01() - 1.0) * scale;
    }
  };
  fill_uniform(layout_.find("embed.prev"), inv_sqrt_e);
  fill_uniform(layout_.find("embed.x0"), inv_sqrt_e);
  fill_uniform(layout_.find("embed.flag"), inv_sqrt_e);
  fill_uniform(layout_.find("time.proj"),
               1.0 / std::sqrt(config_.num_time_features()));
  for (std::size_t l = 0; l < config_.hidden_dims.size(); ++l) {
    const auto& w = layout_.find("dense." + std::to_string(l) + ".w");
    fill_uniform(w, 1.0 / std::sqrt(static_cast<double>(w.rows)));
    // biases stay zero
  }
  // head stays zero: uniform initial predictions keep early KLs finite

  // Posterior mixtures are needed for every step the KL branch can hit.
  posterior_cache_.resize(static_cast<std::size_t>(config_.grid.num_inner) + 1);
  for (std::int32_t n = 1; n <= config_.grid.num_inner; ++n) {
    posterior_cache_[static_cast<std::size_t>(n)] =
        posterior_tensor(config_.kernel, config_.grid, n);
  }
}

void TransitionModel::forward_endpoint(const State& x_prev, const State& x0,
                                       std::int32_t n, std::int32_t v,
                                       Workspace& ws) const {
  const StateSpace& space = config_.kernel.space;
  space.require_valid(x_prev);
  space.require_valid(x0);
  if (v != 0 && v != 1) throw ValidationError("flag v must be 0 or 1");
  const std::size_t e = static_cast<std::size_t>(config_.embed_dim);
  const std::size_t s = static_cast<std::size_t>(space.num_categories);
  const double* prev_tab = params_.data() + layout_.find("embed.prev").offset;
  const double* x0_tab = params_.data() + layout_.find("embed.x0").offset;
  const double* flag_tab = params_.data() + layout_.find("embed.flag").offset;
  const double* time_w = params_.data() + layout_.find("time.proj").offset;

  time_features(n, config_.grid, ws.feat);
  double* in = ws.input.data();
  std::memcpy(in, flag_tab + static_cast<std::size_t>(v) * e,
              e * sizeof(double));
  for (std::size_t d = 0; d < x_prev.size(); ++d) {
    const double* rp =
        prev_tab + (d * s + static_cast<std::size_t>(x_prev[d])) * e;
    const double* r0 = x0_tab + (d * s + static_cast<std::size_t>(x0[d])) * e;
    for (std::size_t i = 0; i < e; ++i) in[i] += rp[i] + r0[i];
  }
  for (std::size_t f = 0; f < ws.feat.size(); ++f) {
    const double tf = ws.feat[f];
    const double* row = time_w + f * e;
    for (std::size_t i = 0; i < e; ++i) in[i] += tf * row[i];
  }

  // hidden stack
  const std::vector<double>* cur = &ws.input;
  const double slope = config_.leaky_slope;
  for (std::size_t l = 0; l < config_.hidden_dims.size(); ++l) {
    const auto& we = layout_.find("dense." + std::to_string(l) + ".w");
    const auto& be = layout_.find("dense." + std::to_string(l) + ".b");
    const double* w = params_.data() + we.offset;
    const double* b = params_.data() + be.offset;
    std::vector<double>& pre = ws.pre[l];
    std::memcpy(pre.data(), b, pre.size() * sizeof(double));
    for (std::size_t i = 0; i < cur->size(); ++i) {
      const double x = (*cur)[i];
      if (x == 0.0) continue;
      const double* row = w + i * pre.size();
      for (std::size_t o = 0; o < pre.size(); ++o) pre[o] += x * row[o];
    }
    std::vector<double>& act = ws.act[l];
    for (std::size_t o = 0; o < pre.size(); ++o) {
      act[o] = pre[o] > 0.0 ? pre[o] : slope * pre[o];
    }
    cur = &act;
  }

  const auto& hw = layout_.find("head.w");
  const auto& hb = layout_.find("head.b");
  const double* w = params_.data() + hw.offset;
  const double* b = params_.data() + hb.offset;
  std::memcpy(ws.logits.data(), b, ws.logits.size() * sizeof(double));
  for (std::size_t i = 0; i < cur->size(); ++i) {
    const double x = (*cur)[i];
    if (x == 0.0) continue;
    const double* row = w + i * ws.logits.size();
    for (std::size_t o = 0; o < ws.logits.size(); ++o) {
      ws.logits[o] += x * row[o];
    }
  }
  for (double l : ws.logits) {
    if (!std::isfinite(l)) {
      throw NumericError("non-finite logits (|params|_max = " +
                         std::to_string([this] {
                           double m = 0.0;
                           for (double p : params_) {
                             m = std::max(m, std::abs(p));
                           }
                           return m;
                         }()) +
                         ")");
    }
  }

  // per-dimension softmax with the probability floor
  const std::size_t dims = static_cast<std::size_t>(space.num_dims);
  const double floor = config_.prob_floor;
  const double denom = 1.0 + static_cast<double>(s) * floor;
  for (std::size_t d = 0; d < dims; ++d) {
    double* lg = ws.logits.data() + d * s;
    double* sm = ws.soft.data() + d * s;
    double* ep = ws.endpoint.data() + d * s;
    double mx = lg[0];
    for (std::size_t c = 1; c < s; ++c) mx = std::max(mx, lg[c]);
    double z = 0.0;
    for (std::size_t c = 0; c < s; ++c) {
      sm[c] = std::exp(lg[c] - mx);
      z += sm[c];
    }
    for (std::size_t c = 0; c < s; ++c) {
      sm[c] /= z;
      ep[c] = (sm[c] + floor) / denom;
    }
  }
}

void TransitionModel::mix_transition(const State& x_prev, std::int32_t n,
                                     Workspace& ws) const {
  // n = N+1: the remaining reference posterior is a point mass at the
  // predicted endpoint, so the mixture equals the prediction itself.
  if (n == config_.grid.num_steps()) {
    ws.mixed = ws.endpoint;
    return;
  }
  const std::size_t s =
      static_cast<std::size_t>(config_.kernel.space.num_categories);
  const std::vector<double>& tensor =
      posterior_cache_[static_cast<std::size_t>(n)];
  const std::size_t dims = static_cast<std::size_t>(x_prev.size());
  for (std::size_t d = 0; d < dims; ++d) {
    const double* ep = ws.endpoint.data() + d * s;
    double* out = ws.mixed.data() + d * s;
    const double* rows =
        tensor.data() + static_cast<std::size_t>(x_prev[d]) * s * s;
    std::memset(out, 0, s * sizeof(double));
    for (std::size_t c = 0; c < s; ++c) {
      const double wc = ep[c];
      const double* row = rows + c * s;
      for (std::size_t y = 0; y < s; ++y) out[y] += wc * row[y];
    }
  }
}

FactorizedDist TransitionModel::predict_endpoint(const State& x_prev,
                                                 const State& x0,
                                                 std::int32_t n,
                                                 std::int32_t v) const {
  Workspace ws(config_);
  forward_endpoint(x_prev, x0, n, v, ws);
  return FactorizedDist(config_.kernel.space.num_dims,
                        config_.kernel.space.num_categories, ws.endpoint,
                        1e-9);
}

FactorizedDist TransitionModel::transition_probs(const State& x_prev,
                                                 const State& x0,
                                                 std::int32_t n,
                                                 std::int32_t v) const {
  if (n < 1 || n > config_.grid.num_steps()) {
    throw ValidationError("transition_probs: n out of [1, N+1]");
  }
  Workspace ws(config_);
  forward_endpoint(x_prev, x0, n, v, ws);
  mix_transition(x_prev, n, ws);
  return FactorizedDist(config_.kernel.space.num_dims,
                        config_.kernel.space.num_categories, ws.mixed, 1e-9);
}

double TransitionModel::tuple_loss_and_grad(const LossTuple& tuple,
                                            double lambda_ce, Workspace& ws,
                                            double* grad) const {
  const std::int32_t total_steps = config_.grid.num_steps();
  if (tuple.step < 1 || tuple.step > total_steps) {
    throw ValidationError("loss tuple step out of [1, N+1]");
  }
  const StateSpace& space = config_.kernel.space;
  space.require_valid(tuple.x1);
  const std::size_t s = static_cast<std::size_t>(space.num_categories);
  const std::size_t dims = static_cast<std::size_t>(space.num_dims);

  forward_endpoint(tuple.x_prev, tuple.x0, tuple.step, tuple.flag, ws);
  const bool final_step = tuple.step == total_steps;
  if (grad != nullptr) {
    std::fill(ws.d_end.begin(), ws.d_end.end(), 0.0);
  }

  double loss = 0.0;
  if (!final_step) {
    // KL(q^ref posterior toward x1 at the target step || model transition).
    const std::int32_t next = tuple.step;
    mix_transition(tuple.x_prev, next, ws);
    const std::int32_t steps_left = config_.grid.num_steps() - next;
    const std::vector<double>& tensor =
        posterior_cache_[static_cast<std::size_t>(next)];
    for (std::size_t d = 0; d < dims; ++d) {
      posterior_row_1d(config_.kernel, steps_left, tuple.x_prev[d],
                       tuple.x1[d], ws.target.data());
      const double* t = ws.mixed.data() + d * s;
      for (std::size_t y = 0; y < s; ++y) {
        const double q = ws.target[y];
        if (q <= 0.0) continue;
        if (t[y] <= 0.0) {
          throw SupportViolationError("loss: model transition support gap");
        }
        loss += q * std::log(q / t[y]);
        if (grad != nullptr) {
          // through the mixture: d t[y] / d endpoint[c] = tensor row
          const double dt = -q / t[y];
          const double* rows =
              tensor.data() + static_cast<std::size_t>(tuple.x_prev[d]) * s * s;
          double* de = ws.d_end.data() + d * s;
          for (std::size_t c = 0; c < s; ++c) de[c] += dt * rows[c * s + y];
        }
      }
    }
  } else {
    // -log r_theta(x1 | x_tN, x0, v); the step-N+1 transition is the
    // endpoint prediction itself.
    for (std::size_t d = 0; d < dims; ++d) {
      const std::size_t idx = d * s + static_cast<std::size_t>(tuple.x1[d]);
      loss -= std::log(ws.endpoint[idx]);
      if (grad != nullptr) ws.d_end[idx] -= 1.0 / ws.endpoint[idx];
    }
  }

  if (lambda_ce > 0.0) {
    for (std::size_t d = 0; d < dims; ++d) {
      const std::size_t idx = d * s + static_cast<std::size_t>(tuple.x1[d]);
      loss -= lambda_ce * std::log(ws.endpoint[idx]);
      if (grad != nullptr) ws.d_end[idx] -= lambda_ce / ws.endpoint[idx];
    }
  }

  if (!std::isfinite(loss)) {
    throw NumericError("non-finite loss term");
  }
  if (grad != nullptr) {
    backward(tuple.x_prev, tuple.x0, tuple.step, tuple.flag, ws, grad);
  }
  return loss;
}

void TransitionModel::backward(const State& x_prev, const State& x0,
                               std::int32_t n, std::int32_t v, Workspace& ws,
                               double* grad) const {
  const StateSpace& space = config_.kernel.space;
  const std::size_t s = static_cast<std::size_t>(space.num_categories);
  const std::size_t dims = static_cast<std::size_t>(space.num_dims);
  const std::size_t e = static_cast<std::size_t>(config_.embed_dim);
  const double floor = config_.prob_floor;
  const double denom = 1.0 + static_cast<double>(s) * floor;

  // floored softmax: p = (s + floor)/denom, ds/dl = s (delta - s)
  for (std::size_t d = 0; d < dims; ++d) {
    const double* sm = ws.soft.data() + d * s;
    const double* de = ws.d_end.data() + d * s;
    double* dl = ws.d_logits.data() + d * s;
    double dot = 0.0;
    for (std::size_t c = 0; c < s; ++c) dot += de[c] * sm[c];
    for (std::size_t c = 0; c < s; ++c) {
      dl[c] = sm[c] * (de[c] - dot) / denom;
    }
  }

  // head
  const std::size_t layers = config_.hidden_dims.size();
  const std::vector<double>& last =
      layers > 0 ? ws.act[layers - 1] : ws.input;
  const auto& hw = layout_.find("head.w");
  const auto& hb = layout_.find("head.b");
  {
    double* gw = grad + hw.offset;
    double* gb = grad + hb.offset;
    const double* w = params_.data() + hw.offset;
    std::vector<double>& dprev = layers > 0 ? ws.d_act[layers - 1] : ws.d_input;
    std::fill(dprev.begin(), dprev.end(), 0.0);
    const std::size_t out = ws.d_logits.size();
    for (std::size_t o = 0; o < out; ++o) gb[o] += ws.d_logits[o];
    for (std::size_t i = 0; i < last.size(); ++i) {
      const double x = last[i];
      const double* wrow = w + i * out;
      double* grow = gw + i * out;
      double acc = 0.0;
      for (std::size_t o = 0; o < out; ++o) {
        grow[o] += x * ws.d_logits[o];
        acc += wrow[o] * ws.d_logits[o];
      }
      dprev[i] = acc;
    }
  }

  // hidden stack, last to first
  const double slope = config_.leaky_slope;
  for (std::size_t l = layers; l-- > 0;) {
    std::vector<double>& dact = ws.d_act[l];
    const std::vector<double>& pre = ws.pre[l];
    // through the leaky rectifier, in place
    for (std::size_t o = 0; o < dact.size(); ++o) {
      if (pre[o] <= 0.0) dact[o] *= slope;
    }
    const auto& we = layout_.find("dense." + std::to_string(l) + ".w");
    const auto& be = layout_.find("dense." + std::to_string(l) + ".b");
    const std::vector<double>& below = l > 0 ? ws.act[l - 1] : ws.input;
    std::vector<double>& dbelow = l > 0 ? ws.d_act[l - 1] : ws.d_input;
    std::fill(dbelow.begin(), dbelow.end(), 0.0);
    double* gw = grad + we.offset;
    double* gb = grad + be.offset;
    const double* w = params_.data() + we.offset;
    const std::size_t out = dact.size();
    for (std::size_t o = 0; o < out; ++o) gb[o] += dact[o];
    for (std::size_t i = 0; i < below.size(); ++i) {
      const double x = below[i];
      const double* wrow = w + i * out;
      double* grow = gw + i * out;
      double acc = 0.0;
      for (std::size_t o = 0; o < out; ++o) {
        grow[o] += x * dact[o];
        acc += wrow[o] * dact[o];
      }
      dbelow[i] = acc;
    }
  }

  // scatter into the embedding tables
  double* g_prev = grad + layout_.find("embed.prev").offset;
  double* g_x0 = grad + layout_.find("embed.x0").offset;
  double* g_flag = grad + layout_.find("embed.flag").offset;
  double* g_time = grad + layout_.find("time.proj").offset;
  const double* din = ws.d_input.data();
  for (std::size_t d = 0; d < dims; ++d) {
    double* rp = g_prev + (d * s + static_cast<std::size_t>(x_prev[d])) * e;
    double* r0 = g_x0 + (d * s + static_cast<std::size_t>(x0[d])) * e;
    for (std::size_t i = 0; i < e; ++i) {
      rp[i] += din[i];
      r0[i] += din[i];
    }
  }
  {
    double* rf = g_flag + static_cast<std::size_t>(v) * e;
    for (std::size_t i = 0; i < e; ++i) rf[i] += din[i];
  }
  for (std::size_t f = 0; f < ws.feat.size(); ++f) {
    const double tf = ws.feat[f];
    double* row = g_time + f * e;
    for (std::size_t i = 0; i < e; ++i) row[i] += tf * din[i];
  }
}

namespace {

constexpr std::size_t kGradChunk = 128;

}  // namespace

LossBreakdown TransitionModel::loss(std::span<const LossTuple> tuples,
                                    double lambda_ce) const {
  return loss_impl(tuples, lambda_ce, nullptr);
}

LossBreakdown TransitionModel::loss_and_grad(std::span<const LossTuple> tuples,
                                             double lambda_ce,
                                             std::vector<double>& grad) const {
  grad.assign(layout_.total, 0.0);
  return loss_impl(tuples, lambda_ce, &grad);
}

LossBreakdown TransitionModel::loss_impl(std::span<const LossTuple> tuples,
                                         double lambda_ce,
                                         std::vector<double>* grad) const {
  if (tuples.empty()) {
    throw ValidationError("loss: empty minibatch");
  }
  const std::size_t chunks = num_chunks(tuples.size(), kGradChunk);
  struct ChunkResult {
    double sum_v0 = 0.0, sum_v1 = 0.0;
    std::size_t n_v0 = 0, n_v1 = 0;
    std::vector<double> grad;
    std::exception_ptr error;
  };
  std::vector<ChunkResult> results(chunks);
  parallel_chunks(
      tuples.size(), kGradChunk,
      [&](std::size_t begin, std::size_t end, std::size_t chunk) {
        ChunkResult& r = results[chunk];
        try {
          Workspace ws(config_);
          if (grad != nullptr) r.grad.assign(layout_.total, 0.0);
          for (std::size_t i = begin; i < end; ++i) {
            const double term = tuple_loss_and_grad(
                tuples[i], lambda_ce, ws,
                grad != nullptr ? r.grad.data() : nullptr);
            if (tuples[i].flag == 0) {
              r.sum_v0 += term;
              ++r.n_v0;
            } else {
              r.sum_v1 += term;
              ++r.n_v1;
            }
          }
        } catch (...) {
          r.error = std::current_exception();
        }
      });
  LossBreakdown out;
  for (std::size_t c = 0; c < chunks; ++c) {
    if (results[c].error) {
      std::rethrow_exception(results[c].error);
    }
    out.sum_independent += results[c].sum_v0;
    out.sum_joint += results[c].sum_v1;
    out.count_independent += results[c].n_v0;
    out.count_joint += results[c].n_v1;
    if (grad != nullptr) {
      const std::vector<double>& g = results[c].grad;
      for (std::size_t i = 0; i < g.size(); ++i) (*grad)[i] += g[i];
    }
  }
  const double inv = 1.0 / static_cast<double>(tuples.size());
  out.mean = (out.sum_independent + out.sum_joint) * inv;
  if (grad != nullptr) {
    for (double& g : *grad) g *= inv;
  }
  return out;
}

}  // namespace dbmi
