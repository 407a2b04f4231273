#include "dbmi/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "dbmi/error.hpp"

namespace dbmi {

static_assert(std::numeric_limits<double>::is_iec559,
              "checkpoint format assumes IEEE-754 doubles");

namespace {

constexpr char kMagic[8] = {'D', 'B', 'M', 'I', 'C', 'P', '0', '1'};

void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t read_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

void write_doubles(std::ostream& out, const std::vector<double>& v) {
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void read_doubles(std::istream& in, std::vector<double>& v, std::size_t n) {
  v.resize(n);
  in.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(n * sizeof(double)));
}

std::string u64_hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t hex_u64(const std::string& s) {
  return std::strtoull(s.c_str(), nullptr, 16);
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  nlohmann::json header;
  header["format"] = 1;
  header["space"] = {{"categories", ckpt.config.kernel.space.num_categories},
                     {"dims", ckpt.config.kernel.space.num_dims}};
  header["grid"] = {{"inner", ckpt.config.grid.num_inner}};
  header["alpha"] = ckpt.config.kernel.alpha;
  header["embed_dim"] = ckpt.config.embed_dim;
  header["hidden_dims"] = ckpt.config.hidden_dims;
  header["leaky_slope"] = ckpt.config.leaky_slope;
  header["prob_floor"] = ckpt.config.prob_floor;
  header["train_seed"] = u64_hex(ckpt.train_seed);
  header["epochs_done"] = ckpt.epochs_done;
  header["steps_done"] = ckpt.steps_done;
  header["lambda_ce"] = ckpt.lambda_ce;
  header["has_optimizer"] = ckpt.has_optimizer;
  if (ckpt.has_optimizer) {
    header["opt"] = {{"lr", ckpt.opt.learning_rate},
                     {"beta1", ckpt.opt.beta1},
                     {"beta2", ckpt.opt.beta2},
                     {"epsilon", ckpt.opt.epsilon},
                     {"step", ckpt.opt.step}};
  }
  header["has_rng"] = ckpt.has_rng;
  if (ckpt.has_rng) {
    header["rng_state"] = {u64_hex(ckpt.rng_state[0]),
                           u64_hex(ckpt.rng_state[1]),
                           u64_hex(ckpt.rng_state[2]),
                           u64_hex(ckpt.rng_state[3])};
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open checkpoint for writing: " + path);
  }
  out.write(kMagic, sizeof(kMagic));
  const std::string head = header.dump();
  write_u64(out, head.size());
  out.write(head.data(), static_cast<std::streamsize>(head.size()));
  write_u64(out, ckpt.params.size());
  write_doubles(out, ckpt.params);
  if (ckpt.has_optimizer) {
    if (ckpt.opt.m.size() != ckpt.params.size() ||
        ckpt.opt.v.size() != ckpt.params.size()) {
      throw ValidationError("checkpoint: optimizer/parameter shape mismatch");
    }
    write_doubles(out, ckpt.opt.m);
    write_doubles(out, ckpt.opt.v);
  }
  if (!out) {
    throw IoError("short write while saving checkpoint: " + path);
  }
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open checkpoint: " + path);
  }
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw IoError("not a checkpoint file: " + path);
  }
  const std::uint64_t head_len = read_u64(in);
  std::string head(head_len, '\0');
  in.read(head.data(), static_cast<std::streamsize>(head_len));
  if (!in) {
    throw IoError("truncated checkpoint header: " + path);
  }
  nlohmann::json header = nlohmann::json::parse(head);

  Checkpoint ckpt;
  ckpt.config.kernel =
      UniformKernel(StateSpace(header["space"]["categories"].get<std::int32_t>(),
                               header["space"]["dims"].get<std::int32_t>()),
                    header["alpha"].get<double>());
  ckpt.config.grid = TimeGrid(header["grid"]["inner"].get<std::int32_t>());
  ckpt.config.embed_dim = header["embed_dim"].get<std::int32_t>();
  ckpt.config.hidden_dims =
      header["hidden_dims"].get<std::vector<std::int32_t>>();
  ckpt.config.leaky_slope = header["leaky_slope"].get<double>();
  ckpt.config.prob_floor = header["prob_floor"].get<double>();
  ckpt.train_seed = hex_u64(header["train_seed"].get<std::string>());
  ckpt.epochs_done = header["epochs_done"].get<std::int64_t>();
  ckpt.steps_done = header["steps_done"].get<std::int64_t>();
  ckpt.lambda_ce = header["lambda_ce"].get<double>();
  ckpt.has_optimizer = header["has_optimizer"].get<bool>();
  ckpt.has_rng = header["has_rng"].get<bool>();
  if (ckpt.has_rng) {
    for (int i = 0; i < 4; ++i) {
      ckpt.rng_state[static_cast<std::size_t>(i)] =
          hex_u64(header["rng_state"][i].get<std::string>());
    }
  }

  const std::uint64_t count = read_u64(in);
  read_doubles(in, ckpt.params, count);
  if (ckpt.has_optimizer) {
    ckpt.opt.learning_rate = header["opt"]["lr"].get<double>();
    ckpt.opt.beta1 = header["opt"]["beta1"].get<double>();
    ckpt.opt.beta2 = header["opt"]["beta2"].get<double>();
    ckpt.opt.epsilon = header["opt"]["epsilon"].get<double>();
    ckpt.opt.step = header["opt"]["step"].get<std::int64_t>();
    read_doubles(in, ckpt.opt.m, count);
    read_doubles(in, ckpt.opt.v, count);
  }
  if (!in) {
    throw IoError("truncated checkpoint payload: " + path);
  }
  return ckpt;
}

}  // namespace dbmi
