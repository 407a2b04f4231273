#include "dbmi/dataset.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

#include "dbmi/error.hpp"

namespace dbmi {

namespace {

constexpr char kMagic[8] = {'D', 'B', 'M', 'I', 'D', 'S', '0', '1'};

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

nlohmann::json task_to_json(const TaskInfo& t) {
  nlohmann::json j;
  j["kind"] = t.kind;
  j["exact_mi"] = t.exact_mi;
  j["seed"] = t.seed;
  if (t.kind == "lowdim") {
    j["sigma"] = t.sigma;
    j["conditional"] = t.conditional;
    j["per_dim_mi"] = t.per_dim_mi;
  } else if (t.kind == "image") {
    j["side"] = t.side;
    j["latent_bound"] = t.latent_bound;
    j["min_side"] = t.min_side;
    j["channel_eps"] = t.channel_eps;
    j["target_mi"] = t.target_mi;
    j["render_version"] = t.render_version;
  }
  return j;
}

TaskInfo task_from_json(const nlohmann::json& j) {
  TaskInfo t;
  t.kind = j.value("kind", std::string{});
  t.exact_mi = j.value("exact_mi", 0.0);
  t.seed = j.value("seed", std::uint64_t{0});
  if (t.kind == "lowdim") {
    t.sigma = j.value("sigma", 0.0);
    t.conditional = j.value("conditional", std::vector<std::vector<double>>{});
    t.per_dim_mi = j.value("per_dim_mi", std::vector<double>{});
  } else if (t.kind == "image") {
    t.side = j.value("side", 0);
    t.latent_bound = j.value("latent_bound", 0);
    t.min_side = j.value("min_side", 0);
    t.channel_eps = j.value("channel_eps", 0.0);
    t.target_mi = j.value("target_mi", 0.0);
    t.render_version = j.value("render_version", 1);
  }
  return t;
}

}  // namespace

void save_dataset(const std::string& path, const Dataset& ds) {
  if (ds.x0.size() != ds.x1.size()) {
    throw ValidationError("dataset: x0/x1 length mismatch");
  }
  for (const State& x : ds.x0) ds.space.require_valid(x);
  for (const State& x : ds.x1) ds.space.require_valid(x);

  nlohmann::json header;
  header["format"] = 1;
  header["space"] = {{"categories", ds.space.num_categories},
                     {"dims", ds.space.num_dims}};
  header["count"] = ds.size();
  header["task"] = task_to_json(ds.task);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open dataset for writing: " + path);
  }
  out.write(kMagic, sizeof(kMagic));
  const std::string head = header.dump();
  write_u64(out, head.size());
  out.write(head.data(), static_cast<std::streamsize>(head.size()));

  const bool wide = ds.space.num_categories > 256;
  std::vector<unsigned char> buf;
  buf.reserve(ds.size() * static_cast<std::size_t>(ds.space.num_dims) *
              (wide ? 4 : 2));
  auto push_state = [&](const State& x) {
    for (Category c : x) {
      buf.push_back(static_cast<unsigned char>(c & 0xFF));
      if (wide) buf.push_back(static_cast<unsigned char>((c >> 8) & 0xFF));
    }
  };
  for (std::size_t i = 0; i < ds.size(); ++i) {
    push_state(ds.x0[i]);
    push_state(ds.x1[i]);
  }
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
  if (!out) {
    throw IoError("short write while saving dataset: " + path);
  }
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open dataset: " + path);
  }
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw IoError("not a dataset file: " + path);
  }
  const std::uint64_t head_len = read_u64(in);
  std::string head(head_len, '\0');
  in.read(head.data(), static_cast<std::streamsize>(head_len));
  if (!in) {
    throw IoError("truncated dataset header: " + path);
  }
  const nlohmann::json header = nlohmann::json::parse(head);

  Dataset ds;
  ds.space = StateSpace(header["space"]["categories"].get<std::int32_t>(),
                        header["space"]["dims"].get<std::int32_t>());
  ds.task = task_from_json(header["task"]);
  const std::size_t count = header["count"].get<std::size_t>();

  const bool wide = ds.space.num_categories > 256;
  const std::size_t dims = static_cast<std::size_t>(ds.space.num_dims);
  const std::size_t state_bytes = dims * (wide ? 2 : 1);
  std::vector<unsigned char> buf(count * 2 * state_bytes);
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size()));
  if (!in) {
    throw IoError("truncated dataset payload: " + path);
  }
  std::size_t pos = 0;
  auto pop_state = [&]() {
    State x(dims);
    for (std::size_t d = 0; d < dims; ++d) {
      Category c = buf[pos++];
      if (wide) c |= static_cast<Category>(buf[pos++]) << 8;
      x[d] = c;
    }
    return x;
  };
  ds.x0.reserve(count);
  ds.x1.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    ds.x0.push_back(pop_state());
    ds.x1.push_back(pop_state());
  }
  for (const State& x : ds.x0) ds.space.require_valid(x);
  for (const State& x : ds.x1) ds.space.require_valid(x);
  return ds;
}

}  // namespace dbmi
