#include "exemplar/checkpoint.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace exemplar::contrast {

namespace {

void write_u32_le(std::ofstream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                         static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(bytes, 4);
}

std::uint32_t read_u32_le(std::ifstream& in) {
  unsigned char bytes[4];
  in.read(reinterpret_cast<char*>(bytes), 4);
  return static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
         (static_cast<std::uint32_t>(bytes[2]) << 16) |
         (static_cast<std::uint32_t>(bytes[3]) << 24);
}

json backbone_to_json(const BackboneSpec& b) {
  return json{{"in_channels", b.in_channels}, {"input_size", b.input_size},
              {"channels", b.channels},       {"embed_dim", b.embed_dim},
              {"proj_hidden", b.proj_hidden}, {"n_classes", b.n_classes},
              {"batchnorm", b.batchnorm}};
}

BackboneSpec backbone_from_json(const json& j) {
  BackboneSpec b;
  b.in_channels = j.at("in_channels");
  b.input_size = j.at("input_size");
  b.channels = j.at("channels").get<std::vector<int>>();
  b.embed_dim = j.at("embed_dim");
  b.proj_hidden = j.at("proj_hidden");
  b.n_classes = j.at("n_classes");
  b.batchnorm = j.at("batchnorm");
  return b;
}

json config_to_json(const ContrastConfig& c) {
  return json{{"variant", variant_name(c.variant)},
              {"tau", c.tau},
              {"queue_capacity", c.queue_capacity},
              {"momentum", c.momentum},
              {"epochs", c.epochs},
              {"batch_size", c.batch_size},
              {"lr", c.lr},
              {"cosine", c.cosine},
              {"weight_decay", c.weight_decay},
              {"sgd_momentum", c.sgd_momentum}};
}

ContrastConfig config_from_json(const json& j) {
  ContrastConfig c;
  c.variant = variant_from_name(j.at("variant"));
  c.tau = j.at("tau");
  c.queue_capacity = j.at("queue_capacity");
  c.momentum = j.at("momentum");
  c.epochs = j.at("epochs");
  c.batch_size = j.at("batch_size");
  c.lr = j.at("lr");
  c.cosine = j.at("cosine");
  c.weight_decay = j.at("weight_decay");
  c.sgd_momentum = j.at("sgd_momentum");
  return c;
}

}  // namespace

void write_f32_file(const std::string& path, const nn::Vec& values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_f32_file: cannot open " + path);
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const float f = static_cast<float>(values[i]);
    write_u32_le(out, std::bit_cast<std::uint32_t>(f));
  }
}

nn::Vec read_f32_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_f32_file: cannot open " + path);
  in.seekg(0, std::ios::end);
  const auto bytes = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  if (bytes % 4 != 0) throw std::runtime_error("read_f32_file: truncated file " + path);
  nn::Vec v(static_cast<Eigen::Index>(bytes / 4));
  for (Eigen::Index i = 0; i < v.size(); ++i)
    v[i] = static_cast<double>(std::bit_cast<float>(read_u32_le(in)));
  if (!in) throw std::runtime_error("read_f32_file: short read on " + path);
  return v;
}

void write_i32_file(const std::string& path, const std::vector<int>& values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_i32_file: cannot open " + path);
  for (int v : values) write_u32_le(out, static_cast<std::uint32_t>(v));
}

std::vector<int> read_i32_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_i32_file: cannot open " + path);
  in.seekg(0, std::ios::end);
  const auto bytes = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  if (bytes % 4 != 0) throw std::runtime_error("read_i32_file: truncated file " + path);
  std::vector<int> v(bytes / 4);
  for (auto& x : v) x = static_cast<int>(read_u32_le(in));
  if (!in) throw std::runtime_error("read_i32_file: short read on " + path);
  return v;
}

void save_checkpoint(const std::string& dir, const TrainState& state) {
  fs::create_directories(dir);
  const Encoder& q = state.query;
  const Encoder& k = state.key;

  json manifest;
  manifest["format_version"] = 1;
  manifest["backbone"] = backbone_to_json(state.backbone);
  manifest["config"] = config_to_json(state.config);
  manifest["epoch"] = state.epoch;
  manifest["global_step"] = state.global_step;
  manifest["total_steps"] = state.total_steps;
  manifest["rng_state"] = state.rng.serialize();
  manifest["shapes"] = {
      {"params", q.param_count()},
      {"buffers", q.buffers().size()},
      {"queue_capacity", state.queue.capacity()},
      {"queue_dim", state.queue.dim()},
      {"queue_filled", state.queue.filled},
      {"queue_write_ptr", state.queue.write_ptr},
      {"velocity", state.optimizer.velocity().size()},
  };
  manifest["files"] = {
      {"query_params", "query_params.f32"},   {"key_params", "key_params.f32"},
      {"query_buffers", "query_buffers.f32"}, {"key_buffers", "key_buffers.f32"},
      {"velocity", "velocity.f32"},           {"queue_keys", "queue_keys.f32"},
      {"queue_labels", "queue_labels.i32"},
  };

  std::ofstream mf(fs::path(dir) / "manifest.json");
  if (!mf) throw std::runtime_error("save_checkpoint: cannot write manifest in " + dir);
  mf << manifest.dump(2) << "\n";

  const fs::path d(dir);
  write_f32_file((d / "query_params.f32").string(), q.params());
  write_f32_file((d / "key_params.f32").string(), k.params());
  write_f32_file((d / "query_buffers.f32").string(), q.buffers());
  write_f32_file((d / "key_buffers.f32").string(), k.buffers());
  write_f32_file((d / "velocity.f32").string(), state.optimizer.velocity());
  nn::Vec queue_flat(static_cast<Eigen::Index>(state.queue.keys.size()));
  Eigen::Map<nn::Mat>(queue_flat.data(), state.queue.keys.rows(), state.queue.keys.cols()) =
      state.queue.keys;
  write_f32_file((d / "queue_keys.f32").string(), queue_flat);
  write_i32_file((d / "queue_labels.i32").string(), state.queue.labels);
}

TrainState load_checkpoint(const std::string& dir) {
  const fs::path d(dir);
  std::ifstream mf(d / "manifest.json");
  if (!mf) throw std::runtime_error("load_checkpoint: no manifest.json in " + dir);
  json manifest;
  mf >> manifest;

  const BackboneSpec backbone = backbone_from_json(manifest.at("backbone"));
  const ContrastConfig config = config_from_json(manifest.at("config"));

  TrainState state(backbone, config, 0, manifest.at("total_steps").get<long>());
  state.epoch = manifest.at("epoch");
  state.global_step = manifest.at("global_step").get<long>();
  state.rng = Rng::deserialize(manifest.at("rng_state").get<std::string>());

  const json& files = manifest.at("files");
  auto file = [&](const char* key) { return (d / files.at(key).get<std::string>()).string(); };

  const nn::Vec qp = read_f32_file(file("query_params"));
  if (qp.size() != static_cast<Eigen::Index>(state.query.param_count()))
    throw std::runtime_error("load_checkpoint: query parameter count mismatch");
  state.query.set_params(qp);
  state.key.set_params(read_f32_file(file("key_params")));
  state.query.set_buffers(read_f32_file(file("query_buffers")));
  state.key.set_buffers(read_f32_file(file("key_buffers")));

  const nn::Vec vel = read_f32_file(file("velocity"));
  if (vel.size() > 0) state.optimizer.velocity() = vel;

  const json& shapes = manifest.at("shapes");
  const int cap = shapes.at("queue_capacity");
  const int dim = shapes.at("queue_dim");
  state.queue = MemoryQueue(cap, dim);
  const nn::Vec queue_flat = read_f32_file(file("queue_keys"));
  if (queue_flat.size() != static_cast<Eigen::Index>(cap) * dim)
    throw std::runtime_error("load_checkpoint: queue size mismatch");
  state.queue.keys = Eigen::Map<const nn::Mat>(queue_flat.data(), cap, dim);
  state.queue.labels = read_i32_file(file("queue_labels"));
  state.queue.filled = shapes.at("queue_filled");
  state.queue.write_ptr = shapes.at("queue_write_ptr");
  return state;
}

}  // namespace exemplar::contrast
