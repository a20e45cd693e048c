#include "qzero/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace qzero {

namespace {

constexpr char kMagic[4] = {'Q', 'Z', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw CheckpointError("checkpoint: truncated file");
  return v;
}

void write_tensor(std::ostream& out, const char* name,
                  const GgnnParams::Mat& m) {
  const std::uint16_t len = static_cast<std::uint16_t>(std::strlen(name));
  write_pod(out, len);
  out.write(name, len);
  write_pod(out, static_cast<std::uint32_t>(m.rows()));
  write_pod(out, static_cast<std::uint32_t>(m.cols()));
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double)) * m.size());
}

void read_tensor_into(std::istream& in, const char* expected_name,
                      GgnnParams::Mat& m) {
  const std::uint16_t len = read_pod<std::uint16_t>(in);
  std::string name(len, '\0');
  in.read(name.data(), len);
  if (!in) throw CheckpointError("checkpoint: truncated tensor name");
  if (name != expected_name)
    throw CheckpointError("checkpoint: tensor name mismatch, expected '" +
                          std::string(expected_name) + "', found '" + name + "'");
  const auto rows = read_pod<std::uint32_t>(in);
  const auto cols = read_pod<std::uint32_t>(in);
  if (rows != static_cast<std::uint32_t>(m.rows()) ||
      cols != static_cast<std::uint32_t>(m.cols())) {
    throw CheckpointError("checkpoint: shape mismatch for '" + name + "'");
  }
  in.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(sizeof(double)) * m.size());
  if (!in) throw CheckpointError("checkpoint: truncated tensor data");
}

void write_param_set(std::ostream& out, const GgnnParams& p) {
  std::uint32_t count = 0;
  p.for_each_tensor([&](const char*, const GgnnParams::Mat&) { ++count; });
  write_pod(out, count);
  p.for_each_tensor([&](const char* name, const GgnnParams::Mat& m) {
    write_tensor(out, name, m);
  });
}

void read_param_set(std::istream& in, GgnnParams& p) {
  std::uint32_t expected = 0;
  p.for_each_tensor([&](const char*, const GgnnParams::Mat&) { ++expected; });
  const auto count = read_pod<std::uint32_t>(in);
  if (count != expected)
    throw CheckpointError("checkpoint: wrong tensor count");
  p.for_each_tensor([&](const char* name, GgnnParams::Mat& m) {
    read_tensor_into(in, name, m);
  });
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const GgnnParams& params,
                     const OptimState* opt) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("checkpoint: cannot open " + path.string());

  out.write(kMagic, 4);
  write_pod(out, kVersion);
  const GgnnConfig& c = params.config;
  write_pod(out, static_cast<std::int32_t>(c.hidden_size));
  write_pod(out, static_cast<std::int32_t>(c.passes));
  write_pod(out, static_cast<std::int32_t>(c.mlp_hidden));
  write_pod(out, static_cast<std::int32_t>(GgnnConfig::kActionCount));
  write_pod(out, c.learning_rate);
  write_pod(out, c.weight_decay);
  write_pod(out, static_cast<std::uint8_t>(
                     c.optimizer == GgnnConfig::Optimizer::AdaptiveMoment ? 1 : 0));

  write_param_set(out, params);

  const bool has_opt = opt != nullptr && opt->initialized;
  write_pod(out, static_cast<std::uint8_t>(has_opt ? 1 : 0));
  if (has_opt) {
    write_pod(out, static_cast<std::int64_t>(opt->step));
    write_param_set(out, opt->m);
    write_param_set(out, opt->v);
  }
  if (!out) throw CheckpointError("checkpoint: write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("checkpoint: cannot open " + path.string());

  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw CheckpointError("checkpoint: bad magic in " + path.string());
  const auto version = read_pod<std::uint32_t>(in);
  if (version != kVersion)
    throw CheckpointError("checkpoint: unsupported version " +
                          std::to_string(version));

  GgnnConfig cfg;
  cfg.hidden_size = read_pod<std::int32_t>(in);
  cfg.passes = read_pod<std::int32_t>(in);
  cfg.mlp_hidden = read_pod<std::int32_t>(in);
  const auto actions = read_pod<std::int32_t>(in);
  if (actions != GgnnConfig::kActionCount)
    throw CheckpointError("checkpoint: unsupported action count");
  cfg.learning_rate = read_pod<double>(in);
  cfg.weight_decay = read_pod<double>(in);
  cfg.optimizer = read_pod<std::uint8_t>(in) != 0
                      ? GgnnConfig::Optimizer::AdaptiveMoment
                      : GgnnConfig::Optimizer::PlainGradient;

  Checkpoint ck;
  ck.params = detail::shaped_params<double>(cfg);
  read_param_set(in, ck.params);

  if (read_pod<std::uint8_t>(in) != 0) {
    OptimState opt;
    opt.step = read_pod<std::int64_t>(in);
    opt.initialized = true;
    opt.m = detail::shaped_params<double>(cfg);
    opt.v = detail::shaped_params<double>(cfg);
    read_param_set(in, opt.m);
    read_param_set(in, opt.v);
    ck.opt = std::move(opt);
  }
  return ck;
}

}  // namespace qzero
