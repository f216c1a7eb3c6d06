#include "sid/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

#include "json_io.hpp"

namespace sid::ckpt {

namespace {

using jsonio::json;
using Reason = CheckpointError::Reason;

constexpr char kMagic[8] = {'S', 'I', 'D', 'C', 'K', 'P', 'T', '\0'};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void text(const std::string& s) {
    u64(s.size());
    buf_.append(s);
  }
  const std::string& data() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string data) : buf_(std::move(data)) {}
  void need(std::size_t n) const {
    if (buf_.size() - pos_ < n) throw CheckpointError(Reason::Truncated, "checkpoint is truncated");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string text() {
    const std::uint64_t n = u64();
    need(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool magic_ok() {
    if (buf_.size() < sizeof(kMagic) || std::memcmp(buf_.data(), kMagic, sizeof(kMagic)) != 0) return false;
    pos_ = sizeof(kMagic);
    return true;
  }

 private:
  std::string buf_;
  std::size_t pos_ = 0;
};

struct NamedArray {
  std::string name;
  std::vector<nn::LayerSlice> layout;
  std::vector<double> values;
};

struct Container {
  Kind kind;
  json meta;
  std::string rng;
  std::vector<NamedArray> arrays;
};

void write_file(const std::filesystem::path& path, const Container& c) {
  Writer w;
  w.bytes(kMagic, sizeof(kMagic));
  w.u32(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(c.kind));
  w.text(c.meta.dump());
  w.text(c.rng);
  w.u64(c.arrays.size());
  for (const NamedArray& a : c.arrays) {
    w.text(a.name);
    w.u64(a.layout.size());
    for (const nn::LayerSlice& s : a.layout) {
      w.u64(s.in);
      w.u64(s.out);
      w.u64(s.offset);
    }
    w.u64(a.values.size());
    for (double v : a.values) w.f64(v);
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError(Reason::Io, "cannot write checkpoint '" + tmp.string() + "'");
    out.write(w.data().data(), static_cast<std::streamsize>(w.data().size()));
    out.flush();
    if (!out) throw CheckpointError(Reason::Io, "failed writing checkpoint '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw CheckpointError(Reason::Io, "cannot move checkpoint into '" + path.string() + "'");
  }
}

std::string read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(Reason::Io, "cannot open checkpoint '" + path.string() + "'");
  return std::string(std::istreambuf_iterator<char>(in), {});
}

Kind read_header(Reader& r, const std::filesystem::path& path) {
  if (!r.magic_ok()) throw CheckpointError(Reason::NotACheckpoint, "'" + path.string() + "' is not a checkpoint");
  const std::uint32_t version = r.u32();
  if (version != kFormatVersion) {
    throw CheckpointError(Reason::VersionMismatch,
                          "checkpoint format version " + std::to_string(version) +
                              " is not supported (expected " + std::to_string(kFormatVersion) + ")");
  }
  const std::uint32_t kind = r.u32();
  if (kind < 1 || kind > 3) throw CheckpointError(Reason::NotACheckpoint, "unknown checkpoint kind");
  return static_cast<Kind>(kind);
}

Container read_file(const std::filesystem::path& path, Kind expected) {
  Reader r(read_bytes(path));
  Container c;
  c.kind = read_header(r, path);
  if (c.kind != expected) throw CheckpointError(Reason::WrongKind, "checkpoint holds a different kind of state");
  try {
    c.meta = json::parse(r.text());
  } catch (const json::parse_error&) {
    throw CheckpointError(Reason::NotACheckpoint, "checkpoint metadata is corrupt");
  }
  c.rng = r.text();
  const std::uint64_t count = r.u64();
  for (std::uint64_t k = 0; k < count; ++k) {
    NamedArray a;
    a.name = r.text();
    const std::uint64_t layers = r.u64();
    r.need(layers * 24);
    for (std::uint64_t l = 0; l < layers; ++l) {
      nn::LayerSlice s;
      s.in = r.u64();
      s.out = r.u64();
      s.offset = r.u64();
      a.layout.push_back(s);
    }
    const std::uint64_t n = r.u64();
    r.need(n * 8);
    a.values.resize(n);
    for (double& v : a.values) v = r.f64();
    c.arrays.push_back(std::move(a));
  }
  return c;
}

NamedArray pack(std::string name, const nn::NetworkParams& p) {
  return {std::move(name), p.layers(), std::vector<double>(p.values().begin(), p.values().end())};
}

NamedArray pack(std::string name, const nn::NetworkParams& layout_of, const std::vector<double>& v) {
  return {std::move(name), layout_of.layers(), v};
}

const NamedArray& find(const Container& c, const std::string& name) {
  for (const NamedArray& a : c.arrays) {
    if (a.name == name) return a;
  }
  throw CheckpointError(Reason::LayoutMismatch, "checkpoint lacks array '" + name + "'");
}

std::vector<double> unpack_values(const Container& c, const std::string& name,
                                  const nn::NetworkConfig& network) {
  const NamedArray& a = find(c, name);
  const auto layout = nn::layout_for(network);
  if (a.layout != layout || a.values.size() != layout.back().end()) {
    throw CheckpointError(Reason::LayoutMismatch,
                          "array '" + name + "' does not match the stored network layout");
  }
  return a.values;
}

nn::NetworkParams unpack(const Container& c, const std::string& name, const nn::NetworkConfig& network) {
  try {
    return nn::NetworkParams(network, unpack_values(c, name, network));
  } catch (const NonFiniteError& e) {
    throw CheckpointError(Reason::LayoutMismatch, "array '" + name + "': " + e.what());
  }
}

template <typename F>
auto with_meta(F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw CheckpointError(Reason::NotACheckpoint, std::string("checkpoint metadata: ") + e.what());
  } catch (const config::ConfigError& e) {
    throw CheckpointError(Reason::NotACheckpoint, std::string("checkpoint metadata: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(Reason::LayoutMismatch, std::string("checkpoint metadata: ") + e.what());
  }
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> optional_number(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace

void save(const std::filesystem::path& path, const TeacherCheckpoint& t) {
  Container c{Kind::Teacher};
  json log = json::array();
  for (const auto& row : t.log) log.push_back({row.images_seen, row.step, row.loss});
  c.meta = {{"network", jsonio::to_json(t.phi.config())},
            {"teacher", jsonio::to_json(t.config)},
            {"seed", t.config.seed},
            {"log", log}};
  c.arrays.push_back(pack("phi", t.phi));
  write_file(path, c);
}

void save(const std::filesystem::path& path, const DistillCheckpoint& d) {
  const train::TrainState& s = d.state;
  Container c{Kind::Distill};
  json log = json::array();
  for (const auto& r : s.log) {
    log.push_back({r.images_seen, r.step, r.loss_psi, r.loss_theta, r.metric, r.alpha, r.sigma_mean});
  }
  c.meta = {{"network", jsonio::to_json(s.phi.config())},
            {"distill", jsonio::to_json(d.config)},
            {"schedule", jsonio::to_json(d.config.schedule)},
            {"seed", d.config.seed},
            {"step", s.step},
            {"images_seen", s.images_seen},
            {"adam_psi_t", s.adam_psi.t},
            {"adam_theta_t", s.adam_theta.t},
            {"best_metric", optional_number(s.best_metric)},
            {"eval_cursor", s.eval_cursor},
            {"last_loss_psi", s.last_loss_psi},
            {"last_loss_theta", s.last_loss_theta},
            {"last_sigma_mean", s.last_sigma_mean},
            {"log", log}};
  c.rng = s.rng.state();
  c.arrays.push_back(pack("phi", s.phi));
  c.arrays.push_back(pack("psi", s.psi));
  c.arrays.push_back(pack("theta", s.theta));
  c.arrays.push_back(pack("theta_ema", s.theta_ema));
  c.arrays.push_back(pack("best_theta_ema", s.best_theta_ema));
  c.arrays.push_back(pack("adam_psi.m", s.phi, s.adam_psi.m));
  c.arrays.push_back(pack("adam_psi.v", s.phi, s.adam_psi.v));
  c.arrays.push_back(pack("adam_theta.m", s.phi, s.adam_theta.m));
  c.arrays.push_back(pack("adam_theta.v", s.phi, s.adam_theta.v));
  write_file(path, c);
}

void save(const std::filesystem::path& path, const GeneratorCheckpoint& g) {
  Container c{Kind::Generator};
  c.meta = {{"network", jsonio::to_json(g.theta.config())},
            {"sigma_init", g.sigma_init},
            {"images_seen", g.images_seen},
            {"metric", optional_number(g.metric)}};
  c.arrays.push_back(pack("theta", g.theta));
  write_file(path, c);
}

Kind peek_kind(const std::filesystem::path& path) {
  Reader r(read_bytes(path));
  return read_header(r, path);
}

TeacherCheckpoint load_teacher(const std::filesystem::path& path) {
  const Container c = read_file(path, Kind::Teacher);
  return with_meta([&] {
    TeacherCheckpoint t;
    t.config = jsonio::teacher_from_json(c.meta.at("teacher"), "teacher");
    t.config.network = jsonio::network_from_json(c.meta.at("network"), "network");
    t.config.seed = c.meta.at("seed").get<std::uint64_t>();
    for (const json& row : c.meta.at("log")) {
      t.log.push_back({row.at(0).get<std::uint64_t>(), row.at(1).get<std::uint64_t>(), row.at(2).get<double>()});
    }
    t.phi = unpack(c, "phi", t.config.network);
    return t;
  });
}

DistillCheckpoint load_distill(const std::filesystem::path& path) {
  const Container c = read_file(path, Kind::Distill);
  return with_meta([&] {
    DistillCheckpoint d;
    d.config = jsonio::distill_from_json(c.meta.at("distill"), "distill");
    d.config.schedule = jsonio::schedule_from_json(c.meta.at("schedule"), "schedule");
    d.config.seed = c.meta.at("seed").get<std::uint64_t>();
    const nn::NetworkConfig network = jsonio::network_from_json(c.meta.at("network"), "network");
    train::TrainState& s = d.state;
    s.step = c.meta.at("step").get<std::uint64_t>();
    s.images_seen = c.meta.at("images_seen").get<std::uint64_t>();
    s.best_metric = optional_number(c.meta.at("best_metric"));
    s.eval_cursor = c.meta.at("eval_cursor").get<std::uint64_t>();
    s.last_loss_psi = c.meta.at("last_loss_psi").get<double>();
    s.last_loss_theta = c.meta.at("last_loss_theta").get<double>();
    s.last_sigma_mean = c.meta.at("last_sigma_mean").get<double>();
    for (const json& r : c.meta.at("log")) {
      s.log.push_back({r.at(0).get<std::uint64_t>(), r.at(1).get<std::uint64_t>(), r.at(2).get<double>(),
                       r.at(3).get<double>(), r.at(4).get<double>(), r.at(5).get<double>(),
                       r.at(6).get<double>()});
    }
    s.phi = unpack(c, "phi", network);
    s.psi = unpack(c, "psi", network);
    s.theta = unpack(c, "theta", network);
    s.theta_ema = unpack(c, "theta_ema", network);
    s.best_theta_ema = unpack(c, "best_theta_ema", network);
    s.adam_psi = {unpack_values(c, "adam_psi.m", network), unpack_values(c, "adam_psi.v", network),
                  c.meta.at("adam_psi_t").get<std::uint64_t>()};
    s.adam_theta = {unpack_values(c, "adam_theta.m", network),
                    unpack_values(c, "adam_theta.v", network),
                    c.meta.at("adam_theta_t").get<std::uint64_t>()};
    try {
      s.rng.restore(c.rng);
    } catch (const std::exception& e) {
      throw CheckpointError(Reason::NotACheckpoint, std::string("checkpoint rng state: ") + e.what());
    }
    return d;
  });
}

GeneratorCheckpoint load_generator(const std::filesystem::path& path) {
  const Container c = read_file(path, Kind::Generator);
  return with_meta([&] {
    GeneratorCheckpoint g;
    const nn::NetworkConfig network = jsonio::network_from_json(c.meta.at("network"), "network");
    g.sigma_init = c.meta.at("sigma_init").get<double>();
    g.images_seen = c.meta.at("images_seen").get<std::uint64_t>();
    g.metric = optional_number(c.meta.at("metric"));
    g.theta = unpack(c, "theta", network);
    return g;
  });
}

GeneratorCheckpoint load_any_generator(const std::filesystem::path& path, double teacher_sigma_init) {
  switch (peek_kind(path)) {
    case Kind::Teacher: {
      TeacherCheckpoint t = load_teacher(path);
      return {std::move(t.phi), teacher_sigma_init, 0, std::nullopt};
    }
    case Kind::Distill: {
      DistillCheckpoint d = load_distill(path);
      return {std::move(d.state.theta_ema), d.config.sigma_init, d.state.images_seen, std::nullopt};
    }
    case Kind::Generator:
      return load_generator(path);
  }
  throw CheckpointError(Reason::NotACheckpoint, "unknown checkpoint kind");
}

}  // namespace sid::ckpt
