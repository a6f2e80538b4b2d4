#include "bytegan/ad/params.hpp"

#include <cstdio>
#include <cstring>
#include <memory>

#include "bytegan/rng.hpp"

namespace bytegan::ad {

void ParamSet::add(const std::string& name, Shape shape, std::vector<double> vals) {
  if (has(name)) fail(Errc::ConfigError, "duplicate parameter name " + name);
  if (static_cast<int64_t>(vals.size()) != numel(shape)) {
    fail(Errc::ShapeMismatch, "parameter " + name + " data does not match " + shape_str(shape));
  }
  order_.push_back(name);
  shapes_[name] = std::move(shape);
  vals_[name] = std::move(vals);
}

const Shape& ParamSet::shape(const std::string& name) const {
  auto it = shapes_.find(name);
  if (it == shapes_.end()) fail(Errc::ConfigError, "unknown parameter " + name);
  return it->second;
}

const std::vector<double>& ParamSet::values(const std::string& name) const {
  auto it = vals_.find(name);
  if (it == vals_.end()) fail(Errc::ConfigError, "unknown parameter " + name);
  return it->second;
}

std::vector<double>& ParamSet::values(const std::string& name) {
  auto it = vals_.find(name);
  if (it == vals_.end()) fail(Errc::ConfigError, "unknown parameter " + name);
  return it->second;
}

int64_t ParamSet::total_size() const {
  int64_t n = 0;
  for (auto& [k, v] : vals_) n += static_cast<int64_t>(v.size());
  return n;
}

ParamSet init_params(const std::vector<ParamSpec>& specs, uint64_t seed) {
  ParamSet ps;
  for (const auto& spec : specs) {
    int64_t n = numel(spec.shape);
    std::vector<double> vals(static_cast<size_t>(n), 0.0);
    if (spec.init == ParamSpec::Init::WeightNormal) {
      uint64_t stream = fnv1a(spec.name);
      for (int64_t i = 0; i < n; ++i) {
        vals[static_cast<size_t>(i)] = 0.02 * normal_at(seed, stream, static_cast<uint64_t>(i));
      }
    }
    ps.add(spec.name, spec.shape, std::move(vals));
  }
  return ps;
}

Tensor TapedParams::at(const std::string& name) const {
  auto it = leaves.find(name);
  if (it == leaves.end()) fail(Errc::ConfigError, "parameter not staged: " + name);
  return it->second;
}

TapedParams stage(Tape& tape, const ParamSet& params, bool requires_grad) {
  TapedParams tp;
  for (const auto& name : params.names()) {
    tp.leaves.emplace(name, tape.leaf(params.shape(name), params.values(name), requires_grad));
  }
  return tp;
}

std::map<std::string, std::vector<double>> read_grads(const GradMap& gm, const ParamSet& params,
                                                      const TapedParams& staged) {
  std::map<std::string, std::vector<double>> out;
  for (const auto& name : params.names()) {
    Tensor leaf = staged.at(name);
    if (gm.has(leaf)) {
      out[name] = gm.grad(leaf).values();
    } else {
      out[name].assign(params.values(name).size(), 0.0);
    }
  }
  return out;
}

namespace {

constexpr char kMagic[4] = {'B', 'G', 'C', 'K'};
constexpr uint32_t kVersion = 1;

void put_u32(std::string& buf, uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& buf, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

struct Reader {
  const uint8_t* p;
  const uint8_t* end;
  void need(size_t n) {
    if (static_cast<size_t>(end - p) < n) fail(Errc::FormatViolation, "truncated checkpoint");
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(p[i]) << (8 * i);
    p += 4;
    return v;
  }
  double f64() {
    need(8);
    uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<uint64_t>(p[i]) << (8 * i);
    p += 8;
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::string str(size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(p), n);
    p += n;
    return s;
  }
};

}  // namespace

void save_checkpoint(const ParamSet& params, const std::filesystem::path& path) {
  std::string buf;
  buf.append(kMagic, 4);
  put_u32(buf, kVersion);
  put_u32(buf, static_cast<uint32_t>(params.names().size()));
  for (const auto& name : params.names()) {
    put_u32(buf, static_cast<uint32_t>(name.size()));
    buf.append(name);
    const Shape& s = params.shape(name);
    put_u32(buf, static_cast<uint32_t>(s.size()));
    for (int d : s) put_u32(buf, static_cast<uint32_t>(d));
    for (double v : params.values(name)) put_f64(buf, v);
  }
  std::unique_ptr<FILE, decltype(&fclose)> f(fopen(path.c_str(), "wb"), fclose);
  if (!f || fwrite(buf.data(), 1, buf.size(), f.get()) != buf.size()) {
    fail(Errc::IoFailure, "cannot write checkpoint " + path.string());
  }
}

ParamSet load_checkpoint(const std::filesystem::path& path) {
  std::unique_ptr<FILE, decltype(&fclose)> f(fopen(path.c_str(), "rb"), fclose);
  if (!f) fail(Errc::IoFailure, "cannot open checkpoint " + path.string());
  std::string buf;
  char tmp[1 << 16];
  size_t n;
  while ((n = fread(tmp, 1, sizeof tmp, f.get())) > 0) buf.append(tmp, n);
  Reader r{reinterpret_cast<const uint8_t*>(buf.data()),
           reinterpret_cast<const uint8_t*>(buf.data()) + buf.size()};
  if (r.str(4) != std::string(kMagic, 4)) fail(Errc::FormatViolation, "bad checkpoint magic");
  if (r.u32() != kVersion) fail(Errc::FormatViolation, "unsupported checkpoint version");
  uint32_t count = r.u32();
  ParamSet ps;
  for (uint32_t i = 0; i < count; ++i) {
    std::string name = r.str(r.u32());
    uint32_t rank = r.u32();
    Shape shape(rank);
    for (uint32_t d = 0; d < rank; ++d) shape[d] = static_cast<int>(r.u32());
    int64_t sz = numel(shape);
    std::vector<double> vals(static_cast<size_t>(sz));
    for (int64_t t = 0; t < sz; ++t) vals[static_cast<size_t>(t)] = r.f64();
    ps.add(name, std::move(shape), std::move(vals));
  }
  return ps;
}

}  // namespace bytegan::ad
