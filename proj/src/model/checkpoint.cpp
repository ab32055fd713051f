#include "unifront/model/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "unifront/core/corpus.hpp"
#include "unifront/error.hpp"

namespace unifront {

namespace {

class Writer {
 public:
  void u8(std::uint8_t x) { out_.push_back(static_cast<char>(x)); }
  void u32(std::uint32_t x) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((x >> (8 * i)) & 0xff));
  }
  void i64(std::int64_t x) {
    const auto u = static_cast<std::uint64_t>(x);
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>((u >> (8 * i)) & 0xff));
  }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_ += s;
  }
  void floats(const std::vector<float>& v) {
    for (float f : v) u32(std::bit_cast<std::uint32_t>(f));
  }
  void raw(std::string_view s) { out_ += s; }
  std::string& data() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  Reader(std::string data, std::string name) : data_(std::move(data)), name_(std::move(name)) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
  std::uint32_t u32() {
    const char* p = take(4);
    std::uint32_t x = 0;
    for (int i = 0; i < 4; ++i) x |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    return x;
  }
  std::int64_t i64() {
    const char* p = take(8);
    std::uint64_t x = 0;
    for (int i = 0; i < 8; ++i) x |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    return static_cast<std::int64_t>(x);
  }
  std::string str() {
    const std::uint32_t n = u32();
    return std::string(take(n), n);
  }
  void floats(std::vector<float>& v) {
    for (auto& f : v) f = std::bit_cast<float>(u32());
  }
  bool done() const { return pos_ == data_.size(); }
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(name_ + ": " + what + " (offset " + std::to_string(pos_) + ")");
  }

 private:
  const char* take(std::size_t n) {
    if (data_.size() - pos_ < n) fail("truncated checkpoint");
    const char* p = data_.data() + pos_;
    pos_ += n;
    return p;
  }

  std::string data_;
  std::string name_;
  std::size_t pos_ = 0;
};

void write_symbols(Writer& w, const SymbolTable& t) {
  w.u32(static_cast<std::uint32_t>(t.size()));
  for (const auto& s : t.symbols()) w.str(s);
}

SymbolTable read_symbols(Reader& r) {
  const std::uint32_t n = r.u32();
  std::vector<std::string> symbols;
  for (std::uint32_t i = 0; i < n; ++i) symbols.push_back(r.str());
  return SymbolTable(std::move(symbols));
}

void write_params(Writer& w, const Transformer<float>& model) {
  const auto params = model.parameters();
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const auto* p : params) {
    w.str(p->name);
    w.u32(static_cast<std::uint32_t>(p->rows));
    w.u32(static_cast<std::uint32_t>(p->cols));
    w.floats(p->value);
  }
}

}  // namespace

std::string parameter_bytes(const Transformer<float>& model) {
  Writer w;
  write_params(w, model);
  return std::move(w.data());
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  Writer w;
  w.raw("UFCK");
  w.u32(kCheckpointVersion);
  const auto cfg = ckpt.config().to_map();
  w.u32(static_cast<std::uint32_t>(cfg.size()));
  for (const auto& [k, v] : cfg) {
    w.str(k);
    w.str(v);
  }
  write_symbols(w, ckpt.vocab.source);
  write_symbols(w, ckpt.vocab.target);
  w.i64(ckpt.step);
  w.str(ckpt.rng_state);
  write_params(w, ckpt.model);
  const auto params = ckpt.model.parameters();
  if (ckpt.optimizer) {
    const auto& opt = *ckpt.optimizer;
    if (opt.m.size() != params.size() || opt.v.size() != params.size()) {
      throw ModelError("optimizer state does not match the parameter list");
    }
    w.u8(1);
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (opt.m[i].size() != params[i]->size() || opt.v[i].size() != params[i]->size()) {
        throw ModelError("optimizer state for " + params[i]->name + " has the wrong size");
      }
      w.floats(opt.m[i]);
      w.floats(opt.v[i]);
    }
  } else {
    w.u8(0);
  }
  write_file_atomic(path.string(), w.data());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  Reader r(buf.str(), path.string());
  if (r.u32() != 0x4b434655u) r.fail("not a checkpoint file");  // "UFCK"
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) r.fail("unsupported checkpoint version " + std::to_string(version));
  std::map<std::string, std::string> cfg;
  const std::uint32_t ncfg = r.u32();
  for (std::uint32_t i = 0; i < ncfg; ++i) {
    std::string k = r.str();
    cfg[k] = r.str();
  }
  Vocab vocab{read_symbols(r), read_symbols(r)};
  const std::int64_t step = r.i64();
  std::string rng = r.str();
  Transformer<float> model(ModelConfig::from_map(cfg), static_cast<int>(vocab.source.size()),
                           static_cast<int>(vocab.target.size()));
  auto params = model.parameters();
  if (r.u32() != params.size()) r.fail("parameter count does not match the config");
  for (auto* p : params) {
    const std::string name = r.str();
    const auto rows = static_cast<int>(r.u32());
    const auto cols = static_cast<int>(r.u32());
    if (name != p->name || rows != p->rows || cols != p->cols) {
      r.fail("parameter block " + name + " does not match expected " + p->name);
    }
    r.floats(p->value);
  }
  std::optional<OptimizerState> opt;
  if (r.u8()) {
    opt.emplace();
    for (auto* p : params) {
      opt->m.emplace_back(p->size());
      opt->v.emplace_back(p->size());
      r.floats(opt->m.back());
      r.floats(opt->v.back());
    }
  }
  if (!r.done()) r.fail("trailing bytes");
  return Checkpoint{std::move(vocab), std::move(model), step, std::move(rng), std::move(opt)};
}

}  // namespace unifront
