#include "harness/checkpoint.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include "common/error.hpp"

namespace inttravel::harness {

namespace {

constexpr char kMagic[4] = {'I', 'T', 'C', 'K'};

class Writer {
 public:
  explicit Writer(std::ofstream& out) : out_(out) {}
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void u64(std::uint64_t v) { raw(&v, sizeof v); }
  void i64(std::int64_t v) { raw(&v, sizeof v); }
  void str(const std::string& s) {
    u64(s.size());
    raw(s.data(), s.size());
  }
  void doubles(const std::vector<double>& v) {
    u64(v.size());
    raw(v.data(), v.size() * sizeof(double));
  }
  void raw(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }

 private:
  std::ofstream& out_;
};

class Reader {
 public:
  Reader(std::ifstream& in, std::string path) : in_(in), path_(std::move(path)) {}
  std::uint32_t u32() { return pod<std::uint32_t>(); }
  std::uint64_t u64() { return pod<std::uint64_t>(); }
  std::int64_t i64() { return pod<std::int64_t>(); }
  std::string str() {
    std::string s(bounded(u64(), 1), '\0');
    raw(s.data(), s.size());
    return s;
  }
  std::vector<double> doubles() {
    std::vector<double> v(bounded(u64(), sizeof(double)));
    raw(v.data(), v.size() * sizeof(double));
    return v;
  }
  void raw(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) fail(ErrorCode::kIo, "checkpoint " + path_ + " is truncated");
  }

 private:
  template <typename T>
  T pod() {
    T v{};
    raw(&v, sizeof v);
    return v;
  }
  // Guards allocations against corrupt length fields.
  std::size_t bounded(std::uint64_t count, std::size_t unit) {
    if (count > (std::uint64_t{1} << 40) / unit) fail(ErrorCode::kIo, "checkpoint " + path_ + " has a corrupt length");
    return static_cast<std::size_t>(count);
  }

  std::ifstream& in_;
  std::string path_;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const RunConfig& config, std::uint64_t step,
                     const tensor::ParameterStore& store) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::kIo, "cannot write checkpoint " + tmp.string());
    Writer w(out);
    w.raw(kMagic, sizeof kMagic);
    w.u32(kCheckpointVersion);
    w.str(config_to_text(config));
    w.u64(step);
    w.u64(store.size());
    for (const tensor::Parameter& p : store.params()) {
      w.str(p.name);
      w.u64(p.value.shape().size());
      for (std::size_t d : p.value.shape()) w.u64(d);
      w.doubles(std::vector<double>(p.value.values().begin(), p.value.values().end()));
      w.doubles(p.m);
      w.doubles(p.v);
      w.i64(p.step);
    }
    out.flush();
    if (!out) fail(ErrorCode::kIo, "failed writing checkpoint " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorCode::kIo, "cannot move checkpoint into place at " + path.string() + ": " + ec.message());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open checkpoint " + path.string());
  Reader r(in, path.string());
  char magic[4];
  r.raw(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof magic) != 0) fail(ErrorCode::kValidation, path.string() + " is not a checkpoint");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    fail(ErrorCode::kVersion, "checkpoint format version " + std::to_string(version) + " is not supported (expected " +
                                  std::to_string(kCheckpointVersion) + ")");
  }
  Checkpoint ck;
  ck.config = parse_config(r.str());
  ck.step = r.u64();
  const std::uint64_t count = r.u64();
  for (std::uint64_t i = 0; i < count; ++i) {
    SavedParameter p;
    p.name = r.str();
    const std::uint64_t rank = r.u64();
    if (rank > 8) fail(ErrorCode::kIo, "checkpoint parameter " + p.name + " has a corrupt rank");
    for (std::uint64_t d = 0; d < rank; ++d) p.shape.push_back(static_cast<std::size_t>(r.u64()));
    p.value = r.doubles();
    p.m = r.doubles();
    p.v = r.doubles();
    p.step = r.i64();
    if (p.value.size() != tensor::shape_numel(p.shape)) {
      fail(ErrorCode::kIo, "checkpoint parameter " + p.name + " does not match its shape");
    }
    ck.params.push_back(std::move(p));
  }
  return ck;
}

void restore_parameters(const Checkpoint& checkpoint, tensor::ParameterStore& store) {
  if (checkpoint.params.size() != store.size()) {
    fail(ErrorCode::kValidation, "checkpoint holds " + std::to_string(checkpoint.params.size()) +
                                     " parameters, model has " + std::to_string(store.size()));
  }
  for (const SavedParameter& saved : checkpoint.params) {
    if (!store.contains(saved.name)) fail(ErrorCode::kValidation, "checkpoint parameter " + saved.name + " is unknown");
    tensor::Parameter& p = store.param(saved.name);
    if (p.value.shape() != saved.shape) {
      fail(ErrorCode::kValidation, "checkpoint parameter " + saved.name + " has shape " + tensor::shape_str(saved.shape) +
                                       ", model expects " + tensor::shape_str(p.value.shape()));
    }
    auto dst = p.value.mutable_values();
    std::copy(saved.value.begin(), saved.value.end(), dst.begin());
    tensor::ensure_finite(p.value, "checkpoint");
    p.m = saved.m;
    p.v = saved.v;
    p.step = saved.step;
    p.value.zero_grad();
  }
}

}  // namespace inttravel::harness
