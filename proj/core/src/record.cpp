#include "certmark/record.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "certmark/error.hpp"

namespace certmark {
namespace {

static_assert(std::endian::native == std::endian::little, "record encoding assumes a little-endian host");

constexpr char kMagic[4] = {'C', 'M', 'R', 'K'};
constexpr std::uint8_t kDtypeF32 = 0;

class Writer {
 public:
  template <typename U>
  void put(U v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    out_.insert(out_.end(), p, p + sizeof(U));
  }
  void put_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    out_.insert(out_.end(), p, p + n);
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  template <typename U>
  U get(const char* what) {
    U v;
    need(sizeof(U), what);
    std::memcpy(&v, bytes_.data() + pos_, sizeof(U));
    pos_ += sizeof(U);
    return v;
  }
  const std::uint8_t* take(std::size_t n, const char* what) {
    need(n, what);
    const auto* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  [[noreturn]] void error(const std::string& msg) const {
    fail(ErrorKind::kCheckpoint, msg + " at offset " + std::to_string(pos_));
  }

 private:
  void need(std::size_t n, const char* what) const {
    if (n > remaining()) {
      error(std::string("truncated record reading ") + what + " (need " + std::to_string(n) + " bytes, have " +
            std::to_string(remaining()) + ")");
    }
  }

  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_record(const Record& record) {
  Writer w;
  w.put_bytes(kMagic, 4);
  w.put<std::uint32_t>(kRecordVersion);
  w.put<std::uint64_t>(record.tensors.size());
  for (const auto& [name, t] : record.tensors) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
    w.put_bytes(name.data(), name.size());
    w.put<std::uint8_t>(kDtypeF32);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(t.shape.size()));
    for (auto d : t.shape) w.put<std::uint64_t>(d);
  }
  w.put<std::uint64_t>(record.metadata.size());
  w.put_bytes(record.metadata.data(), record.metadata.size());
  for (const auto& [name, t] : record.tensors) {
    w.put<std::uint64_t>(t.values.size() * sizeof(float));
    w.put_bytes(t.values.data(), t.values.size() * sizeof(float));
  }
  return w.take();
}

Record decode_record(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  const auto* magic = r.take(4, "magic");
  if (std::memcmp(magic, kMagic, 4) != 0) fail(ErrorKind::kCheckpoint, "bad record magic at offset 0");
  const auto version = r.get<std::uint32_t>("version");
  if (version != kRecordVersion) r.error("unsupported record version " + std::to_string(version));
  const auto count = r.get<std::uint64_t>("entry count");

  struct Manifest {
    std::string name;
    std::vector<std::size_t> shape;
    std::uint64_t numel;
  };
  std::vector<Manifest> manifest;
  std::uint64_t payload_bytes = 0;
  for (std::uint64_t i = 0; i < count; ++i) {
    // Each entry needs at least 9 bytes; this bounds the loop on garbage counts.
    if (r.remaining() < 9) r.error("manifest entry " + std::to_string(i) + " truncated");
    Manifest m;
    const auto name_len = r.get<std::uint32_t>("name length");
    const auto* name = r.take(name_len, "name");
    m.name.assign(reinterpret_cast<const char*>(name), name_len);
    const auto dtype = r.get<std::uint8_t>("dtype");
    if (dtype != kDtypeF32) r.error("entry '" + m.name + "' has unsupported dtype " + std::to_string(dtype));
    const auto ndim = r.get<std::uint32_t>("ndim");
    if (ndim > 8) r.error("entry '" + m.name + "' has implausible rank " + std::to_string(ndim));
    m.numel = 1;
    for (std::uint32_t d = 0; d < ndim; ++d) {
      const auto dim = r.get<std::uint64_t>("dimension");
      if (dim > (std::uint64_t{1} << 32)) r.error("entry '" + m.name + "' has implausible dimension");
      m.shape.push_back(static_cast<std::size_t>(dim));
      m.numel *= dim;
    }
    payload_bytes += m.numel * sizeof(float) + sizeof(std::uint64_t);
    manifest.push_back(std::move(m));
  }
  const auto meta_len = r.get<std::uint64_t>("metadata length");
  if (meta_len > r.remaining()) r.error("metadata length exceeds record size");
  const auto* meta = r.take(meta_len, "metadata");
  if (payload_bytes != r.remaining()) {
    r.error("manifest describes " + std::to_string(payload_bytes) + " payload bytes but " +
            std::to_string(r.remaining()) + " remain");
  }

  Record out;
  out.metadata.assign(reinterpret_cast<const char*>(meta), meta_len);
  for (auto& m : manifest) {
    const auto len = r.get<std::uint64_t>("payload length");
    if (len != m.numel * sizeof(float)) {
      r.error("payload length prefix " + std::to_string(len) + " for '" + m.name + "' does not match manifest");
    }
    const auto* data = r.take(len, "payload");
    Tensor<float> t;
    t.shape = std::move(m.shape);
    t.values.resize(m.numel);
    std::memcpy(t.values.data(), data, len);
    if (out.tensors.contains(m.name)) r.error("duplicate entry '" + m.name + "'");
    out.tensors.add(std::move(m.name), std::move(t));
  }
  return out;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::kIo, "cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) fail(ErrorKind::kIo, "failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void save_record(const std::filesystem::path& path, const Record& record) {
  const auto bytes = encode_record(record);
  write_file_atomic(path, std::string(bytes.begin(), bytes.end()));
}

Record load_record(const std::filesystem::path& path) {
  const auto text = read_file(path);
  return decode_record(std::vector<std::uint8_t>(text.begin(), text.end()));
}

}  // namespace certmark
