#include "crew/learner/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace crew::learner {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint format assumes a little-endian host");

constexpr char kMagic[8] = {'C', 'R', 'E', 'W', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename V>
void append(std::string& out, V v) {
  char buf[sizeof(V)];
  std::memcpy(buf, &v, sizeof(V));
  out.append(buf, sizeof(V));
}

class Reader {
 public:
  explicit Reader(const std::string& s) : s_(s) {}
  template <typename V>
  V take() {
    need(sizeof(V));
    V v;
    std::memcpy(&v, s_.data() + pos_, sizeof(V));
    pos_ += sizeof(V);
    return v;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string out = s_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > s_.size()) throw std::runtime_error("checkpoint is truncated");
  }
  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

void TensorArchive::put(const std::string& name, std::vector<int> shape, std::span<const float> values) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  if (n != values.size()) throw std::invalid_argument("TensorArchive: shape of '" + name + "' does not match data");
  tensors_[name] = Entry{std::move(shape), std::vector<float>(values.begin(), values.end())};
}

const std::vector<float>& TensorArchive::get(const std::string& name, std::size_t expected_size) const {
  const auto it = tensors_.find(name);
  if (it == tensors_.end()) throw std::runtime_error("checkpoint has no tensor '" + name + "'");
  if (it->second.values.size() != expected_size) {
    throw std::runtime_error("checkpoint tensor '" + name + "' has " + std::to_string(it->second.values.size()) +
                             " values, expected " + std::to_string(expected_size));
  }
  return it->second.values;
}

const std::vector<float>& TensorArchive::get(const std::string& name) const {
  const auto it = tensors_.find(name);
  if (it == tensors_.end()) throw std::runtime_error("checkpoint has no tensor '" + name + "'");
  return it->second.values;
}

std::vector<std::string> TensorArchive::names() const {
  std::vector<std::string> out;
  for (const auto& [k, _] : tensors_) out.push_back(k);
  return out;
}

void TensorArchive::write_atomic(const std::filesystem::path& path) const {
  std::string buf(kMagic, sizeof(kMagic));
  append(buf, kVersion);
  const std::string header = meta.dump();
  append(buf, static_cast<std::uint32_t>(header.size()));
  buf += header;
  append(buf, static_cast<std::uint32_t>(tensors_.size()));
  for (const auto& [name, e] : tensors_) {
    append(buf, static_cast<std::uint32_t>(name.size()));
    buf += name;
    append(buf, static_cast<std::uint32_t>(e.shape.size()));
    for (int d : e.shape) append(buf, static_cast<std::int32_t>(d));
    buf.append(reinterpret_cast<const char*>(e.values.data()), e.values.size() * sizeof(float));
  }
  const auto crc = static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(buf.size())));
  append(buf, crc);

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint " + tmp.string());
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    out.flush();
    if (!out) throw std::runtime_error("short write for checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

TensorArchive TensorArchive::read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  const std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < sizeof(kMagic) + 4 || std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error(path.string() + " is not a checkpoint");
  }
  std::uint32_t stored_crc;
  std::memcpy(&stored_crc, buf.data() + buf.size() - 4, 4);
  const auto crc = static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(buf.size() - 4)));
  if (crc != stored_crc) throw std::runtime_error("checkpoint " + path.string() + " failed its checksum");

  const std::string body = buf.substr(0, buf.size() - 4);
  Reader r(body);
  r.bytes(sizeof(kMagic));
  const auto version = r.take<std::uint32_t>();
  if (version != kVersion) throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  TensorArchive a;
  a.meta = nlohmann::json::parse(r.bytes(r.take<std::uint32_t>()));
  const auto count = r.take<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = r.bytes(r.take<std::uint32_t>());
    const auto ndim = r.take<std::uint32_t>();
    std::vector<int> shape;
    std::size_t n = 1;
    for (std::uint32_t d = 0; d < ndim; ++d) {
      shape.push_back(r.take<std::int32_t>());
      n *= static_cast<std::size_t>(shape.back());
    }
    const std::string raw = r.bytes(n * sizeof(float));
    std::vector<float> values(n);
    std::memcpy(values.data(), raw.data(), raw.size());
    a.tensors_[name] = Entry{std::move(shape), std::move(values)};
  }
  if (r.pos() != body.size()) throw std::runtime_error("checkpoint has trailing bytes");
  return a;
}

}  // namespace crew::learner
