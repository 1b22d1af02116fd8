#include "crew/recorder/recorder.hpp"

#include <unistd.h>
#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <regex>
#include <set>
#include <sstream>
#include <stdexcept>

namespace fs = std::filesystem;
using nlohmann::json;

namespace crew::recorder {

namespace {

std::uint32_t crc(const std::string& s) {
  return static_cast<std::uint32_t>(::crc32(0L, reinterpret_cast<const Bytef*>(s.data()), static_cast<uInt>(s.size())));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<char>((v >> shift) & 0xFF));
}

std::uint32_t get_u32(const unsigned char* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]};
}

bool type_matches(const std::string& type, const json& v) {
  if (type == "any") return true;
  if (type == "number") return v.is_number();
  if (type == "integer") return v.is_number_integer();
  if (type == "string") return v.is_string();
  if (type == "boolean") return v.is_boolean();
  if (type == "object") return v.is_object();
  if (type == "array") return v.is_array();
  throw std::invalid_argument("unknown schema type " + type);
}

void write_atomic(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
    f << text;
  }
  fs::rename(tmp, path);
}

std::string random_id() {
  std::random_device rd;
  std::ostringstream os;
  os << std::hex << rd() << rd();
  return os.str();
}

}  // namespace

SessionClock::SessionClock()
    : start_(std::chrono::steady_clock::now()),
      epoch_(std::chrono::duration<double>(std::chrono::system_clock::now().time_since_epoch()).count()) {}

SessionClock::SessionClock(double epoch_unix) : SessionClock() {
  // Continue a session: now() keeps counting from the original epoch.
  const double wall = std::chrono::duration<double>(std::chrono::system_clock::now().time_since_epoch()).count();
  start_ -= std::chrono::duration_cast<std::chrono::steady_clock::duration>(
      std::chrono::duration<double>(std::max(0.0, wall - epoch_unix)));
  epoch_ = epoch_unix;
}

double SessionClock::now() const {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
}

void validate_payload(const StreamInfo& info, const json& payload) {
  if (info.schema.is_null()) return;
  const json& fields = info.schema.at("fields");
  if (!payload.is_object()) throw std::invalid_argument("stream " + info.name + ": payload must be an object");
  for (const auto& [key, type] : fields.items()) {
    auto it = payload.find(key);
    if (it == payload.end()) throw std::invalid_argument("stream " + info.name + ": missing field " + key);
    if (!type_matches(type.get<std::string>(), *it)) {
      throw std::invalid_argument("stream " + info.name + ": field " + key + " is not " + type.get<std::string>());
    }
  }
}

Recorder::Recorder(fs::path dir, json meta) : Recorder(std::move(dir), std::move(meta), Options{}) {}

Recorder::Recorder(fs::path dir, json meta, Options opt) : dir_(std::move(dir)), opt_(opt), meta_(std::move(meta)) {
  fs::create_directories(dir_ / "streams");
  fs::create_directories(dir_ / "checkpoints");
  const fs::path manifest = dir_ / kManifestName;
  std::lock_guard lock(mutex_);
  if (fs::exists(manifest)) {
    std::ifstream f(manifest);
    const json m = json::parse(f);
    session_id_ = m.at("session_id").get<std::string>();
    clock_ = SessionClock(m.at("epoch_unix").get<double>());
    json merged = m.value("meta", json::object());
    if (meta_.is_object()) merged.update(meta_);
    meta_ = merged;
    for (const auto& s : m.at("streams")) {
      StreamInfo info{s.at("name"), s.at("schema"), s.value("rate_hz", 0.0), s.at("file")};
      open_stream_locked(std::move(info), true);
    }
  } else {
    session_id_ = random_id();
  }
  write_manifest_locked();
}

Recorder::~Recorder() {
  try {
    flush();
  } catch (...) {
  }
  for (auto& s : streams_) {
    if (s->file) std::fclose(s->file);
  }
}

Recorder::Stream& Recorder::open_stream_locked(StreamInfo info, bool existing) {
  auto s = std::make_unique<Stream>();
  const fs::path path = dir_ / info.file;
  if (existing && fs::exists(path)) {
    StreamLog log = read_stream_file(path, info.name);
    fs::resize_file(path, log.valid_bytes);
    s->count = log.samples.size();
    if (!log.samples.empty()) s->last_t = log.samples.back().t;
    s->file = std::fopen(path.c_str(), "ab");
  } else {
    s->file = std::fopen(path.c_str(), "wb");
    if (s->file) std::fwrite(kLogMagic, 1, sizeof kLogMagic, s->file);
  }
  if (!s->file) throw std::runtime_error("cannot open stream log " + path.string());
  s->info = std::move(info);
  by_name_[s->info.name] = streams_.size();
  streams_.push_back(std::move(s));
  return *streams_.back();
}

void Recorder::write_manifest_locked() {
  json m;
  m["format"] = "crew-session/1";
  m["session_id"] = session_id_;
  m["epoch_unix"] = clock_.epoch_unix();
  m["meta"] = meta_;
  m["streams"] = json::array();
  for (const auto& s : streams_) {
    m["streams"].push_back(
        {{"name", s->info.name}, {"schema", s->info.schema}, {"rate_hz", s->info.rate_hz}, {"file", s->info.file}});
  }
  write_atomic(dir_ / kManifestName, m.dump(2) + "\n");
}

StreamHandle Recorder::register_stream(const std::string& name, json schema, double rate_hz) {
  static const std::regex valid(R"([A-Za-z0-9_][A-Za-z0-9_.\-]*)");
  if (!std::regex_match(name, valid)) throw std::invalid_argument("invalid stream name '" + name + "'");
  if (!schema.is_null() && !(schema.is_object() && schema.contains("fields") && schema["fields"].is_object())) {
    throw std::invalid_argument("stream " + name + ": schema must be null or {\"fields\": {...}}");
  }
  std::lock_guard lock(mutex_);
  if (by_name_.contains(name)) throw std::invalid_argument("stream " + name + " is already registered");
  open_stream_locked({name, std::move(schema), rate_hz, "streams/" + name + ".log"}, false);
  write_manifest_locked();
  return streams_.size() - 1;
}

StreamHandle Recorder::ensure_stream(const std::string& name, json schema, double rate_hz) {
  if (auto h = find(name)) return *h;
  return register_stream(name, std::move(schema), rate_hz);
}

std::optional<StreamHandle> Recorder::find(const std::string& name) const {
  std::lock_guard lock(mutex_);
  auto it = by_name_.find(name);
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

void Recorder::append(StreamHandle h, double t, json payload) {
  std::lock_guard lock(mutex_);
  if (h >= streams_.size()) throw std::invalid_argument("unknown stream handle");
  Stream& s = *streams_[h];
  if (!std::isfinite(t)) throw std::invalid_argument("stream " + s.info.name + ": non-finite timestamp");
  if (s.last_t && t < *s.last_t) {
    std::ostringstream os;
    os.precision(17);
    os << "stream " << s.info.name << ": out-of-order sample t=" << t << " after t=" << *s.last_t;
    throw std::invalid_argument(os.str());
  }
  validate_payload(s.info, payload);
  s.buffer += json{{"t", t}, {"p", std::move(payload)}}.dump();
  s.buffer.push_back('\n');
  s.last_t = t;
  ++s.count;
  if (++s.buffered >= opt_.chunk_records) write_chunk_locked(s);
}

void Recorder::append(const std::string& name, double t, json payload) {
  std::optional<StreamHandle> h = find(name);
  if (!h) throw std::invalid_argument("stream " + name + " is not registered");
  append(*h, t, std::move(payload));
}

void Recorder::write_chunk_locked(Stream& s) {
  if (s.buffered == 0) return;
  std::string head;
  put_u32(head, static_cast<std::uint32_t>(s.buffer.size()));
  put_u32(head, crc(s.buffer));
  head += s.buffer;
  if (std::fwrite(head.data(), 1, head.size(), s.file) != head.size()) {
    throw std::runtime_error("short write to stream " + s.info.name);
  }
  std::fflush(s.file);
  s.buffer.clear();
  s.buffered = 0;
}

void Recorder::flush() {
  std::lock_guard lock(mutex_);
  for (auto& s : streams_) {
    write_chunk_locked(*s);
    std::fflush(s->file);
    if (opt_.fsync) ::fsync(::fileno(s->file));
  }
}

std::vector<StreamInfo> Recorder::streams() const {
  std::lock_guard lock(mutex_);
  std::vector<StreamInfo> out;
  for (const auto& s : streams_) out.push_back(s->info);
  return out;
}

std::size_t Recorder::appended(StreamHandle h) const {
  std::lock_guard lock(mutex_);
  return streams_.at(h)->count;
}

StreamLog read_stream_file(const fs::path& path, const std::string& name) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  StreamLog log;
  log.info.name = name.empty() ? path.stem().string() : name;
  if (bytes.size() < sizeof kLogMagic || std::memcmp(bytes.data(), kLogMagic, sizeof kLogMagic) != 0) {
    throw std::runtime_error(path.string() + " is not a stream log");
  }
  std::size_t pos = sizeof kLogMagic;
  log.valid_bytes = pos;
  const auto* u = reinterpret_cast<const unsigned char*>(bytes.data());
  while (pos < bytes.size()) {
    if (bytes.size() - pos < 8) {
      log.truncated = true;
      break;
    }
    const std::uint32_t len = get_u32(u + pos);
    const std::uint32_t sum = get_u32(u + pos + 4);
    if (bytes.size() - pos - 8 < len) {
      log.truncated = true;
      break;
    }
    const std::string payload = bytes.substr(pos + 8, len);
    if (crc(payload) != sum) {
      log.truncated = true;
      break;
    }
    std::vector<StreamSample> chunk;
    std::istringstream lines(payload);
    std::string line;
    bool ok = true;
    while (std::getline(lines, line)) {
      json rec = json::parse(line, nullptr, false);
      if (rec.is_discarded() || !rec.contains("t") || !rec["t"].is_number()) {
        ok = false;
        break;
      }
      chunk.push_back({log.info.name, rec["t"].get<double>(), std::move(rec["p"])});
    }
    if (!ok) {
      log.truncated = true;
      break;
    }
    log.samples.insert(log.samples.end(), std::make_move_iterator(chunk.begin()), std::make_move_iterator(chunk.end()));
    pos += 8 + len;
    log.valid_bytes = pos;
  }
  return log;
}

SessionLog load_session(const fs::path& dir) {
  SessionLog s;
  std::ifstream f(dir / kManifestName);
  if (!f) throw std::runtime_error("no session manifest in " + dir.string());
  s.manifest = json::parse(f);
  for (const auto& st : s.manifest.at("streams")) {
    const std::string name = st.at("name");
    StreamLog log = read_stream_file(dir / st.at("file").get<std::string>(), name);
    log.info = {name, st.at("schema"), st.value("rate_hz", 0.0), st.at("file")};
    if (!log.samples.empty()) {
      const double lo = log.samples.front().t, hi = log.samples.back().t;
      s.t_min = s.t_min ? std::min(*s.t_min, lo) : lo;
      s.t_max = s.t_max ? std::max(*s.t_max, hi) : hi;
    }
    s.streams.emplace(name, std::move(log));
  }
  return s;
}

std::map<std::string, std::optional<StreamSample>> align(const SessionLog& log, double t,
                                                         const std::vector<std::string>& streams) {
  if (!log.t_min || t < *log.t_min || t > *log.t_max) throw std::out_of_range("align: t outside the session span");
  std::map<std::string, std::optional<StreamSample>> out;
  for (const auto& name : streams) {
    auto it = log.streams.find(name);
    if (it == log.streams.end()) throw std::invalid_argument("align: unknown stream " + name);
    const auto& v = it->second.samples;
    if (v.empty()) {
      out[name] = std::nullopt;
      continue;
    }
    // First sample with sample.t >= t; the candidate before it wins ties.
    auto hi = std::lower_bound(v.begin(), v.end(), t, [](const StreamSample& s, double x) { return s.t < x; });
    if (hi == v.end()) {
      out[name] = v.back();
    } else if (hi == v.begin()) {
      out[name] = *hi;
    } else {
      auto lo = std::prev(hi);
      // Earliest sample among those sharing lo's timestamp.
      while (lo != v.begin() && std::prev(lo)->t == lo->t) --lo;
      out[name] = (t - lo->t <= hi->t - t) ? *lo : *hi;
    }
  }
  return out;
}

namespace {

std::string tsv_cell(const json& v) {
  std::string s = v.is_string() ? v.get<std::string>() : v.dump();
  std::string out;
  for (char c : s) {
    if (c == '\t') out += "\\t";
    else if (c == '\n') out += "\\n";
    else if (c == '\\') out += "\\\\";
    else out.push_back(c);
  }
  return out;
}

}  // namespace

std::vector<fs::path> export_tsv(const SessionLog& log, const fs::path& out) {
  fs::create_directories(out);
  std::vector<fs::path> files;
  for (const auto& [name, stream] : log.streams) {
    std::vector<std::string> cols;
    std::set<std::string> seen;
    bool scalar = false;
    for (const auto& s : stream.samples) {
      if (!s.payload.is_object()) {
        scalar = true;
        continue;
      }
      for (const auto& [k, v] : s.payload.items()) {
        if (seen.insert(k).second) cols.push_back(k);
      }
    }
    if (scalar) cols.push_back("value");
    const fs::path path = out / (name + ".tsv");
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << "t";
    for (const auto& c : cols) f << '\t' << tsv_cell(c);
    f << '\n';
    f.precision(17);
    for (const auto& s : stream.samples) {
      f << s.t;
      for (const auto& c : cols) {
        f << '\t';
        if (s.payload.is_object()) {
          auto it = s.payload.find(c);
          if (it != s.payload.end()) f << tsv_cell(*it);
        } else if (c == "value") {
          f << tsv_cell(s.payload);
        }
      }
      f << '\n';
    }
    files.push_back(path);
  }
  return files;
}

}  // namespace crew::recorder
