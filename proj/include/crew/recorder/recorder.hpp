#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace crew::recorder {

// Stream log layout: the 8-byte magic "CREWLOG1", then chunks of
//   u32 big-endian payload length | u32 big-endian CRC-32 of payload | payload
// where the payload is newline-terminated JSON records {"t": seconds, "p": payload}.
inline constexpr char kLogMagic[8] = {'C', 'R', 'E', 'W', 'L', 'O', 'G', '1'};
inline constexpr const char* kManifestName = "manifest.json";

struct StreamSample {
  std::string stream;
  double t = 0.0;
  nlohmann::json payload;
  bool operator==(const StreamSample&) const = default;
};

struct StreamInfo {
  std::string name;
  // {"fields": {"name": "number" | "integer" | "string" | "boolean" | "object" | "array" | "any"}}
  // or null for free-form payloads.
  nlohmann::json schema;
  double rate_hz = 0.0;  // declared nominal rate, 0 when irregular
  std::string file;
};

// Steady clock anchored to the wall clock at construction.
class SessionClock {
 public:
  SessionClock();
  SessionClock(double epoch_unix);
  double now() const;
  double epoch_unix() const { return epoch_; }

 private:
  std::chrono::steady_clock::time_point start_;
  double epoch_;
};

// Throws std::invalid_argument naming the first mismatching field.
void validate_payload(const StreamInfo& info, const nlohmann::json& payload);

using StreamHandle = std::size_t;

// Session directory: manifest.json, streams/<name>.log, checkpoints/.
// Reopening an existing session appends after the last intact chunk.
class Recorder {
 public:
  struct Options {
    std::size_t chunk_records = 256;
    bool fsync = true;
  };

  explicit Recorder(std::filesystem::path dir, nlohmann::json meta = nlohmann::json::object());
  Recorder(std::filesystem::path dir, nlohmann::json meta, Options opt);
  ~Recorder();
  Recorder(const Recorder&) = delete;
  Recorder& operator=(const Recorder&) = delete;

  // Throws std::invalid_argument for a duplicate or malformed name.
  StreamHandle register_stream(const std::string& name, nlohmann::json schema = nullptr, double rate_hz = 0.0);
  // Registers on first use with a null schema.
  StreamHandle ensure_stream(const std::string& name, nlohmann::json schema = nullptr, double rate_hz = 0.0);
  std::optional<StreamHandle> find(const std::string& name) const;

  // Throws std::invalid_argument when t precedes the stream's last sample
  // or the payload violates the schema.
  void append(StreamHandle h, double t, nlohmann::json payload);
  void append(const std::string& name, double t, nlohmann::json payload);
  // Writes every buffered record as chunks and syncs the files.
  void flush();

  const std::filesystem::path& dir() const { return dir_; }
  const SessionClock& clock() const { return clock_; }
  std::vector<StreamInfo> streams() const;
  std::size_t appended(StreamHandle h) const;

 private:
  struct Stream {
    StreamInfo info;
    std::FILE* file = nullptr;
    std::string buffer;
    std::size_t buffered = 0;
    std::size_t count = 0;
    std::optional<double> last_t;
  };

  void write_manifest_locked();
  void write_chunk_locked(Stream& s);
  Stream& open_stream_locked(StreamInfo info, bool existing);

  std::filesystem::path dir_;
  Options opt_;
  nlohmann::json meta_;
  SessionClock clock_;
  std::string session_id_;
  mutable std::mutex mutex_;
  std::vector<std::unique_ptr<Stream>> streams_;
  std::map<std::string, StreamHandle> by_name_;
};

struct StreamLog {
  StreamInfo info;
  std::vector<StreamSample> samples;
  bool truncated = false;        // trailing bytes did not form a complete chunk
  std::uint64_t valid_bytes = 0;  // file prefix holding intact chunks
};

struct SessionLog {
  nlohmann::json manifest;
  std::map<std::string, StreamLog> streams;
  std::optional<double> t_min;
  std::optional<double> t_max;
};

StreamLog read_stream_file(const std::filesystem::path& path, const std::string& name = {});
SessionLog load_session(const std::filesystem::path& dir);

// Nearest sample per stream (ties toward the earlier sample); empty streams
// map to nullopt. Throws std::out_of_range when t is outside the session span
// and std::invalid_argument for an unknown stream.
std::map<std::string, std::optional<StreamSample>> align(const SessionLog& log, double t,
                                                         const std::vector<std::string>& streams);

// Writes <out>/<stream>.tsv per stream: a "t" column then one column per
// top-level payload key. Returns the files written.
std::vector<std::filesystem::path> export_tsv(const SessionLog& log, const std::filesystem::path& out);

}  // namespace crew::recorder
