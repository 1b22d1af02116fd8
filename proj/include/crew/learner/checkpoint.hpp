#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace crew::learner {

// Named float tensors plus a JSON header, stored as
//   "CREWCKPT" u32 version u32 header_len header
//   u32 count { u32 name_len name u32 ndim i32 dims[ndim] f32 data[] }
//   u32 crc32(everything before it)
// in little-endian order. Writes go to a temporary file and are renamed
// into place, so readers never see a partial checkpoint.
class TensorArchive {
 public:
  nlohmann::json meta = nlohmann::json::object();

  void put(const std::string& name, std::vector<int> shape, std::span<const float> values);
  bool has(const std::string& name) const { return tensors_.count(name) > 0; }
  // Throws std::runtime_error when missing or when the element count differs.
  const std::vector<float>& get(const std::string& name, std::size_t expected_size) const;
  const std::vector<float>& get(const std::string& name) const;
  std::vector<std::string> names() const;

  void write_atomic(const std::filesystem::path& path) const;
  // Throws std::runtime_error on a bad magic, version, checksum or truncation.
  static TensorArchive read(const std::filesystem::path& path);

 private:
  struct Entry {
    std::vector<int> shape;
    std::vector<float> values;
  };
  std::map<std::string, Entry> tensors_;
};

}  // namespace crew::learner
