#pragma once

// Binary container shared by feature files, word-vector sources, embedding
// tables and checkpoints.
//
// Layout:
//   SYNSE-CONTAINER 1\n
//   <key> <value...>\n                       (any number of header fields)
//   array <name> <f32|f64|i32> <rows> <cols>\n (one line per array, in payload order)
//   end\n
//   <payloads, row-major, little-endian, concatenated in declaration order>
//
// Header keys are single tokens; values run to the end of the line.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "synse/matrix.hpp"

namespace synse {

enum class ElementType { F32, F64, I32 };

struct ContainerArray {
  std::string name;
  ElementType type = ElementType::F64;
  Matrix values;  // integer arrays are held as exact doubles
};

class Container {
 public:
  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;  // throws Format if absent
  std::optional<std::string> find(const std::string& key) const;
  const std::vector<std::pair<std::string, std::string>>& header() const { return header_; }

  void add_array(std::string name, ElementType type, Matrix values);
  void add_ints(std::string name, const std::vector<std::int64_t>& values);
  const ContainerArray& array(const std::string& name) const;  // throws Format if absent
  bool has_array(const std::string& name) const;
  std::vector<std::int64_t> ints(const std::string& name) const;
  const std::vector<ContainerArray>& arrays() const { return arrays_; }

  std::string serialize() const;
  static Container parse(const std::string& bytes, const std::string& origin = "<memory>");

  void save(const std::filesystem::path& path) const;
  static Container load(const std::filesystem::path& path);

 private:
  std::vector<std::pair<std::string, std::string>> header_;
  std::vector<ContainerArray> arrays_;
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

std::vector<std::string> split_ws(const std::string& s);
std::string join(const std::vector<std::string>& parts, const std::string& sep = " ");

}  // namespace synse
