#include "synse/container.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace synse {

static_assert(std::endian::native == std::endian::little,
              "container payloads are written in native order and require a little-endian host");

namespace {

constexpr const char* kMagic = "SYNSE-CONTAINER 1";

const char* type_name(ElementType t) {
  switch (t) {
    case ElementType::F32: return "f32";
    case ElementType::F64: return "f64";
    case ElementType::I32: return "i32";
  }
  return "?";
}

ElementType parse_type(const std::string& s) {
  if (s == "f32") return ElementType::F32;
  if (s == "f64") return ElementType::F64;
  if (s == "i32") return ElementType::I32;
  throw Error(ErrorKind::Format, "unknown element type '" + s + "'");
}

std::size_t element_size(ElementType t) { return t == ElementType::F64 ? 8 : 4; }

template <typename T>
void append_pod(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T read_pod(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

}  // namespace

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

void Container::set(const std::string& key, const std::string& value) {
  if (key.empty() || key.find_first_of(" \t\n") != std::string::npos || key == "array" ||
      key == "end") {
    throw Error(ErrorKind::Format, "invalid header key '" + key + "'");
  }
  if (value.find('\n') != std::string::npos) {
    throw Error(ErrorKind::Format, "header value for '" + key + "' contains a newline");
  }
  for (auto& [k, v] : header_) {
    if (k == key) {
      v = value;
      return;
    }
  }
  header_.emplace_back(key, value);
}

std::optional<std::string> Container::find(const std::string& key) const {
  for (const auto& [k, v] : header_)
    if (k == key) return v;
  return std::nullopt;
}

const std::string& Container::get(const std::string& key) const {
  for (const auto& [k, v] : header_)
    if (k == key) return v;
  throw Error(ErrorKind::Format, "missing header field '" + key + "'");
}

void Container::add_array(std::string name, ElementType type, Matrix values) {
  if (has_array(name)) throw Error(ErrorKind::Format, "duplicate array '" + name + "'");
  arrays_.push_back({std::move(name), type, std::move(values)});
}

void Container::add_ints(std::string name, const std::vector<std::int64_t>& values) {
  Matrix m(values.size(), 1);
  for (std::size_t i = 0; i < values.size(); ++i) m(i, 0) = static_cast<double>(values[i]);
  add_array(std::move(name), ElementType::I32, std::move(m));
}

bool Container::has_array(const std::string& name) const {
  for (const auto& a : arrays_)
    if (a.name == name) return true;
  return false;
}

const ContainerArray& Container::array(const std::string& name) const {
  for (const auto& a : arrays_)
    if (a.name == name) return a;
  throw Error(ErrorKind::Format, "missing array '" + name + "'");
}

std::vector<std::int64_t> Container::ints(const std::string& name) const {
  const auto& a = array(name);
  std::vector<std::int64_t> out;
  out.reserve(a.values.size());
  for (double v : a.values.values()) out.push_back(static_cast<std::int64_t>(v));
  return out;
}

std::string Container::serialize() const {
  std::string out = std::string(kMagic) + "\n";
  for (const auto& [k, v] : header_) out += k + " " + v + "\n";
  for (const auto& a : arrays_) {
    out += "array " + a.name + " " + type_name(a.type) + " " + std::to_string(a.values.rows()) +
           " " + std::to_string(a.values.cols()) + "\n";
  }
  out += "end\n";
  for (const auto& a : arrays_) {
    for (double v : a.values.values()) {
      switch (a.type) {
        case ElementType::F32: append_pod(out, static_cast<float>(v)); break;
        case ElementType::F64: append_pod(out, v); break;
        case ElementType::I32: append_pod(out, static_cast<std::int32_t>(v)); break;
      }
    }
  }
  return out;
}

Container Container::parse(const std::string& bytes, const std::string& origin) {
  Container c;
  std::size_t pos = 0;
  auto next_line = [&]() -> std::string {
    const auto nl = bytes.find('\n', pos);
    if (nl == std::string::npos) {
      throw Error(ErrorKind::Format, origin + ": truncated header (no 'end' line)");
    }
    std::string line = bytes.substr(pos, nl - pos);
    pos = nl + 1;
    return line;
  };

  if (next_line() != kMagic) throw Error(ErrorKind::Format, origin + ": bad magic line");

  struct Decl {
    std::string name;
    ElementType type;
    std::size_t rows, cols;
  };
  std::vector<Decl> decls;
  for (;;) {
    std::string line = next_line();
    if (line == "end") break;
    const auto sp = line.find(' ');
    const std::string key = line.substr(0, sp);
    const std::string value = sp == std::string::npos ? "" : line.substr(sp + 1);
    if (key == "array") {
      auto f = split_ws(value);
      if (f.size() != 4) throw Error(ErrorKind::Format, origin + ": malformed array line");
      decls.push_back({f[0], parse_type(f[1]), std::stoul(f[2]), std::stoul(f[3])});
    } else {
      c.set(key, value);
    }
  }

  if (auto bo = c.find("byte_order"); bo && *bo != "little-endian") {
    throw Error(ErrorKind::Format, origin + ": unsupported byte order '" + *bo + "'");
  }

  for (const auto& d : decls) {
    const std::size_t n = d.rows * d.cols;
    const std::size_t bytes_needed = n * element_size(d.type);
    if (pos + bytes_needed > bytes.size()) {
      throw Error(ErrorKind::Format, origin + ": payload for array '" + d.name + "' is truncated (" +
                                         std::to_string(bytes.size() - pos) + " bytes left, " +
                                         std::to_string(bytes_needed) + " needed)");
    }
    Matrix m(d.rows, d.cols);
    auto vals = m.values();
    const char* p = bytes.data() + pos;
    for (std::size_t i = 0; i < n; ++i) {
      switch (d.type) {
        case ElementType::F32: vals[i] = read_pod<float>(p + 4 * i); break;
        case ElementType::F64: vals[i] = read_pod<double>(p + 8 * i); break;
        case ElementType::I32: vals[i] = read_pod<std::int32_t>(p + 4 * i); break;
      }
    }
    pos += bytes_needed;
    c.add_array(d.name, d.type, std::move(m));
  }
  if (pos != bytes.size()) {
    throw Error(ErrorKind::Format, origin + ": " + std::to_string(bytes.size() - pos) +
                                       " trailing bytes after declared payload");
  }
  return c;
}

void Container::save(const std::filesystem::path& path) const { write_file(path, serialize()); }

Container Container::load(const std::filesystem::path& path) {
  return parse(read_file(path), path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::Io, "write failed for '" + path.string() + "'");
}

}  // namespace synse
