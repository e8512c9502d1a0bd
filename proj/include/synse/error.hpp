#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace synse {

enum class ErrorKind {
  Format,
  Data,
  Catalog,
  Split,
  Shape,
  Numeric,
  Vocabulary,
  Description,
  Table,
  Parameter,
  Training,
  Divergence,
  Tuning,
  Metric,
  Spec,
  Config,
  Io,
  Usage,
};

std::string_view to_string(ErrorKind kind);

// All library failures surface as this one exception type; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Format: return "format";
    case ErrorKind::Data: return "data";
    case ErrorKind::Catalog: return "catalog";
    case ErrorKind::Split: return "split";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::Numeric: return "numeric";
    case ErrorKind::Vocabulary: return "vocabulary";
    case ErrorKind::Description: return "description";
    case ErrorKind::Table: return "table";
    case ErrorKind::Parameter: return "parameter";
    case ErrorKind::Training: return "training";
    case ErrorKind::Divergence: return "divergence";
    case ErrorKind::Tuning: return "tuning";
    case ErrorKind::Metric: return "metric";
    case ErrorKind::Spec: return "spec";
    case ErrorKind::Config: return "config";
    case ErrorKind::Io: return "io";
    case ErrorKind::Usage: return "usage";
  }
  return "unknown";
}

}  // namespace synse
