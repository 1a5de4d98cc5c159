#pragma once

#include <stdexcept>
#include <string>

namespace fuseflow {

// Invalid configuration, mismatched inputs or violated type invariants.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}

  // `field` is a dotted path such as "grid.fine_cell"; what() reads "field: detail".
  ConfigError(const std::string& field, const std::string& detail)
      : std::runtime_error(field + ": " + detail), field_(field), detail_(detail) {}

  const std::string& field() const noexcept { return field_; }
  const std::string& detail() const noexcept { return detail_; }

  // The same error reported under `prefix`.
  ConfigError nested(const std::string& prefix) const {
    if (field_.empty()) return ConfigError(prefix + ": " + what());
    return ConfigError(prefix + "." + field_, detail_);
  }

 private:
  std::string field_;
  std::string detail_;
};

// File-system or format failures while reading/writing artifacts.
class IoError : public std::runtime_error {
 public:
  enum class Kind { kOpen, kBadMagic, kTruncated, kDimensionOverflow, kFormat, kWrite };

  IoError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace fuseflow
