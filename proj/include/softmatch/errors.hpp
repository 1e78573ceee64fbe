#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace softmatch {

// Broken caller contract: shape mismatch, empty bank, bad parameter.
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed file or incompatible dimensions on input data.
class FormatError : public std::runtime_error {
 public:
  enum class Kind {
    bad_magic,
    version_mismatch,
    truncated,
    non_finite,
    bad_header,
    trailing_data,
    dimension_mismatch,
    unsupported_image,
  };

  FormatError(Kind kind, std::size_t offset, const std::string& what)
      : std::runtime_error(what + " (offset " + std::to_string(offset) + ")"),
        kind_(kind),
        offset_(offset) {}

  FormatError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind), offset_(0) {}

  // Same error with a context prefix (e.g. the file path).
  FormatError(const std::string& prefix, const FormatError& inner)
      : std::runtime_error(prefix + inner.what()), kind_(inner.kind_), offset_(inner.offset_) {}

  Kind kind() const noexcept { return kind_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  Kind kind_;
  std::size_t offset_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when an object has no foreground cell after mask downsampling.
class DegenerateTemplateError : public std::runtime_error {
 public:
  explicit DegenerateTemplateError(int object)
      : std::runtime_error("object " + std::to_string(object) +
                           " has no foreground feature cell after downsampling; "
                           "raise the feature resolution"),
        object_(object) {}

  int object() const noexcept { return object_; }

 private:
  int object_;
};

// A metric whose denominator vanishes (e.g. JumpCut error on an empty prediction).
class UndefinedMetricError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

namespace detail {

inline void require(bool cond, const char* msg) {
  if (!cond) throw ContractViolation(msg);
}

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ContractViolation(msg);
}

}  // namespace detail
}  // namespace softmatch
