#pragma once

#include <stdexcept>
#include <string>

namespace vizref {

// Base for every typed failure in the library. `kind()` is the stable name
// surfaced by the CLI (stderr) and the reward service (error field).
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

// Malformed JSON or other undecodable input. `offset` is the byte position
// reported by the parser.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error("ParseError", what), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// A document or argument violates a schema/invariant. `field` names the
// offending location, e.g. "steps[2].attn[0][1]".
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& constraint)
      : Error("ValidationError", field + ": " + constraint),
        field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

#define VIZREF_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                       \
   public:                                                          \
    explicit Name(const std::string& what) : Error(#Name, what) {}  \
  };

VIZREF_DEFINE_ERROR(AlignmentError)
VIZREF_DEFINE_ERROR(MissingStep)
VIZREF_DEFINE_ERROR(MissingDistribution)
VIZREF_DEFINE_ERROR(DegenerateAttention)
VIZREF_DEFINE_ERROR(DegenerateHalf)
VIZREF_DEFINE_ERROR(EmptyInput)
VIZREF_DEFINE_ERROR(GenerationError)
VIZREF_DEFINE_ERROR(ConfigError)

#undef VIZREF_DEFINE_ERROR

}  // namespace vizref
