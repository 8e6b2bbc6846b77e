#pragma once

#include <stdexcept>
#include <string>

namespace ordr2 {

// Base of every error raised by the library. Subclasses only add a stable
// `code()` so the CLI can map failures to diagnostics without parsing text.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual const char* code() const noexcept { return "error"; }
};

#define ORDR2_DEFINE_ERROR(Name, Code)                      \
  class Name : public Error {                               \
   public:                                                  \
    explicit Name(const std::string& what) : Error(what) {} \
    const char* code() const noexcept override { return Code; } \
  };

ORDR2_DEFINE_ERROR(DomainError, "domain")
ORDR2_DEFINE_ERROR(SingularDesignError, "singular-design")
ORDR2_DEFINE_ERROR(DegenerateResponseError, "degenerate-response")
ORDR2_DEFINE_ERROR(DegenerateNullError, "degenerate-null")
ORDR2_DEFINE_ERROR(OrderingError, "threshold-ordering")
ORDR2_DEFINE_ERROR(SchemaError, "schema")
ORDR2_DEFINE_ERROR(UndefinedMeasureError, "undefined-measure")
ORDR2_DEFINE_ERROR(InapplicableMeasureError, "inapplicable-measure")
ORDR2_DEFINE_ERROR(DegenerateDiscretizationError, "degenerate-discretization")
ORDR2_DEFINE_ERROR(EmptyDataError, "empty-data")

#undef ORDR2_DEFINE_ERROR

/// Malformed input file. `row` is 1-based over data rows (header excluded),
/// 0 when the problem is not tied to a row.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t row = 0, std::string column = {})
      : Error(what), row_(row), column_(std::move(column)) {}
  const char* code() const noexcept override { return "parse"; }
  std::size_t row() const noexcept { return row_; }
  const std::string& column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::string column_;
};

}  // namespace ordr2
