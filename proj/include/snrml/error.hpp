#pragma once

#include <stdexcept>
#include <string>

namespace snrml {

/// Broad failure classes. The CLI maps each to a distinct exit code.
enum class ErrorCategory {
  Dimension,   // shape or length mismatch
  Numeric,     // non-finite values, overflow
  Parameter,   // argument outside its valid range
  Degenerate,  // zero-variance anchor and similar undefined quantities
  Mining,      // batch cannot produce the requested pairs/triplets/tuplets
  State,       // stale cache, misuse of stateful objects
  Config,      // experiment configuration errors
  Data,        // dataset ingestion errors
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

const char* to_string(ErrorCategory category) noexcept;

}  // namespace snrml
