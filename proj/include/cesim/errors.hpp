#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cesim {

// Machine-readable failure: a stable kind tag plus key/value context.
// Kinds used across the library: config, dimension, divergence, infeasible,
// capacity, fit_quality, not_compressive, degenerate, numerical_rank, io.
class SimError : public std::runtime_error {
public:
  using Context = std::vector<std::pair<std::string, std::string>>;

  SimError(std::string kind, const std::string& message, Context context = {})
      : std::runtime_error(message), kind_(std::move(kind)), context_(std::move(context)) {}

  const std::string& kind() const noexcept { return kind_; }
  const Context& context() const noexcept { return context_; }

  std::string context_value(const std::string& key) const {
    for (const auto& [k, v] : context_)
      if (k == key) return v;
    return {};
  }

private:
  std::string kind_;
  Context context_;
};

inline std::string num_str(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

[[noreturn]] inline void fail(std::string kind, const std::string& message,
                              SimError::Context context = {}) {
  throw SimError(std::move(kind), message, std::move(context));
}

}  // namespace cesim
