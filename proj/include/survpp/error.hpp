#pragma once

#include <stdexcept>
#include <string>

namespace survpp {

// Error kinds map onto process exit codes in the CLI:
// config/validation problems exit 2, runtime (sampler, elicitation,
// degeneracy) problems exit 3.
enum class ErrorKind {
  schema,       // missing/mistyped column, bad config field
  parse,        // row-level parse failure
  partition,    // cannot build the requested interval partition
  domain,       // argument outside the mathematical domain
  degenerate,   // improper full conditional (e.g. Gamma with shape <= 0)
  elicitation,  // sampling-prior construction failed
  fitting,      // covariance fit failed
  sampler,      // MCMC failure (NaN density, too many failed trials)
  config        // general configuration/validation error
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  bool is_validation() const noexcept {
    return kind_ == ErrorKind::schema || kind_ == ErrorKind::parse ||
           kind_ == ErrorKind::partition || kind_ == ErrorKind::config;
  }

 private:
  ErrorKind kind_;
};

}  // namespace survpp
