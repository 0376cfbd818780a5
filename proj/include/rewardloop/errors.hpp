#ifndef REWARDLOOP_ERRORS_HPP
#define REWARDLOOP_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace rewardloop {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Vectors of different lengths were combined.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Input is well-typed but numerically degenerate (zero norm, identical points, ...).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

/// A parameter is outside its valid range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// The SMC sampler hit a non-finite reward or weight.
class SamplerError : public Error {
 public:
  SamplerError(const std::string& what, int step) : Error(what), step_(step) {}
  int step() const noexcept { return step_; }

 private:
  int step_;
};

/// Config file or override could not be parsed or referenced an unknown key.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A protocol stage failed; wraps the original message with session and class.
class StageError : public Error {
 public:
  StageError(const std::string& what, int session, int class_id)
      : Error(what), session_(session), class_id_(class_id) {}
  int session() const noexcept { return session_; }
  /// -1 when the failure is not tied to one class.
  int class_id() const noexcept { return class_id_; }

 private:
  int session_;
  int class_id_;
};

}  // namespace rewardloop

#endif  // REWARDLOOP_ERRORS_HPP
