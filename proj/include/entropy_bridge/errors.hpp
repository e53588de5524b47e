#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace entropy_bridge {

/// Failure categories shared by the C++ core and the C API status codes.
enum class ErrorKind {
  kDimension,
  kNotPsd,
  kNotPd,
  kUnstable,
  kUnreachable,
  kParameter,
  kNonconvergence,
  kConditioning,
  kParse,
  kIo,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what)
      : Error(ErrorKind::kDimension, what) {}
};

class NotPsdError : public Error {
 public:
  NotPsdError(const std::string& what, double eigenvalue)
      : Error(ErrorKind::kNotPsd, what), eigenvalue_(eigenvalue) {}
  double eigenvalue() const { return eigenvalue_; }

 private:
  double eigenvalue_;
};

class NotPdError : public Error {
 public:
  NotPdError(const std::string& what, double eigenvalue)
      : Error(ErrorKind::kNotPd, what), eigenvalue_(eigenvalue) {}
  double eigenvalue() const { return eigenvalue_; }

 private:
  double eigenvalue_;
};

class InstabilityError : public Error {
 public:
  InstabilityError(const std::string& what, double spectral_radius)
      : Error(ErrorKind::kUnstable, what), spectral_radius_(spectral_radius) {}
  double spectral_radius() const { return spectral_radius_; }

 private:
  double spectral_radius_;
};

class UnreachableError : public Error {
 public:
  explicit UnreachableError(const std::string& what)
      : Error(ErrorKind::kUnreachable, what) {}
};

class ParameterError : public Error {
 public:
  explicit ParameterError(const std::string& what)
      : Error(ErrorKind::kParameter, what) {}
};

/// Iterative solver gave up; carries the last iterate for diagnostics.
class NonconvergenceError : public Error {
 public:
  NonconvergenceError(const std::string& what, Eigen::MatrixXd last_iterate)
      : Error(ErrorKind::kNonconvergence, what),
        last_iterate_(std::move(last_iterate)) {}
  const Eigen::MatrixXd& last_iterate() const { return last_iterate_; }

 private:
  Eigen::MatrixXd last_iterate_;
};

class ConditioningError : public Error {
 public:
  ConditioningError(const std::string& what, double eigenvalue)
      : Error(ErrorKind::kConditioning, what), eigenvalue_(eigenvalue) {}
  double eigenvalue() const { return eigenvalue_; }

 private:
  double eigenvalue_;
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what)
      : Error(ErrorKind::kParse, what) {}
};

}  // namespace entropy_bridge
