#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cosserat {

/// Base of every error raised by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class SingularMatrix : public Error
{
public:
  explicit SingularMatrix(double det)
    : Error("singular 2x2 matrix (det = " + std::to_string(det) + ")"), det_(det)
  {}
  double det() const noexcept { return det_; }

private:
  double det_;
};

/// det F <= 0 somewhere. `where` names the offending location (quadrature
/// point, element, field sample) when the caller knows it.
class NonPositiveJacobian : public Error
{
public:
  explicit NonPositiveJacobian(double J, std::string where = {})
    : Error("non-positive Jacobian det F = " + std::to_string(J) + (where.empty() ? "" : " at " + where)),
      J_(J), where_(std::move(where))
  {}
  double jacobian() const noexcept { return J_; }
  const std::string& where() const noexcept { return where_; }

private:
  double J_;
  std::string where_;
};

class InvalidField : public Error
{
public:
  InvalidField(std::size_t point, std::string reason, bool inverted)
    : Error("invalid field sample " + std::to_string(point) + ": " + reason),
      point_(point), inverted_(inverted)
  {}
  std::size_t point() const noexcept { return point_; }
  /// True when the sample failed because det F <= 0 (a certification failure
  /// in its own right) rather than a malformed director.
  bool inverted() const noexcept { return inverted_; }

private:
  std::size_t point_;
  bool inverted_;
};

class ShapeMismatch : public Error
{
public:
  using Error::Error;
};

class NonFiniteLoss : public Error
{
public:
  using Error::Error;
};

class DivergedTraining : public Error
{
public:
  DivergedTraining(std::size_t epoch, std::string reason)
    : Error("training diverged at epoch " + std::to_string(epoch) + ": " + reason), epoch_(epoch)
  {}
  std::size_t epoch() const noexcept { return epoch_; }

private:
  std::size_t epoch_;
};

class StageDiverged : public Error
{
public:
  StageDiverged(std::size_t increment, std::string stage, std::string reason)
    : Error("staggered solve failed at increment " + std::to_string(increment) + " (" + stage + " stage): " + reason),
      increment_(increment), stage_(std::move(stage))
  {}
  std::size_t increment() const noexcept { return increment_; }
  const std::string& stage() const noexcept { return stage_; }

private:
  std::size_t increment_;
  std::string stage_;
};

class OutOfDomain : public Error
{
public:
  using Error::Error;
};

class GridMismatch : public Error
{
public:
  using Error::Error;
};

class IoError : public Error
{
public:
  using Error::Error;
};

class ConfigError : public Error
{
public:
  using Error::Error;
};

} // namespace cosserat
