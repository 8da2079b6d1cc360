#ifndef UVMSIM_ERRORS_HPP_
#define UVMSIM_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace uvmsim {

// Base for all library errors so callers can catch uvmsim failures as one family.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Euler-rate map not invertible (pitch too close to +-pi/2).
struct RepresentationSingularity : Error {
  explicit RepresentationSingularity(const std::string& what) : Error(what) {}
};

// det(J J^T) at or below the configured floor.
struct NearSingular : Error {
  explicit NearSingular(const std::string& what) : Error(what) {}
};

// Pseudo-inverse normal matrix condition number beyond the trusted range.
struct IllConditioned : Error {
  explicit IllConditioned(const std::string& what) : Error(what) {}
};

// Constrained-dynamics linear system is rank deficient.
struct SingularKkt : Error {
  explicit SingularKkt(const std::string& what) : Error(what) {}
};

// Navigation-function query outside the free space.
struct OutOfFreeSpace : Error {
  explicit OutOfFreeSpace(const std::string& what) : Error(what) {}
};

struct DimensionMismatch : Error {
  explicit DimensionMismatch(const std::string& what) : Error(what) {}
};

// Scenario/config content rejected at load; `field` holds the offending path.
struct ValidationError : Error {
  ValidationError(std::string field_path, const std::string& what)
      : Error(field_path + ": " + what), field(std::move(field_path)) {}
  std::string field;
};

}  // namespace uvmsim

#endif  // UVMSIM_ERRORS_HPP_
