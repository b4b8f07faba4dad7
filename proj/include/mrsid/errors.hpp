#ifndef MRSID_ERRORS_HPP
#define MRSID_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace mrsid {

// Shapes that do not line up. Raised before any arithmetic happens.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Input data that cannot support the requested model (e.g. rank < d).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Singular solves, non-finite iterates, etc.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require_dims(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}

}  // namespace mrsid

#endif  // MRSID_ERRORS_HPP
