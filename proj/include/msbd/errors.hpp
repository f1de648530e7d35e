#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace msbd {

/// Base of every error raised by the library. `kind()` is a stable,
/// machine-readable tag used by the command-line tools.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  [[nodiscard]] virtual std::string_view kind() const noexcept { return "Error"; }
};

#define MSBD_DEFINE_ERROR(Name)                                                   \
  class Name : public Error {                                                     \
   public:                                                                        \
    using Error::Error;                                                           \
    [[nodiscard]] std::string_view kind() const noexcept override { return #Name; } \
  }

MSBD_DEFINE_ERROR(DimensionError);
MSBD_DEFINE_ERROR(ShapeError);
MSBD_DEFINE_ERROR(ParameterError);
MSBD_DEFINE_ERROR(DomainError);
MSBD_DEFINE_ERROR(NumericalError);
MSBD_DEFINE_ERROR(NonInvertibleFilter);
MSBD_DEFINE_ERROR(NonInvertiblePreconditioner);
MSBD_DEFINE_ERROR(DegenerateStep);
MSBD_DEFINE_ERROR(ReconstructionError);
MSBD_DEFINE_ERROR(DegenerateKernel);
MSBD_DEFINE_ERROR(IoError);
MSBD_DEFINE_ERROR(TimeoutError);

#undef MSBD_DEFINE_ERROR

}  // namespace msbd
