#include "microweather/errors.hpp"

namespace mw {

int exit_code_for(ErrorClass cls) noexcept {
  switch (cls) {
    case ErrorClass::Usage:
      return 1;
    case ErrorClass::Data:
      return 2;
    case ErrorClass::Numerical:
      return 3;
  }
  return 2;
}

}  // namespace mw
