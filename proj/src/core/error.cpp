#include "hprobe/core/error.hpp"

#include <cmath>
#include <sstream>

namespace hprobe {

void require_in_range(double value, double lo, double hi, const std::string& name) {
  if (!(value >= lo && value <= hi) || std::isnan(value)) {
    std::ostringstream os;
    os << name << " = " << value << " is outside [" << lo << ", " << hi << "]";
    throw ValidationError(os.str());
  }
}

}  // namespace hprobe
