#include "dopo/io.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace dopo {

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.11e", value);
  return buffer;
}

void write_params_header(std::ostream& os, std::string_view method,
                         const NormalizedParams& params,
                         std::string_view extra) {
  os << "# params: sigma=" << format_number(params.sigma)
     << " kappa=" << format_number(params.kappa)
     << " g=" << format_number(params.g) << " method=" << method
     << " tool=" << kToolName << '/' << kToolVersion;
  if (!extra.empty()) os << ' ' << extra;
  os << '\n';
}

}  // namespace dopo
