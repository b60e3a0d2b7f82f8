#pragma once

#include <iosfwd>
#include <string>
#include <string_view>

#include "dopo/model.hpp"

namespace dopo {

inline constexpr std::string_view kToolName = "dopo-lab";
inline constexpr std::string_view kToolVersion = "0.1.0";

/// 12 significant digits, scientific notation; "nan"/"inf"/"-inf" otherwise.
std::string format_number(double value);

/// Writes "# params: sigma=... kappa=... g=... method=... tool=dopo-lab/x.y.z"
/// followed by `extra` (if any) and a newline.
void write_params_header(std::ostream& os, std::string_view method,
                         const NormalizedParams& params,
                         std::string_view extra = {});

}  // namespace dopo
