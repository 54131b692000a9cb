#pragma once

#include <string>
#include <vector>

#include "rpcl/eval.hpp"

namespace rpcl {

// Writes metrics.json (flat name -> value, sorted keys), one CSV per
// curve, and config.echo. Field ordering is stable so reruns with the
// same inputs produce byte-identical files.
void write_report(const EvalReport& report, const std::vector<std::string>& config_echo,
                  const std::string& dir);

}  // namespace rpcl
