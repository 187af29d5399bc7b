#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace relight {

// args excludes the program name. Returns 0 on success, 1 on a stage failure,
// 2 on bad usage.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace relight
