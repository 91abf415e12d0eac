#pragma once

#include <iosfwd>

namespace mvcnn::cli {

// Entry point of the command-line tool. Returns the process exit code;
// usage errors print flag documentation to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mvcnn::cli
