#pragma once

#include <ostream>

namespace loom::cli {

// Exit status: 0 success, 1 runtime error, 2 usage error. Runtime errors are
// reported as one line: error kind=<kind> message="<text>".
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace loom::cli
