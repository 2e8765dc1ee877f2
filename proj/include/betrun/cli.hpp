#pragma once

#include <iosfwd>

namespace betrun {

/// Entry point behind main(). Takes argv directly so tests can drive the
/// CLI in-process with captured streams. Exit codes: 0 success, 2 campaign
/// completed but some runs failed, 3 invalid configuration or unusable
/// input.
int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err);

}  // namespace betrun
