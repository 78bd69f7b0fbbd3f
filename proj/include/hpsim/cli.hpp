// SPDX-License-Identifier: Apache-2.0
//
// In-process command line entry point, testable without spawning a binary.
// Exit codes: 0 success, 1 usage error, 2 runtime failure.

#pragma once

#include <ostream>

namespace hpsim {

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hpsim
