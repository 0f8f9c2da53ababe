#pragma once

namespace barl {

// run | table | plot front end. Exit codes: 0 success, 2 configuration
// error, 3 run failure.
int cli_main(int argc, const char* const* argv);

}  // namespace barl
