#pragma once

namespace tcache::cli {

/// Exit codes: 0 ok, 2 usage or input error, 1 internal error.
int run(int argc, char** argv);

}  // namespace tcache::cli
