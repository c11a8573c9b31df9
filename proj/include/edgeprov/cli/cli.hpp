#pragma once

namespace edgeprov::cli {

/// Entry point of the edgeprov binary. Returns 0 on success, 1 on runtime
/// failure and 2 on usage errors.
int run(int argc, char** argv);

}  // namespace edgeprov::cli
