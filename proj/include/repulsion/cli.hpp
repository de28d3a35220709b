#pragma once

namespace repulsion::cli {

// Exit codes: 0 success, 1 a certificate failed, 2 bad configuration or
// malformed input, 3 the optimizer stalled.
int run(int argc, char** argv);

}  // namespace repulsion::cli
