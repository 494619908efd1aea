#pragma once

namespace volseg {

// Full command-line surface (segment / map-voi / evaluate / stats /
// phantom). Returns the process exit status: 0 success, 1 computation
// failure, 2 usage or input error.
int run_cli(int argc, char** argv);

} // namespace volseg
