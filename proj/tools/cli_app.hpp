#pragma once

namespace ossr {

/// Entry point of the command-line tool; returns the process exit status.
int cli_main(int argc, char** argv);

}  // namespace ossr
