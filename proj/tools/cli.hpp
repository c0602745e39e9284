#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace ews::cli {

/// Exit statuses shared by every command.
enum Exit : int { kOk = 0, kDataError = 1, kUsageError = 2, kBackendError = 3 };

/// Runs one command line (without the program name). Never throws; every
/// failure maps to an exit status with a message on `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ews::cli
