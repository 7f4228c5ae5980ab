#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace levyctl {

struct RunRequest {
  std::string command;  // solve | value | rho | sweep | verify | perturb
  std::string config_path;
  std::string out_dir = ".";
  /// "dotted.key=value" assignments, applied in order after the file is read.
  std::vector<std::string> overrides;
  /// 0 = all hardware threads. Kept out of result.json so runs compare equal.
  unsigned workers = 0;
};

/*!
 * Runs one command and writes out_dir/result.json plus its CSV tables.
 * Returns the process exit code: 0 success, 2 validation error, 3 control
 * assumption failure, 4 numeric failure. Messages go to `err`, the one-line
 * summary to `out`.
 */
int run(const RunRequest& request, std::ostream& out, std::ostream& err);

}  // namespace levyctl
