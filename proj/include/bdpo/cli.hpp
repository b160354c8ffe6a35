// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace bdpo {

// Dispatches one subcommand (gen-data, pretrain-behavior, train, eval,
// oracle-check, plot). Returns the process exit code: 0 ok, 2 config error,
// 3 data error, 4 numeric failure, 5 oracle-check failure.
int cli_main(const std::vector<std::string>& args);

}  // namespace bdpo
