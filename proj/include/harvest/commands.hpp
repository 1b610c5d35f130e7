#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "harvest/config.hpp"

namespace harvest {

const std::vector<std::string>& subcommand_names();

/// Runs one subcommand, writing its data files and manifest.json into
/// `out_dir`. Progress goes to `log`. Errors are rethrown as
/// std::runtime_error prefixed with the subcommand name.
void run_subcommand(const std::string& name, const RunConfig& config, const std::filesystem::path& out_dir,
                    std::ostream& log);

}  // namespace harvest
