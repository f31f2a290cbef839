// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <istream>
#include <string>

#include "qgeom/train_sim.hpp"

namespace qgeom::train {

/// Parses the sectioned key = value config format described in README.md.
/// Keys missing from the file keep their TrainConfig defaults. Throws
/// ConfigError naming the line (syntax) or the section.key (bad value).
TrainConfig parse_train_config(std::istream& in, const std::string& source = "<config>");
TrainConfig load_train_config(const std::filesystem::path& path);

/// Canonical text of a config; parse_train_config(to_ini(c)) reproduces c.
std::string to_ini(const TrainConfig& cfg);

}  // namespace qgeom::train
