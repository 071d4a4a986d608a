#pragma once

// key=value run configuration.
//
// One assignment per line; blank lines and '#' comments are ignored. Keys are
// the RunConfig field names: loss, alpha, lambda3, learning_rate, mse_epochs,
// reg_epochs, phases, batch_size, truncation, clusters, omega0, a0, b0, m0,
// lambda0, m0_from_data, prune_threshold, prune_every, mixture_iters, dims
// (comma separated), sigma_head, seed.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "dms/trainer.hpp"

namespace dms {

using ConfigValues = std::map<std::string, std::string>;

/// The accepted keys, in the order listed above.
const std::vector<std::string>& config_keys();

ConfigValues parse_config_text(const std::string& text);
ConfigValues load_config_file(const std::filesystem::path& path);

/// Applies every entry to `config`; unknown keys and unparsable values throw
/// ValidationError. Returns true when a seed was among the entries.
bool apply_config(RunConfig& config, const ConfigValues& values);

/// Every field, in the key order listed above; parses back to an identical
/// RunConfig.
std::string format_config(const RunConfig& config);

bool operator==(const RunConfig& a, const RunConfig& b);

}  // namespace dms
