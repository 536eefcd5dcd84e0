// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "gruc/graphs.hpp"

namespace gruc {

/// Checks the bundle invariants; throws SchemaError naming the field and the
/// instance id. visual_dim == 0 accepts any uniform feature length.
void validate_instance(const InstanceBundle& bundle, std::size_t visual_dim = 0);

/// Semantic tuples serialize as [subj, rel, obj] or [subj, rel, obj, caption_rank].
nlohmann::json instance_to_json(const InstanceBundle& bundle);
InstanceBundle instance_from_json(const nlohmann::json& j);

InstanceBundle load_instance(const std::filesystem::path& path);
void save_instance(const InstanceBundle& bundle, const std::filesystem::path& path);

/// Newline-delimited instance JSON; blank lines are skipped. Schema errors
/// carry the line number.
std::vector<InstanceBundle> load_dataset(const std::filesystem::path& path);
void save_dataset(const std::vector<InstanceBundle>& data, const std::filesystem::path& path);

/// Writes to a sibling temp file, then renames over the target.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace gruc
