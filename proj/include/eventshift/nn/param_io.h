#pragma once

#include "eventshift/nn/layers.h"

#include <filesystem>
#include <vector>

namespace eventshift::nn {

// Binary blob of named matrices (little-endian doubles, column-major).
void save_params(const ParamList& params, const std::filesystem::path& file);
// Loads values by name. Every parameter in params must be present in the
// file with a matching shape.
void load_params(const ParamList& params, const std::filesystem::path& file);

using Snapshot = std::vector<Matrix>;
Snapshot snapshot(const ParamList& params);
void restore(const ParamList& params, const Snapshot& snap);
// True when every value is bitwise equal to the snapshot.
bool equals_snapshot(const ParamList& params, const Snapshot& snap);

}  // namespace eventshift::nn
