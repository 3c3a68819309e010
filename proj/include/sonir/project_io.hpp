#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "sonir/project.hpp"

namespace sonir {

using Json = nlohmann::ordered_json;

/// Structure only; resources are not touched. Throws Error{Format}.
Project project_from_json(const Json& doc);
Json project_to_json(const Project& project);

/// Loads every dataset and buffer ref, resolving paths against base_dir.
/// Buffers are resampled to the transport rate. Throws Error{Io, Format}.
void load_resources(Project& project, const std::filesystem::path& base_dir);

/// Parses project text and loads its resources relative to base_dir.
Project parse_project(std::string_view text, const std::filesystem::path& base_dir);

Project load_project(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace sonir
