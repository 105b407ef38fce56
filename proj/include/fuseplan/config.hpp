// Parsing / rendering of the external JSON pipeline and device files.
#pragma once

#include <string>

#include "fuseplan/types.hpp"

namespace fuseplan {

Pipeline parse_pipeline(const std::string& json_text);
Device parse_device(const std::string& json_text);

std::string render_pipeline(const Pipeline& p);
std::string render_device(const Device& d);

Pipeline load_pipeline_file(const std::string& path);
// Resolves a bare profile name (e.g. "k20_like") through FUSEPLAN_DEVICE_DIR
// before treating the argument as a path.
Device load_device_file(const std::string& path_or_name);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace fuseplan
