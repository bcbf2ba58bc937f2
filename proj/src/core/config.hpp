#pragma once

#include <filesystem>
#include <string>

#include "core/cases.hpp"
#include "core/coeffs.hpp"

namespace anisoflux {

// TOML case configuration. Missing keys take the case defaults; unknown keys
// raise ConfigError naming the dotted key. [manifest] and [timing] tables are
// accepted and ignored so a written manifest loads back as a config.
CaseConfig parse_config(const std::string& text, const std::string& source = "config");
CaseConfig load_config(const std::filesystem::path& path);

// Fully materialized config as TOML.
std::string format_config(const CaseConfig& cfg);

// format_config plus a [manifest] table.
void write_manifest(const std::filesystem::path& path, const CaseConfig& cfg, const std::string& command,
                    const std::filesystem::path& output_dir);
void append_manifest_timing(const std::filesystem::path& path, double seconds, int steps);

// Plasma parameters from TOML: top-level keys or a [plasma] table. Missing
// keys keep the reference values.
PlasmaParams parse_plasma_params(const std::string& text, const std::string& source = "params");
PlasmaParams load_plasma_params(const std::filesystem::path& path);

}  // namespace anisoflux
