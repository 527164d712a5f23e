#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

namespace isokam {

inline constexpr const char* kVersion = "0.1.0";

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitDomain = 3;

// Runs one experiment from a complete config ({"command": ..., params}).
// Returns {"command", "config", "result", "version"}; side files (CSV
// traces) are written when the config names them.
nlohmann::json run_command(const nlohmann::json& config);

// Fills defaults and validates; the returned object is what gets embedded.
nlohmann::json normalize_config(const nlohmann::json& config);

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace isokam
