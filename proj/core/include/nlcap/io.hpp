#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "nlcap/hvspace.hpp"
#include "nlcap/nsbox.hpp"
#include "nlcap/solver.hpp"

namespace nlcap::io {

// Box files: {"name", "nA", "nB", "nR", "nS", "P": [a][b][r][s]}.
nlohmann::json box_to_json(const NSBox& box);
// Throws ParseError naming the offending field. Performs no probabilistic
// validation.
NSBox box_from_json(const nlohmann::json& doc);

// HV-box files: {"P_r_given_a": [[...]], "nB", "nS",
//                "blocks": [{"r", "a", "sigma": [...]}]}.
nlohmann::json hvbox_to_json(const HVBox& hv);
HVBox hvbox_from_json(const nlohmann::json& doc);

// Report without the HV-box; include it with hvbox_to_json when needed.
nlohmann::json report_to_json(const SolverReport& rep);

// Doubles are written in shortest round-trip form.
std::string dump(const nlohmann::json& doc);

// Throw IoError when the file cannot be read or written and ParseError for
// malformed JSON.
nlohmann::json read_json(const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace nlcap::io
