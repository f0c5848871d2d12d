#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "cgl/challenge.hpp"
#include "cgl/detector.hpp"
#include "cgl/imaging.hpp"
#include "cgl/policy.hpp"

namespace cgl {

// All parsers throw ParseError on malformed text and ConfigError on values
// that parse but fail validation. All output is pretty-printed with two-space
// indentation and a trailing newline, keys in a fixed order.

std::string perturbation_to_json(const PerturbationRecord& record);
PerturbationRecord perturbation_from_json(std::string_view text);

std::string policy_to_json(const FlexibilityPolicy& policy);
FlexibilityPolicy policy_from_json(std::string_view text);

// The click-flexibility rows as a preset file.
std::string flexibility_rows_to_json(const std::vector<ClickFlexibilityRow>& rows);
std::vector<ClickFlexibilityRow> flexibility_rows_from_json(std::string_view text);

std::string detector_config_to_json(const DetectorConfig& config);
DetectorConfig detector_config_from_json(std::string_view text);

// Metadata plus the scene, enough to rebuild the challenge exactly.
std::string challenge_to_json(const Challenge& challenge);
Challenge challenge_from_json(std::string_view text);

std::string read_text_file(const std::filesystem::path& path);  // throws IoError
// Writes to a temporary sibling, then renames over `path`. Throws IoError.
void write_text_file_atomic(const std::filesystem::path& path, std::string_view text);

// "strict", "easiest", a row name, or a JSON file: a policy file, or a rows
// file with an optional ":<row name>" suffix. Throws ConfigError.
FlexibilityPolicy resolve_policy(std::string_view ref);
// A preset name or a detector JSON file. Throws ConfigError.
DetectorConfig resolve_detector_config(std::string_view ref);

}  // namespace cgl
