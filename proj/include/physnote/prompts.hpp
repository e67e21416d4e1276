#pragma once

#include <map>
#include <string>
#include <string_view>

// Role prompt templates, versioned with the engine so recorded cassettes
// stay meaningful. Placeholders look like {{NAME}}.
namespace physnote::prompts {

inline constexpr int kPromptsVersion = 1;

std::string_view hypothesizer_system();
std::string_view hypothesizer_user();
std::string_view gatherer_system();
std::string_view gatherer_user();
std::string_view gatherer_retry_user();
std::string_view validator_system();
std::string_view validator_user();
std::string_view degenerative_system();
std::string_view degenerative_user();
std::string_view discovery_system();
std::string_view discovery_user();
std::string_view reflection_system();
std::string_view reflection_user();
std::string_view tip_discovery_system();
std::string_view tip_discovery_user();

std::string render(std::string_view tmpl, const std::map<std::string, std::string>& vars);

} // namespace physnote::prompts
