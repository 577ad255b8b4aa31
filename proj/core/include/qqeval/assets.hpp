#pragma once

#include <string_view>

// Text assets compiled into the library from rubrics/, prompts/ and
// fixtures/ at build time.
namespace qqeval::assets {

std::string_view default_rubric_json();
std::string_view judge_prompt_template();
std::string_view validity_fixture_json();
/// Stub rules reproducing the qualitative pattern of the validity chart.
std::string_view validity_stub_rules_json();

}  // namespace qqeval::assets
