#include "physnote/prompts.hpp"

#include "physnote/text.hpp"

namespace physnote::prompts {

namespace {

constexpr std::string_view kHypothesizerSystem = R"(You are the hypothesis stage of a visual physical-reasoning agent.
Study the question, the listed frame identifiers and the notes, then propose
a physical explanation and request the observations needed to check it.
Rules:
- Wrap each information request in <info></info> tags.
- Wrap each directive about where or when to look in <attention></attention> tags.
- Refer to frames only by the bracketed identifiers given in the manifest.
- Finish with a line of the form:
Candidate Answer: <label>
)";

constexpr std::string_view kHypothesizerUser = R"(General tips:
{{GENERAL_TIPS}}
Task notes:
{{NODE_CONTEXT}}
Question (frame identifiers first):
{{QUESTION}}
Choices:
{{CHOICES}}
{{FEEDBACK}})";

constexpr std::string_view kGathererSystem = R"(You are the observation stage of a visual physical-reasoning agent.
Answer the requests strictly from what is visible in the referenced frames.
Reply with one observation per line and nothing else, each formatted exactly as:
([#<n>image] | <entity> | <one observable property>)
([#<n>videoframe<m>] | <entity> | <one observable property>)
Use only identifiers from the manifest. Do not add prose, bullets or blank
commentary lines.
)";

constexpr std::string_view kGathererUser = R"(Manifest:
{{MANIFEST}}
Information requests:
{{INFO_QUERIES}}
Attention directives:
{{ATTENTION}}
)";

constexpr std::string_view kGathererRetryUser = R"(None of your lines matched the required format. Reply again using ONLY lines
of the exact form ([#<n>image] | <entity> | <property>) or
([#<n>videoframe<m>] | <entity> | <property>), one per line, no other text.
Manifest:
{{MANIFEST}}
Information requests:
{{INFO_QUERIES}}
Attention directives:
{{ATTENTION}}
)";

constexpr std::string_view kValidatorSystem = R"(You are the validation stage of a visual physical-reasoning agent.
Judge whether the gathered observations are sufficient to settle the
candidate answer. Reply with one line:
Verdict: sufficient
or
Verdict: insufficient
If insufficient, add one line per missing piece of evidence:
Missing: <what is missing>
Append " [unobtainable]" to a Missing line when that evidence cannot be
observed in the available frames at all.
)";

constexpr std::string_view kValidatorUser = R"(Hypothesis:
{{HYPOTHESIS}}
Candidate answer: {{CANDIDATE}}
Observations:
{{FACTS}}
)";

constexpr std::string_view kDegenerativeSystem = R"(Evidence gathering is exhausted. Answer the question now, combining the
observations already collected with your internal knowledge of physics.
If you must assume anything that was not observed, explain it in a block
starting with the line:
Assumption Rationale:
Finish with a line of the form:
Final Answer: <label>
)";

constexpr std::string_view kDegenerativeUser = R"(Question (frame identifiers first):
{{QUESTION}}
Choices:
{{CHOICES}}
Observations collected so far:
{{FACTS}}
Earlier candidate answers: {{CANDIDATES}}
)";

constexpr std::string_view kDiscoverySystem = R"(You maintain a taxonomy of physical-reasoning task categories.
Given a question and the categories that already exist, define ONE new
category that covers this question. Do not duplicate or rephrase an
existing category. Reply with a fenced block exactly like:
```
name: <short_identifier>
description: <one or two sentences with the textual and visual cues of the category>
```
)";

constexpr std::string_view kDiscoveryUser = R"(Existing categories:
{{NODES}}
Question (frame identifiers first):
{{QUESTION}}
)";

constexpr std::string_view kReflectionSystem = R"(The agent just solved a question and the trace below passed every quality
gate. Extract the reusable physical principles that made it work.
Reply with one tip per line, using only these forms:
Tip[detail]: <tip that applies to this task category>
Tip[general]: <tip that applies across categories>
)";

constexpr std::string_view kReflectionUser = R"(Task category: {{NODE}}
Trace:
{{TRACE}}
)";

constexpr std::string_view kTipDiscoverySystem = R"(The agent answered incorrectly. Compare its trace with the ground truth and
write one or two actionable tips that would have prevented the mistake.
Each tip must mention something observable in the frames. Reply using only
lines of the form:
Tip[detail]: <tip>
)";

constexpr std::string_view kTipDiscoveryUser = R"(Task category: {{NODE}}
Agent answer: {{WRONG_ANSWER}}
Ground truth: {{GROUND_TRUTH}}
Trace:
{{TRACE}}
)";

} // namespace

std::string_view hypothesizer_system() { return kHypothesizerSystem; }
std::string_view hypothesizer_user() { return kHypothesizerUser; }
std::string_view gatherer_system() { return kGathererSystem; }
std::string_view gatherer_user() { return kGathererUser; }
std::string_view gatherer_retry_user() { return kGathererRetryUser; }
std::string_view validator_system() { return kValidatorSystem; }
std::string_view validator_user() { return kValidatorUser; }
std::string_view degenerative_system() { return kDegenerativeSystem; }
std::string_view degenerative_user() { return kDegenerativeUser; }
std::string_view discovery_system() { return kDiscoverySystem; }
std::string_view discovery_user() { return kDiscoveryUser; }
std::string_view reflection_system() { return kReflectionSystem; }
std::string_view reflection_user() { return kReflectionUser; }
std::string_view tip_discovery_system() { return kTipDiscoverySystem; }
std::string_view tip_discovery_user() { return kTipDiscoveryUser; }

std::string render(std::string_view tmpl, const std::map<std::string, std::string>& vars) {
    std::string out(tmpl);
    for (const auto& [key, value] : vars) {
        out = text::replace_all(std::move(out), "{{" + key + "}}", value);
    }
    return out;
}

} // namespace physnote::prompts
