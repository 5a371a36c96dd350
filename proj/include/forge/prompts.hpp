#pragma once

#include <string>
#include <string_view>
#include <vector>

// Prompt texts shared by the harness, the generator and the scripted oracles.
namespace forge::prompts {

inline constexpr std::string_view kFlagHead = "Is the following statement factually correct?";
inline constexpr std::string_view kFlagTail = "Answer only with Yes or No.";
inline constexpr std::string_view kReasoningQuestion = "Does the conclusion logically follow from the premises?";
inline constexpr std::string_view kSingleFlagLabel = "Statement:";
inline constexpr std::string_view kSingleVerdictLabel = "Conclusion follows:";
inline constexpr std::string_view kReformulateMarker = "Make the premise into a context";
inline constexpr std::string_view kEvidenceMarker = "Write a short piece of evidence";
inline constexpr std::string_view kContinueMarker = "Continue the following partial response";
inline constexpr std::string_view kCategorizeMarker = "Classify the following sentence";

// "1. a\n2. b" with numbering extended to any length.
std::string enumerate(const std::vector<std::string>& items);

// Factuality flag question about the conclusion alone.
std::string flag(std::string_view conclusion);

// Single-turn chain-of-thought validity question.
std::string standard(const std::vector<std::string>& premises, std::string_view conclusion);

// Second turn of the flag-then-reason conversation.
std::string reason_after_flag(const std::vector<std::string>& premises, std::string_view conclusion);

// Both questions in one turn, with labelled answer lines.
std::string flag_and_reason_single(const std::vector<std::string>& premises, std::string_view conclusion);

// Validity question without the step-by-step instruction.
std::string zero_shot(const std::vector<std::string>& premises, std::string_view conclusion);

struct Exemplar {
    std::vector<std::string> premises;
    std::string conclusion;
    bool follows;
};
std::string few_shot(const std::vector<Exemplar>& exemplars, const std::vector<std::string>& premises,
                     std::string_view conclusion);

// Standard question with possibly fabricated evidence between premises and conclusion.
std::string with_evidence(const std::vector<std::string>& premises, const std::vector<std::string>& evidence,
                          std::string_view conclusion);

enum class EvidenceStance { support, negate };
std::string evidence_request(const std::vector<std::string>& premises, std::string_view conclusion,
                             EvidenceStance stance);

std::string reformulate(const std::vector<std::string>& premises, std::string_view conclusion);

std::string continue_reasoning(std::string_view prefix);

std::string categorize(std::string_view sentence);

}  // namespace forge::prompts
