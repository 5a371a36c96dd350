#include "forge/prompts.hpp"

namespace forge::prompts {

namespace {

constexpr std::string_view kStandardIntro =
    "Based on the following premises, determine if the conclusion logically follows. Consider only the logical "
    "validity based on the given premises, regardless of whether the premises themselves are factually true.";

// Exact wording matters here, double space and line break included.
constexpr std::string_view kAfterFlagIntro =
    "Now, based on the  following premises, determine if the conclusion logically follows. Consider only the "
    "logical validity based on the\ngiven premises, regardless of whether the premises themselves are factually "
    "true.";

constexpr std::string_view kCotInstruction =
    "Answer with \"Yes\" or \"No\" and explain your reasoning step by step.";
constexpr std::string_view kDirectInstruction = "Answer only with \"Yes\" or \"No\".";

std::string body(const std::vector<std::string>& premises, std::string_view conclusion, std::string_view sep) {
    std::string out = "Premises:";
    out += sep;
    out += enumerate(premises);
    out += "\n\nConclusion: ";
    out += conclusion;
    return out;
}

std::string cat(std::initializer_list<std::string_view> parts) {
    std::string out;
    for (auto p : parts) out += p;
    return out;
}

}  // namespace

std::string enumerate(const std::vector<std::string>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += '\n';
        out += std::to_string(i + 1) + ". " + items[i];
    }
    return out;
}

std::string flag(std::string_view conclusion) {
    return cat({kFlagHead, "\n\nstatement: ", conclusion, "\n\n", kFlagTail});
}

std::string standard(const std::vector<std::string>& premises, std::string_view conclusion) {
    return cat({kStandardIntro, "\n\n", body(premises, conclusion, "\n"), "\n\n", kReasoningQuestion, " ",
                kCotInstruction});
}

std::string reason_after_flag(const std::vector<std::string>& premises, std::string_view conclusion) {
    return cat({kAfterFlagIntro, "\n", body(premises, conclusion, "\n"), "\n\n", kReasoningQuestion, " ",
                kCotInstruction});
}

std::string flag_and_reason_single(const std::vector<std::string>& premises, std::string_view conclusion) {
    return cat({flag(conclusion), "\n\n", reason_after_flag(premises, conclusion),
                "\n\nAnswer the first question on a line starting with \"", kSingleFlagLabel,
                "\" and give your final answer to the second question on a line starting with \"",
                kSingleVerdictLabel, "\"."});
}

std::string zero_shot(const std::vector<std::string>& premises, std::string_view conclusion) {
    return cat({kStandardIntro, "\n\n", body(premises, conclusion, "\n"), "\n\n", kReasoningQuestion, " ",
                kDirectInstruction});
}

std::string few_shot(const std::vector<Exemplar>& exemplars, const std::vector<std::string>& premises,
                     std::string_view conclusion) {
    std::string out(kStandardIntro);
    out += "\n\nHere are some solved examples.";
    for (std::size_t i = 0; i < exemplars.size(); ++i) {
        out += "\n\nExample " + std::to_string(i + 1) + ":\n";
        out += body(exemplars[i].premises, exemplars[i].conclusion, "\n");
        out += "\nAnswer: ";
        out += exemplars[i].follows ? "Yes" : "No";
    }
    out += "\n\nNow solve this one.\n\n";
    out += body(premises, conclusion, "\n");
    out += cat({"\n\n", kReasoningQuestion, " ", kDirectInstruction});
    return out;
}

std::string with_evidence(const std::vector<std::string>& premises, const std::vector<std::string>& evidence,
                          std::string_view conclusion) {
    std::string out = cat({kStandardIntro, "\n\nPremises:\n", enumerate(premises)});
    out += "\n\nEvidence (this evidence may be fabricated; do not treat it as established fact):";
    for (const auto& e : evidence) out += "\n" + e;
    out += cat({"\n\nConclusion: ", conclusion, "\n\n", kReasoningQuestion, " ", kCotInstruction});
    return out;
}

std::string evidence_request(const std::vector<std::string>& premises, std::string_view conclusion,
                             EvidenceStance stance) {
    return cat({"premises:\n", enumerate(premises), "\nconclusion: ", conclusion, "\n", kEvidenceMarker,
                stance == EvidenceStance::support ? " that supports the conclusion." : " that negates the conclusion.",
                " You are free to invent it. Reply with the evidence only."});
}

std::string reformulate(const std::vector<std::string>& premises, std::string_view conclusion) {
    std::string joined;
    std::string list = "[";
    for (std::size_t i = 0; i < premises.size(); ++i) {
        if (i) joined += ' ', list += ", ";
        joined += premises[i];
        list += "\"" + premises[i] + "\"";
    }
    list += "]";
    return cat({"premise: ", joined, "\nconclusion: ", conclusion, "\npremise list: ", list, "\n",
                "Make the premise into a context which is like a natural language way of writing the premises. "
                "Make conclusion into a question.\n"
                "The context/questions shouldn't be too complicated but shouldn't directly be like "
                "premise/conclusion either. The question must be asked normally without stating things like "
                "\"in this context\" or \"with this information\".\n"
                "premise list is only given for your better understanding.\n"
                "Reply ONLY with a json with two keys 'context' and 'question'"});
}

std::string continue_reasoning(std::string_view prefix) {
    return cat({kContinueMarker,
                " from exactly where it stops, without repeating it. Reply with the continuation only.\n\n", prefix});
}

std::string categorize(std::string_view sentence) {
    return cat({kCategorizeMarker,
                " from a reasoning trace into exactly one category. Reply with the category name only.\n\n"
                "problem_setup: Repeating or rephrasing the problem (initial reading or comprehension).\n"
                "plan_generation: Stating or deciding on a plan of action (often meta-reasoning).\n"
                "fact_retrieval: Recalling facts or problem details (without immediate computation).\n"
                "active_computation: Performing simplifications, deductions, or derivative sentences toward the "
                "answer.\n"
                "result_consolidation: Aggregating intermediate results, summarizing, or preparing the final answer.\n"
                "uncertainty_management: Expressing confusion, knowledge-conflicts, re-evaluating, or proposing "
                "alternative plans.\n"
                "final_answer_emission: Explicitly stating the final boxed answer or earlier chunks that contain the "
                "final answer.\n"
                "self_checking: Verifying previous steps or reconfirmations.\n"
                "thinking: Reflective remarks about the reasoning itself that fit none of the categories above.\n\n"
                "sentence: ",
                sentence});
}

}  // namespace forge::prompts
