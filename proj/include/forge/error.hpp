#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace forge {

enum class ErrorKind {
    missing_atom,
    atom_budget_exceeded,
    non_injective_substitution,
    fresh_atom_collision,
    target_not_found,
    non_fresh_intermediate,
    precondition,
    parse,
    unknown_entity,
    unmapped_atom,
    infeasible_balance,
    schema_without_implication,
    pool_exhausted,
    reformulation_failed,
    exhausted_retries,
    auth_failure,
    malformed_response,
    missing_evidence,
    empty_selection,
    division_by_zero,
    empty_rollout_set,
    config,
    io,
};

std::string_view to_string(ErrorKind kind);

// Domain error; the CLI maps these to exit code 1.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace forge
