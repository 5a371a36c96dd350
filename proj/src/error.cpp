#include "forge/error.hpp"

namespace forge {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::missing_atom: return "missing-atom";
        case ErrorKind::atom_budget_exceeded: return "atom-budget-exceeded";
        case ErrorKind::non_injective_substitution: return "non-injective-substitution";
        case ErrorKind::fresh_atom_collision: return "fresh-atom-collision";
        case ErrorKind::target_not_found: return "target-not-found";
        case ErrorKind::non_fresh_intermediate: return "non-fresh-intermediate";
        case ErrorKind::precondition: return "precondition";
        case ErrorKind::parse: return "parse";
        case ErrorKind::unknown_entity: return "unknown-entity";
        case ErrorKind::unmapped_atom: return "unmapped-atom";
        case ErrorKind::infeasible_balance: return "infeasible-balance";
        case ErrorKind::schema_without_implication: return "schema-without-implication";
        case ErrorKind::pool_exhausted: return "pool-exhausted";
        case ErrorKind::reformulation_failed: return "reformulation-failed";
        case ErrorKind::exhausted_retries: return "exhausted-retries";
        case ErrorKind::auth_failure: return "auth-failure";
        case ErrorKind::malformed_response: return "malformed-response";
        case ErrorKind::missing_evidence: return "missing-evidence";
        case ErrorKind::empty_selection: return "empty-selection";
        case ErrorKind::division_by_zero: return "division-by-zero";
        case ErrorKind::empty_rollout_set: return "empty-rollout-set";
        case ErrorKind::config: return "config";
        case ErrorKind::io: return "io";
    }
    return "unknown";
}

}  // namespace forge
