#pragma once

#include <cstddef>
#include <vector>

#include "forge/formula.hpp"

namespace forge {

inline constexpr std::size_t kMaxEntailmentAtoms = 20;

/// True iff every assignment satisfying all premises satisfies the conclusion.
///
/// Decided by enumerating all 2^n assignments over the combined atoms, so it
/// throws Error(atom_budget_exceeded) past kMaxEntailmentAtoms. An empty
/// premise list asks whether the conclusion is a tautology.
bool entails(const std::vector<Formula>& premises, const Formula& conclusion);

}  // namespace forge
