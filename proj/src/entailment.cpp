#include "forge/entailment.hpp"

#include <algorithm>
#include <cstdint>
#include <string>

#include "forge/error.hpp"

namespace forge {

namespace {

// Formula flattened to postfix over atom indices so each assignment is a bitmask.
struct Compiled {
    enum class Op : std::uint8_t { push, negate, conj, disj, impl };
    struct Step {
        Op op;
        std::uint8_t atom;
    };
    std::vector<Step> steps;

    bool eval(std::uint32_t bits, std::vector<bool>& stack) const {
        stack.clear();
        for (const Step& s : steps) {
            if (s.op == Op::push) {
                stack.push_back((bits >> s.atom) & 1U);
                continue;
            }
            if (s.op == Op::negate) {
                stack.back() = !stack.back();
                continue;
            }
            bool r = stack.back();
            stack.pop_back();
            bool l = stack.back();
            stack.back() = s.op == Op::conj ? (l && r) : s.op == Op::disj ? (l || r) : (!l || r);
        }
        return stack.back();
    }
};

void compile(const Formula& f, const std::vector<std::string>& atoms, Compiled& out) {
    using Op = Compiled::Op;
    switch (f.kind()) {
        case Formula::Kind::atom: {
            auto idx = std::lower_bound(atoms.begin(), atoms.end(), f.name()) - atoms.begin();
            out.steps.push_back({Op::push, static_cast<std::uint8_t>(idx)});
            return;
        }
        case Formula::Kind::negation:
            compile(f.left(), atoms, out);
            out.steps.push_back({Op::negate, 0});
            return;
        default: break;
    }
    compile(f.left(), atoms, out);
    compile(f.right(), atoms, out);
    Op op = f.kind() == Formula::Kind::conjunction ? Op::conj
            : f.kind() == Formula::Kind::disjunction ? Op::disj
                                                     : Op::impl;
    out.steps.push_back({op, 0});
}

}  // namespace

bool entails(const std::vector<Formula>& premises, const Formula& conclusion) {
    std::vector<Formula> all = premises;
    all.push_back(conclusion);
    const std::vector<std::string> atoms = atoms_of(all);
    if (atoms.size() > kMaxEntailmentAtoms) {
        throw Error(ErrorKind::atom_budget_exceeded,
                    std::to_string(atoms.size()) + " atoms exceed the enumeration bound of " +
                        std::to_string(kMaxEntailmentAtoms));
    }

    std::vector<Compiled> compiled_premises(premises.size());
    for (std::size_t i = 0; i < premises.size(); ++i) compile(premises[i], atoms, compiled_premises[i]);
    Compiled compiled_conclusion;
    compile(conclusion, atoms, compiled_conclusion);

    std::vector<bool> stack;
    const std::uint32_t rows = std::uint32_t{1} << atoms.size();
    for (std::uint32_t bits = 0; bits < rows; ++bits) {
        bool premises_hold = std::all_of(compiled_premises.begin(), compiled_premises.end(),
                                         [&](const Compiled& p) { return p.eval(bits, stack); });
        if (premises_hold && !compiled_conclusion.eval(bits, stack)) return false;
    }
    return true;
}

}  // namespace forge
