#include "forge/formula.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "forge/error.hpp"

namespace forge {

Formula Formula::atom(std::string name) {
    if (!is_valid_atom_id(name)) {
        throw Error(ErrorKind::precondition, "invalid atom id '" + name + "'");
    }
    return Formula(std::make_shared<const Node>(Node{Kind::atom, std::move(name), {}}));
}

Formula Formula::negation(Formula child) {
    return Formula(std::make_shared<const Node>(Node{Kind::negation, {}, {std::move(child)}}));
}

Formula Formula::conjunction(Formula left, Formula right) {
    return Formula(std::make_shared<const Node>(Node{Kind::conjunction, {}, {std::move(left), std::move(right)}}));
}

Formula Formula::disjunction(Formula left, Formula right) {
    return Formula(std::make_shared<const Node>(Node{Kind::disjunction, {}, {std::move(left), std::move(right)}}));
}

Formula Formula::implication(Formula antecedent, Formula consequent) {
    return Formula(
        std::make_shared<const Node>(Node{Kind::implication, {}, {std::move(antecedent), std::move(consequent)}}));
}

bool operator==(const Formula& a, const Formula& b) {
    if (a.node_ == b.node_) return true;
    if (a.kind() != b.kind()) return false;
    if (a.is_atom()) return a.name() == b.name();
    return a.node_->children == b.node_->children;
}

bool eval_formula(const Formula& f, const Assignment& a) {
    switch (f.kind()) {
        case Formula::Kind::atom: {
            auto it = a.find(f.name());
            if (it == a.end()) throw Error(ErrorKind::missing_atom, "no value for atom '" + f.name() + "'");
            return it->second;
        }
        case Formula::Kind::negation: return !eval_formula(f.left(), a);
        case Formula::Kind::conjunction: return eval_formula(f.left(), a) && eval_formula(f.right(), a);
        case Formula::Kind::disjunction: return eval_formula(f.left(), a) || eval_formula(f.right(), a);
        case Formula::Kind::implication: return !eval_formula(f.left(), a) || eval_formula(f.right(), a);
    }
    return false;
}

namespace {

void collect_atoms(const Formula& f, std::set<std::string>& out) {
    if (f.is_atom()) {
        out.insert(f.name());
        return;
    }
    collect_atoms(f.left(), out);
    if (f.kind() != Formula::Kind::negation) collect_atoms(f.right(), out);
}

}  // namespace

std::vector<std::string> atoms_of(const Formula& f) {
    std::set<std::string> out;
    collect_atoms(f, out);
    return {out.begin(), out.end()};
}

std::vector<std::string> atoms_of(const std::vector<Formula>& fs) {
    std::set<std::string> out;
    for (const auto& f : fs) collect_atoms(f, out);
    return {out.begin(), out.end()};
}

bool contains_negation(const Formula& f) {
    switch (f.kind()) {
        case Formula::Kind::atom: return false;
        case Formula::Kind::negation: return true;
        default: return contains_negation(f.left()) || contains_negation(f.right());
    }
}

Formula rename_atoms(const Formula& f, const std::map<std::string, std::string, std::less<>>& mapping) {
    switch (f.kind()) {
        case Formula::Kind::atom: {
            auto it = mapping.find(f.name());
            return it == mapping.end() ? f : Formula::atom(it->second);
        }
        case Formula::Kind::negation: return Formula::negation(rename_atoms(f.left(), mapping));
        case Formula::Kind::conjunction:
            return Formula::conjunction(rename_atoms(f.left(), mapping), rename_atoms(f.right(), mapping));
        case Formula::Kind::disjunction:
            return Formula::disjunction(rename_atoms(f.left(), mapping), rename_atoms(f.right(), mapping));
        case Formula::Kind::implication:
            return Formula::implication(rename_atoms(f.left(), mapping), rename_atoms(f.right(), mapping));
    }
    return f;
}

namespace {

constexpr std::string_view kNot = "not";
constexpr std::string_view kAnd = "and";
constexpr std::string_view kOr = "or";
constexpr std::string_view kImplies = "->";

void print(const Formula& f, std::string& out) {
    auto binary = [&](std::string_view op) {
        out += '(';
        out += op;
        out += ' ';
        print(f.left(), out);
        out += ' ';
        print(f.right(), out);
        out += ')';
    };
    switch (f.kind()) {
        case Formula::Kind::atom: out += f.name(); break;
        case Formula::Kind::negation:
            out += "(not ";
            print(f.left(), out);
            out += ')';
            break;
        case Formula::Kind::conjunction: binary(kAnd); break;
        case Formula::Kind::disjunction: binary(kOr); break;
        case Formula::Kind::implication: binary(kImplies); break;
    }
}

bool is_atom_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '\'';
}

class PrefixParser {
public:
    explicit PrefixParser(std::string_view text) : text_(text) {}

    Formula parse_all() {
        Formula f = parse();
        skip_space();
        if (pos_ != text_.size()) fail("trailing input");
        return f;
    }

private:
    Formula parse() {
        skip_space();
        if (pos_ >= text_.size()) fail("unexpected end of input");
        if (text_[pos_] != '(') {
            std::string_view tok = token();
            if (!is_valid_atom_id(tok)) fail("invalid atom '" + std::string(tok) + "'");
            return Formula::atom(std::string(tok));
        }
        ++pos_;
        skip_space();
        std::string_view op = token();
        Formula result = [&] {
            if (op == kNot) return Formula::negation(parse());
            if (op == kAnd || op == kOr || op == kImplies) {
                Formula l = parse();
                Formula r = parse();
                if (op == kAnd) return Formula::conjunction(l, r);
                if (op == kOr) return Formula::disjunction(l, r);
                return Formula::implication(l, r);
            }
            fail("unknown operator '" + std::string(op) + "'");
        }();
        skip_space();
        if (pos_ >= text_.size() || text_[pos_] != ')') fail("expected ')'");
        ++pos_;
        return result;
    }

    std::string_view token() {
        std::size_t start = pos_;
        if (text_.substr(pos_, 2) == kImplies) {
            pos_ += 2;
            return kImplies;
        }
        while (pos_ < text_.size() && is_atom_char(text_[pos_])) ++pos_;
        if (start == pos_) fail("expected token");
        return text_.substr(start, pos_ - start);
    }

    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw Error(ErrorKind::parse, msg + " at offset " + std::to_string(pos_) + " in '" + std::string(text_) + "'");
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string to_prefix(const Formula& f) {
    std::string out;
    print(f, out);
    return out;
}

Formula parse_prefix(std::string_view text) { return PrefixParser(text).parse_all(); }

bool is_valid_atom_id(std::string_view id) {
    if (id.empty() || id == kNot || id == kAnd || id == kOr) return false;
    return std::all_of(id.begin(), id.end(), is_atom_char);
}

}  // namespace forge
