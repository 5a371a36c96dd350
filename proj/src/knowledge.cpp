#include "forge/knowledge.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <sstream>

#include "forge/error.hpp"

namespace forge {

std::string_view to_string(Quantifier q) {
    switch (q) {
        case Quantifier::all: return "all";
        case Quantifier::some: return "some";
        case Quantifier::no: return "no";
        case Quantifier::some_not: return "some_not";
    }
    return "?";
}

Quantifier parse_quantifier(std::string_view text) {
    for (Quantifier q : {Quantifier::all, Quantifier::some, Quantifier::no, Quantifier::some_not}) {
        if (to_string(q) == text) return q;
    }
    throw Error(ErrorKind::parse, "unknown quantifier '" + std::string(text) + "'");
}

std::string_view to_string(Direction d) { return d == Direction::forward ? "forward" : "inverted"; }

Direction parse_direction(std::string_view text) {
    if (text == "forward") return Direction::forward;
    if (text == "inverted") return Direction::inverted;
    throw Error(ErrorKind::parse, "unknown direction '" + std::string(text) + "'");
}

QuantStatement negate(const QuantStatement& s) {
    QuantStatement out = s;
    switch (s.quantifier) {
        case Quantifier::all: out.quantifier = Quantifier::some_not; break;
        case Quantifier::some_not: out.quantifier = Quantifier::all; break;
        case Quantifier::no: out.quantifier = Quantifier::some; break;
        case Quantifier::some: out.quantifier = Quantifier::no; break;
    }
    return out;
}

SentencePair make_sentence_pair(int template_index, std::string subject, std::string predicate) {
    static constexpr Quantifier kPositive[] = {Quantifier::all, Quantifier::no, Quantifier::some, Quantifier::some_not};
    if (template_index < 1 || template_index > 4) {
        throw Error(ErrorKind::precondition, "template index must be in 1..4");
    }
    if (subject == predicate) throw Error(ErrorKind::precondition, "subject and predicate must differ");
    QuantStatement positive{kPositive[template_index - 1], std::move(subject), std::move(predicate)};
    QuantStatement negative = negate(positive);
    return {std::move(positive), std::move(negative), template_index};
}

void SetModel::add(const std::string& entity, std::set<int> witnesses) {
    if (witnesses.empty()) throw Error(ErrorKind::precondition, "entity '" + entity + "' has an empty witness set");
    max_element_ = std::max(max_element_, *witnesses.rbegin());
    witnesses_[entity] = std::move(witnesses);
}

void SetModel::merge_disjoint(const SetModel& other) {
    const int offset = max_element_;
    for (const auto& [entity, set] : other.witnesses_) {
        if (contains(entity)) throw Error(ErrorKind::precondition, "entity '" + entity + "' is already modelled");
        std::set<int> shifted;
        for (int e : set) shifted.insert(e + offset);
        add(entity, std::move(shifted));
    }
}

const std::set<int>& SetModel::witness(std::string_view entity) const {
    auto it = witnesses_.find(entity);
    if (it == witnesses_.end()) throw Error(ErrorKind::unknown_entity, "'" + std::string(entity) + "'");
    return it->second;
}

SetModel build_model(const EntityTriple& triple, Direction direction) {
    SetModel m;
    const std::string& smallest = direction == Direction::forward ? triple.a : triple.b;
    const std::string& middle = direction == Direction::forward ? triple.b : triple.a;
    m.add(smallest, {1});
    m.add(middle, {1, 2});
    m.add(triple.c, {1, 2, 3});
    return m;
}

SetModel factual_model(const std::vector<EntityTriple>& triples) {
    SetModel m;
    for (const auto& t : triples) m.merge_disjoint(build_model(t, Direction::forward));
    return m;
}

bool truth_of(const QuantStatement& s, const SetModel& m) {
    const std::set<int>& subject = m.witness(s.subject);
    const std::set<int>& predicate = m.witness(s.predicate);
    const bool subset = std::includes(predicate.begin(), predicate.end(), subject.begin(), subject.end());
    const bool overlap = std::any_of(subject.begin(), subject.end(), [&](int e) { return predicate.count(e) > 0; });
    switch (s.quantifier) {
        case Quantifier::all: return subset;
        case Quantifier::some: return overlap;
        case Quantifier::no: return !overlap;
        case Quantifier::some_not: return !subset;
    }
    return false;
}

bool factual_truth(const Formula& f, const StatementMap& bindings, const SetModel& m) {
    Assignment values;
    for (const auto& a : atoms_of(f)) {
        auto it = bindings.find(a);
        if (it == bindings.end()) throw Error(ErrorKind::unmapped_atom, "'" + a + "'");
        values[a] = truth_of(it->second, m);
    }
    return eval_formula(f, values);
}

std::string surface_form(std::string_view entity) {
    std::string out(entity);
    std::replace(out.begin(), out.end(), '_', ' ');
    return out;
}

std::string render(const QuantStatement& s) {
    const std::string subject = surface_form(s.subject);
    const std::string predicate = surface_form(s.predicate);
    switch (s.quantifier) {
        case Quantifier::all: return "All " + subject + " are " + predicate;
        case Quantifier::some: return "Some " + subject + " are " + predicate;
        case Quantifier::no: return "No " + subject + " are " + predicate;
        case Quantifier::some_not: return "Some " + subject + " are not " + predicate;
    }
    return {};
}

const std::vector<EntityTriple>& default_triples() {
    static const std::vector<EntityTriple> triples = {
        {"siameses", "cats", "felines"},
        {"labradors", "dogs", "canines"},
        {"sedans", "cars", "vehicles"},
        {"humans", "animals", "mortals"},
        {"cruisers", "warships", "watercrafts"},
        {"chickadees", "birds", "winged_animals"},
        {"boeings", "planes", "aircrafts"},
        {"pines", "evergreens", "trees"},
        {"anguses", "cows", "mammals"},
        {"daisies", "flowers", "plants"},
    };
    return triples;
}

std::vector<EntityTriple> read_triples(std::istream& in) {
    std::vector<EntityTriple> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        std::vector<std::string> cols;
        std::stringstream ss(line);
        for (std::string col; std::getline(ss, col, '\t');) cols.push_back(col);
        if (cols.size() != 3 || cols[0].empty() || cols[1].empty() || cols[2].empty()) {
            throw Error(ErrorKind::parse, "triple catalog line " + std::to_string(line_no) + ": expected 3 tab-separated names");
        }
        if (cols[0] == cols[1] || cols[1] == cols[2] || cols[0] == cols[2]) {
            throw Error(ErrorKind::parse, "triple catalog line " + std::to_string(line_no) + ": names must be distinct");
        }
        out.push_back({cols[0], cols[1], cols[2]});
    }
    return out;
}

std::vector<EntityTriple> load_triples(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open triple catalog '" + path + "'");
    return read_triples(in);
}

void write_triples(std::ostream& out, const std::vector<EntityTriple>& triples) {
    for (const auto& t : triples) out << t.a << '\t' << t.b << '\t' << t.c << '\n';
}

}  // namespace forge
