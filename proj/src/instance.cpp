#include "forge/instance.hpp"

#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "forge/error.hpp"
#include "forge/random.hpp"

namespace forge {

using ojson = nlohmann::ordered_json;

std::string_view to_string(Validity v) { return v == Validity::valid ? "valid" : "invalid"; }

std::string_view to_string(Alignment a) {
    switch (a) {
        case Alignment::aligned: return "aligned";
        case Alignment::conflicting: return "conflicting";
        case Alignment::gibberish: return "gibberish";
    }
    return "?";
}

Validity parse_validity(std::string_view text) {
    if (text == "valid") return Validity::valid;
    if (text == "invalid") return Validity::invalid;
    throw Error(ErrorKind::parse, "unknown validity '" + std::string(text) + "'");
}

Alignment parse_alignment(std::string_view text) {
    for (auto a : {Alignment::aligned, Alignment::conflicting, Alignment::gibberish}) {
        if (to_string(a) == text) return a;
    }
    throw Error(ErrorKind::parse, "unknown alignment '" + std::string(text) + "'");
}

std::vector<Formula> ProblemInstance::premise_formulas() const {
    std::vector<Formula> out;
    for (const auto& p : premises) out.push_back(p.formula);
    return out;
}

std::vector<std::string> ProblemInstance::premise_texts() const {
    std::vector<std::string> out;
    for (const auto& p : premises) out.push_back(p.text);
    return out;
}

namespace {

std::string lower_first(std::string s) {
    if (!s.empty()) s[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(s[0])));
    return s;
}

const QuantStatement& binding(const StatementMap& bindings, const std::string& atom_id) {
    auto it = bindings.find(atom_id);
    if (it == bindings.end()) throw Error(ErrorKind::unmapped_atom, "'" + atom_id + "'");
    return it->second;
}

std::string clause(const Formula& f, const StatementMap& bindings) {
    switch (f.kind()) {
        case Formula::Kind::atom: return lower_first(render(binding(bindings, f.name())));
        case Formula::Kind::negation:
            if (f.left().is_atom()) return lower_first(render(negate(binding(bindings, f.left().name()))));
            return "it is not the case that " + clause(f.left(), bindings);
        case Formula::Kind::conjunction: return clause(f.left(), bindings) + " and " + clause(f.right(), bindings);
        case Formula::Kind::disjunction:
            return "either " + clause(f.left(), bindings) + " or " + clause(f.right(), bindings);
        case Formula::Kind::implication:
            return "if " + clause(f.left(), bindings) + ", then " + clause(f.right(), bindings);
    }
    return {};
}

ojson binding_json(const QuantStatement& s) {
    return ojson{{"quantifier", to_string(s.quantifier)}, {"subject", s.subject}, {"predicate", s.predicate}};
}

}  // namespace

std::string render_sentence(const Formula& f, const StatementMap& bindings) {
    std::string out = clause(f, bindings);
    if (!out.empty()) out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
    return out + ".";
}

std::string content_id(const ProblemInstance& inst) {
    std::string key;
    key += to_string(inst.schema);
    key += '|';
    for (const auto& [atom_id, s] : inst.bindings) {
        key += atom_id + "=" + std::string(to_string(s.quantifier)) + ":" + s.subject + ":" + s.predicate + ";";
    }
    key += '|';
    for (const auto& p : inst.premises) key += to_prefix(p.formula) + ";";
    key += "|" + to_prefix(inst.conclusion.formula);
    key += "|" + std::string(to_string(inst.validity)) + "|" + std::string(to_string(inst.alignment));
    key += "|" + std::string(to_string(inst.direction)) + "|" + std::to_string(inst.template_index);
    key += "|" + std::to_string(inst.depth) + "|" + std::to_string(inst.seed);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(key)));
    return std::string(to_string(inst.schema)) + "-" + buf;
}

std::string to_json_line(const ProblemInstance& inst) {
    ojson premises = ojson::array(), formulas = ojson::array();
    for (const auto& p : inst.premises) {
        premises.push_back(p.text);
        formulas.push_back(to_prefix(p.formula));
    }
    ojson bindings = ojson::object();
    for (const auto& [atom_id, s] : inst.bindings) bindings[atom_id] = binding_json(s);
    ojson doc{
        {"id", inst.id},
        {"schema", to_string(inst.schema)},
        {"depth", inst.depth},
        {"validity", to_string(inst.validity)},
        {"alignment", to_string(inst.alignment)},
        {"direction", to_string(inst.direction)},
        {"template", inst.template_index},
        {"premises", premises},
        {"conclusion", inst.conclusion.text},
        {"premise_formulas", formulas},
        {"conclusion_formula", to_prefix(inst.conclusion.formula)},
        {"context", inst.context},
        {"question", inst.question},
        {"seed", inst.seed},
        {"bindings", bindings},
        {"conclusion_factual", inst.conclusion_factual},
    };
    return doc.dump();
}

ProblemInstance instance_from_json(std::string_view line) {
    try {
        const ojson doc = ojson::parse(line);
        ProblemInstance inst;
        inst.id = doc.at("id").get<std::string>();
        inst.schema = parse_schema_name(doc.at("schema").get<std::string>());
        inst.depth = doc.at("depth").get<int>();
        inst.validity = parse_validity(doc.at("validity").get<std::string>());
        inst.alignment = parse_alignment(doc.at("alignment").get<std::string>());
        inst.direction = parse_direction(doc.at("direction").get<std::string>());
        inst.template_index = doc.at("template").get<int>();
        const auto& texts = doc.at("premises");
        const auto& formulas = doc.at("premise_formulas");
        if (texts.size() != formulas.size()) {
            throw Error(ErrorKind::parse, "premises and premise_formulas differ in length");
        }
        for (std::size_t i = 0; i < texts.size(); ++i) {
            inst.premises.push_back({parse_prefix(formulas[i].get<std::string>()), texts[i].get<std::string>()});
        }
        inst.conclusion = {parse_prefix(doc.at("conclusion_formula").get<std::string>()),
                           doc.at("conclusion").get<std::string>()};
        inst.context = doc.value("context", std::string{});
        inst.question = doc.value("question", std::string{});
        inst.seed = doc.at("seed").get<std::uint64_t>();
        if (doc.contains("bindings")) {
            for (const auto& [atom_id, b] : doc["bindings"].items()) {
                inst.bindings[atom_id] = {parse_quantifier(b.at("quantifier").get<std::string>()),
                                          b.at("subject").get<std::string>(), b.at("predicate").get<std::string>()};
            }
        }
        inst.conclusion_factual = doc.value("conclusion_factual", false);
        return inst;
    } catch (const ojson::exception& e) {
        throw Error(ErrorKind::parse, std::string("dataset line: ") + e.what());
    }
}

void write_dataset(std::ostream& out, const std::vector<ProblemInstance>& dataset) {
    for (const auto& inst : dataset) out << to_json_line(inst) << '\n';
}

std::vector<ProblemInstance> read_dataset(std::istream& in) {
    std::vector<ProblemInstance> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        out.push_back(instance_from_json(line));
    }
    return out;
}

void save_dataset(const std::string& path, const std::vector<ProblemInstance>& dataset) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::io, "cannot write '" + path + "'");
    write_dataset(out, dataset);
}

std::vector<ProblemInstance> load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot open dataset '" + path + "'");
    return read_dataset(in);
}

}  // namespace forge
