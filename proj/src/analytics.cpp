#include "forge/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "forge/error.hpp"

namespace forge {

MetricFilter MetricFilter::schema(SchemaName s) {
    return where([s](const EvalRecord& r) { return r.schema == s; });
}
MetricFilter MetricFilter::depth(int d) {
    return where([d](const EvalRecord& r) { return r.depth == d; });
}
MetricFilter MetricFilter::validity(Validity v) {
    return where([v](const EvalRecord& r) { return r.validity == v; });
}
MetricFilter MetricFilter::alignment(Alignment a) {
    return where([a](const EvalRecord& r) { return r.alignment == a; });
}
MetricFilter MetricFilter::strategy(std::string name) {
    return where([name = std::move(name)](const EvalRecord& r) { return r.strategy == name; });
}
MetricFilter MetricFilter::where(std::function<bool(const EvalRecord&)> pred) {
    MetricFilter f;
    f.preds_.push_back(std::move(pred));
    return f;
}

bool MetricFilter::matches(const EvalRecord& r) const {
    if (r.skipped) return false;
    return std::all_of(preds_.begin(), preds_.end(), [&](const auto& p) { return p(r); });
}

MetricFilter operator&&(MetricFilter a, const MetricFilter& b) {
    a.preds_.insert(a.preds_.end(), b.preds_.begin(), b.preds_.end());
    return a;
}

AccuracyStats accuracy_stats(const std::vector<EvalRecord>& records, const MetricFilter& filter) {
    AccuracyStats s;
    for (const auto& r : records) {
        if (!filter.matches(r)) continue;
        ++s.total;
        s.correct += r.correct;
        s.unparseable += r.verdict == Answer::unparseable;
    }
    if (s.total == 0) throw Error(ErrorKind::empty_selection, "no records match the filter");
    return s;
}

double accuracy(const std::vector<EvalRecord>& records, const MetricFilter& filter) {
    return accuracy_stats(records, filter).accuracy();
}

GapReport gap(const std::vector<EvalRecord>& records, bool valid_only, const MetricFilter& filter) {
    MetricFilter base = filter;
    if (valid_only) base = std::move(base) && MetricFilter::validity(Validity::valid);
    GapReport g;
    g.valid_only = valid_only;
    try {
        g.aligned = accuracy_stats(records, base && MetricFilter::alignment(Alignment::aligned));
        g.conflicting = accuracy_stats(records, base && MetricFilter::alignment(Alignment::conflicting));
    } catch (const Error&) {
        throw Error(ErrorKind::empty_selection, "gap needs both aligned and conflicting records");
    }
    return g;
}

SpdReport spd(const std::vector<EvalRecord>& records, const MetricFilter& filter) {
    SpdReport s;
    for (const auto& r : records) {
        if (!filter.matches(r) || r.alignment == Alignment::gibberish) continue;
        if (r.verdict == Answer::unparseable) {
            ++s.unparseable;
            continue;
        }
        const bool yes = r.verdict == Answer::yes;
        if (r.alignment == Alignment::aligned) {
            ++s.believable;
            s.believable_yes += yes;
        } else {
            ++s.unbelievable;
            s.unbelievable_yes += yes;
        }
    }
    if (s.believable == 0 || s.unbelievable == 0) {
        throw Error(ErrorKind::division_by_zero, "SPD needs Yes/No verdicts on both aligned and conflicting records");
    }
    const double p_b = static_cast<double>(s.believable_yes) / static_cast<double>(s.believable);
    const double p_u = static_cast<double>(s.unbelievable_yes) / static_cast<double>(s.unbelievable);
    s.spd = (p_b - p_u) * 100.0;
    return s;
}

std::string_view to_string(Axis a) {
    switch (a) {
        case Axis::schema: return "schema";
        case Axis::depth: return "depth";
        case Axis::negation_group: return "negation_group";
    }
    return "?";
}

Axis parse_axis(std::string_view text) {
    for (auto a : {Axis::schema, Axis::depth, Axis::negation_group}) {
        if (to_string(a) == text) return a;
    }
    throw Error(ErrorKind::config, "unknown breakdown axis '" + std::string(text) + "'");
}

std::string negation_group(SchemaName s) {
    return schema(s).has_negation() ? "with-negation" : "without-negation";
}

std::vector<BreakdownRow> breakdown(const std::vector<EvalRecord>& records, Axis axis, const MetricFilter& filter) {
    // Buckets in a natural order: catalog order, numeric depth, group name.
    std::vector<std::pair<std::string, MetricFilter>> buckets;
    if (axis == Axis::schema) {
        for (auto s : kAllSchemas) buckets.emplace_back(std::string(to_string(s)), MetricFilter::schema(s));
    } else if (axis == Axis::depth) {
        std::set<int> depths;
        for (const auto& r : records) {
            if (filter.matches(r)) depths.insert(r.depth);
        }
        for (int d : depths) buckets.emplace_back(std::to_string(d), MetricFilter::depth(d));
    } else {
        for (std::string group : {"without-negation", "with-negation"}) {
            buckets.emplace_back(group, MetricFilter::where([group](const EvalRecord& r) {
                                     return negation_group(r.schema) == group;
                                 }));
        }
    }

    std::vector<BreakdownRow> out;
    for (auto& [name, f] : buckets) {
        const MetricFilter both = filter && f;
        BreakdownRow row{name, {}, std::nullopt};
        try {
            row.stats = accuracy_stats(records, both);
        } catch (const Error&) {
            continue;
        }
        try {
            row.gap = gap(records, true, both);
        } catch (const Error&) {
        }
        out.push_back(std::move(row));
    }
    return out;
}

MeanStd mean_std(const std::vector<double>& values) {
    MeanStd m;
    m.n = values.size();
    if (values.empty()) return m;
    double sum = 0;
    for (double v : values) sum += v;
    m.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0;
        for (double v : values) ss += (v - m.mean) * (v - m.mean);
        m.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return m;
}

std::vector<StrategySummary> summarize(const std::vector<std::vector<EvalRecord>>& runs) {
    std::set<std::string> strategies;
    for (const auto& run : runs) {
        for (const auto& r : run) strategies.insert(r.strategy);
    }
    std::vector<StrategySummary> out;
    for (const auto& name : strategies) {
        StrategySummary s;
        s.strategy = name;
        const auto by = MetricFilter::strategy(name);
        std::vector<double> acc, unp, al, co, gp, sp;
        for (const auto& run : runs) {
            for (const auto& r : run) {
                if (r.strategy == name) r.skipped ? ++s.skipped : ++s.records;
            }
            AccuracyStats st;
            try {
                st = accuracy_stats(run, by);
            } catch (const Error&) {
                continue;  // strategy absent from this run
            }
            acc.push_back(st.accuracy());
            unp.push_back(static_cast<double>(st.unparseable) / static_cast<double>(st.total));
            try {
                auto g = gap(run, true, by);
                al.push_back(g.aligned_accuracy());
                co.push_back(g.conflicting_accuracy());
                gp.push_back(g.gap());
            } catch (const Error&) {
            }
            try {
                sp.push_back(spd(run, by).spd);
            } catch (const Error& e) {
                s.spd_note = e.what();
            }
        }
        s.accuracy = mean_std(acc);
        s.unparseable_rate = mean_std(unp);
        s.aligned_accuracy = mean_std(al);
        s.conflicting_accuracy = mean_std(co);
        s.gap = mean_std(gp);
        if (!sp.empty() && s.spd_note.empty()) s.spd = mean_std(sp);
        out.push_back(std::move(s));
    }
    return out;
}

namespace {

std::string fixed(double v, int digits = 3) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string pm(const MeanStd& m, int digits = 3) {
    if (m.n == 0) return "n/a";
    return fixed(m.mean, digits) + " +/- " + fixed(m.std, digits);
}

nlohmann::ordered_json to_json(const MeanStd& m) {
    if (m.n == 0) return nullptr;
    return {{"mean", m.mean}, {"std", m.std}, {"runs", m.n}};
}

}  // namespace

std::string format_gap_table(const std::vector<StrategySummary>& summaries) {
    std::ostringstream out;
    char line[256];
    std::snprintf(line, sizeof line, "%-20s %-18s %-18s %-18s %-18s %s\n", "strategy", "accuracy", "aligned",
                  "conflicting", "gap", "spd");
    out << line;
    for (const auto& s : summaries) {
        std::snprintf(line, sizeof line, "%-20s %-18s %-18s %-18s %-18s %s\n", s.strategy.c_str(),
                      pm(s.accuracy).c_str(), pm(s.aligned_accuracy).c_str(), pm(s.conflicting_accuracy).c_str(),
                      pm(s.gap).c_str(), s.spd ? pm(*s.spd, 1).c_str() : "n/a");
        out << line;
    }
    out << "(aligned, conflicting and gap use valid instances only)\n";
    return out.str();
}

void write_report(const std::string& dir, const std::vector<std::vector<EvalRecord>>& runs) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    auto open = [&](const std::string& name) {
        std::ofstream f(fs::path(dir) / name, std::ios::trunc);
        if (!f) throw Error(ErrorKind::io, "cannot write '" + (fs::path(dir) / name).string() + "'");
        return f;
    };
    const auto summaries = summarize(runs);

    {
        nlohmann::ordered_json j;
        j["runs"] = runs.size();
        j["accuracy_contract"] = "unparseable verdicts count as incorrect; skipped records are excluded";
        j["spd_contract"] = "Yes/No verdicts only; unparseable and gibberish records are excluded; validity ignored";
        j["gap_contract"] = "aligned minus conflicting accuracy over valid instances";
        auto& all = j["strategies"] = nlohmann::ordered_json::object();
        for (const auto& s : summaries) {
            auto& e = all[s.strategy];
            e["records"] = s.records;
            e["skipped"] = s.skipped;
            e["accuracy"] = to_json(s.accuracy);
            e["unparseable_rate"] = to_json(s.unparseable_rate);
            e["aligned_accuracy"] = to_json(s.aligned_accuracy);
            e["conflicting_accuracy"] = to_json(s.conflicting_accuracy);
            e["gap"] = to_json(s.gap);
            e["spd"] = s.spd ? to_json(*s.spd) : nlohmann::ordered_json(nullptr);
            if (!s.spd_note.empty()) e["spd_note"] = s.spd_note;
        }
        open("summary.json") << j.dump(2) << '\n';
    }
    {
        auto f = open("gap.csv");
        f << "# valid instances only; mean and sample std over runs\n";
        f << "strategy,aligned_mean,aligned_std,conflicting_mean,conflicting_std,gap_mean,gap_std,runs\n";
        for (const auto& s : summaries) {
            if (s.gap.n == 0) continue;
            f << s.strategy << ',' << fixed(s.aligned_accuracy.mean, 6) << ',' << fixed(s.aligned_accuracy.std, 6)
              << ',' << fixed(s.conflicting_accuracy.mean, 6) << ',' << fixed(s.conflicting_accuracy.std, 6) << ','
              << fixed(s.gap.mean, 6) << ',' << fixed(s.gap.std, 6) << ',' << s.gap.n << '\n';
        }
    }
    // Breakdowns pool all runs; each run contributes its records.
    std::vector<EvalRecord> pooled;
    for (const auto& run : runs) pooled.insert(pooled.end(), run.begin(), run.end());
    for (auto axis : {Axis::schema, Axis::depth, Axis::negation_group}) {
        auto f = open("breakdown_" + std::string(to_string(axis)) + ".csv");
        f << "# accuracy counts unparseable as incorrect; gap columns use valid instances only\n";
        f << "strategy," << to_string(axis) << ",n,correct,unparseable,accuracy,aligned_accuracy,conflicting_accuracy,gap\n";
        for (const auto& s : summaries) {
            for (const auto& row : breakdown(pooled, axis, MetricFilter::strategy(s.strategy))) {
                f << s.strategy << ',' << row.bucket << ',' << row.stats.total << ',' << row.stats.correct << ','
                  << row.stats.unparseable << ',' << fixed(row.stats.accuracy(), 6) << ',';
                if (row.gap) {
                    f << fixed(row.gap->aligned_accuracy(), 6) << ',' << fixed(row.gap->conflicting_accuracy(), 6)
                      << ',' << fixed(row.gap->gap(), 6);
                } else {
                    f << ",,";
                }
                f << '\n';
            }
        }
    }
}

}  // namespace forge
