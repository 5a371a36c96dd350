#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "forge/harness.hpp"

namespace forge {

/// Conjunction of record predicates. Skipped records never match.
class MetricFilter {
public:
    MetricFilter() = default;

    static MetricFilter schema(SchemaName s);
    static MetricFilter depth(int d);
    static MetricFilter validity(Validity v);
    static MetricFilter alignment(Alignment a);
    static MetricFilter strategy(std::string name);
    static MetricFilter where(std::function<bool(const EvalRecord&)> pred);

    bool matches(const EvalRecord& r) const;
    friend MetricFilter operator&&(MetricFilter a, const MetricFilter& b);

private:
    std::vector<std::function<bool(const EvalRecord&)>> preds_;
};

struct AccuracyStats {
    std::size_t total = 0;
    std::size_t correct = 0;
    std::size_t unparseable = 0;  // counted as incorrect
    double accuracy() const { return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0; }
};

// Throws Error(empty_selection) when nothing matches.
AccuracyStats accuracy_stats(const std::vector<EvalRecord>& records, const MetricFilter& filter = {});
double accuracy(const std::vector<EvalRecord>& records, const MetricFilter& filter = {});

struct GapReport {
    bool valid_only = true;
    AccuracyStats aligned;
    AccuracyStats conflicting;
    double aligned_accuracy() const { return aligned.accuracy(); }
    double conflicting_accuracy() const { return conflicting.accuracy(); }
    double gap() const { return aligned_accuracy() - conflicting_accuracy(); }
};

/// Aligned minus conflicting accuracy, by default over valid instances only.
/// Throws Error(empty_selection) when either cell is empty.
GapReport gap(const std::vector<EvalRecord>& records, bool valid_only = true, const MetricFilter& filter = {});

struct SpdReport {
    std::size_t believable = 0, believable_yes = 0;
    std::size_t unbelievable = 0, unbelievable_yes = 0;
    std::size_t unparseable = 0;  // excluded from both cells
    double spd = 0.0;             // percentage points
};

/// (P(Yes | aligned) - P(Yes | conflicting)) x 100 over Yes/No verdicts.
/// Validity labels are not consulted. Throws Error(division_by_zero) on an empty cell.
SpdReport spd(const std::vector<EvalRecord>& records, const MetricFilter& filter = {});

enum class Axis { schema, depth, negation_group };
std::string_view to_string(Axis a);
Axis parse_axis(std::string_view text);

// "with-negation" when any form of the schema contains a negation.
std::string negation_group(SchemaName s);

struct BreakdownRow {
    std::string bucket;
    AccuracyStats stats;
    std::optional<GapReport> gap;  // valid-only; absent when a cell is empty
};

std::vector<BreakdownRow> breakdown(const std::vector<EvalRecord>& records, Axis axis, const MetricFilter& filter = {});

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation; 0 for a single run
    std::size_t n = 0;
};
MeanStd mean_std(const std::vector<double>& values);

/// One strategy summarised over one or more runs (record files).
struct StrategySummary {
    std::string strategy;
    std::size_t records = 0;  // per run, summed
    std::size_t skipped = 0;
    MeanStd accuracy;
    MeanStd unparseable_rate;
    MeanStd aligned_accuracy;  // valid-only cells
    MeanStd conflicting_accuracy;
    MeanStd gap;
    std::optional<MeanStd> spd;
    std::string spd_note;  // why spd is absent
};

std::vector<StrategySummary> summarize(const std::vector<std::vector<EvalRecord>>& runs);

// "strategy  aligned  conflicting  gap" table for a terminal.
std::string format_gap_table(const std::vector<StrategySummary>& summaries);

/// Writes summary.json, gap.csv and breakdown_{schema,depth,negation_group}.csv into `dir`.
void write_report(const std::string& dir, const std::vector<std::vector<EvalRecord>>& runs);

}  // namespace forge
