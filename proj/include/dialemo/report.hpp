#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dialemo/error.hpp"
#include "dialemo/metrics.hpp"

namespace dialemo {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    bool operator==(const Table&) const = default;
};

enum class TableFormat { markdown, csv, tsv };

TableFormat table_format_from_string(const std::string& token);

// Per-fold scores (F1 at 3 dp, BLEU at 4 dp) plus an Average row.
Table fold_table(const std::vector<std::pair<std::string, MetricReport>>& reports);

// One row per label with Weighted F1 / BLEU / Total columns, no average.
Table comparison_table(const std::vector<std::pair<std::string, MetricReport>>& rows);

// Deterministic serialization; csv quotes per RFC 4180.
std::string emit(const Table& table, TableFormat format);

struct RunMetadata {
    std::string run_id;
    std::string description;
    std::map<std::string, std::string> hyperparameters;
    // Caller-provided ISO 8601 string; left empty by default so identical
    // runs write identical bytes.
    std::string created_at;
};

// Bundle layout: <dir>/report.json plus <dir>/tables/{folds,comparison}.{md,csv}.
void write_report_bundle(const std::string& dir,
                         const std::vector<std::pair<std::string, MetricReport>>& reports,
                         const RunMetadata& meta);

} // namespace dialemo
