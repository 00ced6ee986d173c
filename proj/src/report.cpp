#include "dialemo/report.hpp"

#include <filesystem>
#include <fstream>

#include "jsonl_util.hpp"

namespace dialemo {

namespace {

void check_rows(const std::vector<std::pair<std::string, MetricReport>>& rows,
                bool forbid_empty_label) {
    if (rows.empty()) throw DataError("cannot build a table from an empty report list");
    if (forbid_empty_label) {
        for (const auto& [label, report] : rows) {
            if (label.empty()) throw DataError("table row has an empty label");
        }
    }
}

std::string csv_cell(const std::string& cell) {
    if (cell.find_first_of(",\"\r\n") == std::string::npos) return cell;
    std::string quoted = "\"";
    for (char c : cell) {
        if (c == '"') quoted += "\"\"";
        else quoted += c;
    }
    quoted += '"';
    return quoted;
}

std::string md_cell(const std::string& cell) {
    std::string out;
    for (char c : cell) {
        if (c == '|') out += "\\|";
        else out += c;
    }
    return out;
}

std::string join_row(const std::vector<std::string>& cells, TableFormat format) {
    std::string line;
    switch (format) {
        case TableFormat::markdown:
            line = "|";
            for (const auto& c : cells) line += " " + md_cell(c) + " |";
            break;
        case TableFormat::csv:
            for (std::size_t i = 0; i < cells.size(); ++i) {
                if (i) line += ',';
                line += csv_cell(cells[i]);
            }
            break;
        case TableFormat::tsv:
            for (std::size_t i = 0; i < cells.size(); ++i) {
                if (i) line += '\t';
                line += cells[i];
            }
            break;
    }
    return line;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw DataError("i/o failure while writing '" + path.string() + "'");
}

} // namespace

TableFormat table_format_from_string(const std::string& token) {
    if (token == "markdown" || token == "md") return TableFormat::markdown;
    if (token == "csv") return TableFormat::csv;
    if (token == "tsv") return TableFormat::tsv;
    throw DataError("unsupported table format '" + token + "' (expected markdown, csv or tsv)");
}

Table fold_table(const std::vector<std::pair<std::string, MetricReport>>& reports) {
    check_rows(reports, false);
    Table t;
    t.header = {"label", "Weighted F1", "BLEU"};
    std::vector<std::pair<double, double>> raw;
    for (const auto& [label, report] : reports) {
        t.rows.push_back({label, format_fixed(report.weighted_f1, 3), format_fixed(report.bleu, 4)});
        raw.push_back({report.weighted_f1, report.bleu});
    }
    auto [mean_f1, mean_bleu] = mean_scores(raw);
    t.rows.push_back({"Average", format_fixed(mean_f1, 3), format_fixed(mean_bleu, 4)});
    return t;
}

Table comparison_table(const std::vector<std::pair<std::string, MetricReport>>& rows) {
    check_rows(rows, true);
    Table t;
    t.header = {"label", "Weighted F1", "BLEU", "Total"};
    for (const auto& [label, report] : rows) {
        t.rows.push_back({label, format_fixed(report.weighted_f1, 3), format_fixed(report.bleu, 4),
                          format_fixed(report.total, 2)});
    }
    return t;
}

std::string emit(const Table& table, TableFormat format) {
    if (table.header.empty()) throw DataError("cannot emit an empty table");
    std::string out = join_row(table.header, format) + "\n";
    if (format == TableFormat::markdown) {
        std::string sep = "|";
        for (std::size_t i = 0; i < table.header.size(); ++i) sep += " --- |";
        out += sep + "\n";
    }
    for (const auto& row : table.rows) out += join_row(row, format) + "\n";
    return out;
}

void write_report_bundle(const std::string& dir,
                         const std::vector<std::pair<std::string, MetricReport>>& reports,
                         const RunMetadata& meta) {
    check_rows(reports, true);
    namespace fs = std::filesystem;
    fs::path root(dir);
    std::error_code ec;
    fs::create_directories(root / "tables", ec);
    if (ec) throw DataError("cannot create report directory '" + dir + "': " + ec.message());

    nlohmann::json j;
    j["metadata"] = {
        {"run_id", meta.run_id},
        {"description", meta.description},
        {"hyperparameters", meta.hyperparameters},
        {"created_at", meta.created_at},
    };
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& [label, report] : reports) {
        nlohmann::json entry = report_to_json(report);
        entry["label"] = label;
        entries.push_back(std::move(entry));
    }
    j["reports"] = std::move(entries);
    write_text(root / "report.json", j.dump(2) + "\n");

    auto folds = fold_table(reports);
    auto comparison = comparison_table(reports);
    write_text(root / "tables" / "folds.md", emit(folds, TableFormat::markdown));
    write_text(root / "tables" / "folds.csv", emit(folds, TableFormat::csv));
    write_text(root / "tables" / "comparison.md", emit(comparison, TableFormat::markdown));
    write_text(root / "tables" / "comparison.csv", emit(comparison, TableFormat::csv));
}

} // namespace dialemo
