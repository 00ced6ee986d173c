#include "doctest.h"

#include <filesystem>

#include "dialemo/report.hpp"

#include "test_util.hpp"

using namespace dialemo;

namespace {

MetricReport scores(double f1, double bleu) {
    MetricReport r;
    r.weighted_f1 = f1;
    r.bleu = bleu;
    r.total = total_score(f1, bleu);
    r.n_records = 1;
    return r;
}

// minimal RFC-4180 reader used to check the round-trip property
std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    cell += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cell += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            row.push_back(cell);
            cell.clear();
        } else if (c == '\n') {
            row.push_back(cell);
            cell.clear();
            rows.push_back(row);
            row.clear();
        } else {
            cell += c;
        }
    }
    if (!cell.empty() || !row.empty()) {
        row.push_back(cell);
        rows.push_back(row);
    }
    return rows;
}

} // namespace

TEST_CASE("fold_table reproduces the published Average row") {
    std::vector<std::pair<std::string, MetricReport>> folds = {
        {"Fold 1", scores(51.058, 0.2416)}, {"Fold 2", scores(51.536, 0.2394)},
        {"Fold 3", scores(51.869, 0.2390)}, {"Fold 4", scores(51.942, 0.2429)},
        {"Fold 5", scores(52.368, 0.2402)},
    };
    auto table = fold_table(folds);
    CHECK(table.header == std::vector<std::string>{"label", "Weighted F1", "BLEU"});
    REQUIRE(table.rows.size() == 6);
    CHECK(table.rows[0] == std::vector<std::string>{"Fold 1", "51.058", "0.2416"});
    CHECK(table.rows[5] == std::vector<std::string>{"Average", "51.755", "0.2406"});

    SUBCASE("single report averages to itself") {
        auto single = fold_table({{"Fold 1", scores(51.058, 0.2416)}});
        REQUIRE(single.rows.size() == 2);
        CHECK(single.rows[1] == std::vector<std::string>{"Average", "51.058", "0.2416"});
    }
    SUBCASE("equal rows average to either") {
        auto twin = fold_table({{"a", scores(50.0, 0.25)}, {"b", scores(50.0, 0.25)}});
        CHECK(twin.rows[2] == std::vector<std::string>{"Average", "50.000", "0.2500"});
    }
    SUBCASE("empty input rejected") {
        CHECK_THROWS_AS(fold_table({}), DataError);
    }
}

TEST_CASE("comparison_table renders totals") {
    std::vector<std::pair<std::string, MetricReport>> rows = {
        {"Ensemble (Val)", scores(52.363, 0.2429)},
        {"Fold 5 (Val)", scores(51.536, 0.2402)},
    };
    auto table = comparison_table(rows);
    CHECK(table.header == std::vector<std::string>{"label", "Weighted F1", "BLEU", "Total"});
    REQUIRE(table.rows.size() == 2);
    CHECK(table.rows[0][0] == "Ensemble (Val)");
    CHECK(table.rows[0][1] == "52.363");
    CHECK(table.rows[0][2] == "0.2429");
    CHECK(table.rows[1][1] == "51.536");

    SUBCASE("leaderboard row total") {
        auto lb = comparison_table({{"LVLM (LB)", scores(48.371, 0.2641)}});
        CHECK(lb.rows[0][3] == "24.32");
    }
    SUBCASE("empty label rejected") {
        CHECK_THROWS_AS(comparison_table({{"", scores(1.0, 0.1)}}), DataError);
    }
    SUBCASE("empty input rejected") {
        CHECK_THROWS_AS(comparison_table({}), DataError);
    }
}

TEST_CASE("emit serializes deterministically") {
    Table t;
    t.header = {"label", "Weighted F1"};
    t.rows = {{"Fold 1", "51.058"}};

    SUBCASE("csv shape") {
        CHECK(emit(t, TableFormat::csv) == "label,Weighted F1\nFold 1,51.058\n");
    }
    SUBCASE("markdown has a separator row") {
        CHECK(emit(t, TableFormat::markdown) ==
              "| label | Weighted F1 |\n| --- | --- |\n| Fold 1 | 51.058 |\n");
    }
    SUBCASE("tsv") {
        CHECK(emit(t, TableFormat::tsv) == "label\tWeighted F1\nFold 1\t51.058\n");
    }
    SUBCASE("identical tables emit identical bytes") {
        CHECK(emit(t, TableFormat::csv) == emit(t, TableFormat::csv));
    }
    SUBCASE("csv quotes cells with commas and quotes") {
        Table q;
        q.header = {"label", "note"};
        q.rows = {{"a,b", "say \"hi\"\nthere"}};
        CHECK(emit(q, TableFormat::csv) == "label,note\n\"a,b\",\"say \"\"hi\"\"\nthere\"\n");
    }
    SUBCASE("empty table rejected") {
        CHECK_THROWS_AS(emit(Table{}, TableFormat::csv), DataError);
    }
    SUBCASE("format tokens") {
        CHECK(table_format_from_string("markdown") == TableFormat::markdown);
        CHECK(table_format_from_string("csv") == TableFormat::csv);
        CHECK(table_format_from_string("tsv") == TableFormat::tsv);
        CHECK_THROWS_AS(table_format_from_string("xlsx"), DataError);
    }
}

TEST_CASE("csv round-trips cell-for-cell and distinguishes tables") {
    Table t;
    t.header = {"label", "Weighted F1", "BLEU"};
    t.rows = {{"Fold 1", "51.058", "0.2416"}, {"hard, case", "\"x\"", ""}};
    auto text = emit(t, TableFormat::csv);
    auto parsed = parse_csv(text);
    REQUIRE(parsed.size() == 3);
    CHECK(parsed[0] == t.header);
    CHECK(parsed[1] == t.rows[0]);
    CHECK(parsed[2] == t.rows[1]);

    Table other = t;
    other.rows[0][1] = "51.059";
    CHECK(emit(other, TableFormat::csv) != text);
    CHECK(emit(other, TableFormat::markdown) != emit(t, TableFormat::markdown));
}

TEST_CASE("fold_table average equals mean_scores for random inputs") {
    std::mt19937_64 rng(17);
    for (int iter = 0; iter < 20; ++iter) {
        std::vector<std::pair<std::string, MetricReport>> rows;
        std::vector<std::pair<double, double>> raw;
        int n = 1 + static_cast<int>(rng() % 6);
        for (int i = 0; i < n; ++i) {
            double f1 = static_cast<double>(rng() % 100000) / 1000.0;
            double bleu = static_cast<double>(rng() % 10000) / 10000.0;
            rows.push_back({"row " + std::to_string(i), scores(f1, bleu)});
            raw.push_back({f1, bleu});
        }
        auto table = fold_table(rows);
        auto [mf1, mbleu] = mean_scores(raw);
        CHECK(table.rows.back()[1] == format_fixed(mf1, 3));
        CHECK(table.rows.back()[2] == format_fixed(mbleu, 4));
    }
}

TEST_CASE("write_report_bundle lays out the directory") {
    test_util::TempDir dir;
    RunMetadata meta;
    meta.run_id = "demo";
    meta.description = "bundle layout test";
    meta.hyperparameters = {{"batch_size", "32"}, {"lr", "5e-5"}};

    auto bundle = dir.file("bundle");
    write_report_bundle(bundle, {{"run", scores(66.0, 0.4)}}, meta);

    namespace fs = std::filesystem;
    CHECK(fs::exists(fs::path(bundle) / "report.json"));
    CHECK(fs::exists(fs::path(bundle) / "tables" / "comparison.md"));
    CHECK(fs::exists(fs::path(bundle) / "tables" / "comparison.csv"));
    CHECK(fs::exists(fs::path(bundle) / "tables" / "folds.md"));
    CHECK(fs::exists(fs::path(bundle) / "tables" / "folds.csv"));

    auto j = nlohmann::json::parse(test_util::slurp((fs::path(bundle) / "report.json").string()));
    CHECK(j.at("metadata").at("run_id") == "demo");
    CHECK(j.at("metadata").at("hyperparameters").at("lr") == "5e-5");
    CHECK(j.at("reports")[0].at("label") == "run");
    CHECK(j.at("reports")[0].at("weighted_f1") == 66.0);

    // writing twice produces identical bytes
    auto bundle2 = dir.file("bundle2");
    write_report_bundle(bundle2, {{"run", scores(66.0, 0.4)}}, meta);
    CHECK(test_util::slurp((fs::path(bundle) / "report.json").string()) ==
          test_util::slurp((fs::path(bundle2) / "report.json").string()));
}
