// dialemo: split / render / parse / vote / score / report pipeline driver.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dialemo/dataset.hpp"
#include "dialemo/ensemble.hpp"
#include "dialemo/error.hpp"
#include "dialemo/metrics.hpp"
#include "dialemo/prompting.hpp"
#include "dialemo/report.hpp"

namespace {

using nlohmann::json;

// Bad flag combinations discovered after CLI11 parsing; mapped to exit 2.
struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

// Values from the config file (--config or DIALEMO_CONFIG) act as option
// defaults; explicit flags win, built-in defaults lose.
class ConfigDefaults {
  public:
    void load(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw dialemo::DataError("cannot open config file '" + path + "'");
        try {
            values_ = json::parse(in);
        } catch (const json::exception& e) {
            throw dialemo::DataError("config file '" + path + "': " + e.what());
        }
        if (!values_.is_object()) throw dialemo::DataError("config file '" + path + "' is not an object");
    }

    void apply(CLI::Option* opt, const std::string& key) const {
        if (!values_.contains(key)) return;
        const json& v = values_.at(key);
        opt->default_val(v.is_string() ? v.get<std::string>() : v.dump());
        opt->required(false);
    }

    bool flag(const std::string& key, bool fallback) const {
        if (!values_.contains(key)) return fallback;
        return values_.at(key).get<bool>();
    }

    bool has(const std::string& key) const { return values_.contains(key); }

  private:
    json values_ = json::object();
};

std::optional<std::string> scan_config_path(int argc, char** argv) {
    for (int i = 1; i < argc; ++i) {
        std::string arg = argv[i];
        if (arg == "--config" && i + 1 < argc) return std::string(argv[i + 1]);
        if (arg.rfind("--config=", 0) == 0) return arg.substr(9);
    }
    if (const char* env = std::getenv("DIALEMO_CONFIG"); env && *env) return std::string(env);
    return std::nullopt;
}

dialemo::ParseMode parse_mode_from_string(const std::string& token) {
    if (token == "strict") return dialemo::ParseMode::strict;
    if (token == "lenient") return dialemo::ParseMode::lenient;
    throw UsageError("unknown parse mode '" + token + "' (expected strict or lenient)");
}

dialemo::BleuSmoothing smoothing_from_string(const std::string& token) {
    if (token == "none") return dialemo::BleuSmoothing::none;
    if (token == "add_one") return dialemo::BleuSmoothing::add_one;
    throw UsageError("unknown BLEU smoothing '" + token + "' (expected none or add_one)");
}

// ---- split ----

struct SplitArgs {
    std::string input;
    std::string out;
    int k = 0;
    std::uint64_t seed = 0;
    bool stratify = false;
};

int cmd_split(const SplitArgs& args, bool quiet) {
    auto records = dialemo::load_records(args.input);
    auto folds = dialemo::split_folds(records, args.k, args.seed, args.stratify);
    dialemo::write_fold_file(args.out, folds);
    if (!quiet) {
        std::cout << "fold sizes:";
        for (auto size : dialemo::fold_sizes(folds)) std::cout << ' ' << size;
        std::cout << '\n';
    }
    return 0;
}

// ---- render ----

struct RenderArgs {
    std::string input;
    std::string out;
    std::string template_name;
};

int cmd_render(const RenderArgs& args) {
    auto records = dialemo::load_records(args.input);
    std::vector<dialemo::PromptPair> prompts;
    prompts.reserve(records.size());
    for (const auto& rec : records) {
        prompts.push_back(args.template_name == "lm" ? dialemo::render_lm_prompt(rec)
                                                     : dialemo::render_lvlm_prompt(rec));
    }
    dialemo::write_prompts(args.out, prompts);
    return 0;
}

// ---- parse ----

struct ParseArgs {
    std::string input;
    std::string dataset;
    std::string out;
    std::string template_name;
    std::string mode = "lenient";
};

int cmd_parse(const ParseArgs& args) {
    auto records = dialemo::load_records(args.dataset);
    std::map<std::string, const dialemo::DialogRecord*> by_id;
    for (const auto& rec : records) by_id[rec.id] = &rec;

    dialemo::ParseMode mode = parse_mode_from_string(args.mode);
    bool lm = args.template_name == "lm";

    std::ifstream in(args.input, std::ios::binary);
    if (!in) throw dialemo::DataError("cannot open '" + args.input + "' for reading");
    std::ofstream out(args.out, std::ios::binary);
    if (!out) throw dialemo::DataError("cannot open '" + args.out + "' for writing");

    std::string line;
    std::size_t lineno = 0;
    std::size_t fallbacks = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::string context = args.input + ", line " + std::to_string(lineno);
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw dialemo::DataError(context + ": malformed raw output: " + e.what());
        }
        std::string id, model, text;
        try {
            id = j.at("id").get<std::string>();
            model = j.at("model").get<std::string>();
            text = j.at("text").get<std::string>();
        } catch (const json::exception& e) {
            throw dialemo::DataError(context + ": " + e.what());
        }
        auto rec_it = by_id.find(id);
        if (rec_it == by_id.end()) throw dialemo::DataError(context + ": unknown record id '" + id + "'");
        const auto& candidates = rec_it->second->emotion_candidates;

        dialemo::Prediction pred{id, model, "", ""};
        try {
            auto parsed = lm ? dialemo::parse_lm_response(text, candidates, mode)
                             : dialemo::parse_lvlm_response(text, candidates, mode);
            pred.emotion = parsed.emotion;
            pred.explanation = parsed.explanation;
        } catch (const dialemo::ParseError& e) {
            if (mode == dialemo::ParseMode::strict) {
                throw dialemo::DataError(context + ": " + e.what());
            }
            pred.emotion = candidates.front();
            ++fallbacks;
        }
        json pj;
        pj["id"] = pred.record_id;
        pj["model"] = pred.model_id;
        pj["emotion"] = pred.emotion;
        pj["explanation"] = pred.explanation;
        out << pj.dump() << '\n';
    }
    if (fallbacks > 0) {
        std::cerr << "warning: " << fallbacks
                  << " line(s) did not parse; fell back to the first candidate\n";
    }
    return 0;
}

// ---- vote ----

struct VoteArgs {
    std::vector<std::string> inputs;
    std::string out;
    std::string ensemble_config;
    std::string preset;
    std::string lm_voter;
    std::string lvlm_voter;
    std::string name = "vote";
};

int cmd_vote(const VoteArgs& args) {
    dialemo::PredictionSets sets;
    std::vector<std::string> first_seen;
    for (const auto& path : args.inputs) {
        for (auto& p : dialemo::load_predictions(path)) {
            if (!sets.count(p.model_id)) first_seen.push_back(p.model_id);
            sets[p.model_id].push_back(std::move(p));
        }
    }
    if (sets.empty()) throw dialemo::DataError("no predictions loaded from the input files");

    dialemo::EnsembleConfig cfg;
    if (!args.preset.empty()) {
        if (args.preset != "hybrid-paper") throw UsageError("unknown preset '" + args.preset + "'");
        if (args.lm_voter.empty() || args.lvlm_voter.empty()) {
            throw UsageError("--preset hybrid-paper requires --lm-voter and --lvlm-voter");
        }
        cfg = dialemo::hybrid_paper_config(args.lm_voter, args.lvlm_voter);
    } else if (!args.ensemble_config.empty()) {
        cfg = dialemo::load_ensemble_config(args.ensemble_config);
    } else {
        cfg.name = args.name;
        cfg.voters = first_seen;
    }

    auto combined = dialemo::combine(sets, cfg);
    dialemo::write_predictions(args.out, combined);
    return 0;
}

// ---- score ----

struct ScoreArgs {
    std::string dataset;
    std::string predictions;
    std::string out;
    std::string smoothing = "none";
    std::string label = "run";
    std::string run_id;
    std::string description;
    std::string timestamp;
    std::vector<std::string> meta;
};

int cmd_score(const ScoreArgs& args) {
    auto gold = dialemo::load_records(args.dataset);
    auto preds = dialemo::load_predictions(args.predictions);

    dialemo::EvalOptions options;
    options.smoothing = smoothing_from_string(args.smoothing);
    auto report = dialemo::evaluate(gold, preds, options);

    dialemo::RunMetadata meta;
    meta.run_id = args.run_id;
    meta.description = args.description;
    meta.created_at = args.timestamp;
    for (const auto& kv : args.meta) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) throw UsageError("--meta expects key=value, got '" + kv + "'");
        meta.hyperparameters[kv.substr(0, eq)] = kv.substr(eq + 1);
    }

    dialemo::write_report_bundle(args.out, {{args.label, report}}, meta);
    std::cout << dialemo::format_fixed(report.weighted_f1, 3) << " | "
              << dialemo::format_fixed(report.bleu, 4) << " | "
              << dialemo::format_fixed(report.total, 2) << '\n';
    return 0;
}

// ---- report ----

struct ReportArgs {
    std::vector<std::string> reports;
    std::string rows;
    std::string table = "fold";
    std::string format = "markdown";
    std::string out;
};

int cmd_report(const ReportArgs& args) {
    std::vector<std::pair<std::string, dialemo::MetricReport>> labeled;

    for (const auto& path : args.reports) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw dialemo::DataError("cannot open '" + path + "' for reading");
        json j;
        try {
            j = json::parse(in);
        } catch (const json::exception& e) {
            throw dialemo::DataError(path + ": " + e.what());
        }
        try {
            for (const auto& entry : j.at("reports")) {
                dialemo::MetricReport rep;
                rep.weighted_f1 = entry.at("weighted_f1").get<double>();
                rep.bleu = entry.at("bleu").get<double>();
                rep.total = entry.at("total").get<double>();
                labeled.push_back({entry.at("label").get<std::string>(), rep});
            }
        } catch (const json::exception& e) {
            throw dialemo::DataError(path + ": invalid report bundle: " + e.what());
        }
    }
    if (!args.rows.empty()) {
        std::ifstream in(args.rows, std::ios::binary);
        if (!in) throw dialemo::DataError("cannot open '" + args.rows + "' for reading");
        json j;
        try {
            j = json::parse(in);
            for (const auto& entry : j) {
                dialemo::MetricReport rep;
                rep.weighted_f1 = entry.at("weighted_f1").get<double>();
                rep.bleu = entry.at("bleu").get<double>();
                rep.total = dialemo::total_score(rep.weighted_f1, rep.bleu);
                labeled.push_back({entry.at("label").get<std::string>(), rep});
            }
        } catch (const json::exception& e) {
            throw dialemo::DataError(args.rows + ": invalid rows file: " + e.what());
        }
    }

    dialemo::Table table;
    if (args.table == "fold") table = dialemo::fold_table(labeled);
    else if (args.table == "comparison") table = dialemo::comparison_table(labeled);
    else throw UsageError("unknown table kind '" + args.table + "' (expected fold or comparison)");

    auto text = dialemo::emit(table, dialemo::table_format_from_string(args.format));
    if (args.out.empty()) {
        std::cout << text;
    } else {
        std::ofstream out(args.out, std::ios::binary);
        if (!out) throw dialemo::DataError("cannot open '" + args.out + "' for writing");
        out << text;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    ConfigDefaults config;
    try {
        if (auto path = scan_config_path(argc, argv)) config.load(*path);
    } catch (const dialemo::DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }

    CLI::App app{"Harness for the visual-dialog emotion-explanation task: deterministic "
                 "fold splitting, instruction rendering, output parsing, hard-vote "
                 "ensembling and weighted-F1/BLEU scoring."};
    app.require_subcommand(1);

    std::string config_path;
    bool quiet = config.flag("quiet", false);
    std::uint64_t seed = 0;
    app.add_option("--config", config_path, "JSON config file supplying option defaults");
    app.add_flag("--quiet", quiet, "suppress informational output");
    auto* seed_opt = app.add_option("--seed", seed, "seed for all randomized operations");
    config.apply(seed_opt, "seed");

    SplitArgs split_args;
    auto* split = app.add_subcommand("split", "assign records to k folds deterministically");
    split->fallthrough();
    auto* split_in = split->add_option("--input,-i", split_args.input, "dataset file (jsonl)")->required();
    auto* split_k = split->add_option("--k", split_args.k, "number of folds")->required();
    auto* split_out = split->add_option("--out,-o", split_args.out, "fold file to write")->required();
    split->add_flag("--stratify", split_args.stratify, "balance per-emotion counts across folds");
    config.apply(split_in, "dataset");
    config.apply(split_k, "k");
    config.apply(split_out, "folds");
    split_args.stratify = config.flag("stratify", false);

    RenderArgs render_args;
    auto* render = app.add_subcommand("render", "render instruction prompts for every record");
    render->fallthrough();
    auto* render_in = render->add_option("--input,-i", render_args.input, "dataset file (jsonl)")->required();
    auto* render_tpl = render->add_option("--template", render_args.template_name, "lm or lvlm")
                           ->check(CLI::IsMember({"lm", "lvlm"}))
                           ->required();
    render->add_option("--out,-o", render_args.out, "prompt file to write")->required();
    config.apply(render_in, "dataset");
    config.apply(render_tpl, "template");

    ParseArgs parse_args;
    auto* parse = app.add_subcommand("parse", "turn raw model output into predictions");
    parse->fallthrough();
    parse->add_option("--input,-i", parse_args.input, "raw output file (jsonl)")->required();
    auto* parse_ds = parse->add_option("--dataset", parse_args.dataset, "dataset file (jsonl)")->required();
    auto* parse_tpl = parse->add_option("--template", parse_args.template_name, "lm or lvlm")
                          ->check(CLI::IsMember({"lm", "lvlm"}))
                          ->required();
    auto* parse_mode = parse->add_option("--mode", parse_args.mode, "strict or lenient")
                           ->check(CLI::IsMember({"strict", "lenient"}));
    parse->add_option("--out,-o", parse_args.out, "prediction file to write")->required();
    config.apply(parse_ds, "dataset");
    config.apply(parse_tpl, "template");
    config.apply(parse_mode, "parse_mode");

    VoteArgs vote_args;
    auto* vote = app.add_subcommand("vote", "combine prediction sets by hard voting");
    vote->fallthrough();
    vote->add_option("--input,-i", vote_args.inputs, "prediction files")->required()->expected(-1);
    auto* vote_cfg = vote->add_option("--ensemble", vote_args.ensemble_config, "ensemble config file");
    vote->add_option("--preset", vote_args.preset, "named ensemble preset (hybrid-paper)");
    vote->add_option("--lm-voter", vote_args.lm_voter, "LM-side voter id for --preset");
    vote->add_option("--lvlm-voter", vote_args.lvlm_voter, "LVLM-side voter id for --preset");
    vote->add_option("--name", vote_args.name, "ensemble name when no config is given");
    auto* vote_out = vote->add_option("--out,-o", vote_args.out, "prediction file to write")->required();
    config.apply(vote_cfg, "ensemble");
    config.apply(vote_out, "predictions");

    ScoreArgs score_args;
    auto* score = app.add_subcommand("score", "score predictions against the gold dataset");
    score->fallthrough();
    auto* score_ds = score->add_option("--dataset", score_args.dataset, "gold dataset file (jsonl)")->required();
    auto* score_pred =
        score->add_option("--predictions", score_args.predictions, "prediction file (jsonl)")->required();
    auto* score_out = score->add_option("--out,-o", score_args.out, "report bundle directory")->required();
    auto* score_sm = score->add_option("--bleu-smoothing", score_args.smoothing, "none or add_one")
                         ->check(CLI::IsMember({"none", "add_one"}));
    score->add_option("--label", score_args.label, "row label in the report");
    score->add_option("--run-id", score_args.run_id, "run identifier stored in the metadata");
    score->add_option("--description", score_args.description, "free-text run description");
    score->add_option("--timestamp", score_args.timestamp, "ISO 8601 creation time for the metadata");
    score->add_option("--meta", score_args.meta, "hyperparameter key=value entries")->expected(-1);
    config.apply(score_ds, "dataset");
    config.apply(score_pred, "predictions");
    config.apply(score_out, "out");
    config.apply(score_sm, "bleu_smoothing");

    ReportArgs report_args;
    auto* report = app.add_subcommand("report", "render score tables from report bundles");
    report->fallthrough();
    report->add_option("--report", report_args.reports, "report.json files from score")->expected(-1);
    report->add_option("--rows", report_args.rows, "JSON array of {label, weighted_f1, bleu}");
    report->add_option("--table", report_args.table, "fold or comparison")
        ->check(CLI::IsMember({"fold", "comparison"}));
    report->add_option("--format", report_args.format, "markdown, csv or tsv")
        ->check(CLI::IsMember({"markdown", "md", "csv", "tsv"}));
    report->add_option("--out,-o", report_args.out, "output file (stdout when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\n\n" << app.help() << std::flush;
        return 2;
    }

    try {
        if (app.got_subcommand(split)) {
            if (seed_opt->count() == 0 && !config.has("seed")) {
                throw UsageError("split requires --seed (or a 'seed' config entry)");
            }
            split_args.seed = seed;
            return cmd_split(split_args, quiet);
        }
        if (app.got_subcommand(render)) return cmd_render(render_args);
        if (app.got_subcommand(parse)) return cmd_parse(parse_args);
        if (app.got_subcommand(vote)) return cmd_vote(vote_args);
        if (app.got_subcommand(score)) return cmd_score(score_args);
        if (app.got_subcommand(report)) return cmd_report(report_args);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n\n" << app.help() << std::flush;
        return 2;
    } catch (const dialemo::DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
