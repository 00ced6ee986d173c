#include "dialemo/dataset.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <set>
#include <unordered_set>

#include "jsonl_util.hpp"

namespace dialemo {

namespace {

const std::set<std::string> kKnownKeys = {
    "id", "image", "caption", "dialog", "emotion_candidates", "label_emotion", "explanation",
};

std::string fold_ascii(const std::string& s) {
    std::string out = s;
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c + 32);
    }
    return out;
}

bool blank(const std::string& s) {
    return s.find_first_not_of(" \t\r\n") == std::string::npos;
}

// Uniform draw in [0, n) by rejection so the result does not depend on the
// platform's distribution implementation.
std::uint64_t draw_below(std::mt19937_64& rng, std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t cutoff = max - (max % n + 1) % n;
    std::uint64_t r;
    do {
        r = rng();
    } while (r > cutoff);
    return r % n;
}

void fisher_yates(std::vector<std::string>& ids, std::mt19937_64& rng) {
    for (std::size_t i = ids.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(draw_below(rng, i));
        std::swap(ids[i - 1], ids[j]);
    }
}

} // namespace

void validate_record(const DialogRecord& rec) {
    if (rec.id.empty()) throw DataError("record has empty 'id'");
    auto fail = [&](const std::string& field, const std::string& why) {
        throw DataError("record '" + rec.id + "': field '" + field + "' " + why);
    };
    if (rec.dialog.empty()) fail("dialog", "must be non-empty");
    for (const auto& turn : rec.dialog) {
        if (blank(turn.text)) fail("dialog", "contains a turn with empty text");
    }
    if (rec.emotion_candidates.size() < 2) fail("emotion_candidates", "must list at least two labels");
    std::set<std::string> folded;
    for (const auto& cand : rec.emotion_candidates) {
        if (cand.empty()) fail("emotion_candidates", "contains an empty label");
        if (!folded.insert(fold_ascii(cand)).second) {
            fail("emotion_candidates", "contains duplicate label '" + cand + "' after case-folding");
        }
    }
    if (std::find(rec.emotion_candidates.begin(), rec.emotion_candidates.end(), rec.label_emotion) ==
        rec.emotion_candidates.end()) {
        fail("label_emotion", "value '" + rec.label_emotion + "' is not among the candidates");
    }
}

DialogRecord record_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw DataError("record is not an object");
    DialogRecord rec;
    rec.id = detail::require_string(j, "id");
    rec.image_ref = detail::optional_string(j, "image");
    rec.caption = detail::optional_string(j, "caption");
    rec.explanation = detail::optional_string(j, "explanation");
    rec.label_emotion = detail::require_string(j, "label_emotion");

    auto dialog = j.find("dialog");
    if (dialog == j.end() || !dialog->is_array()) {
        throw DataError("record '" + rec.id + "': field 'dialog' missing or not an array");
    }
    for (const auto& turn : *dialog) {
        std::string speaker = detail::require_string(turn, "speaker");
        DialogTurn t;
        if (speaker == "q") t.speaker = Speaker::questioner;
        else if (speaker == "a") t.speaker = Speaker::answerer;
        else throw DataError("record '" + rec.id + "': field 'dialog' has unknown speaker '" + speaker + "'");
        t.text = detail::require_string(turn, "text");
        rec.dialog.push_back(std::move(t));
    }

    auto cands = j.find("emotion_candidates");
    if (cands == j.end() || !cands->is_array()) {
        throw DataError("record '" + rec.id + "': field 'emotion_candidates' missing or not an array");
    }
    for (const auto& c : *cands) {
        if (!c.is_string()) throw DataError("record '" + rec.id + "': non-string emotion candidate");
        rec.emotion_candidates.push_back(c.get<std::string>());
    }

    for (const auto& [key, value] : j.items()) {
        if (!kKnownKeys.count(key)) rec.extras[key] = value;
    }
    validate_record(rec);
    return rec;
}

nlohmann::json record_to_json(const DialogRecord& rec) {
    nlohmann::json j = rec.extras.is_object() ? rec.extras : nlohmann::json::object();
    j["id"] = rec.id;
    j["image"] = rec.image_ref;
    j["caption"] = rec.caption;
    nlohmann::json dialog = nlohmann::json::array();
    for (const auto& turn : rec.dialog) {
        dialog.push_back({{"speaker", turn.speaker == Speaker::questioner ? "q" : "a"},
                          {"text", turn.text}});
    }
    j["dialog"] = std::move(dialog);
    j["emotion_candidates"] = rec.emotion_candidates;
    j["label_emotion"] = rec.label_emotion;
    j["explanation"] = rec.explanation;
    return j;
}

std::vector<DialogRecord> load_records(const std::string& path) {
    std::vector<DialogRecord> records;
    std::unordered_set<std::string> seen;
    detail::for_each_jsonl(path, [&](std::size_t, const nlohmann::json& j) {
        DialogRecord rec = record_from_json(j);
        if (!seen.insert(rec.id).second) throw DataError("duplicate record id '" + rec.id + "'");
        records.push_back(std::move(rec));
    });
    return records;
}

void write_records(const std::string& path, const std::vector<DialogRecord>& records) {
    auto out = detail::open_output(path);
    for (const auto& rec : records) out << record_to_json(rec).dump() << '\n';
    if (!out) throw DataError("i/o failure while writing '" + path + "'");
}

FoldAssignment split_folds(const std::vector<DialogRecord>& records, int k,
                           std::uint64_t seed, bool stratify) {
    if (k < 2) throw DataError("k must be at least 2, got " + std::to_string(k));
    if (records.size() < static_cast<std::size_t>(k)) {
        throw DataError("cannot split " + std::to_string(records.size()) + " records into " +
                        std::to_string(k) + " folds");
    }

    FoldAssignment fa;
    fa.k = k;
    fa.seed = seed;
    fa.stratify = stratify;

    std::mt19937_64 rng(seed);
    std::vector<std::string> order;
    if (stratify) {
        std::map<std::string, std::vector<std::string>> groups;
        for (const auto& rec : records) groups[rec.label_emotion].push_back(rec.id);
        for (auto& [label, ids] : groups) {
            std::sort(ids.begin(), ids.end());
            fisher_yates(ids, rng);
            order.insert(order.end(), ids.begin(), ids.end());
        }
    } else {
        for (const auto& rec : records) order.push_back(rec.id);
        std::sort(order.begin(), order.end());
        fisher_yates(order, rng);
    }

    for (std::size_t i = 0; i < order.size(); ++i) {
        if (!fa.assignment.emplace(order[i], static_cast<int>(i % k)).second) {
            throw DataError("duplicate record id '" + order[i] + "'");
        }
    }
    return fa;
}

std::pair<std::vector<DialogRecord>, std::vector<DialogRecord>>
fold_partition(const std::vector<DialogRecord>& records,
               const FoldAssignment& assignment, int fold) {
    if (fold < 0 || fold >= assignment.k) {
        throw DataError("fold " + std::to_string(fold) + " out of range [0, " +
                        std::to_string(assignment.k) + ")");
    }
    std::vector<DialogRecord> train, holdout;
    for (const auto& rec : records) {
        auto it = assignment.assignment.find(rec.id);
        if (it == assignment.assignment.end()) {
            throw DataError("record id '" + rec.id + "' missing from the fold assignment");
        }
        (it->second == fold ? holdout : train).push_back(rec);
    }
    return {std::move(train), std::move(holdout)};
}

std::vector<std::size_t> fold_sizes(const FoldAssignment& assignment) {
    std::vector<std::size_t> sizes(static_cast<std::size_t>(assignment.k), 0);
    for (const auto& [id, fold] : assignment.assignment) ++sizes.at(static_cast<std::size_t>(fold));
    return sizes;
}

FoldAssignment load_fold_file(const std::string& path) {
    auto in = detail::open_input(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path + ": malformed fold file: " + e.what());
    }
    FoldAssignment fa;
    try {
        fa.k = j.at("k").get<int>();
        fa.seed = j.at("seed").get<std::uint64_t>();
        fa.stratify = j.at("stratify").get<bool>();
        for (const auto& [id, fold] : j.at("assignment").items()) {
            int f = fold.get<int>();
            if (f < 0 || f >= fa.k) throw DataError("fold index " + std::to_string(f) + " out of range");
            fa.assignment[id] = f;
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path + ": invalid fold file: " + e.what());
    }
    return fa;
}

void write_fold_file(const std::string& path, const FoldAssignment& assignment) {
    nlohmann::json j;
    j["k"] = assignment.k;
    j["seed"] = assignment.seed;
    j["stratify"] = assignment.stratify;
    j["assignment"] = nlohmann::json::object();
    for (const auto& [id, fold] : assignment.assignment) j["assignment"][id] = fold;
    auto out = detail::open_output(path);
    out << j.dump(2) << '\n';
    if (!out) throw DataError("i/o failure while writing '" + path + "'");
}

} // namespace dialemo
