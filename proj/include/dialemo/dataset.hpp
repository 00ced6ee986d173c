#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "dialemo/error.hpp"

namespace dialemo {

enum class Speaker { questioner, answerer };

struct DialogTurn {
    Speaker speaker = Speaker::questioner;
    std::string text;

    bool operator==(const DialogTurn&) const = default;
};

// One dataset item. The image path is opaque: it is carried through files
// but never opened, captions come precomputed.
struct DialogRecord {
    std::string id;
    std::string image_ref;
    std::string caption;
    std::vector<DialogTurn> dialog;
    std::vector<std::string> emotion_candidates;
    std::string label_emotion;
    std::string explanation;
    // Unknown top-level keys from the source line, kept so that
    // load -> write round-trips preserve them.
    nlohmann::json extras = nlohmann::json::object();
};

// Throws DataError naming the offending field and record id.
void validate_record(const DialogRecord& rec);

nlohmann::json record_to_json(const DialogRecord& rec);
DialogRecord record_from_json(const nlohmann::json& j);

// Line-delimited JSON, one record per line. Errors carry the line number.
std::vector<DialogRecord> load_records(const std::string& path);
void write_records(const std::string& path, const std::vector<DialogRecord>& records);

struct FoldAssignment {
    int k = 0;
    std::uint64_t seed = 0;
    bool stratify = false;
    std::map<std::string, int> assignment; // record id -> fold index in [0, k)
};

// Deterministic k-fold split. Ids are sorted lexicographically, shuffled by
// a Fisher-Yates pass driven by std::mt19937_64(seed) with rejection-sampled
// bounded draws (so the result is identical on every platform), then dealt
// round-robin. With stratify=true the shuffle and deal run per label group,
// in sorted label order, with a running fold cursor; per-label per-fold
// counts then differ by at most one.
FoldAssignment split_folds(const std::vector<DialogRecord>& records, int k,
                           std::uint64_t seed, bool stratify = false);

// (train, holdout) for one fold; input order is preserved in both halves.
std::pair<std::vector<DialogRecord>, std::vector<DialogRecord>>
fold_partition(const std::vector<DialogRecord>& records,
               const FoldAssignment& assignment, int fold);

std::vector<std::size_t> fold_sizes(const FoldAssignment& assignment);

FoldAssignment load_fold_file(const std::string& path);
void write_fold_file(const std::string& path, const FoldAssignment& assignment);

} // namespace dialemo
