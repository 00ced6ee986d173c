#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "dialemo/dataset.hpp"
#include "dialemo/error.hpp"
#include "dialemo/prompting.hpp"

namespace dialemo {

// Case-folds, splits on whitespace, and detaches leading/trailing ASCII
// punctuation characters from each word as separate tokens. Internal
// punctuation (don't, e-mail) stays attached.
std::vector<std::string> tokenize(const std::string& text);

using TokenList = std::vector<std::string>;
using NgramCounts = std::map<std::vector<std::string>, long>;

// All contiguous n-token windows with multiplicity.
NgramCounts ngram_counts(const TokenList& tokens, int n);

struct ClipStats {
    long clipped = 0; // sum over hypothesis n-gram types of min(hyp count, max ref count)
    long total = 0;   // hypothesis n-gram count
};

ClipStats modified_precision(const TokenList& hypothesis,
                             const std::vector<TokenList>& references, int n);

enum class BleuSmoothing { none, add_one };

struct BleuOrderCounts {
    int n = 0;
    long clipped = 0;
    long total = 0;
};

struct BleuDetails {
    std::vector<BleuOrderCounts> orders;
    long hyp_len = 0;
    long ref_len = 0; // per-pair closest reference length, ties to the shorter

    bool operator==(const BleuDetails&) const = default;
};

struct BleuPair {
    std::string hypothesis;
    std::vector<std::string> references;
};

// Corpus BLEU: pooled clipped/total counts per order, geometric mean of the
// pooled precisions, standard brevity penalty. add_one smoothing applies
// (clipped+1)/(total+1) for orders >= 2 only. Any zero pooled precision (or
// an empty pooled hypothesis length) yields 0.
double corpus_bleu(const std::vector<BleuPair>& pairs, int max_n = 4,
                   BleuSmoothing smoothing = BleuSmoothing::none,
                   BleuDetails* details = nullptr);

struct ClassCounts {
    std::string label;
    long tp = 0;
    long fp = 0;
    long fn = 0;

    long support() const { return tp + fn; }

    bool operator==(const ClassCounts&) const = default;
};

double class_precision(const ClassCounts& c);
double class_recall(const ClassCounts& c);
double class_f1(const ClassCounts& c);

// One ClassCounts per label appearing in gold or pred, sorted by label.
std::vector<ClassCounts> confusion_counts(const std::vector<std::string>& gold,
                                          const std::vector<std::string>& pred);

// Support-weighted mean of per-class F1, as a percentage.
double weighted_f1(const std::vector<ClassCounts>& counts);

// Leaderboard aggregate: arithmetic mean of weighted F1 (percent) and BLEU
// (unit interval).
double total_score(double weighted_f1_pct, double bleu);

// Arithmetic means of per-fold (weighted F1, BLEU) pairs.
std::pair<double, double> mean_scores(const std::vector<std::pair<double, double>>& per_fold);

struct EvalOptions {
    int max_n = 4;
    BleuSmoothing smoothing = BleuSmoothing::none;
};

struct MetricReport {
    double weighted_f1 = 0.0; // percent in [0, 100]
    double bleu = 0.0;        // unit interval
    double total = 0.0;
    std::vector<ClassCounts> per_class;
    long n_records = 0;
    BleuDetails bleu_details;
};

// Aligns gold records and predictions by id (order-independent), scores
// emotions with weighted F1 and explanations with corpus BLEU against the
// gold explanation as single reference.
MetricReport evaluate(const std::vector<DialogRecord>& gold,
                      const std::vector<Prediction>& predictions,
                      const EvalOptions& options = {});

nlohmann::json report_to_json(const MetricReport& report);

// Display rounding: half away from zero at dp decimal places.
double round_half_away(double x, int dp);
std::string format_fixed(double x, int dp);

} // namespace dialemo
