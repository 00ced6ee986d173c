#include "dialemo/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <stdexcept>
#include <unordered_map>

namespace dialemo {

namespace {

bool ascii_punct(char c) {
    return (c >= '!' && c <= '/') || (c >= ':' && c <= '@') ||
           (c >= '[' && c <= '`') || (c >= '{' && c <= '~');
}

bool ascii_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

} // namespace

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string word;
    auto flush = [&]() {
        if (word.empty()) return;
        std::size_t b = 0, e = word.size();
        while (b < e && ascii_punct(word[b])) ++b;
        while (e > b && ascii_punct(word[e - 1])) --e;
        for (std::size_t i = 0; i < b; ++i) tokens.emplace_back(1, word[i]);
        if (e > b) tokens.push_back(word.substr(b, e - b));
        for (std::size_t i = e; i < word.size(); ++i) tokens.emplace_back(1, word[i]);
        word.clear();
    };
    for (char c : text) {
        if (ascii_space(c)) {
            flush();
        } else {
            if (c >= 'A' && c <= 'Z') c = static_cast<char>(c + 32);
            word.push_back(c);
        }
    }
    flush();
    return tokens;
}

NgramCounts ngram_counts(const TokenList& tokens, int n) {
    if (n < 1) throw std::invalid_argument("n-gram order must be positive");
    NgramCounts counts;
    if (tokens.size() < static_cast<std::size_t>(n)) return counts;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        ++counts[std::vector<std::string>(tokens.begin() + i, tokens.begin() + i + n)];
    }
    return counts;
}

ClipStats modified_precision(const TokenList& hypothesis,
                             const std::vector<TokenList>& references, int n) {
    auto hyp_counts = ngram_counts(hypothesis, n);
    NgramCounts max_ref;
    for (const auto& ref : references) {
        for (const auto& [gram, count] : ngram_counts(ref, n)) {
            auto& slot = max_ref[gram];
            slot = std::max(slot, count);
        }
    }
    ClipStats stats;
    for (const auto& [gram, count] : hyp_counts) {
        stats.total += count;
        auto it = max_ref.find(gram);
        if (it != max_ref.end()) stats.clipped += std::min(count, it->second);
    }
    return stats;
}

double corpus_bleu(const std::vector<BleuPair>& pairs, int max_n,
                   BleuSmoothing smoothing, BleuDetails* details) {
    if (pairs.empty()) throw DataError("corpus BLEU needs at least one hypothesis/reference pair");
    if (max_n < 1) throw std::invalid_argument("max_n must be positive");

    BleuDetails acc;
    acc.orders.resize(static_cast<std::size_t>(max_n));
    for (int n = 1; n <= max_n; ++n) acc.orders[n - 1].n = n;

    for (const auto& pair : pairs) {
        TokenList hyp = tokenize(pair.hypothesis);
        std::vector<TokenList> refs;
        refs.reserve(pair.references.size());
        for (const auto& r : pair.references) refs.push_back(tokenize(r));

        acc.hyp_len += static_cast<long>(hyp.size());
        long closest = 0;
        bool have = false;
        for (const auto& r : refs) {
            long len = static_cast<long>(r.size());
            long diff = std::labs(len - static_cast<long>(hyp.size()));
            long best = std::labs(closest - static_cast<long>(hyp.size()));
            if (!have || diff < best || (diff == best && len < closest)) {
                closest = len;
                have = true;
            }
        }
        acc.ref_len += closest;

        for (int n = 1; n <= max_n; ++n) {
            auto stats = modified_precision(hyp, refs, n);
            acc.orders[n - 1].clipped += stats.clipped;
            acc.orders[n - 1].total += stats.total;
        }
    }
    for (const auto& order : acc.orders) {
        if (order.clipped > order.total) {
            throw std::logic_error("BLEU pooling broke clipped <= total at order " +
                                   std::to_string(order.n));
        }
    }
    if (details) *details = acc;

    if (acc.hyp_len == 0) return 0.0;
    double log_sum = 0.0;
    for (const auto& order : acc.orders) {
        double p;
        if (smoothing == BleuSmoothing::add_one && order.n >= 2) {
            p = (static_cast<double>(order.clipped) + 1.0) / (static_cast<double>(order.total) + 1.0);
        } else {
            p = order.total == 0
                    ? 0.0
                    : static_cast<double>(order.clipped) / static_cast<double>(order.total);
        }
        if (p <= 0.0) return 0.0;
        log_sum += std::log(p);
    }
    double bp = acc.hyp_len > acc.ref_len
                    ? 1.0
                    : std::exp(1.0 - static_cast<double>(acc.ref_len) / static_cast<double>(acc.hyp_len));
    return bp * std::exp(log_sum / max_n);
}

double class_precision(const ClassCounts& c) {
    return (c.tp + c.fp) > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
}

double class_recall(const ClassCounts& c) {
    return (c.tp + c.fn) > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
}

double class_f1(const ClassCounts& c) {
    double p = class_precision(c);
    double r = class_recall(c);
    return (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

std::vector<ClassCounts> confusion_counts(const std::vector<std::string>& gold,
                                          const std::vector<std::string>& pred) {
    if (gold.size() != pred.size()) {
        throw DataError("gold/pred length mismatch: " + std::to_string(gold.size()) + " vs " +
                        std::to_string(pred.size()));
    }
    std::map<std::string, ClassCounts> by_label;
    auto slot = [&](const std::string& label) -> ClassCounts& {
        auto& c = by_label[label];
        c.label = label;
        return c;
    };
    for (std::size_t i = 0; i < gold.size(); ++i) {
        slot(pred[i]);
        auto& g = slot(gold[i]);
        if (gold[i] == pred[i]) {
            ++g.tp;
        } else {
            ++g.fn;
            ++slot(pred[i]).fp;
        }
    }
    std::vector<ClassCounts> out;
    out.reserve(by_label.size());
    for (auto& [label, counts] : by_label) out.push_back(counts);
    return out;
}

double weighted_f1(const std::vector<ClassCounts>& counts) {
    long total_support = 0;
    double weighted_sum = 0.0;
    for (const auto& c : counts) {
        total_support += c.support();
        weighted_sum += static_cast<double>(c.support()) * class_f1(c);
    }
    if (total_support <= 0) throw DataError("weighted F1 undefined: zero total support");
    return 100.0 * weighted_sum / static_cast<double>(total_support);
}

double total_score(double weighted_f1_pct, double bleu) {
    if (weighted_f1_pct < 0.0 || weighted_f1_pct > 100.0) {
        throw DataError("weighted F1 out of range [0, 100]: " + std::to_string(weighted_f1_pct));
    }
    if (bleu < 0.0 || bleu > 1.0) {
        throw DataError("BLEU out of range [0, 1]: " + std::to_string(bleu));
    }
    return (weighted_f1_pct + bleu) / 2.0;
}

std::pair<double, double> mean_scores(const std::vector<std::pair<double, double>>& per_fold) {
    if (per_fold.empty()) throw DataError("mean over an empty score list");
    double f1 = 0.0, bleu = 0.0;
    for (const auto& [f, b] : per_fold) {
        f1 += f;
        bleu += b;
    }
    auto n = static_cast<double>(per_fold.size());
    return {f1 / n, bleu / n};
}

MetricReport evaluate(const std::vector<DialogRecord>& gold,
                      const std::vector<Prediction>& predictions,
                      const EvalOptions& options) {
    std::unordered_map<std::string, const Prediction*> by_id;
    by_id.reserve(predictions.size());
    for (const auto& p : predictions) {
        if (!by_id.emplace(p.record_id, &p).second) {
            throw DataError("duplicate prediction id '" + p.record_id + "'");
        }
    }

    std::set<std::string> gold_ids;
    std::vector<std::string> missing;
    for (const auto& rec : gold) {
        gold_ids.insert(rec.id);
        if (!by_id.count(rec.id)) missing.push_back(rec.id);
    }
    auto list_ids = [](const std::vector<std::string>& ids) {
        std::string out;
        std::size_t shown = std::min<std::size_t>(ids.size(), 20);
        for (std::size_t i = 0; i < shown; ++i) {
            if (i) out += ", ";
            out += ids[i];
        }
        if (ids.size() > shown) out += ", and " + std::to_string(ids.size() - shown) + " more";
        return out;
    };
    if (!missing.empty()) {
        throw DataError("missing prediction for " + std::to_string(missing.size()) + " record(s): " +
                        list_ids(missing));
    }
    std::vector<std::string> unknown;
    for (const auto& p : predictions) {
        if (!gold_ids.count(p.record_id)) unknown.push_back(p.record_id);
    }
    if (!unknown.empty()) {
        throw DataError("prediction(s) for unknown record id(s): " + list_ids(unknown));
    }

    // align in sorted-id order; all reductions are over integer counts, so
    // any alignment order yields the same report
    std::map<std::string, const DialogRecord*> by_gold_id;
    for (const auto& rec : gold) by_gold_id[rec.id] = &rec;

    std::vector<std::string> gold_emotions, pred_emotions;
    std::vector<BleuPair> pairs;
    for (const auto& [id, rec] : by_gold_id) {
        const Prediction* p = by_id.at(id);
        gold_emotions.push_back(rec->label_emotion);
        pred_emotions.push_back(p->emotion);
        pairs.push_back({p->explanation, {rec->explanation}});
    }

    MetricReport report;
    report.n_records = static_cast<long>(gold.size());
    report.per_class = confusion_counts(gold_emotions, pred_emotions);
    report.weighted_f1 = weighted_f1(report.per_class);
    report.bleu = corpus_bleu(pairs, options.max_n, options.smoothing, &report.bleu_details);
    report.total = total_score(report.weighted_f1, report.bleu);
    return report;
}

nlohmann::json report_to_json(const MetricReport& report) {
    nlohmann::json j;
    j["weighted_f1"] = report.weighted_f1;
    j["bleu"] = report.bleu;
    j["total"] = report.total;
    j["n_records"] = report.n_records;
    nlohmann::json per_class = nlohmann::json::array();
    for (const auto& c : report.per_class) {
        per_class.push_back({
            {"label", c.label},
            {"tp", c.tp},
            {"fp", c.fp},
            {"fn", c.fn},
            {"support", c.support()},
            {"precision", class_precision(c)},
            {"recall", class_recall(c)},
            {"f1", class_f1(c)},
        });
    }
    j["per_class"] = std::move(per_class);
    nlohmann::json orders = nlohmann::json::array();
    for (const auto& o : report.bleu_details.orders) {
        orders.push_back({{"n", o.n}, {"clipped", o.clipped}, {"total", o.total}});
    }
    j["bleu_details"] = {
        {"orders", std::move(orders)},
        {"hyp_len", report.bleu_details.hyp_len},
        {"ref_len", report.bleu_details.ref_len},
    };
    return j;
}

double round_half_away(double x, int dp) {
    double scale = std::pow(10.0, dp);
    return std::round(x * scale) / scale;
}

std::string format_fixed(double x, int dp) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", dp, round_half_away(x, dp));
    return buf;
}

} // namespace dialemo
