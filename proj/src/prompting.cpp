#include "dialemo/prompting.hpp"

#include <algorithm>
#include <cctype>

#include "jsonl_util.hpp"

namespace dialemo {

namespace {

constexpr const char* kBecause = " because ";
constexpr const char* kChoice = "Choice:";
constexpr const char* kExplanation = "Explanation:";

bool ascii_punct(char c) {
    return (c >= '!' && c <= '/') || (c >= ':' && c <= '@') ||
           (c >= '[' && c <= '`') || (c >= '{' && c <= '~');
}

bool ascii_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string fold_ascii(const std::string& s) {
    std::string out = s;
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c + 32);
    }
    return out;
}

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && ascii_space(s[b])) ++b;
    while (e > b && ascii_space(s[e - 1])) --e;
    return s.substr(b, e - b);
}

} // namespace

std::string flatten_dialog(const std::vector<DialogTurn>& dialog) {
    std::string out;
    for (const auto& turn : dialog) {
        if (!out.empty()) out += ' ';
        out += turn.speaker == Speaker::questioner ? "Q: " : "A: ";
        out += turn.text;
    }
    return out;
}

PromptPair render_lm_prompt(const DialogRecord& rec) {
    validate_record(rec);
    PromptPair pair;
    pair.record_id = rec.id;
    for (const auto& cand : rec.emotion_candidates) {
        pair.input_text += "<emotion>";
        pair.input_text += cand;
    }
    pair.input_text += "<caption>";
    pair.input_text += rec.caption;
    pair.input_text += "\n<conversation> ";
    pair.input_text += flatten_dialog(rec.dialog);
    pair.input_text += " I feel";
    pair.response_text = " " + rec.label_emotion + kBecause + rec.explanation;
    return pair;
}

PromptPair render_lvlm_prompt(const DialogRecord& rec) {
    validate_record(rec);
    PromptPair pair;
    pair.record_id = rec.id;
    pair.input_text =
        "<image>Please choose the most suitable emotion and provide explanation "
        "according to the image above and conversation below.\n"
        "Emotion options:";
    for (std::size_t i = 0; i < rec.emotion_candidates.size(); ++i) {
        pair.input_text += ' ';
        pair.input_text += std::to_string(i + 1);
        pair.input_text += ". ";
        pair.input_text += rec.emotion_candidates[i];
    }
    pair.input_text += "\n\nConversation:\n";
    pair.input_text += flatten_dialog(rec.dialog);
    pair.response_text = std::string(kChoice) + rec.label_emotion + "\n" + kExplanation + " " + rec.explanation;
    return pair;
}

std::string normalize_emotion(const std::string& span,
                              const std::vector<std::string>& candidates) {
    if (candidates.empty()) throw ParseError("no candidates to normalize against");
    std::string t = trim(span);
    while (!t.empty() && (ascii_punct(t.back()) || ascii_space(t.back()))) t.pop_back();
    std::string folded = fold_ascii(t);
    if (folded.empty()) throw ParseError("empty emotion span");

    const std::string* exact = nullptr;
    for (const auto& cand : candidates) {
        if (fold_ascii(cand) == folded) {
            if (exact) throw ParseError("emotion span '" + span + "' matches multiple candidates");
            exact = &cand;
        }
    }
    if (exact) return *exact;

    const std::string* prefix = nullptr;
    for (const auto& cand : candidates) {
        std::string fc = fold_ascii(cand);
        if (fc.starts_with(folded) || folded.starts_with(fc)) {
            if (prefix) throw ParseError("emotion span '" + span + "' matches multiple candidates");
            prefix = &cand;
        }
    }
    if (!prefix) throw ParseError("emotion span '" + span + "' matches no candidate");
    return *prefix;
}

ParsedResponse parse_lm_response(const std::string& text,
                                 const std::vector<std::string>& candidates,
                                 ParseMode mode) {
    std::string emotion_span;
    std::string explanation;
    auto pos = text.find(kBecause);
    if (pos == std::string::npos) {
        if (mode == ParseMode::strict) throw ParseError("missing ' because ' separator");
        emotion_span = text;
    } else {
        emotion_span = text.substr(0, pos);
        explanation = trim(text.substr(pos + std::string(kBecause).size()));
    }
    if (mode == ParseMode::strict && explanation.empty()) throw ParseError("empty explanation");
    return {normalize_emotion(emotion_span, candidates), explanation};
}

ParsedResponse parse_lvlm_response(const std::string& text,
                                   const std::vector<std::string>& candidates,
                                   ParseMode mode) {
    ParsedResponse result;

    auto choice_pos = text.find(kChoice);
    if (choice_pos != std::string::npos) {
        std::size_t begin = choice_pos + std::string(kChoice).size();
        std::size_t end = text.find('\n', begin);
        std::string span = trim(text.substr(begin, end == std::string::npos ? end : end - begin));
        bool numeric = !span.empty() && std::all_of(span.begin(), span.end(), [](char c) {
            return c >= '0' && c <= '9';
        });
        if (numeric) {
            std::size_t index = std::stoul(span);
            if (index < 1 || index > candidates.size()) {
                throw ParseError("choice index '" + span + "' outside 1.." +
                                 std::to_string(candidates.size()));
            }
            result.emotion = candidates[index - 1];
        } else {
            result.emotion = normalize_emotion(span, candidates);
        }
    } else if (mode == ParseMode::strict) {
        throw ParseError("missing 'Choice:' marker");
    } else {
        // fall back to the first candidate found anywhere in the text
        std::string folded = fold_ascii(text);
        for (const auto& cand : candidates) {
            if (folded.find(fold_ascii(cand)) != std::string::npos) {
                result.emotion = cand;
                break;
            }
        }
        if (result.emotion.empty()) throw ParseError("no candidate found in response text");
    }

    auto exp_pos = text.find(kExplanation);
    if (exp_pos != std::string::npos) {
        result.explanation = trim(text.substr(exp_pos + std::string(kExplanation).size()));
    } else if (mode == ParseMode::strict) {
        throw ParseError("missing 'Explanation:' marker");
    }
    if (mode == ParseMode::strict && result.explanation.empty()) throw ParseError("empty explanation");
    return result;
}

void write_prompts(const std::string& path, const std::vector<PromptPair>& prompts) {
    auto out = detail::open_output(path);
    for (const auto& p : prompts) {
        nlohmann::json j;
        j["id"] = p.record_id;
        j["input"] = p.input_text;
        j["response"] = p.response_text;
        out << j.dump() << '\n';
    }
    if (!out) throw DataError("i/o failure while writing '" + path + "'");
}

std::vector<RawOutput> load_raw_outputs(const std::string& path) {
    std::vector<RawOutput> outputs;
    detail::for_each_jsonl(path, [&](std::size_t, const nlohmann::json& j) {
        RawOutput raw;
        raw.record_id = detail::require_string(j, "id");
        raw.model_id = detail::require_string(j, "model");
        raw.text = detail::require_string(j, "text");
        if (raw.record_id.empty()) throw DataError("empty 'id'");
        if (raw.model_id.empty()) throw DataError("empty 'model'");
        outputs.push_back(std::move(raw));
    });
    return outputs;
}

void write_raw_outputs(const std::string& path, const std::vector<RawOutput>& outputs) {
    auto out = detail::open_output(path);
    for (const auto& raw : outputs) {
        nlohmann::json j;
        j["id"] = raw.record_id;
        j["model"] = raw.model_id;
        j["text"] = raw.text;
        out << j.dump() << '\n';
    }
    if (!out) throw DataError("i/o failure while writing '" + path + "'");
}

std::vector<Prediction> load_predictions(const std::string& path) {
    std::vector<Prediction> predictions;
    detail::for_each_jsonl(path, [&](std::size_t, const nlohmann::json& j) {
        Prediction p;
        p.record_id = detail::require_string(j, "id");
        p.model_id = detail::require_string(j, "model");
        p.emotion = detail::require_string(j, "emotion");
        p.explanation = detail::optional_string(j, "explanation");
        if (p.record_id.empty()) throw DataError("empty 'id'");
        if (p.model_id.empty()) throw DataError("empty 'model'");
        if (p.emotion.empty()) throw DataError("empty 'emotion'");
        predictions.push_back(std::move(p));
    });
    return predictions;
}

void write_predictions(const std::string& path, const std::vector<Prediction>& predictions) {
    auto out = detail::open_output(path);
    for (const auto& p : predictions) {
        nlohmann::json j;
        j["id"] = p.record_id;
        j["model"] = p.model_id;
        j["emotion"] = p.emotion;
        j["explanation"] = p.explanation;
        out << j.dump() << '\n';
    }
    if (!out) throw DataError("i/o failure while writing '" + path + "'");
}

} // namespace dialemo
