#pragma once

#include <string>
#include <vector>

#include "dialemo/dataset.hpp"
#include "dialemo/error.hpp"

namespace dialemo {

// Everything the model conditions on plus the supervision target, split so
// that external trainers can mask the input when computing the loss.
struct PromptPair {
    std::string record_id;
    std::string input_text;
    std::string response_text;
};

struct Prediction {
    std::string record_id;
    std::string model_id;
    std::string emotion;
    std::string explanation;

    bool operator==(const Prediction&) const = default;
};

enum class ParseMode { strict, lenient };

// "Q: ..." / "A: ..." per turn, joined by single spaces.
std::string flatten_dialog(const std::vector<DialogTurn>& dialog);

// Text-only instruction layout:
//   <emotion>c1<emotion>c2...<caption>CAPTION\n<conversation> DIALOG I feel
// response: " LABEL because EXPLANATION". Byte layout is normative; identical
// records render to identical bytes.
PromptPair render_lm_prompt(const DialogRecord& rec);

// Vision-language instruction layout; the literal <image> token is a
// placeholder substituted by the external inference engine.
PromptPair render_lvlm_prompt(const DialogRecord& rec);

// Trims whitespace and terminal punctuation, case-folds, then resolves the
// span against the candidates: exact folded match first, unique prefix match
// second (either direction). Throws ParseError on zero or multiple matches.
std::string normalize_emotion(const std::string& span,
                              const std::vector<std::string>& candidates);

struct ParsedResponse {
    std::string emotion;
    std::string explanation;
};

// Splits on the first " because " occurrence. Strict mode rejects a missing
// separator and an empty explanation; lenient mode treats the whole text as
// the emotion span / allows an empty explanation.
ParsedResponse parse_lm_response(const std::string& text,
                                 const std::vector<std::string>& candidates,
                                 ParseMode mode = ParseMode::strict);

// Emotion span: after the first "Choice:" up to end of line; a bare 1-based
// index selects a candidate directly. Explanation: everything after the first
// "Explanation:" marker, trimmed. Lenient mode falls back to scanning the
// text for a candidate substring when "Choice:" is missing and allows a
// missing or empty explanation.
ParsedResponse parse_lvlm_response(const std::string& text,
                                   const std::vector<std::string>& candidates,
                                   ParseMode mode = ParseMode::strict);

// --- file formats ---

// Prompt file: one {"id", "input", "response"} object per line.
void write_prompts(const std::string& path, const std::vector<PromptPair>& prompts);

// Raw model output awaiting parsing: {"id", "model", "text"} per line.
struct RawOutput {
    std::string record_id;
    std::string model_id;
    std::string text;
};

std::vector<RawOutput> load_raw_outputs(const std::string& path);
void write_raw_outputs(const std::string& path, const std::vector<RawOutput>& outputs);

// Prediction file: {"id", "model", "emotion", "explanation"} per line.
std::vector<Prediction> load_predictions(const std::string& path);
void write_predictions(const std::string& path, const std::vector<Prediction>& predictions);

} // namespace dialemo
