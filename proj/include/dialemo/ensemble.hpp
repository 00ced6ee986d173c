#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dialemo/error.hpp"
#include "dialemo/prompting.hpp"

namespace dialemo {

// explanation_source value selecting the first (highest-priority) voter.
inline const std::string kFirstVoter = "first_voter";

enum class TieBreak { priority, error };

struct EnsembleConfig {
    std::string name = "vote";
    // Voter order doubles as tie-break priority, highest first.
    std::vector<std::string> voters;
    TieBreak tie_break = TieBreak::priority;
    // A model id (not necessarily a voter) or kFirstVoter.
    std::string explanation_source = kFirstVoter;
    // Vote weight per model; absent means 1. A weight of 0 removes the voter
    // from both the tally and the tie-break path.
    std::map<std::string, int> multiplicity;
};

// record id -> (model id, emotion) votes.
using VoteMap = std::map<std::string, std::vector<std::pair<std::string, std::string>>>;

// model id -> that model's prediction set.
using PredictionSets = std::map<std::string, std::vector<Prediction>>;

// Plurality winner per record, weighted by multiplicity. On a tied top tally,
// TieBreak::priority picks the tied emotion voted by the highest-priority
// voter; TieBreak::error throws.
std::map<std::string, std::string> hard_vote(const VoteMap& votes,
                                             const EnsembleConfig& config);

// Explanation per record, copied verbatim from the configured source set.
// The required id universe is the union of the voters' record ids.
std::map<std::string, std::string> select_explanations(const PredictionSets& sets,
                                                       const EnsembleConfig& config);

// One prediction per record id: emotion from hard_vote, explanation from
// select_explanations, model id "ensemble:" + config.name. Output is sorted
// by record id. All voters must cover the same record-id universe.
std::vector<Prediction> combine(const PredictionSets& sets, const EnsembleConfig& config);

// combine() with voters = LM voters plus the LVLM model and explanations
// taken from the LVLM set. config supplies name, tie_break and
// multiplicities; empty config.voters means all LM sets in sorted order.
std::vector<Prediction> hybrid_combine(const PredictionSets& lm_sets,
                                       const std::vector<Prediction>& lvlm_set,
                                       const EnsembleConfig& config);

// Two voters [LM ensemble, LVLM], priority tie-break favouring the LM side,
// explanations from the LVLM model.
EnsembleConfig hybrid_paper_config(const std::string& lm_ensemble_id,
                                   const std::string& lvlm_id);

// Config file: {"name", "voters", "tie_break", "explanation_source",
// "multiplicity"}.
EnsembleConfig load_ensemble_config(const std::string& path);
void write_ensemble_config(const std::string& path, const EnsembleConfig& config);

} // namespace dialemo
