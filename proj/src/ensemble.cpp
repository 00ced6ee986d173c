#include "dialemo/ensemble.hpp"

#include <algorithm>
#include <set>

#include "jsonl_util.hpp"

namespace dialemo {

namespace {

void validate_config(const EnsembleConfig& config) {
    if (config.voters.empty()) throw DataError("ensemble config has no voters");
    std::set<std::string> seen;
    for (const auto& v : config.voters) {
        if (v.empty()) throw DataError("ensemble config has an empty voter id");
        if (!seen.insert(v).second) throw DataError("duplicate voter '" + v + "' in ensemble config");
    }
    for (const auto& [model, weight] : config.multiplicity) {
        if (weight < 0) throw DataError("negative vote multiplicity for '" + model + "'");
    }
}

int weight_of(const EnsembleConfig& config, const std::string& model) {
    auto it = config.multiplicity.find(model);
    return it == config.multiplicity.end() ? 1 : it->second;
}

std::string resolve_source(const EnsembleConfig& config) {
    return config.explanation_source == kFirstVoter ? config.voters.front()
                                                    : config.explanation_source;
}

std::map<std::string, const Prediction*> index_by_id(const std::string& model,
                                                     const std::vector<Prediction>& preds) {
    std::map<std::string, const Prediction*> index;
    for (const auto& p : preds) {
        if (!index.emplace(p.record_id, &p).second) {
            throw DataError("model '" + model + "' has duplicate predictions for record '" +
                            p.record_id + "'");
        }
    }
    return index;
}

std::string list_capped(const std::set<std::string>& ids) {
    std::string out;
    std::size_t shown = 0;
    for (const auto& id : ids) {
        if (shown == 20) {
            out += ", and " + std::to_string(ids.size() - shown) + " more";
            break;
        }
        if (shown) out += ", ";
        out += id;
        ++shown;
    }
    return out;
}

} // namespace

std::map<std::string, std::string> hard_vote(const VoteMap& votes,
                                             const EnsembleConfig& config) {
    validate_config(config);
    std::map<std::string, std::size_t> priority;
    for (std::size_t i = 0; i < config.voters.size(); ++i) priority[config.voters[i]] = i;

    std::map<std::string, std::string> winners;
    for (const auto& [record_id, record_votes] : votes) {
        std::map<std::string, long> tally;
        std::map<std::string, std::string> by_model;
        for (const auto& [model, emotion] : record_votes) {
            if (!priority.count(model)) {
                throw DataError("vote from unknown model '" + model + "' at record '" + record_id + "'");
            }
            if (!by_model.emplace(model, emotion).second) {
                throw DataError("model '" + model + "' voted twice at record '" + record_id + "'");
            }
            int weight = weight_of(config, model);
            if (weight > 0) tally[emotion] += weight;
        }
        if (tally.empty()) throw DataError("record '" + record_id + "' has zero votes");

        long top = 0;
        for (const auto& [emotion, count] : tally) top = std::max(top, count);
        std::set<std::string> tied;
        for (const auto& [emotion, count] : tally) {
            if (count == top) tied.insert(emotion);
        }
        if (tied.size() == 1) {
            winners[record_id] = *tied.begin();
            continue;
        }
        if (config.tie_break == TieBreak::error) {
            throw DataError("tie at record '" + record_id + "' between: " + list_capped(tied));
        }
        // highest-priority voter whose (weighted) vote is among the tied emotions
        for (const auto& voter : config.voters) {
            if (weight_of(config, voter) == 0) continue;
            auto it = by_model.find(voter);
            if (it != by_model.end() && tied.count(it->second)) {
                winners[record_id] = it->second;
                break;
            }
        }
    }
    return winners;
}

std::map<std::string, std::string> select_explanations(const PredictionSets& sets,
                                                       const EnsembleConfig& config) {
    validate_config(config);
    std::string source = resolve_source(config);
    auto source_it = sets.find(source);
    if (source_it == sets.end()) {
        throw DataError("explanation source '" + source + "' has no loaded prediction set");
    }
    auto source_index = index_by_id(source, source_it->second);

    std::set<std::string> required;
    for (const auto& voter : config.voters) {
        auto it = sets.find(voter);
        if (it == sets.end()) throw DataError("no predictions loaded for voter '" + voter + "'");
        for (const auto& p : it->second) required.insert(p.record_id);
    }

    std::map<std::string, std::string> explanations;
    for (const auto& id : required) {
        auto it = source_index.find(id);
        if (it == source_index.end()) {
            throw DataError("explanation source '" + source + "' is missing record id '" + id + "'");
        }
        explanations[id] = it->second->explanation;
    }
    return explanations;
}

std::vector<Prediction> combine(const PredictionSets& sets, const EnsembleConfig& config) {
    validate_config(config);

    std::map<std::string, std::map<std::string, const Prediction*>> indexed;
    for (const auto& voter : config.voters) {
        auto it = sets.find(voter);
        if (it == sets.end()) throw DataError("no predictions loaded for voter '" + voter + "'");
        indexed[voter] = index_by_id(voter, it->second);
    }

    // all voters must cover the same record universe
    std::set<std::string> universe;
    for (const auto& [id, p] : indexed.at(config.voters.front())) universe.insert(id);
    for (const auto& voter : config.voters) {
        std::set<std::string> ids;
        for (const auto& [id, p] : indexed.at(voter)) ids.insert(id);
        if (ids != universe) {
            std::set<std::string> diff;
            std::set_symmetric_difference(ids.begin(), ids.end(), universe.begin(), universe.end(),
                                          std::inserter(diff, diff.begin()));
            throw DataError("voter '" + voter + "' covers a different record set than '" +
                            config.voters.front() + "'; differing ids: " + list_capped(diff));
        }
    }

    VoteMap votes;
    for (const auto& id : universe) {
        auto& vs = votes[id];
        for (const auto& voter : config.voters) vs.push_back({voter, indexed[voter].at(id)->emotion});
    }
    auto emotions = hard_vote(votes, config);
    auto explanations = select_explanations(sets, config);

    std::vector<Prediction> out;
    out.reserve(universe.size());
    for (const auto& id : universe) {
        out.push_back({id, "ensemble:" + config.name, emotions.at(id), explanations.at(id)});
    }
    return out;
}

std::vector<Prediction> hybrid_combine(const PredictionSets& lm_sets,
                                       const std::vector<Prediction>& lvlm_set,
                                       const EnsembleConfig& config) {
    if (lvlm_set.empty()) throw DataError("empty LVLM prediction set");
    std::string lvlm_id = lvlm_set.front().model_id;
    for (const auto& p : lvlm_set) {
        if (p.model_id != lvlm_id) {
            throw DataError("LVLM prediction set mixes model ids ('" + lvlm_id + "' vs '" +
                            p.model_id + "')");
        }
    }

    EnsembleConfig cfg = config;
    if (cfg.name.empty()) cfg.name = "hybrid";
    cfg.voters.clear();
    if (!config.voters.empty()) {
        cfg.voters = config.voters;
    } else {
        for (const auto& [model, preds] : lm_sets) cfg.voters.push_back(model);
    }
    if (std::find(cfg.voters.begin(), cfg.voters.end(), lvlm_id) != cfg.voters.end()) {
        throw DataError("LVLM model '" + lvlm_id + "' collides with an LM voter id");
    }
    cfg.voters.push_back(lvlm_id);
    cfg.explanation_source = lvlm_id;

    PredictionSets sets = lm_sets;
    sets[lvlm_id] = lvlm_set;
    return combine(sets, cfg);
}

EnsembleConfig hybrid_paper_config(const std::string& lm_ensemble_id,
                                   const std::string& lvlm_id) {
    EnsembleConfig cfg;
    cfg.name = "hybrid-paper";
    cfg.voters = {lm_ensemble_id, lvlm_id};
    cfg.tie_break = TieBreak::priority;
    cfg.explanation_source = lvlm_id;
    return cfg;
}

EnsembleConfig load_ensemble_config(const std::string& path) {
    auto in = detail::open_input(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path + ": malformed ensemble config: " + e.what());
    }
    EnsembleConfig cfg;
    try {
        if (j.contains("name")) cfg.name = j.at("name").get<std::string>();
        for (const auto& v : j.at("voters")) cfg.voters.push_back(v.get<std::string>());
        if (j.contains("tie_break")) {
            std::string tb = j.at("tie_break").get<std::string>();
            if (tb == "priority") cfg.tie_break = TieBreak::priority;
            else if (tb == "error") cfg.tie_break = TieBreak::error;
            else throw DataError("unknown tie_break '" + tb + "'");
        }
        if (j.contains("explanation_source")) {
            cfg.explanation_source = j.at("explanation_source").get<std::string>();
        }
        if (j.contains("multiplicity")) {
            for (const auto& [model, weight] : j.at("multiplicity").items()) {
                cfg.multiplicity[model] = weight.get<int>();
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path + ": invalid ensemble config: " + e.what());
    }
    try {
        validate_config(cfg);
    } catch (const DataError& e) {
        throw DataError(path + ": " + e.what());
    }
    return cfg;
}

void write_ensemble_config(const std::string& path, const EnsembleConfig& config) {
    nlohmann::json j;
    j["name"] = config.name;
    j["voters"] = config.voters;
    j["tie_break"] = config.tie_break == TieBreak::priority ? "priority" : "error";
    j["explanation_source"] = config.explanation_source;
    j["multiplicity"] = nlohmann::json::object();
    for (const auto& [model, weight] : config.multiplicity) j["multiplicity"][model] = weight;
    auto out = detail::open_output(path);
    out << j.dump(2) << '\n';
    if (!out) throw DataError("i/o failure while writing '" + path + "'");
}

} // namespace dialemo
