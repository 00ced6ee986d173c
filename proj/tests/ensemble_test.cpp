#include "doctest.h"

#include <algorithm>
#include <random>

#include "dialemo/ensemble.hpp"

#include "test_util.hpp"

using namespace dialemo;

namespace {

std::vector<Prediction> preds_for(const std::string& model,
                                  const std::vector<std::pair<std::string, std::string>>& id_emotion) {
    std::vector<Prediction> out;
    for (const auto& [id, emotion] : id_emotion) {
        out.push_back({id, model, emotion, "explanation from " + model + " for " + id});
    }
    return out;
}

EnsembleConfig config_with(std::vector<std::string> voters) {
    EnsembleConfig cfg;
    cfg.name = "test";
    cfg.voters = std::move(voters);
    return cfg;
}

} // namespace

TEST_CASE("hard_vote plurality and ties") {
    EnsembleConfig cfg = config_with({"m1", "m2", "m3", "m4", "m5"});

    SUBCASE("majority wins") {
        VoteMap votes = {{"r", {{"m1", "A"}, {"m2", "A"}, {"m3", "A"}, {"m4", "B"}, {"m5", "B"}}}};
        CHECK(hard_vote(votes, cfg).at("r") == "A");
    }
    SUBCASE("priority tie-break picks the top voter's tied emotion") {
        EnsembleConfig four = config_with({"m1", "m2", "m3", "m4"});
        VoteMap votes = {{"r", {{"m1", "A"}, {"m2", "A"}, {"m3", "B"}, {"m4", "B"}}}};
        CHECK(hard_vote(votes, four).at("r") == "A");

        VoteMap flipped = {{"r", {{"m1", "B"}, {"m2", "A"}, {"m3", "A"}, {"m4", "B"}}}};
        CHECK(hard_vote(flipped, four).at("r") == "B");
    }
    SUBCASE("unanimity is independent of tie policy") {
        VoteMap votes = {{"r", {{"m1", "C"}, {"m2", "C"}, {"m3", "C"}, {"m4", "C"}, {"m5", "C"}}}};
        CHECK(hard_vote(votes, cfg).at("r") == "C");
        cfg.tie_break = TieBreak::error;
        CHECK(hard_vote(votes, cfg).at("r") == "C");
    }
    SUBCASE("tie with error policy throws") {
        EnsembleConfig two = config_with({"m1", "m2"});
        two.tie_break = TieBreak::error;
        VoteMap votes = {{"r", {{"m1", "A"}, {"m2", "B"}}}};
        CHECK_THROWS_WITH_AS(hard_vote(votes, two), doctest::Contains("r"), DataError);
    }
    SUBCASE("zero votes is an error") {
        VoteMap votes = {{"r", {}}};
        CHECK_THROWS_AS(hard_vote(votes, cfg), DataError);
    }
    SUBCASE("unknown voter is an error") {
        VoteMap votes = {{"r", {{"mystery", "A"}}}};
        CHECK_THROWS_AS(hard_vote(votes, cfg), DataError);
    }
    SUBCASE("multiplicity weights the tally") {
        EnsembleConfig weighted = config_with({"m1", "m2", "m3"});
        weighted.multiplicity = {{"m3", 3}};
        VoteMap votes = {{"r", {{"m1", "A"}, {"m2", "A"}, {"m3", "B"}}}};
        CHECK(hard_vote(votes, weighted).at("r") == "B");
    }
}

TEST_CASE("voting invariants by exhaustive enumeration") {
    const std::vector<std::string> emotions = {"A", "B", "C"};

    // no tie path with an odd number of unit-weight voters over two emotions
    for (int n_voters : {1, 3, 5}) {
        std::vector<std::string> voters;
        for (int v = 0; v < n_voters; ++v) voters.push_back("m" + std::to_string(v));
        EnsembleConfig cfg = config_with(voters);
        cfg.tie_break = TieBreak::error;
        for (int pattern = 0; pattern < (1 << n_voters); ++pattern) {
            VoteMap votes;
            auto& vs = votes["r"];
            for (int v = 0; v < n_voters; ++v) vs.push_back({voters[v], emotions[(pattern >> v) & 1]});
            CHECK_NOTHROW(hard_vote(votes, cfg));
        }
    }

    // no-tie results are invariant under voter permutation
    std::vector<std::string> voters = {"m0", "m1", "m2", "m3"};
    EnsembleConfig cfg = config_with(voters);
    EnsembleConfig error_cfg = cfg;
    error_cfg.tie_break = TieBreak::error;
    int patterns = 81; // 3^4
    for (int pattern = 0; pattern < patterns; ++pattern) {
        VoteMap votes;
        auto& vs = votes["r"];
        int p = pattern;
        for (int v = 0; v < 4; ++v, p /= 3) vs.push_back({voters[v], emotions[p % 3]});
        bool tied = false;
        std::string winner;
        try {
            winner = hard_vote(votes, error_cfg).at("r");
        } catch (const DataError&) {
            tied = true;
        }
        if (!tied) {
            auto shuffled = vs;
            std::reverse(shuffled.begin(), shuffled.end());
            VoteMap votes2 = {{"r", shuffled}};
            EnsembleConfig rev = cfg;
            std::reverse(rev.voters.begin(), rev.voters.end());
            CHECK(hard_vote(votes2, rev).at("r") == winner);
        }
    }
}

TEST_CASE("select_explanations copies from the configured source") {
    PredictionSets sets;
    sets["fold4"] = preds_for("fold4", {{"r1", "awe"}, {"r2", "fear"}});
    sets["fold5"] = preds_for("fold5", {{"r1", "fear"}, {"r2", "fear"}});

    EnsembleConfig cfg = config_with({"fold4", "fold5"});
    cfg.explanation_source = "fold4";
    auto exps = select_explanations(sets, cfg);
    CHECK(exps.at("r1") == "explanation from fold4 for r1");
    CHECK(exps.at("r2") == "explanation from fold4 for r2");

    SUBCASE("first_voter policy resolves to the top voter") {
        cfg.explanation_source = kFirstVoter;
        CHECK(select_explanations(sets, cfg).at("r1") == "explanation from fold4 for r1");
    }
    SUBCASE("source may be a non-voter") {
        sets["narrator"] = preds_for("narrator", {{"r1", "awe"}, {"r2", "awe"}});
        cfg.explanation_source = "narrator";
        CHECK(select_explanations(sets, cfg).at("r2") == "explanation from narrator for r2");
    }
    SUBCASE("source missing a record id names it") {
        sets["fold4"].pop_back();
        cfg.explanation_source = "fold4";
        CHECK_THROWS_WITH_AS(select_explanations(sets, cfg), doctest::Contains("r2"), DataError);
    }
}

TEST_CASE("combine builds one prediction per record") {
    PredictionSets sets;
    sets["m1"] = preds_for("m1", {{"r1", "A"}, {"r2", "A"}, {"r3", "B"}});
    sets["m2"] = preds_for("m2", {{"r1", "A"}, {"r2", "B"}, {"r3", "B"}});
    sets["m3"] = preds_for("m3", {{"r1", "B"}, {"r2", "A"}, {"r3", "B"}});

    EnsembleConfig cfg = config_with({"m1", "m2", "m3"});
    auto out = combine(sets, cfg);
    REQUIRE(out.size() == 3);
    CHECK(out[0].record_id == "r1");
    CHECK(out[0].emotion == "A");
    CHECK(out[0].model_id == "ensemble:test");
    CHECK(out[1].emotion == "A");
    CHECK(out[2].emotion == "B");
    // explanations come from the first voter by default
    CHECK(out[0].explanation == "explanation from m1 for r1");

    SUBCASE("single voter relabels its predictions") {
        EnsembleConfig solo = config_with({"m2"});
        auto relabeled = combine(sets, solo);
        REQUIRE(relabeled.size() == 3);
        for (std::size_t i = 0; i < relabeled.size(); ++i) {
            CHECK(relabeled[i].model_id == "ensemble:test");
            CHECK(relabeled[i].emotion == sets["m2"][i].emotion);
            CHECK(relabeled[i].explanation == sets["m2"][i].explanation);
        }
    }
    SUBCASE("two voters disagreeing everywhere follow priority") {
        PredictionSets duel;
        duel["m1"] = preds_for("m1", {{"r1", "A"}, {"r2", "B"}});
        duel["m2"] = preds_for("m2", {{"r1", "B"}, {"r2", "A"}});
        auto winner = combine(duel, config_with({"m1", "m2"}));
        CHECK(winner[0].emotion == "A");
        CHECK(winner[1].emotion == "B");
    }
    SUBCASE("coverage mismatch lists the symmetric difference") {
        sets["m3"] = preds_for("m3", {{"r1", "B"}, {"r4", "A"}});
        CHECK_THROWS_WITH_AS(combine(sets, cfg), doctest::Contains("r4"), DataError);
    }
    SUBCASE("missing voter set") {
        CHECK_THROWS_AS(combine(sets, config_with({"m1", "ghost"})), DataError);
    }
    SUBCASE("duplicate voters rejected") {
        CHECK_THROWS_AS(combine(sets, config_with({"m1", "m1"})), DataError);
    }
    SUBCASE("zero-multiplicity duplicate voter leaves the output unchanged") {
        PredictionSets extended = sets;
        extended["shadow"] = preds_for("m1", {{"r1", "A"}, {"r2", "A"}, {"r3", "B"}});
        for (auto& p : extended["shadow"]) p.model_id = "shadow";
        EnsembleConfig cfg2 = config_with({"shadow", "m1", "m2", "m3"});
        cfg2.multiplicity["shadow"] = 0;
        cfg2.explanation_source = "m1";
        EnsembleConfig base = config_with({"m1", "m2", "m3"});
        base.explanation_source = "m1";
        auto with_shadow = combine(extended, cfg2);
        auto without = combine(sets, base);
        REQUIRE(with_shadow.size() == without.size());
        for (std::size_t i = 0; i < without.size(); ++i) {
            CHECK(with_shadow[i].emotion == without[i].emotion);
            CHECK(with_shadow[i].explanation == without[i].explanation);
        }
    }
}

TEST_CASE("hybrid_combine votes across LM folds and the LVLM set") {
    PredictionSets lm;
    lm["fold1"] = preds_for("fold1", {{"r1", "A"}, {"r2", "A"}});
    lm["fold2"] = preds_for("fold2", {{"r1", "A"}, {"r2", "A"}});
    lm["fold3"] = preds_for("fold3", {{"r1", "A"}, {"r2", "B"}});
    lm["fold4"] = preds_for("fold4", {{"r1", "B"}, {"r2", "B"}});
    lm["fold5"] = preds_for("fold5", {{"r1", "B"}, {"r2", "B"}});
    auto lvlm = preds_for("lvlm", {{"r1", "B"}, {"r2", "A"}});

    EnsembleConfig cfg;
    cfg.name = "hybrid";
    auto out = hybrid_combine(lm, lvlm, cfg);
    REQUIRE(out.size() == 2);
    // r1: folds A,A,A,B,B + lvlm B -> 3-3 tie -> fold1 (highest priority) voted A
    CHECK(out[0].record_id == "r1");
    CHECK(out[0].emotion == "A");
    // r2: folds A,A,B,B,B + lvlm A -> 3-3 tie -> fold1 voted A
    CHECK(out[1].emotion == "A");
    // explanations always come from the LVLM set
    CHECK(out[0].explanation == "explanation from lvlm for r1");
    CHECK(out[1].explanation == "explanation from lvlm for r2");

    SUBCASE("unanimous agreement") {
        auto agree = preds_for("lvlm", {{"r1", "A"}, {"r2", "A"}});
        PredictionSets all_a;
        all_a["fold1"] = preds_for("fold1", {{"r1", "A"}, {"r2", "A"}});
        auto res = hybrid_combine(all_a, agree, cfg);
        CHECK(res[0].emotion == "A");
        CHECK(res[1].emotion == "A");
    }
}

TEST_CASE("hybrid_paper_config favours the LM ensemble on ties") {
    auto cfg = hybrid_paper_config("ensemble:lm", "lvlm");
    CHECK(cfg.name == "hybrid-paper");
    CHECK(cfg.voters == std::vector<std::string>{"ensemble:lm", "lvlm"});
    CHECK(cfg.tie_break == TieBreak::priority);
    CHECK(cfg.explanation_source == "lvlm");

    PredictionSets sets;
    sets["ensemble:lm"] = preds_for("ensemble:lm", {{"r1", "A"}, {"r2", "B"}});
    sets["lvlm"] = preds_for("lvlm", {{"r1", "B"}, {"r2", "B"}});
    auto out = combine(sets, cfg);
    // disagreement goes to the LM ensemble, explanations to the LVLM
    CHECK(out[0].emotion == "A");
    CHECK(out[0].explanation == "explanation from lvlm for r1");
    CHECK(out[1].emotion == "B");
}

TEST_CASE("ensemble config file round-trips") {
    test_util::TempDir dir;
    EnsembleConfig cfg;
    cfg.name = "lm-ensemble";
    cfg.voters = {"fold1", "fold2", "fold3", "fold4", "fold5"};
    cfg.tie_break = TieBreak::error;
    cfg.explanation_source = "fold4";
    cfg.multiplicity = {{"fold1", 2}};

    auto path = dir.file("ensemble.json");
    write_ensemble_config(path, cfg);
    auto loaded = load_ensemble_config(path);
    CHECK(loaded.name == cfg.name);
    CHECK(loaded.voters == cfg.voters);
    CHECK(loaded.tie_break == cfg.tie_break);
    CHECK(loaded.explanation_source == cfg.explanation_source);
    CHECK(loaded.multiplicity == cfg.multiplicity);

    SUBCASE("empty voters rejected") {
        test_util::spit(path, R"({"name":"x","voters":[]})");
        CHECK_THROWS_AS(load_ensemble_config(path), DataError);
    }
    SUBCASE("unknown tie_break token rejected") {
        test_util::spit(path, R"({"name":"x","voters":["a"],"tie_break":"coin-flip"})");
        CHECK_THROWS_AS(load_ensemble_config(path), DataError);
    }
}
