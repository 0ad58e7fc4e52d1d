#pragma once

#include <string>

#include "json.hpp"
#include "srckt/expr/relations.hpp"
#include "srckt/train/dataset.hpp"

namespace srckt {

enum class FunctionClass { Monomial, Posynomial };

struct TargetSpec {
    enum class Kind { SingleToken, Class };

    Kind kind = Kind::SingleToken;
    TokenId token = tok::Sin;
    TokenSet exclusions;
    FunctionClass function_class = FunctionClass::Monomial;

    static TargetSpec single(TokenId token, const RelationMap& relations = RelationMap::defaults());
    static TargetSpec of_class(FunctionClass cls);
    // "sin", "add", ..., "monomial", "posynomial". Throws ConfigError.
    static TargetSpec parse(const std::string& name, const RelationMap& relations = RelationMap::defaults());

    std::string name() const;
    // Contains target and none of the exclusions, or satisfies the class predicate.
    bool matches(const Expression& expr) const;
    nlohmann::json to_json() const;
};

struct SelectionOptions {
    int beam_size = 32;
    int top_k = 3;
    std::size_t n_discovery = 100;
    std::size_t n_generalisation = 400;
    // Also require the target token within the teacher-forced top-k at t.
    bool require_teacher_forced = true;
    std::uint64_t equivalence_seed = 0;
};

struct TargetDataset {
    TargetSpec spec;
    Dataset discovery;
    Dataset generalisation;
    std::size_t scanned = 0; // pool records examined
};

// True if the gold body is among the top-k beam hypotheses, either token for
// token or pointwise equivalent.
bool reconstructs(const Weights& w, const Record& r, const SelectionOptions& opts);

// Scans the pool in order; the first n_discovery qualifying records form the
// discovery split and the next n_generalisation the generalisation split.
// Single-token targets get t = first position of the token in the gold
// sequence. Throws InsufficientPool with the number that qualified.
TargetDataset select_target_dataset(const Weights& w, const Dataset& pool, const TargetSpec& spec,
                                    const SelectionOptions& opts = {});

// Rechecks the spec predicate, t, and reconstruction for every stored record.
bool verify_target_dataset(const Weights& w, const TargetDataset& data, const SelectionOptions& opts = {});

// Position of the first occurrence of `token` in the gold sequence, or -1.
int first_timestep(const Record& r, TokenId token);

} // namespace srckt
