#pragma once

#include <optional>
#include <string>
#include <vector>

#include "srckt/expr/evaluate.hpp"
#include "srckt/expr/generate.hpp"
#include "srckt/model/model.hpp"

namespace srckt {

struct Record {
    int id = 0;
    Expression expr;
    SupportSet support;
    std::optional<int> t; // target timestep in the gold sequence, if any

    // <S> prefix tokens <F>
    std::vector<TokenId> gold() const;
};

using Dataset = std::vector<Record>;

struct DataConfig {
    GrammarConfig grammar = GrammarConfig::defaults();
    SupportOptions support{64, -10.0, 10.0, 2};
    // Longest prefix body accepted; longer skeletons are redrawn.
    int max_tokens = 14;
};

// n constant-free records. Record i draws from its own stream, so the output
// does not depend on the worker count. Skeletons whose domain cannot be
// satisfied are redrawn.
Dataset generate_training_set(const DataConfig& config, std::size_t n, std::uint64_t seed);

std::vector<TrainingExample> to_examples(const Dataset& data);

// JSON Lines: {"id", "tokens", "x", "y", "t"}. Throws IoError / MalformedPrefix.
void write_jsonl(const std::string& path, const Dataset& data);
Dataset read_jsonl(const std::string& path);
std::string to_jsonl(const Dataset& data);

} // namespace srckt
