#include "srckt/expr/vocabulary.hpp"

#include <sstream>

#include "srckt/util/error.hpp"

namespace srckt {

Vocabulary::Vocabulary()
    : symbols_{"<S>", "<F>", "x1", "x2", "x3", "c", "sin", "cos", "tan",
               "log", "exp", "sqrt", "abs", "add", "mul", "div", "pow"},
      arity_{0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1, 1, 2, 2, 2, 2} {
    for (TokenId t = 0; t < static_cast<TokenId>(tok::Count); ++t) {
        if (arity_[t] == 1) unary_.push_back(t);
        if (arity_[t] == 2) binary_.push_back(t);
    }
}

const Vocabulary& Vocabulary::standard() {
    static const Vocabulary vocab;
    return vocab;
}

std::string_view Vocabulary::symbol(TokenId id) const {
    if (!valid(id)) fail(ErrorCode::UnknownToken, "token id " + std::to_string(id));
    return symbols_[id];
}

int Vocabulary::arity(TokenId id) const {
    if (!valid(id)) fail(ErrorCode::UnknownToken, "token id " + std::to_string(id));
    return arity_[id];
}

std::optional<TokenId> Vocabulary::find(std::string_view symbol) const {
    for (TokenId t = 0; t < static_cast<TokenId>(tok::Count); ++t) {
        if (symbols_[t] == symbol) return t;
    }
    return std::nullopt;
}

TokenId Vocabulary::id(std::string_view symbol) const {
    if (auto t = find(symbol)) return *t;
    fail(ErrorCode::UnknownToken, std::string(symbol));
}

std::vector<TokenId> Vocabulary::ops_of_arity(int arity) const {
    return arity == 1 ? unary_ : arity == 2 ? binary_ : std::vector<TokenId>{};
}

std::string Vocabulary::join(const std::vector<TokenId>& ids) const {
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i) out += ' ';
        out += symbol(ids[i]);
    }
    return out;
}

std::vector<TokenId> Vocabulary::split(std::string_view text) const {
    std::vector<TokenId> out;
    std::istringstream in{std::string(text)};
    std::string word;
    while (in >> word) out.push_back(id(word));
    return out;
}

} // namespace srckt
