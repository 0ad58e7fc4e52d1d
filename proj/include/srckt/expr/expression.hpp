#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "srckt/expr/vocabulary.hpp"

namespace srckt {

// Node id used for numeric literal leaves. Literals never come out of the
// model; they appear after constant substitution and in hand-written text.
inline constexpr TokenId kLiteral = -1;

struct Expression {
    TokenId token = tok::X1;
    double value = 0.0; // literal value when token == kLiteral
    std::vector<Expression> children;

    static Expression leaf(TokenId t) { return Expression{t, 0.0, {}}; }
    static Expression literal(double v) { return Expression{kLiteral, v, {}}; }
    static Expression unary(TokenId op, Expression a) { return Expression{op, 0.0, {std::move(a)}}; }
    static Expression binary(TokenId op, Expression a, Expression b) {
        return Expression{op, 0.0, {std::move(a), std::move(b)}};
    }

    bool is_literal() const { return token == kLiteral; }
    std::size_t node_count() const;
    // Operator nesting depth: a leaf has depth 0.
    int depth() const;

    friend bool operator==(const Expression&, const Expression&) = default;
};

// Pre-order token sequence -> tree. Throws MalformedPrefix / UnknownToken.
Expression parse_prefix(std::span<const TokenId> tokens, const Vocabulary& vocab = Vocabulary::standard());
// Tree -> pre-order token ids. Throws MalformedPrefix if the tree holds literals.
std::vector<TokenId> to_prefix(const Expression& expr);

// Text form: space separated prefix symbols; numeric literals allowed.
Expression parse_text(std::string_view text, const Vocabulary& vocab = Vocabulary::standard());
std::string to_text(const Expression& expr, const Vocabulary& vocab = Vocabulary::standard());

// True if `tokens` forms exactly one complete prefix expression.
bool is_valid_prefix(std::span<const TokenId> tokens, const Vocabulary& vocab = Vocabulary::standard());

std::size_t count_token(const Expression& expr, TokenId token);
bool contains_token(const Expression& expr, TokenId token);
std::size_t count_constants(const Expression& expr);
// Highest 0-based variable column referenced, -1 if none.
int max_variable_index(const Expression& expr);

// Replace the pre-order node at `index` by a different operator of equal arity.
Expression replace_at(const Expression& expr, std::size_t preorder_index, TokenId replacement);

} // namespace srckt
