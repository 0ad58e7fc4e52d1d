#include "srckt/expr/expression.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <sstream>

#include "srckt/util/error.hpp"

namespace srckt {
namespace {

// Parses one subtree starting at `pos`; advances `pos` past it.
template <class Leaf>
Expression parse_node(std::size_t n, std::size_t& pos, const Leaf& read_leaf, const Vocabulary& vocab) {
    if (pos >= n) fail(ErrorCode::MalformedPrefix, "truncated sequence");
    Expression node = read_leaf(pos);
    ++pos;
    if (node.is_literal()) return node;
    const int arity = vocab.arity(node.token);
    if (arity == 0 && (node.token == tok::Start || node.token == tok::End)) {
        fail(ErrorCode::MalformedPrefix, "control token inside expression");
    }
    node.children.reserve(static_cast<std::size_t>(arity));
    for (int i = 0; i < arity; ++i) node.children.push_back(parse_node(n, pos, read_leaf, vocab));
    return node;
}

void preorder(const Expression& e, std::vector<TokenId>& out) {
    if (e.is_literal()) fail(ErrorCode::MalformedPrefix, "numeric literal has no vocabulary token");
    out.push_back(e.token);
    for (const auto& c : e.children) preorder(c, out);
}

void text_preorder(const Expression& e, const Vocabulary& vocab, std::string& out) {
    if (!out.empty()) out += ' ';
    if (e.is_literal()) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", e.value);
        out += buf;
    } else {
        out += vocab.symbol(e.token);
    }
    for (const auto& c : e.children) text_preorder(c, vocab, out);
}

Expression replace_rec(const Expression& e, std::size_t& counter, std::size_t target, TokenId replacement) {
    Expression out = e;
    if (counter++ == target) {
        const auto& vocab = Vocabulary::standard();
        if (e.is_literal() || vocab.arity(e.token) != vocab.arity(replacement)) {
            fail(ErrorCode::MalformedPrefix, "replacement arity differs");
        }
        out.token = replacement;
    }
    for (std::size_t i = 0; i < e.children.size(); ++i) {
        out.children[i] = replace_rec(e.children[i], counter, target, replacement);
    }
    return out;
}

} // namespace

std::size_t Expression::node_count() const {
    std::size_t n = 1;
    for (const auto& c : children) n += c.node_count();
    return n;
}

int Expression::depth() const {
    int d = 0;
    for (const auto& c : children) d = std::max(d, c.depth() + 1);
    return d;
}

Expression parse_prefix(std::span<const TokenId> tokens, const Vocabulary& vocab) {
    if (tokens.empty()) fail(ErrorCode::MalformedPrefix, "empty sequence");
    for (TokenId t : tokens) {
        if (!vocab.valid(t)) fail(ErrorCode::UnknownToken, "token id " + std::to_string(t));
    }
    std::size_t pos = 0;
    auto read = [&](std::size_t i) { return Expression::leaf(tokens[i]); };
    Expression e = parse_node(tokens.size(), pos, read, vocab);
    if (pos != tokens.size()) fail(ErrorCode::MalformedPrefix, "trailing tokens");
    return e;
}

std::vector<TokenId> to_prefix(const Expression& expr) {
    std::vector<TokenId> out;
    preorder(expr, out);
    return out;
}

Expression parse_text(std::string_view text, const Vocabulary& vocab) {
    std::vector<std::string> words;
    std::istringstream in{std::string(text)};
    for (std::string w; in >> w;) words.push_back(w);
    if (words.empty()) fail(ErrorCode::MalformedPrefix, "empty sequence");
    auto read = [&](std::size_t i) {
        const std::string& w = words[i];
        if (auto t = vocab.find(w)) return Expression::leaf(*t);
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(w.data(), w.data() + w.size(), v);
        if (ec != std::errc{} || ptr != w.data() + w.size()) fail(ErrorCode::UnknownToken, w);
        return Expression::literal(v);
    };
    std::size_t pos = 0;
    Expression e = parse_node(words.size(), pos, read, vocab);
    if (pos != words.size()) fail(ErrorCode::MalformedPrefix, "trailing tokens");
    return e;
}

std::string to_text(const Expression& expr, const Vocabulary& vocab) {
    std::string out;
    text_preorder(expr, vocab, out);
    return out;
}

bool is_valid_prefix(std::span<const TokenId> tokens, const Vocabulary& vocab) {
    if (tokens.empty()) return false;
    long need = 1;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const TokenId t = tokens[i];
        if (!vocab.valid(t) || t == tok::Start || t == tok::End) return false;
        if (need <= 0) return false;
        need += vocab.arity(t) - 1;
    }
    return need == 0;
}

std::size_t count_token(const Expression& expr, TokenId token) {
    std::size_t n = expr.token == token ? 1 : 0;
    for (const auto& c : expr.children) n += count_token(c, token);
    return n;
}

bool contains_token(const Expression& expr, TokenId token) {
    if (expr.token == token) return true;
    return std::any_of(expr.children.begin(), expr.children.end(),
                       [&](const Expression& c) { return contains_token(c, token); });
}

std::size_t count_constants(const Expression& expr) { return count_token(expr, tok::C); }

int max_variable_index(const Expression& expr) {
    int m = Vocabulary::standard().variable_index(expr.token);
    if (expr.is_literal()) m = -1;
    for (const auto& c : expr.children) m = std::max(m, max_variable_index(c));
    return m;
}

Expression replace_at(const Expression& expr, std::size_t preorder_index, TokenId replacement) {
    std::size_t counter = 0;
    Expression out = replace_rec(expr, counter, preorder_index, replacement);
    if (preorder_index >= counter) fail(ErrorCode::MalformedPrefix, "index past end of expression");
    return out;
}

} // namespace srckt
