#include "srckt/expr/relations.hpp"

namespace srckt {

RelationMap RelationMap::defaults() {
    RelationMap m;
    m.relate(tok::Sin, tok::Cos);
    m.relate(tok::Tan, tok::Sin);
    m.relate(tok::Log, tok::Exp);
    return m;
}

void RelationMap::relate(TokenId a, TokenId b) {
    if (a == b) return;
    related_[a].insert(b);
    related_[b].insert(a);
}

const TokenSet& RelationMap::related(TokenId t) const {
    static const TokenSet empty;
    auto it = related_.find(t);
    return it == related_.end() ? empty : it->second;
}

bool RelationMap::symmetric() const {
    for (const auto& [a, set] : related_) {
        for (TokenId b : set) {
            if (a == b || !related(b).contains(a)) return false;
        }
    }
    return true;
}

TokenSet related_tokens(TokenId token, const RelationMap& map) { return map.related(token); }

std::optional<TokenId> closest_related(TokenId token) {
    switch (token) {
    case tok::Sin: return tok::Cos;
    case tok::Cos: return tok::Sin;
    case tok::Tan: return tok::Sin;
    case tok::Log: return tok::Exp;
    case tok::Exp: return tok::Log;
    default: return std::nullopt;
    }
}

bool contains_with_exclusions(const Expression& expr, TokenId target, const TokenSet& exclusions) {
    if (!contains_token(expr, target)) return false;
    for (TokenId t : exclusions) {
        if (contains_token(expr, t)) return false;
    }
    return true;
}

} // namespace srckt
