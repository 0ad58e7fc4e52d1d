#pragma once

#include <map>
#include <optional>
#include <set>

#include "srckt/expr/expression.hpp"

namespace srckt {

using TokenSet = std::set<TokenId>;

// Semantically related operators. Symmetric, irreflexive.
class RelationMap {
public:
    // sin-cos, tan-sin, log-exp.
    static RelationMap defaults();

    void relate(TokenId a, TokenId b);
    const TokenSet& related(TokenId t) const;
    bool symmetric() const;

private:
    std::map<TokenId, TokenSet> related_;
};

TokenSet related_tokens(TokenId token, const RelationMap& map = RelationMap::defaults());

// Designated nearest counterfactual (sin->cos, cos->sin, tan->sin, log->exp,
// exp->log); nullopt when the token has no partner.
std::optional<TokenId> closest_related(TokenId token);

bool contains_with_exclusions(const Expression& expr, TokenId target, const TokenSet& exclusions);

} // namespace srckt
