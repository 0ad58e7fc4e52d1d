#pragma once

#include "srckt/expr/expression.hpp"

namespace srckt {

// Structural checks. A monomial is a product/quotient of variables, positive
// constants and powers with literal exponents; a posynomial is a sum of
// monomials. Every monomial is a posynomial.
bool is_monomial(const Expression& expr);
bool is_posynomial(const Expression& expr);

} // namespace srckt
