#include "srckt/expr/function_class.hpp"

namespace srckt {

bool is_monomial(const Expression& e) {
    if (e.is_literal()) return e.value > 0.0;
    if (e.token == tok::C) return true;
    if (Vocabulary::standard().is_variable(e.token)) return true;
    switch (e.token) {
    case tok::Mul:
    case tok::Div: return is_monomial(e.children[0]) && is_monomial(e.children[1]);
    // Exponent must be constant: a literal, or c (the model cannot emit literals).
    case tok::Pow: return is_monomial(e.children[0]) && (e.children[1].is_literal() || e.children[1].token == tok::C);
    case tok::Sqrt: return is_monomial(e.children[0]);
    default: return false;
    }
}

bool is_posynomial(const Expression& e) {
    if (is_monomial(e)) return true;
    return e.token == tok::Add && is_posynomial(e.children[0]) && is_posynomial(e.children[1]);
}

} // namespace srckt
