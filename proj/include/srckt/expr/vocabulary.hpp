#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace srckt {

using TokenId = int;

// Fixed output vocabulary of the toy model. Ids are dense and stable; the
// weight file and dataset files depend on this order.
namespace tok {
inline constexpr TokenId Start = 0;
inline constexpr TokenId End = 1;
inline constexpr TokenId X1 = 2;
inline constexpr TokenId X2 = 3;
inline constexpr TokenId X3 = 4;
inline constexpr TokenId C = 5;
inline constexpr TokenId Sin = 6;
inline constexpr TokenId Cos = 7;
inline constexpr TokenId Tan = 8;
inline constexpr TokenId Log = 9;
inline constexpr TokenId Exp = 10;
inline constexpr TokenId Sqrt = 11;
inline constexpr TokenId Abs = 12;
inline constexpr TokenId Add = 13;
inline constexpr TokenId Mul = 14;
inline constexpr TokenId Div = 15;
inline constexpr TokenId Pow = 16;
inline constexpr std::size_t Count = 17;
} // namespace tok

inline constexpr int kMaxVariables = 3;

class Vocabulary {
public:
    static const Vocabulary& standard();

    std::size_t size() const { return tok::Count; }
    std::string_view symbol(TokenId id) const;
    int arity(TokenId id) const;
    bool valid(TokenId id) const { return id >= 0 && static_cast<std::size_t>(id) < size(); }

    // Throws UnknownToken.
    TokenId id(std::string_view symbol) const;
    std::optional<TokenId> find(std::string_view symbol) const;

    bool is_variable(TokenId id) const { return id >= tok::X1 && id <= tok::X3; }
    // 0-based column of a variable token, -1 otherwise.
    int variable_index(TokenId id) const { return is_variable(id) ? id - tok::X1 : -1; }
    TokenId variable(int index) const { return tok::X1 + index; }
    bool is_operator(TokenId id) const { return arity(id) > 0; }

    const std::vector<TokenId>& unary_ops() const { return unary_; }
    const std::vector<TokenId>& binary_ops() const { return binary_; }
    std::vector<TokenId> ops_of_arity(int arity) const;

    // Space separated symbols.
    std::string join(const std::vector<TokenId>& ids) const;
    // Throws UnknownToken.
    std::vector<TokenId> split(std::string_view text) const;

private:
    Vocabulary();

    std::array<std::string_view, tok::Count> symbols_;
    std::array<int, tok::Count> arity_;
    std::vector<TokenId> unary_;
    std::vector<TokenId> binary_;
};

} // namespace srckt
