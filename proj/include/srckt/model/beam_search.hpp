#pragma once

#include <vector>

#include "srckt/model/weights.hpp"
#include "srckt/expr/vocabulary.hpp"

namespace srckt {

struct Hypothesis {
    std::vector<TokenId> tokens; // <S> ... <F>
    double log_prob = 0.0;

    // Tokens between <S> and <F>.
    std::vector<TokenId> body() const { return {tokens.begin() + 1, tokens.end() - 1}; }
};

// Each step expands to 2 x beam_size candidates; the best beam_size that do
// not end the sequence stay live. Candidates ending in <F> whose body is a
// valid prefix expression become hypotheses. Returns at most beam_size
// hypotheses, best first. `max_len` counts tokens including <S> and <F> and is
// clipped to what the decoder accepts. With `n_best` > 0 only the best n_best
// are returned and the search stops as soon as they are settled; the returned
// list is identical to the first n_best of a full search.
std::vector<Hypothesis> beam_search(const Weights& w, const Mat& latent, int beam_size, int max_len,
                                    std::size_t n_best = 0);

} // namespace srckt
