#include "srckt/model/beam_search.hpp"

#include <algorithm>

#include "srckt/expr/expression.hpp"
#include "srckt/model/model.hpp"
#include "srckt/util/error.hpp"

namespace srckt {
namespace {

struct Candidate {
    std::size_t parent;
    TokenId token;
    double score;
};

bool better(const Hypothesis& a, const Hypothesis& b) {
    if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
    return a.tokens < b.tokens;
}

} // namespace

std::vector<Hypothesis> beam_search(const Weights& w, const Mat& latent, int beam_size, int max_len,
                                    std::size_t n_best) {
    if (beam_size < 1) fail(ErrorCode::ConfigError, "beam_size must be >= 1");
    const auto beam = static_cast<std::size_t>(beam_size);
    const std::size_t keep_n = n_best == 0 ? beam : std::min(n_best, beam);
    // decode_all accepts max_seq_len input tokens, so sequences may hold one more.
    const std::size_t limit = std::min<std::size_t>(static_cast<std::size_t>(std::max(max_len, 2)),
                                                    static_cast<std::size_t>(w.config.max_seq_len) + 1);

    std::vector<Hypothesis> live{{{tok::Start}, 0.0}};
    std::vector<Hypothesis> done;
    while (!live.empty()) {
        std::vector<Candidate> cands;
        const bool last_step = live.front().tokens.size() + 1 >= limit;
        for (std::size_t b = 0; b < live.size(); ++b) {
            const auto lp = log_softmax(decode_step(w, latent, live[b].tokens));
            for (std::size_t v = 0; v < lp.size(); ++v) {
                const auto t = static_cast<TokenId>(v);
                if (t == tok::Start) continue;
                if (last_step && t != tok::End) continue;
                cands.push_back({b, t, live[b].log_prob + lp[v]});
            }
        }
        const std::size_t keep = std::min(cands.size(), 2 * beam);
        std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep), cands.end(),
                          [](const Candidate& a, const Candidate& b) {
                              if (a.score != b.score) return a.score > b.score;
                              if (a.parent != b.parent) return a.parent < b.parent;
                              return a.token < b.token;
                          });
        std::vector<Hypothesis> next;
        for (std::size_t i = 0; i < keep; ++i) {
            const Candidate& c = cands[i];
            Hypothesis h{live[c.parent].tokens, c.score};
            h.tokens.push_back(c.token);
            if (c.token == tok::End) {
                const std::span<const TokenId> body(h.tokens.data() + 1, h.tokens.size() - 2);
                if (!body.empty() && is_valid_prefix(body)) done.push_back(std::move(h));
            } else if (next.size() < beam) {
                next.push_back(std::move(h));
            }
        }
        live = std::move(next);
        // Scores only decrease, so stop once no live beam can enter the top list.
        if (done.size() >= keep_n && !live.empty()) {
            std::sort(done.begin(), done.end(), better);
            done.resize(keep_n);
            if (live.front().log_prob <= done.back().log_prob) break;
        }
    }
    std::sort(done.begin(), done.end(), better);
    if (done.size() > keep_n) done.resize(keep_n);
    return done;
}

} // namespace srckt
