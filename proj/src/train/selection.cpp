#include "srckt/train/selection.hpp"

#include <algorithm>

#include "srckt/expr/equivalence.hpp"
#include "srckt/expr/function_class.hpp"
#include "srckt/model/beam_search.hpp"
#include "srckt/util/error.hpp"
#include "srckt/util/parallel.hpp"

namespace srckt {

TargetSpec TargetSpec::single(TokenId token, const RelationMap& relations) {
    if (!Vocabulary::standard().is_operator(token)) {
        fail(ErrorCode::ConfigError, "target must be an operator token");
    }
    TargetSpec s;
    s.kind = Kind::SingleToken;
    s.token = token;
    s.exclusions = relations.related(token);
    return s;
}

TargetSpec TargetSpec::of_class(FunctionClass cls) {
    TargetSpec s;
    s.kind = Kind::Class;
    s.function_class = cls;
    return s;
}

TargetSpec TargetSpec::parse(const std::string& name, const RelationMap& relations) {
    if (name == "monomial") return of_class(FunctionClass::Monomial);
    if (name == "posynomial") return of_class(FunctionClass::Posynomial);
    const auto id = Vocabulary::standard().find(name);
    if (!id) fail(ErrorCode::ConfigError, "unknown target: " + name);
    return single(*id, relations);
}

std::string TargetSpec::name() const {
    if (kind == Kind::Class) return function_class == FunctionClass::Monomial ? "monomial" : "posynomial";
    return std::string(Vocabulary::standard().symbol(token));
}

bool TargetSpec::matches(const Expression& expr) const {
    if (kind == Kind::SingleToken) return contains_with_exclusions(expr, token, exclusions);
    return function_class == FunctionClass::Monomial ? is_monomial(expr) : is_posynomial(expr);
}

nlohmann::json TargetSpec::to_json() const {
    nlohmann::json j;
    j["target"] = name();
    j["kind"] = kind == Kind::SingleToken ? "single_token" : "function_class";
    std::vector<std::string> ex;
    for (TokenId t : exclusions) ex.emplace_back(Vocabulary::standard().symbol(t));
    j["exclusions"] = ex;
    return j;
}

int first_timestep(const Record& r, TokenId token) {
    const auto g = r.gold();
    const auto it = std::find(g.begin(), g.end(), token);
    return it == g.end() ? -1 : static_cast<int>(it - g.begin());
}

namespace {

bool rank_within(std::span<const double> logits, std::size_t target, int k) {
    // Ties go to the lower vocabulary index.
    int better = 0;
    for (std::size_t j = 0; j < logits.size(); ++j) {
        if (logits[j] > logits[target] || (logits[j] == logits[target] && j < target)) ++better;
    }
    return better < k;
}

bool teacher_forced_ok(const Weights& w, const Mat& latent, const Record& r, const TargetSpec& spec, int k) {
    const auto gold = r.gold();
    const Mat logits = decode_all(w, latent, std::span<const TokenId>(gold.data(), gold.size() - 1));
    if (spec.kind == TargetSpec::Kind::SingleToken) {
        const int t = first_timestep(r, spec.token);
        return t >= 1 && rank_within(logits.row_span(static_cast<std::size_t>(t - 1)),
                                     static_cast<std::size_t>(spec.token), k);
    }
    for (std::size_t i = 0; i < logits.rows; ++i) {
        if (!rank_within(logits.row_span(i), static_cast<std::size_t>(gold[i + 1]), k)) return false;
    }
    return true;
}

bool reconstructs_from(const Weights& w, const Mat& latent, const Record& r, const SelectionOptions& opts) {
    const auto gold = r.gold();
    const auto hyps = beam_search(w, latent, opts.beam_size, static_cast<int>(gold.size()) + 4,
                                  static_cast<std::size_t>(opts.top_k));
    EquivalenceOptions eq;
    eq.n_vars = std::max<int>(1, static_cast<int>(r.support.n_vars()));
    for (const auto& h : hyps) {
        if (h.tokens == gold) return true;
    }
    for (const auto& h : hyps) {
        Rng rng = make_rng(opts.equivalence_seed, static_cast<std::uint64_t>(r.id));
        const auto body = h.body();
        try {
            if (pointwise_equivalent(parse_prefix(body), r.expr, eq, rng)) return true;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::UnsatisfiableDomain) throw;
        }
    }
    return false;
}

bool qualifies(const Weights& w, const Record& r, const TargetSpec& spec, const SelectionOptions& opts) {
    if (!spec.matches(r.expr)) return false;
    const auto gold = r.gold();
    if (gold.size() - 1 > static_cast<std::size_t>(w.config.max_seq_len)) return false;
    const Mat latent = encode(w, r.support).latent;
    if (opts.require_teacher_forced && !teacher_forced_ok(w, latent, r, spec, opts.top_k)) return false;
    return reconstructs_from(w, latent, r, opts);
}

} // namespace

bool reconstructs(const Weights& w, const Record& r, const SelectionOptions& opts) {
    return reconstructs_from(w, encode(w, r.support).latent, r, opts);
}

TargetDataset select_target_dataset(const Weights& w, const Dataset& pool, const TargetSpec& spec,
                                    const SelectionOptions& opts) {
    TargetDataset out;
    out.spec = spec;
    const std::size_t need = opts.n_discovery + opts.n_generalisation;
    constexpr std::size_t chunk = 64;
    std::size_t found = 0;
    for (std::size_t base = 0; base < pool.size() && found < need; base += chunk) {
        const std::size_t n = std::min(chunk, pool.size() - base);
        std::vector<char> ok(n, 0);
        parallel_for(n, [&](std::size_t i) { ok[i] = qualifies(w, pool[base + i], spec, opts) ? 1 : 0; });
        for (std::size_t i = 0; i < n && found < need; ++i) {
            out.scanned = base + i + 1;
            if (!ok[i]) continue;
            Record r = pool[base + i];
            if (spec.kind == TargetSpec::Kind::SingleToken) {
                r.t = first_timestep(r, spec.token);
            } else {
                r.t.reset();
            }
            (found < opts.n_discovery ? out.discovery : out.generalisation).push_back(std::move(r));
            ++found;
        }
    }
    if (found < need) {
        fail(ErrorCode::InsufficientPool, "only " + std::to_string(found) + " of " + std::to_string(pool.size()) +
                                              " pool records qualify for target " + spec.name() + ", need " +
                                              std::to_string(need));
    }
    return out;
}

bool verify_target_dataset(const Weights& w, const TargetDataset& data, const SelectionOptions& opts) {
    std::vector<const Record*> all;
    for (const auto& r : data.discovery) all.push_back(&r);
    for (const auto& r : data.generalisation) all.push_back(&r);
    std::vector<char> ok(all.size(), 0);
    parallel_for(all.size(), [&](std::size_t i) {
        const Record& r = *all[i];
        bool good = qualifies(w, r, data.spec, opts);
        if (data.spec.kind == TargetSpec::Kind::SingleToken) {
            good = good && r.t && *r.t == first_timestep(r, data.spec.token);
        }
        ok[i] = good ? 1 : 0;
    });
    return std::all_of(ok.begin(), ok.end(), [](char c) { return c != 0; });
}

} // namespace srckt
