#include "srckt/report/config_file.hpp"

#include <fstream>
#include <set>

#include "srckt/util/crc32.hpp"
#include "srckt/util/error.hpp"

namespace srckt {
namespace {

using nlohmann::json;

json grammar_json(const GrammarConfig& g) {
    json w = json::object();
    const Vocabulary& v = Vocabulary::standard();
    for (TokenId t = 0; t < static_cast<TokenId>(tok::Count); ++t) {
        if (v.is_operator(t)) w[std::string(v.symbol(t))] = g.op_weights[static_cast<std::size_t>(t)];
    }
    return {{"max_depth", g.max_depth},   {"n_vars", g.n_vars}, {"p_internal", g.p_internal},
            {"const_prob", g.const_prob}, {"op_weights", w}};
}

void check_keys(const json& j, const char* section, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) fail(ErrorCode::ConfigError, std::string("section ") + section + " must be an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : j.items()) {
        if (!ok.count(k)) fail(ErrorCode::ConfigError, std::string("unknown key ") + section + "." + k);
    }
}

template <class T> void read(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

} // namespace

json RunConfig::to_json() const {
    json j;
    j["model"] = model.to_json();
    j["grammar"] = grammar_json(data.grammar);
    j["train"] = {{"n_equations", n_train},
                  {"support_points", data.support.n_points},
                  {"support_lo", data.support.lo},
                  {"support_hi", data.support.hi},
                  {"max_tokens", data.max_tokens},
                  {"batch_size", train.batch_size},
                  {"learning_rate", train.learning_rate},
                  {"epochs", train.epochs},
                  {"beta1", train.beta1},
                  {"beta2", train.beta2},
                  {"eps", train.eps}};
    j["patching"] = {{"mean_samples", mean_patch_samples}};
    j["search"] = {{"population", search.population},
                   {"generations", search.generations},
                   {"init_mean", search.init_mean},
                   {"sigma0", search.sigma0},
                   {"prior_std", search.prior_std},
                   {"freeze_generations", search.freeze_generations},
                   {"penalty", penalty}};
    j["criteria"] = {{"delta_f", criteria.delta_f},
                     {"delta_c", criteria.delta_c},
                     {"pool_size", pool_size},
                     {"beam_size", selection.beam_size},
                     {"top_k", selection.top_k},
                     {"n_discovery", selection.n_discovery},
                     {"n_generalisation", selection.n_generalisation},
                     {"require_teacher_forced", selection.require_teacher_forced},
                     {"class_beam", evaluator.class_beam},
                     {"recovery_samples", recovery_samples}};
    j["probe"] = {{"hidden_units", probe.hidden_units},   {"learning_rate", probe.learning_rate},
                  {"batch_size", probe.batch_size},       {"epochs", probe.epochs},
                  {"train_fraction", probe.train_fraction}, {"val_fraction", probe.val_fraction},
                  {"n_samples", probe.n_samples},         {"seeds", probe.seeds},
                  {"components_per_side", probe.components_per_side}};
    return j;
}

RunConfig RunConfig::from_json(const json& j) {
    RunConfig c;
    try {
        check_keys(j, "root", {"model", "train", "grammar", "patching", "search", "criteria", "probe"});
        if (j.contains("model")) c.model = ModelConfig::from_json(j["model"]);
        if (j.contains("grammar")) {
            const auto& g = j["grammar"];
            check_keys(g, "grammar", {"max_depth", "n_vars", "p_internal", "const_prob", "op_weights"});
            read(g, "max_depth", c.data.grammar.max_depth);
            read(g, "n_vars", c.data.grammar.n_vars);
            read(g, "p_internal", c.data.grammar.p_internal);
            read(g, "const_prob", c.data.grammar.const_prob);
            if (g.contains("op_weights")) {
                c.data.grammar.op_weights.fill(0.0);
                for (const auto& [sym, w] : g["op_weights"].items()) {
                    const TokenId t = Vocabulary::standard().id(sym);
                    c.data.grammar.op_weights[static_cast<std::size_t>(t)] = w.get<double>();
                }
            }
        }
        c.data.support.n_vars = c.data.grammar.n_vars;
        if (j.contains("train")) {
            const auto& t = j["train"];
            check_keys(t, "train", {"n_equations", "support_points", "support_lo", "support_hi", "max_tokens",
                                    "batch_size", "learning_rate", "epochs", "beta1", "beta2", "eps"});
            read(t, "n_equations", c.n_train);
            read(t, "support_points", c.data.support.n_points);
            read(t, "support_lo", c.data.support.lo);
            read(t, "support_hi", c.data.support.hi);
            read(t, "max_tokens", c.data.max_tokens);
            read(t, "batch_size", c.train.batch_size);
            read(t, "learning_rate", c.train.learning_rate);
            read(t, "epochs", c.train.epochs);
            read(t, "beta1", c.train.beta1);
            read(t, "beta2", c.train.beta2);
            read(t, "eps", c.train.eps);
        }
        if (j.contains("patching")) {
            check_keys(j["patching"], "patching", {"mean_samples"});
            read(j["patching"], "mean_samples", c.mean_patch_samples);
        }
        if (j.contains("search")) {
            const auto& s = j["search"];
            check_keys(s, "search",
                       {"population", "generations", "init_mean", "sigma0", "prior_std", "freeze_generations", "penalty"});
            read(s, "population", c.search.population);
            read(s, "generations", c.search.generations);
            read(s, "init_mean", c.search.init_mean);
            read(s, "sigma0", c.search.sigma0);
            read(s, "prior_std", c.search.prior_std);
            read(s, "freeze_generations", c.search.freeze_generations);
            read(s, "penalty", c.penalty);
        }
        if (j.contains("criteria")) {
            const auto& s = j["criteria"];
            check_keys(s, "criteria", {"delta_f", "delta_c", "pool_size", "beam_size", "top_k", "n_discovery",
                                       "n_generalisation", "require_teacher_forced", "class_beam", "recovery_samples"});
            read(s, "delta_f", c.criteria.delta_f);
            read(s, "delta_c", c.criteria.delta_c);
            read(s, "pool_size", c.pool_size);
            read(s, "beam_size", c.selection.beam_size);
            read(s, "top_k", c.selection.top_k);
            read(s, "n_discovery", c.selection.n_discovery);
            read(s, "n_generalisation", c.selection.n_generalisation);
            read(s, "require_teacher_forced", c.selection.require_teacher_forced);
            read(s, "class_beam", c.evaluator.class_beam);
            read(s, "recovery_samples", c.recovery_samples);
        }
        if (j.contains("probe")) {
            const auto& p = j["probe"];
            check_keys(p, "probe", {"hidden_units", "learning_rate", "batch_size", "epochs", "train_fraction",
                                    "val_fraction", "n_samples", "seeds", "components_per_side"});
            read(p, "hidden_units", c.probe.hidden_units);
            read(p, "learning_rate", c.probe.learning_rate);
            read(p, "batch_size", c.probe.batch_size);
            read(p, "epochs", c.probe.epochs);
            read(p, "train_fraction", c.probe.train_fraction);
            read(p, "val_fraction", c.probe.val_fraction);
            read(p, "n_samples", c.probe.n_samples);
            read(p, "seeds", c.probe.seeds);
            read(p, "components_per_side", c.probe.components_per_side);
        }
    } catch (const json::exception& e) {
        fail(ErrorCode::ConfigError, std::string("config: ") + e.what());
    }
    c.model.validate();
    c.data.grammar.validate();
    c.train.validate();
    c.search.validate();
    c.criteria.validate();
    c.probe.validate();
    c.counterfactual.support = c.data.support;
    return c;
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream f(path);
    if (!f) fail(ErrorCode::IoError, "cannot open config " + path);
    try {
        return from_json(json::parse(f));
    } catch (const json::parse_error& e) {
        fail(ErrorCode::ConfigError, path + ": " + e.what());
    }
}

std::string RunConfig::digest() const { return crc32_hex(to_json().dump()); }

} // namespace srckt
