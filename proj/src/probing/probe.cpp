#include "srckt/probing/probe.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "srckt/patching/patching.hpp"
#include "srckt/util/error.hpp"
#include "srckt/util/parallel.hpp"

namespace srckt {

void ProbeConfig::validate() const {
    if (hidden_units < 1) fail(ErrorCode::ConfigError, "hidden_units must be >= 1");
    if (!(learning_rate > 0.0)) fail(ErrorCode::ConfigError, "probe learning_rate must be > 0");
    if (batch_size < 1 || epochs < 1 || seeds < 1) fail(ErrorCode::ConfigError, "probe batch/epochs/seeds must be >= 1");
    if (!(train_fraction > 0.0 && val_fraction > 0.0 && train_fraction + val_fraction < 1.0)) {
        fail(ErrorCode::ConfigError, "probe split fractions must leave room for a test split");
    }
    if (n_samples < 2 || n_samples % 2 != 0) fail(ErrorCode::ConfigError, "probe n_samples must be even");
    if (components_per_side < 2) fail(ErrorCode::ConfigError, "components_per_side must be >= 2");
}

std::vector<double> pool_activations(const Mat& a) {
    std::vector<double> out(a.cols, 0.0);
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t j = 0; j < a.cols; ++j) out[j] += a(i, j);
    }
    for (double& x : out) x /= static_cast<double>(a.rows);
    return out;
}

std::vector<double> pool_activations(const ActivationCache& cache, std::size_t component) {
    return pool_activations(cache.at(component));
}

ProbeSplit stratified_split(const std::vector<int>& labels, const ProbeConfig& cfg, std::uint64_t seed) {
    Rng rng = make_rng(seed, 1);
    ProbeSplit s;
    for (int cls : {0, 1}) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] == cls) idx.push_back(i);
        }
        std::shuffle(idx.begin(), idx.end(), rng);
        const auto n = static_cast<double>(idx.size());
        const auto n_train = static_cast<std::size_t>(std::llround(n * cfg.train_fraction));
        const auto n_val = static_cast<std::size_t>(std::llround(n * cfg.val_fraction));
        for (std::size_t i = 0; i < idx.size(); ++i) {
            (i < n_train ? s.train : i < n_train + n_val ? s.val : s.test).push_back(idx[i]);
        }
    }
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.val.begin(), s.val.end());
    std::sort(s.test.begin(), s.test.end());
    return s;
}

double ProbeModel::predict(std::span<const double> x) const {
    const std::size_t h = w1.cols;
    double out = b2.v[0];
    for (std::size_t j = 0; j < h; ++j) {
        double a = b1.v[j];
        for (std::size_t i = 0; i < x.size(); ++i) a += (x[i] - mu[i]) * inv_std[i] * w1(i, j);
        if (a > 0.0) out += a * w2.v[j];
    }
    return 1.0 / (1.0 + std::exp(-out));
}

double probe_accuracy(const ProbeModel& model, const Mat& features, const std::vector<int>& labels,
                      const std::vector<std::size_t>& rows) {
    if (rows.empty()) return 0.0;
    std::size_t hits = 0;
    for (std::size_t r : rows) {
        const int pred = model.predict(features.row_span(r)) >= 0.5 ? 1 : 0;
        hits += pred == labels[r] ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(rows.size());
}

ProbeFit fit_probe(const Mat& x, const std::vector<int>& labels, const std::vector<std::size_t>& train,
                   const std::vector<std::size_t>& val, const ProbeConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    if (train.empty()) fail(ErrorCode::EmptyDataset, "probe has no training rows");
    const std::size_t f = x.cols;
    const auto h = static_cast<std::size_t>(cfg.hidden_units);
    Rng rng = make_rng(seed, 2);

    ProbeModel m;
    m.mu.assign(f, 0.0);
    m.inv_std.assign(f, 1.0);
    for (std::size_t r : train) {
        for (std::size_t i = 0; i < f; ++i) m.mu[i] += x(r, i);
    }
    for (double& v : m.mu) v /= static_cast<double>(train.size());
    for (std::size_t i = 0; i < f; ++i) {
        double ss = 0.0;
        for (std::size_t r : train) ss += (x(r, i) - m.mu[i]) * (x(r, i) - m.mu[i]);
        const double sd = std::sqrt(ss / static_cast<double>(train.size()));
        m.inv_std[i] = sd > 1e-12 ? 1.0 / sd : 0.0;
    }
    const auto xavier = [&](Mat& w) {
        const double lim = std::sqrt(6.0 / static_cast<double>(w.rows + w.cols));
        for (double& v : w.v) v = uniform(rng, -lim, lim);
    };
    m.w1 = Mat(f, h);
    m.b1 = Mat(1, h);
    m.w2 = Mat(h, 1);
    m.b2 = Mat(1, 1);
    xavier(m.w1);
    xavier(m.w2);

    std::vector<Mat*> params{&m.w1, &m.b1, &m.w2, &m.b2};
    std::vector<Mat> g1, g2, grad;
    for (Mat* p : params) {
        g1.emplace_back(p->rows, p->cols);
        g2.emplace_back(p->rows, p->cols);
        grad.emplace_back(p->rows, p->cols);
    }
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    std::size_t step = 0;

    ProbeFit fit;
    fit.model = m;
    fit.best_val_accuracy = -1.0;
    std::vector<std::size_t> order = train;
    std::vector<double> z(f), a(h);
    const auto bs = static_cast<std::size_t>(cfg.batch_size);
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        for (std::size_t s0 = 0; s0 < order.size(); s0 += bs) {
            const std::size_t s1 = std::min(order.size(), s0 + bs);
            for (auto& gm : grad) gm.fill(0.0);
            const double inv_b = 1.0 / static_cast<double>(s1 - s0);
            for (std::size_t k = s0; k < s1; ++k) {
                const std::size_t r = order[k];
                for (std::size_t i = 0; i < f; ++i) z[i] = (x(r, i) - m.mu[i]) * m.inv_std[i];
                double out = m.b2.v[0];
                for (std::size_t j = 0; j < h; ++j) {
                    double s = m.b1.v[j];
                    for (std::size_t i = 0; i < f; ++i) s += z[i] * m.w1(i, j);
                    a[j] = s;
                    if (s > 0.0) out += s * m.w2.v[j];
                }
                const double p = 1.0 / (1.0 + std::exp(-out));
                const double y = labels[r] ? 1.0 : 0.0;
                loss_sum -= y * std::log(std::max(p, 1e-300)) + (1.0 - y) * std::log(std::max(1.0 - p, 1e-300));
                const double dout = (p - y) * inv_b;
                grad[3].v[0] += dout;
                for (std::size_t j = 0; j < h; ++j) {
                    if (a[j] <= 0.0) continue;
                    grad[2].v[j] += dout * a[j];
                    const double da = dout * m.w2.v[j];
                    grad[1].v[j] += da;
                    for (std::size_t i = 0; i < f; ++i) grad[0](i, j) += da * z[i];
                }
            }
            ++step;
            const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
            for (std::size_t p = 0; p < params.size(); ++p) {
                for (std::size_t i = 0; i < params[p]->size(); ++i) {
                    const double gv = grad[p].v[i];
                    g1[p].v[i] = beta1 * g1[p].v[i] + (1.0 - beta1) * gv;
                    g2[p].v[i] = beta2 * g2[p].v[i] + (1.0 - beta2) * gv * gv;
                    params[p]->v[i] -= cfg.learning_rate * (g1[p].v[i] / bc1) / (std::sqrt(g2[p].v[i] / bc2) + eps);
                }
            }
        }
        fit.train_loss.push_back(loss_sum / static_cast<double>(order.size()));
        const double va = probe_accuracy(m, x, labels, val);
        if (va > fit.best_val_accuracy) {
            fit.best_val_accuracy = va;
            fit.best_epoch = epoch;
            fit.model = m;
        }
    }
    return fit;
}

ProbeRun train_probe(const Mat& features, const std::vector<int>& labels, std::uint64_t seed, const ProbeConfig& cfg) {
    if (features.rows != labels.size()) fail(ErrorCode::ShapeMismatch, "probe features and labels differ in length");
    const ProbeSplit split = stratified_split(labels, cfg, seed);
    const ProbeFit fit = fit_probe(features, labels, split.train, split.val, cfg, seed);
    return {probe_accuracy(fit.model, features, labels, split.test), fit.best_val_accuracy};
}

namespace {

std::vector<ComponentProbe> probe_side(const std::vector<std::pair<std::size_t, Mat>>& side,
                                       const std::vector<int>& labels, const ProbeConfig& cfg, std::uint64_t seed,
                                       std::uint64_t side_tag) {
    const auto seeds = static_cast<std::size_t>(cfg.seeds);
    std::vector<ComponentProbe> out(side.size());
    std::vector<double> acc(side.size() * seeds);
    parallel_for(acc.size(), [&](std::size_t job) {
        const std::size_t c = job / seeds;
        const std::size_t s = job % seeds;
        const std::uint64_t run_seed = derive_seed(derive_seed(seed, side_tag * 1000 + c), s);
        acc[job] = train_probe(side[c].second, labels, run_seed, cfg).test_accuracy;
    });
    for (std::size_t c = 0; c < side.size(); ++c) {
        out[c].component = side[c].first;
        out[c].accuracies.assign(acc.begin() + static_cast<std::ptrdiff_t>(c * seeds),
                                 acc.begin() + static_cast<std::ptrdiff_t>((c + 1) * seeds));
        out[c].mean = mean(out[c].accuracies);
        out[c].std = stddev(out[c].accuracies);
    }
    return out;
}

} // namespace

ProbeComparison compare_feature_groups(const std::vector<std::pair<std::size_t, Mat>>& circuit,
                                       const std::vector<std::pair<std::size_t, Mat>>& complement,
                                       const std::vector<int>& labels, const ProbeConfig& cfg, std::uint64_t seed,
                                       bool resampled) {
    cfg.validate();
    if (circuit.size() != complement.size() || circuit.size() < 2) {
        fail(ErrorCode::ShapeMismatch, "probe groups must be paired and hold at least two components");
    }
    ProbeComparison r;
    r.resampled = resampled;
    r.circuit = probe_side(circuit, labels, cfg, seed, 1);
    r.complement = probe_side(complement, labels, cfg, seed, 2);
    std::vector<double> a, b;
    for (const auto& c : r.circuit) a.push_back(c.mean);
    for (const auto& c : r.complement) b.push_back(c.mean);
    r.circuit_mean = mean(a);
    r.circuit_std = stddev(a);
    r.complement_mean = mean(b);
    r.complement_std = stddev(b);
    r.test = paired_t_test(a, b);
    return r;
}

Dataset balanced_probe_set(const Dataset& pool, TokenId target, std::size_t n) {
    Dataset pos, neg;
    for (const auto& r : pool) {
        if (pos.size() >= n / 2 && neg.size() >= n / 2) break;
        const bool has = contains_token(r.expr, target);
        if (has && pos.size() < n / 2) pos.push_back(r);
        if (!has && neg.size() < n / 2) neg.push_back(r);
    }
    if (pos.size() < n / 2 || neg.size() < n / 2) {
        fail(ErrorCode::InsufficientPool, "probe pool has " + std::to_string(pos.size()) + " positive and " +
                                              std::to_string(neg.size()) + " negative records, need " +
                                              std::to_string(n / 2) + " each");
    }
    Dataset out;
    for (std::size_t i = 0; i < n / 2; ++i) {
        out.push_back(pos[i]);
        out.push_back(neg[i]);
    }
    return out;
}

ProbeComparison compare_circuit_complement(const Weights& w, const Dataset& samples, TokenId target,
                                           const ComponentSet& circuit, const ProbeConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    if (samples.empty()) fail(ErrorCode::EmptyDataset, "no probe samples");
    const auto in = circuit.indices();
    const auto out = circuit.complement().indices();
    if (in.empty() || out.empty()) fail(ErrorCode::EmptyDataset, "circuit and complement must both be non-empty");
    Rng rng = make_rng(seed, 3);
    bool resampled = false;
    const auto pick = [&](std::vector<std::size_t> pool) {
        std::vector<std::size_t> chosen;
        if (pool.size() >= cfg.components_per_side) {
            std::shuffle(pool.begin(), pool.end(), rng);
            chosen.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(cfg.components_per_side));
        } else {
            resampled = true;
            std::uniform_int_distribution<std::size_t> d(0, pool.size() - 1);
            for (std::size_t i = 0; i < cfg.components_per_side; ++i) chosen.push_back(pool[d(rng)]);
        }
        return chosen;
    };
    const auto cin = pick(in);
    const auto cout = pick(out);

    std::vector<int> labels(samples.size());
    std::vector<std::vector<std::vector<double>>> pooled(samples.size());
    parallel_for(samples.size(), [&](std::size_t i) {
        labels[i] = contains_token(samples[i].expr, target) ? 1 : 0;
        for (const Mat& a : clean_activations(w, samples[i].support)) pooled[i].push_back(pool_activations(a));
    });
    const auto features = [&](std::size_t comp) {
        Mat f(samples.size(), pooled[0][comp].size());
        for (std::size_t i = 0; i < samples.size(); ++i) std::copy(pooled[i][comp].begin(), pooled[i][comp].end(), f.row(i));
        return f;
    };
    std::vector<std::pair<std::size_t, Mat>> gin, gout;
    for (std::size_t c : cin) gin.emplace_back(c, features(c));
    for (std::size_t c : cout) gout.emplace_back(c, features(c));
    return compare_feature_groups(gin, gout, labels, cfg, seed, resampled);
}

std::string probe_csv(const std::string& operation, const std::string& setup, const ProbeComparison& c) {
    std::string out = "operation,setup,circuit_mean,circuit_std,complement_mean,complement_std,t,p_value,resampled\n";
    char buf[320];
    std::snprintf(buf, sizeof buf, "%s,%s,%.4f,%.4f,%.4f,%.4f,%.4f,%.6f,%d\n", operation.c_str(), setup.c_str(),
                  c.circuit_mean, c.circuit_std, c.complement_mean, c.complement_std, c.test.t, c.test.p,
                  c.resampled ? 1 : 0);
    out += buf;
    return out;
}

} // namespace srckt
