#include "srckt/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "srckt/util/error.hpp"
#include "srckt/util/parallel.hpp"

namespace srckt {

void TrainConfig::validate() const {
    if (batch_size < 1) fail(ErrorCode::ConfigError, "batch_size must be >= 1");
    if (!(learning_rate > 0.0)) fail(ErrorCode::ConfigError, "learning_rate must be > 0");
    if (epochs < 1) fail(ErrorCode::ConfigError, "epochs must be >= 1");
    if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) fail(ErrorCode::ConfigError, "bad Adam betas");
    if (!(eps > 0.0)) fail(ErrorCode::ConfigError, "eps must be > 0");
}

EpochMetrics evaluate_dataset(const Weights& w, const std::vector<TrainingExample>& data) {
    if (data.empty()) fail(ErrorCode::EmptyDataset, "empty dataset");
    std::vector<double> loss(data.size()), acc(data.size());
    parallel_for(data.size(), [&](std::size_t i) {
        const auto& ex = data[i];
        const EncodeResult enc = encode(w, ex.support);
        const std::span<const TokenId> input(ex.gold.data(), ex.gold.size() - 1);
        const Mat logits = decode_all(w, enc.latent, input);
        double l = 0.0, a = 0.0;
        for (std::size_t r = 0; r < logits.rows; ++r) {
            const auto lp = log_softmax(logits.row_span(r));
            const auto target = static_cast<std::size_t>(ex.gold[r + 1]);
            l -= lp[target];
            a += static_cast<std::size_t>(std::max_element(lp.begin(), lp.end()) - lp.begin()) == target ? 1.0 : 0.0;
        }
        loss[i] = l / static_cast<double>(logits.rows);
        acc[i] = a / static_cast<double>(logits.rows);
    });
    const double n = static_cast<double>(data.size());
    return {0, std::accumulate(loss.begin(), loss.end(), 0.0) / n, std::accumulate(acc.begin(), acc.end(), 0.0) / n};
}

TrainResult train(const Weights& init, const Dataset& data, const TrainConfig& config,
                  const std::function<void(const EpochMetrics&)>& on_epoch) {
    config.validate();
    if (data.empty()) fail(ErrorCode::EmptyDataset, "empty training set");
    const auto examples = to_examples(data);

    TrainResult result{init, {}};
    Weights& w = result.weights;
    Weights m1 = Weights::zeros(w.config);
    Weights m2 = Weights::zeros(w.config);

    EpochMetrics start = evaluate_dataset(w, examples);
    if (!std::isfinite(start.loss)) fail(ErrorCode::DivergenceDetected, "initial loss is not finite");
    result.metrics.push_back(start);
    if (on_epoch) on_epoch(start);

    std::vector<std::size_t> order(examples.size());
    std::size_t step = 0;
    const auto bs = static_cast<std::size_t>(config.batch_size);
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng = make_rng(config.seed, static_cast<std::uint64_t>(epoch));
        std::shuffle(order.begin(), order.end(), rng);

        double loss_sum = 0.0, acc_sum = 0.0;
        for (std::size_t start_i = 0; start_i < order.size(); start_i += bs) {
            const std::size_t end_i = std::min(order.size(), start_i + bs);
            std::vector<TrainingExample> batch;
            batch.reserve(end_i - start_i);
            for (std::size_t k = start_i; k < end_i; ++k) batch.push_back(examples[order[k]]);
            Gradient g = grad_nll(w, batch);
            if (!std::isfinite(g.loss)) {
                fail(ErrorCode::DivergenceDetected, "non-finite loss at epoch " + std::to_string(epoch));
            }
            const double nb = static_cast<double>(batch.size());
            loss_sum += g.loss * nb;
            acc_sum += g.accuracy * nb;

            ++step;
            const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
            std::vector<Mat*> gm, mm, vm;
            g.grad.visit([&](const std::string&, Mat& m) { gm.push_back(&m); });
            m1.visit([&](const std::string&, Mat& m) { mm.push_back(&m); });
            m2.visit([&](const std::string&, Mat& m) { vm.push_back(&m); });
            std::size_t k = 0;
            w.visit([&](const std::string&, Mat& p) {
                const Mat& gr = *gm[k];
                Mat& a = *mm[k];
                Mat& b = *vm[k];
                ++k;
                for (std::size_t i = 0; i < p.size(); ++i) {
                    a.v[i] = config.beta1 * a.v[i] + (1.0 - config.beta1) * gr.v[i];
                    b.v[i] = config.beta2 * b.v[i] + (1.0 - config.beta2) * gr.v[i] * gr.v[i];
                    p.v[i] -= config.learning_rate * (a.v[i] / bc1) / (std::sqrt(b.v[i] / bc2) + config.eps);
                }
            });
            w.snap_to_float();
        }
        const double n = static_cast<double>(examples.size());
        EpochMetrics em{epoch, loss_sum / n, acc_sum / n};
        if (!std::isfinite(em.loss) || !w.all_finite()) {
            fail(ErrorCode::DivergenceDetected, "divergence at epoch " + std::to_string(epoch));
        }
        result.metrics.push_back(em);
        if (on_epoch) on_epoch(em);
    }
    return result;
}

} // namespace srckt
