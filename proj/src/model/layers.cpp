#include "srckt/model/layers.hpp"

#include <algorithm>
#include <cmath>

#include "srckt/util/error.hpp"

namespace srckt::layers {
namespace {

void add_bias(Mat& y, const Mat& b) {
    for (std::size_t i = 0; i < y.rows; ++i) simd::kernels().axpy(1.0, b.data(), y.row(i), y.cols);
}

void accumulate_colsum(const Mat& dy, Mat& db) {
    for (std::size_t i = 0; i < dy.rows; ++i) simd::kernels().axpy(1.0, dy.row(i), db.data(), dy.cols);
}

Mat head_slice(const Mat& m, std::size_t h, std::size_t dh) {
    Mat out(m.rows, dh);
    for (std::size_t i = 0; i < m.rows; ++i) std::copy_n(m.row(i) + h * dh, dh, out.row(i));
    return out;
}

void head_scatter(Mat& m, const Mat& part, std::size_t h, std::size_t dh) {
    for (std::size_t i = 0; i < m.rows; ++i) std::copy_n(part.row(i), dh, m.row(i) + h * dh);
}

} // namespace

bool TapContext::apply(std::size_t index, Mat& value) {
    bool replaced = false;
    if (patch && patch->excluded && patch->excluded->contains(index)) {
        if (index >= patch->values.size() || patch->values[index].empty()) {
            fail(ErrorCode::MissingPatch, "no patch value for component " + std::to_string(index));
        }
        const Mat& p = patch->values[index];
        if (!p.same_shape(value)) fail(ErrorCode::ShapeMismatch, "patch shape differs for component " + std::to_string(index));
        value = p;
        ++patched;
        replaced = true;
    }
    if (taps && cache && index < taps->universe() && taps->contains(index)) cache->values[index] = value;
    return replaced;
}

Mat linear(const Mat& x, const LinearW& l) {
    Mat y = matmul(x, l.w);
    add_bias(y, l.b);
    return y;
}

Mat linear_backward(const Mat& x, const LinearW& l, const Mat& dy, LinearW& g) {
    accumulate_tn(x, dy, g.w);
    accumulate_colsum(dy, g.b);
    return matmul_nt(dy, l.w);
}

Mat layer_norm(const Mat& x, const NormW& n, NormCache* cache) {
    constexpr double eps = 1e-5;
    const std::size_t d = x.cols;
    Mat y(x.rows, d);
    if (cache) {
        cache->xhat = Mat(x.rows, d);
        cache->rstd.assign(x.rows, 0.0);
    }
    for (std::size_t i = 0; i < x.rows; ++i) {
        const double* xr = x.row(i);
        double mean = 0.0;
        for (std::size_t j = 0; j < d; ++j) mean += xr[j];
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t j = 0; j < d; ++j) var += (xr[j] - mean) * (xr[j] - mean);
        var /= static_cast<double>(d);
        const double rstd = 1.0 / std::sqrt(var + eps);
        double* yr = y.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            const double xh = (xr[j] - mean) * rstd;
            yr[j] = xh * n.gain.v[j] + n.bias.v[j];
            if (cache) cache->xhat(i, j) = xh;
        }
        if (cache) cache->rstd[i] = rstd;
    }
    return y;
}

Mat layer_norm_backward(const NormCache& c, const NormW& n, const Mat& dy, NormW& g) {
    const std::size_t d = dy.cols;
    Mat dx(dy.rows, d);
    std::vector<double> dxh(d);
    for (std::size_t i = 0; i < dy.rows; ++i) {
        const double* dyr = dy.row(i);
        const double* xh = c.xhat.row(i);
        double mean_dxh = 0.0;
        double mean_dxh_xh = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            g.gain.v[j] += dyr[j] * xh[j];
            g.bias.v[j] += dyr[j];
            dxh[j] = dyr[j] * n.gain.v[j];
            mean_dxh += dxh[j];
            mean_dxh_xh += dxh[j] * xh[j];
        }
        mean_dxh /= static_cast<double>(d);
        mean_dxh_xh /= static_cast<double>(d);
        double* out = dx.row(i);
        for (std::size_t j = 0; j < d; ++j) out[j] = c.rstd[i] * (dxh[j] - mean_dxh - xh[j] * mean_dxh_xh);
    }
    return dx;
}

void softmax_rows(Mat& m) {
    for (std::size_t i = 0; i < m.rows; ++i) {
        double* r = m.row(i);
        const double mx = *std::max_element(r, r + m.cols);
        double s = 0.0;
        for (std::size_t j = 0; j < m.cols; ++j) {
            r[j] = std::exp(r[j] - mx);
            s += r[j];
        }
        const double inv = 1.0 / s;
        for (std::size_t j = 0; j < m.cols; ++j) r[j] *= inv;
    }
}

Mat attention(const Mat& q_in, const Mat& kv_in, const AttentionW& a, int heads, bool causal, AttnCache* cache,
              TapContext* ctx, std::size_t first_component) {
    const std::size_t d = a.q.w.cols;
    const auto nh = static_cast<std::size_t>(heads);
    const std::size_t dh = d / nh;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    Mat q = linear(q_in, a.q);
    Mat k = linear(kv_in, a.k);
    Mat v = linear(kv_in, a.v);
    Mat concat(q.rows, d);
    std::vector<Mat> probs(nh);
    std::vector<char> replaced(nh, 0);

    for (std::size_t h = 0; h < nh; ++h) {
        const Mat qh = head_slice(q, h, dh);
        const Mat kh = head_slice(k, h, dh);
        const Mat vh = head_slice(v, h, dh);
        Mat s = matmul_nt(qh, kh);
        for (double& x : s.v) x *= scale;
        if (causal) {
            for (std::size_t i = 0; i < s.rows; ++i) {
                for (std::size_t j = i + 1; j < s.cols; ++j) s(i, j) = -1e300;
            }
        }
        softmax_rows(s);
        Mat oh = matmul(s, vh);
        if (ctx) replaced[h] = ctx->apply(first_component + h, oh) ? 1 : 0;
        head_scatter(concat, oh, h, dh);
        probs[h] = std::move(s);
    }
    Mat out = linear(concat, a.o);
    if (cache) {
        cache->q_in = q_in;
        cache->kv_in = kv_in;
        cache->q = std::move(q);
        cache->k = std::move(k);
        cache->v = std::move(v);
        cache->probs = std::move(probs);
        cache->concat = std::move(concat);
        cache->replaced = std::move(replaced);
    }
    return out;
}

std::pair<Mat, Mat> attention_backward(const AttnCache& c, const AttentionW& a, int heads, bool /*causal*/,
                                       const Mat& dy, AttentionW& g) {
    const std::size_t d = a.q.w.cols;
    const auto nh = static_cast<std::size_t>(heads);
    const std::size_t dh = d / nh;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    const Mat dconcat = linear_backward(c.concat, a.o, dy, g.o);
    Mat dq(c.q.rows, d), dk(c.k.rows, d), dv(c.v.rows, d);
    for (std::size_t h = 0; h < nh; ++h) {
        // A replaced head output is a constant: nothing upstream of it receives gradient.
        if (c.replaced[h]) continue;
        const Mat doh = head_slice(dconcat, h, dh);
        const Mat qh = head_slice(c.q, h, dh);
        const Mat kh = head_slice(c.k, h, dh);
        const Mat vh = head_slice(c.v, h, dh);
        const Mat& p = c.probs[h];
        Mat dp = matmul_nt(doh, vh); // rows x keys
        Mat dvh(vh.rows, dh);
        accumulate_tn(p, doh, dvh);
        // Softmax backward; masked entries have p == 0 and receive no gradient.
        for (std::size_t i = 0; i < dp.rows; ++i) {
            double* dr = dp.row(i);
            const double* pr = p.row(i);
            const double dot = simd::kernels().dot(dr, pr, dp.cols);
            for (std::size_t j = 0; j < dp.cols; ++j) dr[j] = pr[j] * (dr[j] - dot) * scale;
        }
        const Mat dqh = matmul(dp, kh);
        Mat dkh(kh.rows, dh);
        accumulate_tn(dp, qh, dkh);
        head_scatter(dq, dqh, h, dh);
        head_scatter(dk, dkh, h, dh);
        head_scatter(dv, dvh, h, dh);
    }
    Mat dq_in = linear_backward(c.q_in, a.q, dq, g.q);
    Mat dkv_in = linear_backward(c.kv_in, a.k, dk, g.k);
    add_inplace(dkv_in, linear_backward(c.kv_in, a.v, dv, g.v));
    return {std::move(dq_in), std::move(dkv_in)};
}

Mat feed_forward(const Mat& x, const FeedForwardW& f, FfCache* cache) {
    Mat pre = linear(x, f.hidden);
    Mat hidden = pre;
    for (double& v : hidden.v) v = v > 0.0 ? v : 0.0;
    Mat out = linear(hidden, f.out);
    if (cache) {
        cache->x = x;
        cache->pre = std::move(pre);
        cache->hidden = std::move(hidden);
    }
    return out;
}

Mat feed_forward_backward(const FfCache& c, const FeedForwardW& f, const Mat& dy, FeedForwardW& g) {
    Mat dh = linear_backward(c.hidden, f.out, dy, g.out);
    for (std::size_t i = 0; i < dh.size(); ++i) {
        if (c.pre.v[i] <= 0.0) dh.v[i] = 0.0;
    }
    return linear_backward(c.x, f.hidden, dh, g.hidden);
}

} // namespace srckt::layers
