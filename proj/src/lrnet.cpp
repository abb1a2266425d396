#include "uavbeam/lrnet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "uavbeam/errors.hpp"

namespace uavbeam {

namespace {

double sigmoid(double x) {
    return 1.0 / (1.0 + std::exp(-x));
}

void reshape(Mat& m, int r, int c) {
    if (m.rows != r || m.cols != c) {
        m.rows = r;
        m.cols = c;
        m.a.assign(static_cast<std::size_t>(r) * c, 0.0);
    }
}

void add_into(Mat& dst, const Mat& src) {
    for (std::size_t i = 0; i < dst.a.size(); ++i) {
        dst.a[i] += src.a[i];
    }
}

struct TensorView {
    double* data;
    std::size_t size;
};

// Fixed tensor order used by initialization, clipping, Adam and grad_check:
// l1.w_input, l1.w_hidden, l1.bias, l2.w_input, l2.w_hidden, l2.bias,
// fc_weight, fc_bias.
std::vector<TensorView> tensor_views(LrnetModel& m) {
    return {{m.layer1.w_input.a.data(), m.layer1.w_input.size()},
            {m.layer1.w_hidden.a.data(), m.layer1.w_hidden.size()},
            {m.layer1.bias.data(), m.layer1.bias.size()},
            {m.layer2.w_input.a.data(), m.layer2.w_input.size()},
            {m.layer2.w_hidden.a.data(), m.layer2.w_hidden.size()},
            {m.layer2.bias.data(), m.layer2.bias.size()},
            {m.fc_weight.a.data(), m.fc_weight.size()},
            {m.fc_bias.data(), m.fc_bias.size()}};
}

std::vector<TensorView> tensor_views(ModelGrads& g) {
    return {{g.layer1.w_input.a.data(), g.layer1.w_input.size()},
            {g.layer1.w_hidden.a.data(), g.layer1.w_hidden.size()},
            {g.layer1.bias.data(), g.layer1.bias.size()},
            {g.layer2.w_input.a.data(), g.layer2.w_input.size()},
            {g.layer2.w_hidden.a.data(), g.layer2.w_hidden.size()},
            {g.layer2.bias.data(), g.layer2.bias.size()},
            {g.fc_weight.a.data(), g.fc_weight.size()},
            {g.fc_bias.data(), g.fc_bias.size()}};
}

LstmLayerParams make_layer(int input_size, int hidden_size) {
    LstmLayerParams p;
    p.input_size = input_size;
    p.hidden_size = hidden_size;
    p.w_input = Mat(4 * hidden_size, input_size);
    p.w_hidden = Mat(4 * hidden_size, hidden_size);
    p.bias.assign(4 * static_cast<std::size_t>(hidden_size), 0.0);
    return p;
}

void fill_uniform(RandomSource& rng, double* data, std::size_t n, int fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (std::size_t i = 0; i < n; ++i) {
        data[i] = rng.uniform(-bound, bound);
    }
}

}  // namespace

LrnetModel make_model(int window_l, int h1, int h2, std::uint64_t init_seed) {
    if (window_l < 2 || h1 < 1 || h2 < 1) {
        throw std::invalid_argument("make_model: bad sizes");
    }
    LrnetModel m;
    m.window_l = window_l;
    m.train_seed = init_seed;
    m.layer1 = make_layer(2, h1);
    m.layer2 = make_layer(h1, h2);
    m.fc_weight = Mat(2, h2);
    m.fc_bias.assign(2, 0.0);

    // Draws happen in the fixed tensor order; fan_in is the input dimension
    // for w_input, the hidden size otherwise.
    RandomSource rng(init_seed);
    fill_uniform(rng, m.layer1.w_input.a.data(), m.layer1.w_input.size(), 2);
    fill_uniform(rng, m.layer1.w_hidden.a.data(), m.layer1.w_hidden.size(), h1);
    fill_uniform(rng, m.layer1.bias.data(), m.layer1.bias.size(), h1);
    fill_uniform(rng, m.layer2.w_input.a.data(), m.layer2.w_input.size(), h1);
    fill_uniform(rng, m.layer2.w_hidden.a.data(), m.layer2.w_hidden.size(), h2);
    fill_uniform(rng, m.layer2.bias.data(), m.layer2.bias.size(), h2);
    fill_uniform(rng, m.fc_weight.a.data(), m.fc_weight.size(), h2);
    fill_uniform(rng, m.fc_bias.data(), m.fc_bias.size(), h2);

    // forget-gate bias block starts open
    for (int i = h1; i < 2 * h1; ++i) m.layer1.bias[i] = 1.0;
    for (int i = h2; i < 2 * h2; ++i) m.layer2.bias[i] = 1.0;
    return m;
}

ModelGrads make_grads(const LrnetModel& model) {
    ModelGrads g;
    g.layer1.w_input = Mat(model.layer1.w_input.rows, model.layer1.w_input.cols);
    g.layer1.w_hidden = Mat(model.layer1.w_hidden.rows, model.layer1.w_hidden.cols);
    g.layer1.bias.assign(model.layer1.bias.size(), 0.0);
    g.layer2.w_input = Mat(model.layer2.w_input.rows, model.layer2.w_input.cols);
    g.layer2.w_hidden = Mat(model.layer2.w_hidden.rows, model.layer2.w_hidden.cols);
    g.layer2.bias.assign(model.layer2.bias.size(), 0.0);
    g.fc_weight = Mat(model.fc_weight.rows, model.fc_weight.cols);
    g.fc_bias.assign(model.fc_bias.size(), 0.0);
    return g;
}

OptimizerState make_optimizer_state(const LrnetModel& model) {
    OptimizerState st;
    st.first_moment = make_grads(model);
    st.second_moment = make_grads(model);
    st.step_count = 0;
    return st;
}

namespace {

// One batched LSTM step. gates enters as pre-activations and leaves holding
// the post-activation gate values [i; f; g; o].
void lstm_step_activate(int h_size, int b, Mat& gates, const Mat& c_prev, Mat& c_out,
                        Mat& tanh_c_out, Mat& h_out) {
    for (int i = 0; i < h_size; ++i) {
        double* gi = gates.row(i);
        double* gf = gates.row(h_size + i);
        double* gg = gates.row(2 * h_size + i);
        double* go = gates.row(3 * h_size + i);
        const double* cp = c_prev.row(i);
        double* cr = c_out.row(i);
        double* tr = tanh_c_out.row(i);
        double* hr = h_out.row(i);
        for (int j = 0; j < b; ++j) {
            const double in_gate = sigmoid(gi[j]);
            const double forget_gate = sigmoid(gf[j]);
            const double candidate = std::tanh(gg[j]);
            const double out_gate = sigmoid(go[j]);
            const double c_new = forget_gate * cp[j] + in_gate * candidate;
            const double tc = std::tanh(c_new);
            gi[j] = in_gate;
            gf[j] = forget_gate;
            gg[j] = candidate;
            go[j] = out_gate;
            cr[j] = c_new;
            tr[j] = tc;
            hr[j] = out_gate * tc;
        }
    }
}

// inputs[in_offset + t] is the step-t input (D x B).
void lstm_layer_forward(const LstmLayerParams& p, const std::vector<Mat>& inputs, int in_offset,
                        int len, LayerCache& cache) {
    const int h_size = p.hidden_size;
    const int b = inputs[in_offset].cols;
    cache.gates.resize(len);
    cache.tanh_c.resize(len);
    cache.c.resize(len + 1);
    cache.h.resize(len + 1);
    reshape(cache.c[0], h_size, b);
    cache.c[0].zero();
    reshape(cache.h[0], h_size, b);
    cache.h[0].zero();
    for (int t = 0; t < len; ++t) {
        Mat& gates = cache.gates[t];
        reshape(gates, 4 * h_size, b);
        for (int i = 0; i < 4 * h_size; ++i) {
            std::fill_n(gates.row(i), b, p.bias[i]);
        }
        matmul_acc(p.w_input, inputs[in_offset + t], gates);
        matmul_acc(p.w_hidden, cache.h[t], gates);
        reshape(cache.c[t + 1], h_size, b);
        reshape(cache.tanh_c[t], h_size, b);
        reshape(cache.h[t + 1], h_size, b);
        lstm_step_activate(h_size, b, gates, cache.c[t], cache.c[t + 1], cache.tanh_c[t],
                           cache.h[t + 1]);
    }
}

// BPTT over one layer. dh_final feeds the last step only (stack output);
// dh_per_step feeds every step (a stacked layer above). dx, when non-null,
// receives the input gradients the layer below needs.
void lstm_layer_backward(const LstmLayerParams& p, const std::vector<Mat>& inputs, int in_offset,
                         int len, const LayerCache& cache, const std::vector<Mat>* dh_per_step,
                         const Mat* dh_final, LayerGrads& grads, std::vector<Mat>* dx) {
    const int h_size = p.hidden_size;
    const int b = cache.h[0].cols;
    Mat dh(h_size, b);
    Mat dc(h_size, b);
    Mat dgates(4 * h_size, b);
    if (dx) {
        dx->resize(len);
    }
    for (int t = len - 1; t >= 0; --t) {
        if (dh_final && t == len - 1) {
            add_into(dh, *dh_final);
        }
        if (dh_per_step) {
            add_into(dh, (*dh_per_step)[t]);
        }
        const Mat& gates = cache.gates[t];
        for (int i = 0; i < h_size; ++i) {
            const double* gi = gates.row(i);
            const double* gf = gates.row(h_size + i);
            const double* gg = gates.row(2 * h_size + i);
            const double* go = gates.row(3 * h_size + i);
            const double* tc = cache.tanh_c[t].row(i);
            const double* cp = cache.c[t].row(i);
            const double* dhr = dh.row(i);
            double* dcr = dc.row(i);
            double* dgi = dgates.row(i);
            double* dgf = dgates.row(h_size + i);
            double* dgg = dgates.row(2 * h_size + i);
            double* dgo = dgates.row(3 * h_size + i);
            for (int j = 0; j < b; ++j) {
                const double dct = dcr[j] + dhr[j] * go[j] * (1.0 - tc[j] * tc[j]);
                dgo[j] = dhr[j] * tc[j] * go[j] * (1.0 - go[j]);
                dgi[j] = dct * gg[j] * gi[j] * (1.0 - gi[j]);
                dgf[j] = dct * cp[j] * gf[j] * (1.0 - gf[j]);
                dgg[j] = dct * gi[j] * (1.0 - gg[j] * gg[j]);
                dcr[j] = dct * gf[j];
            }
        }
        for (int i = 0; i < 4 * h_size; ++i) {
            const double* row = dgates.row(i);
            double acc = 0.0;
            for (int j = 0; j < b; ++j) {
                acc += row[j];
            }
            grads.bias[i] += acc;
        }
        matmul_nt_acc(dgates, inputs[in_offset + t], grads.w_input);
        matmul_nt_acc(dgates, cache.h[t], grads.w_hidden);
        if (dx) {
            reshape((*dx)[t], p.input_size, b);
            (*dx)[t].zero();
            matmul_tn_acc(p.w_input, dgates, (*dx)[t]);
        }
        dh.zero();
        matmul_tn_acc(p.w_hidden, dgates, dh);
    }
}

}  // namespace

std::pair<std::vector<double>, std::vector<double>> lstm_cell_forward(
    const std::vector<double>& x, const std::vector<double>& h_prev,
    const std::vector<double>& c_prev, const LstmLayerParams& p, CellCache* cache) {
    const int d = p.input_size;
    const int h_size = p.hidden_size;
    if (static_cast<int>(x.size()) != d || static_cast<int>(h_prev.size()) != h_size ||
        static_cast<int>(c_prev.size()) != h_size ||
        static_cast<int>(p.bias.size()) != 4 * h_size || p.w_input.rows != 4 * h_size ||
        p.w_input.cols != d || p.w_hidden.rows != 4 * h_size || p.w_hidden.cols != h_size) {
        throw std::invalid_argument("lstm_cell_forward: shape mismatch");
    }
    Mat xm(d, 1), hm(h_size, 1), cm(h_size, 1);
    for (int i = 0; i < d; ++i) xm(i, 0) = x[i];
    for (int i = 0; i < h_size; ++i) hm(i, 0) = h_prev[i];
    for (int i = 0; i < h_size; ++i) cm(i, 0) = c_prev[i];

    Mat gates(4 * h_size, 1);
    for (int i = 0; i < 4 * h_size; ++i) gates(i, 0) = p.bias[i];
    matmul_acc(p.w_input, xm, gates);
    matmul_acc(p.w_hidden, hm, gates);
    Mat c_out(h_size, 1), tanh_c(h_size, 1), h_out(h_size, 1);
    lstm_step_activate(h_size, 1, gates, cm, c_out, tanh_c, h_out);

    if (cache) {
        cache->x = xm;
        cache->h_prev = hm;
        cache->c_prev = cm;
        cache->gates = gates;
        cache->c = c_out;
        cache->tanh_c = tanh_c;
    }
    std::vector<double> h(h_size), c(h_size);
    for (int i = 0; i < h_size; ++i) {
        h[i] = h_out(i, 0);
        c[i] = c_out(i, 0);
    }
    return {h, c};
}

std::pair<Mat, Location> normalize(const TrajectoryWindow& w, const NormalizationSpec& spec) {
    if (spec.mode != "anchored-displacement") {
        throw std::invalid_argument("normalize: unknown mode " + spec.mode);
    }
    if (w.columns.empty()) {
        throw std::invalid_argument("normalize: empty window");
    }
    const Location anchor = w.columns.back();
    Mat out(2, static_cast<int>(w.columns.size()));
    for (std::size_t i = 0; i < w.columns.size(); ++i) {
        out(0, static_cast<int>(i)) = w.columns[i].x - anchor.x;
        out(1, static_cast<int>(i)) = w.columns[i].y - anchor.y;
    }
    return {out, anchor};
}

void forward_batch(const LrnetModel& model, const std::vector<const TrainingExample*>& batch,
                   ForwardCache& cache) {
    if (batch.empty()) {
        throw std::invalid_argument("forward_batch: empty batch");
    }
    const int len = model.window_l;
    const int b = static_cast<int>(batch.size());
    for (const auto* ex : batch) {
        if (ex->input.rows != 2 || ex->input.cols != len) {
            throw std::invalid_argument("forward_batch: window length mismatch");
        }
    }
    cache.batch = b;
    cache.x.resize(len);
    for (int t = 0; t < len; ++t) {
        reshape(cache.x[t], 2, b);
        for (int j = 0; j < b; ++j) {
            cache.x[t](0, j) = batch[j]->input(0, t);
            cache.x[t](1, j) = batch[j]->input(1, t);
        }
    }
    lstm_layer_forward(model.layer1, cache.x, 0, len, cache.l1);
    lstm_layer_forward(model.layer2, cache.l1.h, 1, len, cache.l2);
    reshape(cache.pred, 2, b);
    for (int i = 0; i < 2; ++i) {
        std::fill_n(cache.pred.row(i), b, model.fc_bias[i]);
    }
    matmul_acc(model.fc_weight, cache.l2.h[len], cache.pred);
}

std::pair<std::array<double, 2>, ForwardCache> forward(const LrnetModel& model,
                                                       const TrajectoryWindow& w) {
    if (static_cast<int>(w.columns.size()) != model.window_l) {
        throw std::invalid_argument("forward: window length mismatch");
    }
    TrainingExample ex;
    auto [input, anchor] = normalize(w, model.norm_spec);
    ex.input = std::move(input);
    ex.anchor = anchor;
    ex.label = {0.0, 0.0};
    ForwardCache cache;
    forward_batch(model, {&ex}, cache);
    return {{cache.pred(0, 0), cache.pred(1, 0)}, std::move(cache)};
}

double mse_loss(const std::vector<std::array<double, 2>>& preds,
                const std::vector<std::array<double, 2>>& labels) {
    if (preds.empty()) {
        throw std::domain_error("mse_loss: empty batch");
    }
    if (preds.size() != labels.size()) {
        throw std::domain_error("mse_loss: length mismatch");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const double ex = labels[i][0] - preds[i][0];
        const double ey = labels[i][1] - preds[i][1];
        acc += ex * ex + ey * ey;
    }
    return acc / (2.0 * static_cast<double>(preds.size()));
}

ModelGrads backward(const LrnetModel& model, const ForwardCache& cache, const Mat& labels) {
    const int len = model.window_l;
    const int b = cache.batch;
    if (b < 1 || labels.rows != 2 || labels.cols != b) {
        throw std::invalid_argument("backward: labels do not match cache batch");
    }
    if (static_cast<int>(cache.l2.h.size()) != len + 1 ||
        static_cast<int>(cache.l1.h.size()) != len + 1 || cache.pred.rows != 2 ||
        cache.pred.cols != b || cache.l1.h[0].rows != model.layer1.hidden_size ||
        cache.l2.h[0].rows != model.layer2.hidden_size) {
        throw std::invalid_argument("backward: cache does not match model");
    }

    ModelGrads grads = make_grads(model);
    Mat dpred(2, b);
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < b; ++j) {
            dpred(i, j) = (cache.pred(i, j) - labels(i, j)) / static_cast<double>(b);
        }
    }
    matmul_nt_acc(dpred, cache.l2.h[len], grads.fc_weight);
    for (int i = 0; i < 2; ++i) {
        const double* row = dpred.row(i);
        double acc = 0.0;
        for (int j = 0; j < b; ++j) {
            acc += row[j];
        }
        grads.fc_bias[i] += acc;
    }
    Mat dh2(model.layer2.hidden_size, b);
    matmul_tn_acc(model.fc_weight, dpred, dh2);

    std::vector<Mat> dx2;
    lstm_layer_backward(model.layer2, cache.l1.h, 1, len, cache.l2, nullptr, &dh2, grads.layer2,
                        &dx2);
    lstm_layer_backward(model.layer1, cache.x, 0, len, cache.l1, &dx2, nullptr, grads.layer1,
                        nullptr);
    return grads;
}

namespace {

// Independent scalar forward pass in 80-bit precision. The central-difference
// oracle runs on this, not on the batched float64 engine it is checking:
// differencing a float64 loss at eps = 1e-5 bottoms out around 5e-12 absolute
// (the ulp of the loss over 2 eps), which swamps the smallest gradients of a
// random model. Extended precision pushes that floor three orders down.
long double scalar_loss_ext(const LrnetModel& m, const TrainingExample& ex) {
    const auto cell = [](const LstmLayerParams& p, const std::vector<long double>& x,
                         std::vector<long double>& h, std::vector<long double>& c) {
        const int hs = p.hidden_size;
        const std::vector<long double> h_prev = h;
        for (int i = 0; i < hs; ++i) {
            long double pre[4];
            for (int blk = 0; blk < 4; ++blk) {
                const int row = blk * hs + i;
                long double acc = p.bias[row];
                const double* wi = p.w_input.row(row);
                for (int j = 0; j < p.input_size; ++j) {
                    acc += static_cast<long double>(wi[j]) * x[j];
                }
                const double* wh = p.w_hidden.row(row);
                for (int j = 0; j < hs; ++j) {
                    acc += static_cast<long double>(wh[j]) * h_prev[j];
                }
                pre[blk] = acc;
            }
            const long double in_gate = 1.0L / (1.0L + std::exp(-pre[0]));
            const long double forget_gate = 1.0L / (1.0L + std::exp(-pre[1]));
            const long double candidate = std::tanh(pre[2]);
            const long double out_gate = 1.0L / (1.0L + std::exp(-pre[3]));
            c[i] = forget_gate * c[i] + in_gate * candidate;
            h[i] = out_gate * std::tanh(c[i]);
        }
    };

    std::vector<long double> h1(m.layer1.hidden_size, 0.0L), c1(m.layer1.hidden_size, 0.0L);
    std::vector<long double> h2(m.layer2.hidden_size, 0.0L), c2(m.layer2.hidden_size, 0.0L);
    std::vector<long double> x(2);
    for (int t = 0; t < m.window_l; ++t) {
        x[0] = ex.input(0, t);
        x[1] = ex.input(1, t);
        cell(m.layer1, x, h1, c1);
        cell(m.layer2, h1, h2, c2);
    }
    long double loss = 0.0L;
    for (int i = 0; i < 2; ++i) {
        long double pred = m.fc_bias[i];
        const double* row = m.fc_weight.row(i);
        for (int j = 0; j < m.layer2.hidden_size; ++j) {
            pred += static_cast<long double>(row[j]) * h2[j];
        }
        const long double r = pred - static_cast<long double>(ex.label[i]);
        loss += r * r;
    }
    return 0.5L * loss;
}

}  // namespace

double grad_check(const LrnetModel& model, const TrainingExample& ex, double epsilon,
                  int max_per_tensor) {
    if (epsilon <= 0.0) {
        throw std::domain_error("grad_check: epsilon must be > 0");
    }
    ForwardCache cache;
    forward_batch(model, {&ex}, cache);
    Mat labels(2, 1);
    labels(0, 0) = ex.label[0];
    labels(1, 0) = ex.label[1];
    ModelGrads analytic = backward(model, cache, labels);

    LrnetModel probe = model;
    auto pviews = tensor_views(probe);
    auto gviews = tensor_views(analytic);
    double max_rel = 0.0;
    for (std::size_t ti = 0; ti < pviews.size(); ++ti) {
        const std::size_t n = pviews[ti].size;
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        std::size_t take = n;
        if (max_per_tensor > 0 && static_cast<std::size_t>(max_per_tensor) < n) {
            take = static_cast<std::size_t>(max_per_tensor);
            RandomSource rng(derive_seed(0x67C4ADULL, ti));
            for (std::size_t i = 0; i < take; ++i) {  // partial Fisher-Yates
                std::swap(idx[i], idx[i + rng.uniform_index(n - i)]);
            }
        }
        for (std::size_t i = 0; i < take; ++i) {
            double* slot = pviews[ti].data + idx[i];
            const double saved = *slot;
            const double plus = saved + epsilon;
            const double minus = saved - epsilon;
            *slot = plus;
            const long double jp = scalar_loss_ext(probe, ex);
            *slot = minus;
            const long double jm = scalar_loss_ext(probe, ex);
            *slot = saved;
            // divide by the perturbation actually applied after rounding
            const long double span = static_cast<long double>(plus) - minus;
            const double numeric = static_cast<double>((jp - jm) / span);
            const double exact = gviews[ti].data[idx[i]];
            const double denom = std::max({std::fabs(exact), std::fabs(numeric), 1e-12});
            max_rel = std::max(max_rel, std::fabs(exact - numeric) / denom);
        }
    }
    return max_rel;
}

void adam_step(LrnetModel& model, const ModelGrads& grads, OptimizerState& state,
               const TrainConfig& cfg) {
    auto pv = tensor_views(model);
    auto gv = tensor_views(const_cast<ModelGrads&>(grads));
    auto mv = tensor_views(state.first_moment);
    auto vv = tensor_views(state.second_moment);

    double sq = 0.0;
    for (const auto& view : gv) {
        for (std::size_t i = 0; i < view.size; ++i) {
            sq += view.data[i] * view.data[i];
        }
    }
    const double gnorm = std::sqrt(sq);
    double scale = 1.0;
    if (cfg.grad_clip_norm > 0.0 && gnorm > cfg.grad_clip_norm) {
        scale = cfg.grad_clip_norm / gnorm;
    }

    state.step_count += 1;
    const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(state.step_count));
    const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(state.step_count));
    for (std::size_t ti = 0; ti < pv.size(); ++ti) {
        for (std::size_t i = 0; i < pv[ti].size; ++i) {
            const double g = gv[ti].data[i] * scale;
            double& m1 = mv[ti].data[i];
            double& m2 = vv[ti].data[i];
            m1 = cfg.adam_beta1 * m1 + (1.0 - cfg.adam_beta1) * g;
            m2 = cfg.adam_beta2 * m2 + (1.0 - cfg.adam_beta2) * g * g;
            pv[ti].data[i] -=
                cfg.learning_rate * (m1 / bc1) / (std::sqrt(m2 / bc2) + cfg.adam_eps);
        }
    }
}

std::vector<TrainingExample> build_dataset(const ScenarioConfig& cfg, int n_trajectories,
                                           std::uint64_t seed) {
    if (n_trajectories < 1) {
        throw std::invalid_argument("build_dataset: n_trajectories must be >= 1");
    }
    validate(cfg);
    NormalizationSpec spec;
    std::vector<TrainingExample> out;
    out.reserve(static_cast<std::size_t>(n_trajectories) * (cfg.k_slots - cfg.window_l));
    for (int i = 0; i < n_trajectories; ++i) {
        ScenarioConfig c = cfg;
        c.seed = derive_seed(seed, static_cast<std::uint64_t>(i));
        const Trajectory traj = generate_trajectory(c);
        for (int k = cfg.window_l; k < cfg.k_slots; ++k) {
            const TrajectoryWindow w = window(traj, k, cfg.window_l);
            TrainingExample ex;
            auto [input, anchor] = normalize(w, spec);
            ex.input = std::move(input);
            ex.anchor = anchor;
            ex.label = {traj.locations[k].x - anchor.x, traj.locations[k].y - anchor.y};
            out.push_back(std::move(ex));
        }
    }
    return out;
}

void validate(const TrainConfig& cfg) {
    std::ostringstream bad;
    auto require = [&bad](bool ok, const char* what) {
        if (!ok) {
            bad << (bad.tellp() > 0 ? ", " : "") << what;
        }
    };
    require(cfg.n_examples >= 1, "n_examples >= 1");
    require(cfg.epochs >= 1, "epochs >= 1");
    require(cfg.batch_size >= 1, "batch_size >= 1");
    require(cfg.learning_rate >= 0.0, "learning_rate >= 0");
    require(cfg.adam_beta1 > 0.0 && cfg.adam_beta1 < 1.0, "adam_beta1 in (0,1)");
    require(cfg.adam_beta2 > 0.0 && cfg.adam_beta2 < 1.0, "adam_beta2 in (0,1)");
    require(cfg.adam_eps > 0.0, "adam_eps > 0");
    require(cfg.grad_clip_norm > 0.0, "grad_clip_norm > 0");
    require(cfg.validation_fraction > 0.0 && cfg.validation_fraction <= 0.5,
            "validation_fraction in (0, 0.5]");
    if (bad.tellp() > 0) {
        throw ConfigError("invalid train config: " + bad.str());
    }
}

TrainConfig load_train_config(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    TrainConfig cfg;
    if (!doc.is_object() || !doc.contains("train")) {
        return cfg;
    }
    const auto& block = doc["train"];
    if (!block.is_object()) {
        throw ConfigError("config key 'train' must be an object");
    }
    std::string unknown;
    for (const auto& [key, value] : block.items()) {
        try {
            if (key == "n_examples") cfg.n_examples = value.get<int>();
            else if (key == "epochs") cfg.epochs = value.get<int>();
            else if (key == "batch_size") cfg.batch_size = value.get<int>();
            else if (key == "learning_rate") cfg.learning_rate = value.get<double>();
            else if (key == "adam_beta1") cfg.adam_beta1 = value.get<double>();
            else if (key == "adam_beta2") cfg.adam_beta2 = value.get<double>();
            else if (key == "adam_eps") cfg.adam_eps = value.get<double>();
            else if (key == "grad_clip_norm") cfg.grad_clip_norm = value.get<double>();
            else if (key == "validation_fraction") cfg.validation_fraction = value.get<double>();
            else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
            else unknown += (unknown.empty() ? "" : ", ") + key;
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("train config key '" + key + "': " + e.what());
        }
    }
    if (!unknown.empty()) {
        throw ConfigError("unknown train config keys: " + unknown);
    }
    validate(cfg);
    return cfg;
}

namespace {

double batch_loss(const Mat& pred, const Mat& labels) {
    double acc = 0.0;
    for (int j = 0; j < pred.cols; ++j) {
        const double ex = labels(0, j) - pred(0, j);
        const double ey = labels(1, j) - pred(1, j);
        acc += ex * ex + ey * ey;
    }
    return acc / (2.0 * pred.cols);
}

double eval_loss(const LrnetModel& model, const std::vector<TrainingExample>& dataset,
                 const std::vector<std::size_t>& idx, int batch_size, ForwardCache& cache) {
    double acc = 0.0;
    for (std::size_t start = 0; start < idx.size(); start += batch_size) {
        const std::size_t stop = std::min(idx.size(), start + batch_size);
        std::vector<const TrainingExample*> batch;
        batch.reserve(stop - start);
        for (std::size_t i = start; i < stop; ++i) {
            batch.push_back(&dataset[idx[i]]);
        }
        forward_batch(model, batch, cache);
        for (std::size_t i = start; i < stop; ++i) {
            const int j = static_cast<int>(i - start);
            const double ex = dataset[idx[i]].label[0] - cache.pred(0, j);
            const double ey = dataset[idx[i]].label[1] - cache.pred(1, j);
            acc += ex * ex + ey * ey;
        }
    }
    return acc / (2.0 * static_cast<double>(idx.size()));
}

void shuffle_indices(std::vector<std::size_t>& idx, RandomSource& rng) {
    for (std::size_t i = idx.size(); i > 1; --i) {
        std::swap(idx[i - 1], idx[rng.uniform_index(i)]);
    }
}

}  // namespace

TrainResult train(LrnetModel& model, const std::vector<TrainingExample>& dataset,
                  const TrainConfig& cfg) {
    validate(cfg);
    if (dataset.size() < 2) {
        throw std::invalid_argument("train: need at least 2 examples");
    }
    // stream 1 of the training seed drives shuffling; stream 0 is reserved for
    // parameter initialization (make_model uses the seed directly)
    RandomSource rng(derive_seed(cfg.seed, 1));
    const std::size_t n = dataset.size();
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    shuffle_indices(idx, rng);
    const auto val_n = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(cfg.validation_fraction * n)));
    std::vector<std::size_t> val_idx(idx.end() - val_n, idx.end());
    std::vector<std::size_t> train_idx(idx.begin(), idx.end() - val_n);

    OptimizerState state = make_optimizer_state(model);
    TrainResult result;
    LrnetModel best = model;
    double best_val = std::numeric_limits<double>::infinity();
    int best_epoch = -1;

    ForwardCache cache;
    Mat labels;
    result.initial_train_loss = eval_loss(model, dataset, train_idx, cfg.batch_size, cache);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_indices(train_idx, rng);
        double loss_acc = 0.0;
        for (std::size_t start = 0; start < train_idx.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(train_idx.size(), start + cfg.batch_size);
            const int b = static_cast<int>(stop - start);
            std::vector<const TrainingExample*> batch;
            batch.reserve(b);
            for (std::size_t i = start; i < stop; ++i) {
                batch.push_back(&dataset[train_idx[i]]);
            }
            forward_batch(model, batch, cache);
            reshape(labels, 2, b);
            for (int j = 0; j < b; ++j) {
                labels(0, j) = batch[j]->label[0];
                labels(1, j) = batch[j]->label[1];
            }
            const double loss = batch_loss(cache.pred, labels);
            if (!std::isfinite(loss)) {
                throw NumericalError("training diverged at epoch " + std::to_string(epoch));
            }
            loss_acc += loss * b;
            const ModelGrads grads = backward(model, cache, labels);
            adam_step(model, grads, state, cfg);
        }
        EpochStats stats;
        stats.train_loss = loss_acc / static_cast<double>(train_idx.size());
        stats.val_loss = eval_loss(model, dataset, val_idx, cfg.batch_size, cache);
        if (!std::isfinite(stats.val_loss)) {
            throw NumericalError("training diverged at epoch " + std::to_string(epoch));
        }
        result.history.push_back(stats);
        if (stats.val_loss < best_val) {
            best_val = stats.val_loss;
            best_epoch = epoch;
            best = model;
        }
    }
    model = best;
    result.best_epoch = best_epoch;
    result.best_val_loss = best_val;
    return result;
}

Location predict_location(const LrnetModel& model, const TrajectoryWindow& w) {
    const Location anchor = w.columns.back();
    const auto pred = forward(model, w).first;
    return {anchor.x + pred[0], anchor.y + pred[1]};
}

double predict_angle(const LrnetModel& model, const TrajectoryWindow& w, const Location& ue) {
    return relative_angle(predict_location(model, w), ue);
}

std::vector<Location> predict_multi_step(const LrnetModel& model, const TrajectoryWindow& w,
                                         int steps) {
    if (steps < 1) {
        throw std::invalid_argument("predict_multi_step: steps must be >= 1");
    }
    TrajectoryWindow rolling = w;
    std::vector<Location> out;
    out.reserve(steps);
    for (int s = 0; s < steps; ++s) {
        const Location pred = predict_location(model, rolling);
        out.push_back(pred);
        rolling.columns.erase(rolling.columns.begin());
        rolling.columns.push_back(pred);
        rolling.target_index += 1;
    }
    return out;
}

namespace {

nlohmann::json mat_to_json(const Mat& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < m.rows; ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (int j = 0; j < m.cols; ++j) {
            row.push_back(m(i, j));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

Mat mat_from_json(const nlohmann::json& j, int rows, int cols, const std::string& name) {
    if (!j.is_array() || static_cast<int>(j.size()) != rows) {
        throw ConfigError("model schema error: tensor " + name + " must have " +
                          std::to_string(rows) + " rows");
    }
    Mat m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        const auto& row = j[i];
        if (!row.is_array() || static_cast<int>(row.size()) != cols) {
            throw ConfigError("model schema error: tensor " + name + " must have " +
                              std::to_string(cols) + " columns");
        }
        for (int jj = 0; jj < cols; ++jj) {
            if (!row[jj].is_number()) {
                throw ConfigError("model schema error: tensor " + name + " must be numeric");
            }
            m(i, jj) = row[jj].get<double>();
        }
    }
    return m;
}

std::vector<double> vec_from_json(const nlohmann::json& j, int n, const std::string& name) {
    if (!j.is_array() || static_cast<int>(j.size()) != n) {
        throw ConfigError("model schema error: vector " + name + " must have length " +
                          std::to_string(n));
    }
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) {
        if (!j[i].is_number()) {
            throw ConfigError("model schema error: vector " + name + " must be numeric");
        }
        v[i] = j[i].get<double>();
    }
    return v;
}

nlohmann::json layer_to_json(const LstmLayerParams& p) {
    return {{"input_size", p.input_size},
            {"hidden_size", p.hidden_size},
            {"w_input", mat_to_json(p.w_input)},
            {"w_hidden", mat_to_json(p.w_hidden)},
            {"bias", p.bias}};
}

LstmLayerParams layer_from_json(const nlohmann::json& j, const std::string& name) {
    if (!j.is_object() || !j.contains("input_size") || !j.contains("hidden_size") ||
        !j.contains("w_input") || !j.contains("w_hidden") || !j.contains("bias")) {
        throw ConfigError("model schema error: layer " + name + " incomplete");
    }
    LstmLayerParams p;
    p.input_size = j["input_size"].get<int>();
    p.hidden_size = j["hidden_size"].get<int>();
    if (p.input_size < 1 || p.hidden_size < 1) {
        throw ConfigError("model schema error: layer " + name + " has bad sizes");
    }
    p.w_input = mat_from_json(j["w_input"], 4 * p.hidden_size, p.input_size, name + ".w_input");
    p.w_hidden =
        mat_from_json(j["w_hidden"], 4 * p.hidden_size, p.hidden_size, name + ".w_hidden");
    p.bias = vec_from_json(j["bias"], 4 * p.hidden_size, name + ".bias");
    return p;
}

}  // namespace

void save_model(const LrnetModel& model, const std::string& path) {
    nlohmann::json doc;
    doc["schema_version"] = 1;
    doc["model"] = "lrnet";
    doc["rng_algorithm"] = RandomSource::kAlgorithm;
    doc["window_l"] = model.window_l;
    doc["normalization"] = model.norm_spec.mode;
    doc["train_seed"] = model.train_seed;
    doc["layer1"] = layer_to_json(model.layer1);
    doc["layer2"] = layer_to_json(model.layer2);
    doc["fc_weight"] = mat_to_json(model.fc_weight);
    doc["fc_bias"] = model.fc_bias;
    std::ofstream out(path);
    if (!out) {
        throw ConfigError("cannot open model file for writing: " + path);
    }
    out << doc.dump();
    out << '\n';
    if (!out) {
        throw ConfigError("failed writing model file: " + path);
    }
}

LrnetModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open model file: " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(ss.str());
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("model parse error: ") + e.what());
    }
    try {
        if (!doc.is_object() || doc.value("schema_version", 0) != 1 ||
            doc.value("model", "") != "lrnet") {
            throw ConfigError("model schema error: not a version-1 lrnet file");
        }
        LrnetModel m;
        m.window_l = doc.at("window_l").get<int>();
        if (m.window_l < 2) {
            throw ConfigError("model schema error: window_l must be >= 2");
        }
        m.norm_spec.mode = doc.at("normalization").get<std::string>();
        if (m.norm_spec.mode != "anchored-displacement") {
            throw ConfigError("model schema error: unknown normalization mode");
        }
        m.train_seed = doc.value("train_seed", 0ULL);
        m.layer1 = layer_from_json(doc.at("layer1"), "layer1");
        m.layer2 = layer_from_json(doc.at("layer2"), "layer2");
        if (m.layer1.input_size != 2 || m.layer2.input_size != m.layer1.hidden_size) {
            throw ConfigError("model schema error: layer sizes do not chain (2 -> H1 -> H2)");
        }
        m.fc_weight = mat_from_json(doc.at("fc_weight"), 2, m.layer2.hidden_size, "fc_weight");
        m.fc_bias = vec_from_json(doc.at("fc_bias"), 2, "fc_bias");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("model schema error: ") + e.what());
    }
}

}  // namespace uavbeam
