#ifndef EKMID_NN_HPP
#define EKMID_NN_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "errors.hpp"

namespace ekmid::nn {

struct ModelConfig {
    int input_h = 25, input_w = 37, channels = 3;
    int crop_top = 2, crop_bottom = 2, crop_left = 2, crop_right = 2;
    int conv_filters = 32, kernel = 3;
    int pool = 2;
    float dropout_rate = 0.25f;
    int dense_hidden = 256;
    int classes = 0;

    int crop_h() const { return input_h - crop_top - crop_bottom; }
    int crop_w() const { return input_w - crop_left - crop_right; }
    int conv_h() const { return crop_h() - kernel + 1; }
    int conv_w() const { return crop_w() - kernel + 1; }
    int pool_h() const { return conv_h() / pool; }
    int pool_w() const { return conv_w() / pool; }
    int flat() const { return pool_h() * pool_w() * conv_filters; }
    int64_t conv_params() const {
        return static_cast<int64_t>(conv_filters) * (kernel * kernel * channels + 1);
    }
    int64_t dense1_params() const { return static_cast<int64_t>(flat()) * dense_hidden + dense_hidden; }
    int64_t dense2_params() const { return static_cast<int64_t>(dense_hidden + 1) * classes; }
    int64_t total_params() const { return conv_params() + dense1_params() + dense2_params(); }

    void validate() const {
        if (classes < 2) throw ConfigError("model needs at least 2 classes");
        if (crop_h() <= kernel || crop_w() <= kernel) throw ConfigError("crop leaves no room for conv");
        if (dropout_rate < 0 || dropout_rate >= 1) throw ConfigError("dropout rate out of range");
    }
};

struct TrainConfig {
    int epochs = 100;
    double learning_rate = 1e-3;
    double beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8;
    int batch_size = 32;
    uint64_t seed = 0;
    int steps_per_epoch = 0;  // 0 = full split
};

template <typename T>
struct Params {
    std::vector<T> conv_w;  // [F][K][K][C]
    std::vector<T> conv_b;  // [F]
    std::vector<T> w1;      // [hidden][flat]
    std::vector<T> b1;      // [hidden]
    std::vector<T> w2;      // [classes][hidden]
    std::vector<T> b2;      // [classes]

    void resize(const ModelConfig& c) {
        conv_w.assign(static_cast<size_t>(c.conv_filters) * c.kernel * c.kernel * c.channels, T(0));
        conv_b.assign(c.conv_filters, T(0));
        w1.assign(static_cast<size_t>(c.dense_hidden) * c.flat(), T(0));
        b1.assign(c.dense_hidden, T(0));
        w2.assign(static_cast<size_t>(c.classes) * c.dense_hidden, T(0));
        b2.assign(c.classes, T(0));
    }
    std::vector<std::vector<T>*> tensors() {
        return {&conv_w, &conv_b, &w1, &b1, &w2, &b2};
    }
    std::vector<const std::vector<T>*> tensors() const {
        return {&conv_w, &conv_b, &w1, &b1, &w2, &b2};
    }
};

template <typename T>
struct ForwardCache {
    int batch = 0;
    std::vector<T> cropped;   // [B][CH][CW][C]
    std::vector<T> conv_act;  // [B][OH][OW][F], post-ReLU
    std::vector<T> pool_out;  // [B][PH][PW][F]
    std::vector<int> pool_idx;  // argmax position within conv_act, per pooled cell
    std::vector<T> drop_mask;   // 0 or 1/(1-rate)
    std::vector<T> flat;        // [B][flat], after dropout
    std::vector<T> hidden;      // [B][hidden], post-ReLU
    std::vector<T> probs;       // [B][classes]
};

template <typename T>
struct Network {
    ModelConfig cfg;
    std::vector<std::string> vocab;  // class index -> subject id
    std::string run_config;          // embedded build/train configuration text
    Params<T> params;
    Params<T> adam_m, adam_v;
    uint64_t adam_step_count = 0;

    void init(uint64_t seed) {
        cfg.validate();
        params.resize(cfg);
        adam_m.resize(cfg);
        adam_v.resize(cfg);
        adam_step_count = 0;
        std::mt19937_64 rng(seed);
        auto glorot = [&](std::vector<T>& w, int fan_in, int fan_out) {
            double limit = std::sqrt(6.0 / (fan_in + fan_out));
            std::uniform_real_distribution<double> u(-limit, limit);
            for (auto& v : w) v = static_cast<T>(u(rng));
        };
        glorot(params.conv_w, cfg.kernel * cfg.kernel * cfg.channels,
               cfg.kernel * cfg.kernel * cfg.conv_filters);
        glorot(params.w1, cfg.flat(), cfg.dense_hidden);
        glorot(params.w2, cfg.dense_hidden, cfg.classes);
    }
};

// images: B x input_h x input_w x 3 in [0,1]. Dropout is active only when
// training; the mask is a pure function of dropout_seed.
template <typename T>
ForwardCache<T> forward(const Network<T>& net, const std::vector<T>& images, int batch,
                        bool training, uint64_t dropout_seed);

// Mean over the batch of -log p_true, probabilities clamped to [1e-12, 1].
template <typename T>
T cce_loss(const std::vector<T>& probs, const std::vector<int>& labels, int classes);

template <typename T>
Params<T> backward(const Network<T>& net, const ForwardCache<T>& cache,
                   const std::vector<int>& labels);

template <typename T>
void adam_step(Network<T>& net, const Params<T>& grads, const TrainConfig& cfg);

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_accuracy = 0.0;
};

struct TrainHistory {
    std::vector<EpochStats> epochs;
};

TrainHistory train(Network<float>& net, const dataset::BatchLoader& train_loader,
                   const dataset::BatchLoader& val_loader, const TrainConfig& cfg);

struct Prediction {
    std::vector<int> classes;         // argmax, ties toward the lowest index
    std::vector<float> probabilities; // B x C
};

Prediction predict(const Network<float>& net, const dataset::Batch& batch);

void save_model(const Network<float>& net, const std::filesystem::path& path);
Network<float> load_model(const std::filesystem::path& path);

// --- template implementation ---

namespace detail {

inline double unit_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0,1), engine-exact
}

}  // namespace detail

template <typename T>
ForwardCache<T> forward(const Network<T>& net, const std::vector<T>& images, int batch,
                        bool training, uint64_t dropout_seed) {
    const auto& c = net.cfg;
    const int CH = c.crop_h(), CW = c.crop_w(), C = c.channels;
    const int OH = c.conv_h(), OW = c.conv_w(), F = c.conv_filters, K = c.kernel;
    const int PH = c.pool_h(), PW = c.pool_w();
    const int FLAT = c.flat(), HID = c.dense_hidden, NC = c.classes;
    if (images.size() != static_cast<size_t>(batch) * c.input_h * c.input_w * C)
        throw DataError("ShapeMismatch: batch does not match model input size");

    ForwardCache<T> cc;
    cc.batch = batch;
    cc.cropped.resize(static_cast<size_t>(batch) * CH * CW * C);
    cc.conv_act.resize(static_cast<size_t>(batch) * OH * OW * F);
    cc.pool_out.resize(static_cast<size_t>(batch) * PH * PW * F);
    cc.pool_idx.resize(cc.pool_out.size());
    cc.flat.resize(static_cast<size_t>(batch) * FLAT);
    cc.hidden.resize(static_cast<size_t>(batch) * HID);
    cc.probs.resize(static_cast<size_t>(batch) * NC);

    T keep_scale = T(1);
    std::mt19937_64 drop_rng(dropout_seed);
    if (training && c.dropout_rate > 0) {
        keep_scale = T(1) / (T(1) - static_cast<T>(c.dropout_rate));
        cc.drop_mask.resize(cc.pool_out.size());
        for (auto& m : cc.drop_mask)
            m = detail::unit_uniform(drop_rng) >= c.dropout_rate ? keep_scale : T(0);
    }

    const int KKC = K * K * C;
    std::vector<T> col(static_cast<size_t>(OH) * OW * KKC);

    for (int b = 0; b < batch; ++b) {
        // crop
        const T* src = images.data() + static_cast<size_t>(b) * c.input_h * c.input_w * C;
        T* crop = cc.cropped.data() + static_cast<size_t>(b) * CH * CW * C;
        for (int y = 0; y < CH; ++y)
            std::copy_n(src + ((y + c.crop_top) * c.input_w + c.crop_left) * C,
                        static_cast<size_t>(CW) * C, crop + static_cast<size_t>(y) * CW * C);

        // im2col over the cropped image
        for (int oy = 0; oy < OH; ++oy)
            for (int ox = 0; ox < OW; ++ox) {
                T* dst = col.data() + (static_cast<size_t>(oy) * OW + ox) * KKC;
                for (int ky = 0; ky < K; ++ky)
                    std::copy_n(crop + ((oy + ky) * CW + ox) * static_cast<size_t>(C),
                                static_cast<size_t>(K) * C, dst + ky * K * C);
            }

        // conv + ReLU
        T* act = cc.conv_act.data() + static_cast<size_t>(b) * OH * OW * F;
        for (int pix = 0; pix < OH * OW; ++pix) {
            const T* patch = col.data() + static_cast<size_t>(pix) * KKC;
            for (int f = 0; f < F; ++f) {
                const T* w = net.params.conv_w.data() + static_cast<size_t>(f) * KKC;
                T acc = net.params.conv_b[f];
                for (int j = 0; j < KKC; ++j) acc += w[j] * patch[j];
                act[static_cast<size_t>(pix) * F + f] = acc > T(0) ? acc : T(0);
            }
        }

        // max pool (floor semantics: trailing row/col dropped) + dropout + flatten
        T* pooled = cc.pool_out.data() + static_cast<size_t>(b) * PH * PW * F;
        int* pidx = cc.pool_idx.data() + static_cast<size_t>(b) * PH * PW * F;
        T* flat = cc.flat.data() + static_cast<size_t>(b) * FLAT;
        for (int py = 0; py < PH; ++py)
            for (int px = 0; px < PW; ++px)
                for (int f = 0; f < F; ++f) {
                    int best = ((py * c.pool) * OW + px * c.pool) * F + f;
                    T bv = act[best];
                    for (int dy = 0; dy < c.pool; ++dy)
                        for (int dx = 0; dx < c.pool; ++dx) {
                            int idx = ((py * c.pool + dy) * OW + (px * c.pool + dx)) * F + f;
                            if (act[idx] > bv) {
                                bv = act[idx];
                                best = idx;
                            }
                        }
                    size_t o = (static_cast<size_t>(py) * PW + px) * F + f;
                    pooled[o] = bv;
                    pidx[o] = best;
                    T mask = cc.drop_mask.empty()
                                 ? T(1)
                                 : cc.drop_mask[static_cast<size_t>(b) * PH * PW * F + o];
                    flat[o] = bv * mask;
                }

        // dense 256 + ReLU
        T* hid = cc.hidden.data() + static_cast<size_t>(b) * HID;
        for (int h = 0; h < HID; ++h) {
            const T* w = net.params.w1.data() + static_cast<size_t>(h) * FLAT;
            T acc = net.params.b1[h];
            for (int j = 0; j < FLAT; ++j) acc += w[j] * flat[j];
            hid[h] = acc > T(0) ? acc : T(0);
        }

        // dense C + softmax
        T* pr = cc.probs.data() + static_cast<size_t>(b) * NC;
        T mx = -std::numeric_limits<T>::infinity();
        for (int k = 0; k < NC; ++k) {
            const T* w = net.params.w2.data() + static_cast<size_t>(k) * HID;
            T acc = net.params.b2[k];
            for (int j = 0; j < HID; ++j) acc += w[j] * hid[j];
            pr[k] = acc;
            mx = std::max(mx, acc);
        }
        T sum = T(0);
        for (int k = 0; k < NC; ++k) {
            pr[k] = std::exp(pr[k] - mx);
            sum += pr[k];
        }
        for (int k = 0; k < NC; ++k) pr[k] /= sum;
    }
    return cc;
}

template <typename T>
T cce_loss(const std::vector<T>& probs, const std::vector<int>& labels, int classes) {
    T total = T(0);
    for (size_t b = 0; b < labels.size(); ++b) {
        T p = probs[b * classes + labels[b]];
        p = std::clamp(p, static_cast<T>(1e-12), T(1));
        total -= std::log(p);
    }
    return total / static_cast<T>(labels.size());
}

template <typename T>
Params<T> backward(const Network<T>& net, const ForwardCache<T>& cache,
                   const std::vector<int>& labels) {
    const auto& c = net.cfg;
    const int CH = c.crop_h(), CW = c.crop_w(), C = c.channels;
    const int OH = c.conv_h(), OW = c.conv_w(), F = c.conv_filters, K = c.kernel;
    const int PH = c.pool_h(), PW = c.pool_w();
    const int FLAT = c.flat(), HID = c.dense_hidden, NC = c.classes;
    const int B = cache.batch;
    const int KKC = K * K * C;
    const T invB = T(1) / static_cast<T>(B);

    Params<T> g;
    g.resize(c);
    std::vector<T> dlogits(NC), dhid(HID), dflat(FLAT);
    std::vector<T> dcol(static_cast<size_t>(OH) * OW * KKC);
    std::vector<T> col(static_cast<size_t>(OH) * OW * KKC);

    for (int b = 0; b < B; ++b) {
        const T* pr = cache.probs.data() + static_cast<size_t>(b) * NC;
        const T* hid = cache.hidden.data() + static_cast<size_t>(b) * HID;
        const T* flat = cache.flat.data() + static_cast<size_t>(b) * FLAT;
        const T* act = cache.conv_act.data() + static_cast<size_t>(b) * OH * OW * F;
        const int* pidx = cache.pool_idx.data() + static_cast<size_t>(b) * PH * PW * F;
        const T* crop = cache.cropped.data() + static_cast<size_t>(b) * CH * CW * C;

        // softmax + CCE: dlogits = (p - y)/B
        for (int k = 0; k < NC; ++k) dlogits[k] = (pr[k] - (labels[b] == k ? T(1) : T(0))) * invB;

        // dense C
        std::fill(dhid.begin(), dhid.end(), T(0));
        for (int k = 0; k < NC; ++k) {
            T d = dlogits[k];
            g.b2[k] += d;
            T* gw = g.w2.data() + static_cast<size_t>(k) * HID;
            const T* w = net.params.w2.data() + static_cast<size_t>(k) * HID;
            for (int j = 0; j < HID; ++j) {
                gw[j] += d * hid[j];
                dhid[j] += d * w[j];
            }
        }
        // hidden ReLU
        for (int j = 0; j < HID; ++j)
            if (hid[j] <= T(0)) dhid[j] = T(0);

        // dense 256
        std::fill(dflat.begin(), dflat.end(), T(0));
        for (int h = 0; h < HID; ++h) {
            T d = dhid[h];
            if (d == T(0)) continue;
            g.b1[h] += d;
            T* gw = g.w1.data() + static_cast<size_t>(h) * FLAT;
            const T* w = net.params.w1.data() + static_cast<size_t>(h) * FLAT;
            for (int j = 0; j < FLAT; ++j) {
                gw[j] += d * flat[j];
                dflat[j] += d * w[j];
            }
        }

        // dropout + unpool into conv activation gradient (sparse: use dcol staging)
        std::fill(dcol.begin(), dcol.end(), T(0));  // reused below for im2col grads
        std::vector<T> dact(static_cast<size_t>(OH) * OW * F, T(0));
        for (int o = 0; o < PH * PW * F; ++o) {
            T d = dflat[o];
            if (!cache.drop_mask.empty())
                d *= cache.drop_mask[static_cast<size_t>(b) * PH * PW * F + o];
            dact[pidx[o]] += d;
        }
        // conv ReLU
        for (size_t i = 0; i < dact.size(); ++i)
            if (act[i] <= T(0)) dact[i] = T(0);

        // rebuild im2col of this image (cheaper than caching it for the batch)
        for (int oy = 0; oy < OH; ++oy)
            for (int ox = 0; ox < OW; ++ox) {
                T* dst = col.data() + (static_cast<size_t>(oy) * OW + ox) * KKC;
                for (int ky = 0; ky < K; ++ky)
                    std::copy_n(crop + ((oy + ky) * CW + ox) * static_cast<size_t>(C),
                                static_cast<size_t>(K) * C, dst + ky * K * C);
            }

        // conv weight/bias gradients
        for (int pix = 0; pix < OH * OW; ++pix) {
            const T* patch = col.data() + static_cast<size_t>(pix) * KKC;
            const T* d = dact.data() + static_cast<size_t>(pix) * F;
            for (int f = 0; f < F; ++f) {
                if (d[f] == T(0)) continue;
                g.conv_b[f] += d[f];
                T* gw = g.conv_w.data() + static_cast<size_t>(f) * KKC;
                for (int j = 0; j < KKC; ++j) gw[j] += d[f] * patch[j];
            }
        }
    }
    return g;
}

template <typename T>
void adam_step(Network<T>& net, const Params<T>& grads, const TrainConfig& cfg) {
    net.adam_step_count += 1;
    const T b1 = static_cast<T>(cfg.beta1), b2 = static_cast<T>(cfg.beta2);
    const T lr = static_cast<T>(cfg.learning_rate), eps = static_cast<T>(cfg.epsilon);
    const T bc1 = T(1) - std::pow(b1, static_cast<T>(net.adam_step_count));
    const T bc2 = T(1) - std::pow(b2, static_cast<T>(net.adam_step_count));
    auto p = net.params.tensors();
    auto m = net.adam_m.tensors();
    auto v = net.adam_v.tensors();
    auto gr = grads.tensors();
    for (size_t t = 0; t < p.size(); ++t) {
        auto& pw = *p[t];
        auto& mw = *m[t];
        auto& vw = *v[t];
        const auto& gw = *gr[t];
        for (size_t i = 0; i < pw.size(); ++i) {
            mw[i] = b1 * mw[i] + (T(1) - b1) * gw[i];
            vw[i] = b2 * vw[i] + (T(1) - b2) * gw[i] * gw[i];
            T mhat = mw[i] / bc1;
            T vhat = vw[i] / bc2;
            pw[i] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

}  // namespace ekmid::nn

#endif
