#include "nn.hpp"

#include <cstring>
#include <fstream>

namespace ekmid::nn {

namespace {

uint64_t mix(uint64_t a, uint64_t b) {
    uint64_t h = a + 0x9E3779B97F4A7C15ULL + (b << 6) + (b >> 2);
    h ^= h >> 33;
    h *= 0xFF51AFD7ED558CCDULL;
    h ^= h >> 33;
    return h;
}

struct EvalResult {
    double loss = 0.0;
    double accuracy = 0.0;
};

EvalResult evaluate_split(const Network<float>& net, const dataset::BatchLoader& loader) {
    EvalResult res;
    if (loader.size() == 0) return res;
    size_t correct = 0;
    double loss_sum = 0.0;
    for (const auto& batch : loader.epoch_batches(0, 0)) {
        auto cache = forward(net, batch.images, batch.batch, false, 0);
        loss_sum += static_cast<double>(cce_loss(cache.probs, batch.labels, batch.num_classes)) *
                    batch.batch;
        for (int b = 0; b < batch.batch; ++b) {
            const float* pr = cache.probs.data() + static_cast<size_t>(b) * batch.num_classes;
            int best = 0;
            for (int k = 1; k < batch.num_classes; ++k)
                if (pr[k] > pr[best]) best = k;
            if (best == batch.labels[b]) ++correct;
        }
    }
    res.loss = loss_sum / static_cast<double>(loader.size());
    res.accuracy = static_cast<double>(correct) / static_cast<double>(loader.size());
    return res;
}

}  // namespace

TrainHistory train(Network<float>& net, const dataset::BatchLoader& train_loader,
                   const dataset::BatchLoader& val_loader, const TrainConfig& cfg) {
    if (cfg.epochs < 1 || cfg.learning_rate <= 0) throw ConfigError("bad training configuration");
    TrainHistory hist;
    uint64_t step = 0;
    for (int e = 0; e < cfg.epochs; ++e) {
        double loss_sum = 0.0;
        size_t seen = 0;
        int steps_done = 0;
        for (const auto& batch : train_loader.epoch_batches(cfg.seed, static_cast<uint64_t>(e))) {
            if (cfg.steps_per_epoch > 0 && steps_done >= cfg.steps_per_epoch) break;
            auto cache = forward(net, batch.images, batch.batch, true, mix(cfg.seed, step));
            float loss = cce_loss(cache.probs, batch.labels, batch.num_classes);
            if (!std::isfinite(loss))
                throw NumericError("DivergedLoss: non-finite loss at step " + std::to_string(step));
            auto grads = backward(net, cache, batch.labels);
            adam_step(net, grads, cfg);
            loss_sum += static_cast<double>(loss) * batch.batch;
            seen += batch.batch;
            ++steps_done;
            ++step;
        }
        EpochStats st;
        st.epoch = e;
        st.train_loss = seen ? loss_sum / static_cast<double>(seen) : 0.0;
        auto val = evaluate_split(net, val_loader);
        st.val_loss = val.loss;
        st.val_accuracy = val.accuracy;
        hist.epochs.push_back(st);
    }
    return hist;
}

Prediction predict(const Network<float>& net, const dataset::Batch& batch) {
    auto cache = forward(net, batch.images, batch.batch, false, 0);
    Prediction pred;
    pred.probabilities = cache.probs;
    pred.classes.resize(batch.batch);
    for (int b = 0; b < batch.batch; ++b) {
        const float* pr = cache.probs.data() + static_cast<size_t>(b) * net.cfg.classes;
        int best = 0;
        for (int k = 1; k < net.cfg.classes; ++k)
            if (pr[k] > pr[best]) best = k;  // ties resolve to the lowest index
        pred.classes[b] = best;
    }
    return pred;
}

namespace {

constexpr char kMagic[4] = {'E', 'K', 'M', 'N'};
constexpr uint16_t kVersion = 1;

template <typename T>
void write_pod(std::ofstream& f, const T& v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T read_pod(std::ifstream& f) {
    T v{};
    f.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!f) throw DataError("truncated model file");
    return v;
}

void write_string(std::ofstream& f, const std::string& s) {
    write_pod<uint32_t>(f, static_cast<uint32_t>(s.size()));
    f.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::ifstream& f) {
    auto len = read_pod<uint32_t>(f);
    std::string s(len, '\0');
    f.read(s.data(), len);
    if (!f) throw DataError("truncated model file");
    return s;
}

void write_tensor(std::ofstream& f, const std::vector<float>& t,
                  const std::vector<uint32_t>& shape) {
    write_pod<uint32_t>(f, static_cast<uint32_t>(shape.size()));
    size_t total = 1;
    for (auto d : shape) {
        write_pod<uint32_t>(f, d);
        total *= d;
    }
    if (total != t.size()) throw DataError("tensor shape mismatch on save");
    f.write(reinterpret_cast<const char*>(t.data()),
            static_cast<std::streamsize>(t.size() * sizeof(float)));
}

std::vector<float> read_tensor(std::ifstream& f, size_t expected) {
    auto ndim = read_pod<uint32_t>(f);
    size_t total = 1;
    for (uint32_t i = 0; i < ndim; ++i) total *= read_pod<uint32_t>(f);
    if (total != expected) throw DataError("tensor shape mismatch in model file");
    std::vector<float> t(total);
    f.read(reinterpret_cast<char*>(t.data()),
           static_cast<std::streamsize>(total * sizeof(float)));
    if (!f) throw DataError("truncated model file");
    return t;
}

std::vector<std::vector<uint32_t>> tensor_shapes(const ModelConfig& c) {
    auto u = [](int64_t v) { return static_cast<uint32_t>(v); };
    return {
        {u(c.conv_filters), u(c.kernel), u(c.kernel), u(c.channels)},
        {u(c.conv_filters)},
        {u(c.dense_hidden), u(c.flat())},
        {u(c.dense_hidden)},
        {u(c.classes), u(c.dense_hidden)},
        {u(c.classes)},
    };
}

}  // namespace

void save_model(const Network<float>& net, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write model: " + path.string());
    f.write(kMagic, 4);
    write_pod(f, kVersion);
    const auto& c = net.cfg;
    for (int v : {c.input_h, c.input_w, c.channels, c.crop_top, c.crop_bottom, c.crop_left,
                  c.crop_right, c.conv_filters, c.kernel, c.pool, c.dense_hidden, c.classes})
        write_pod<int32_t>(f, v);
    write_pod<float>(f, c.dropout_rate);
    write_pod<uint32_t>(f, static_cast<uint32_t>(net.vocab.size()));
    for (const auto& s : net.vocab) write_string(f, s);
    write_string(f, net.run_config);
    write_pod<uint64_t>(f, net.adam_step_count);
    auto shapes = tensor_shapes(c);
    auto groups = {&net.params, &net.adam_m, &net.adam_v};
    for (const auto* g : groups) {
        auto ts = g->tensors();
        for (size_t i = 0; i < ts.size(); ++i) write_tensor(f, *ts[i], shapes[i]);
    }
    if (!f) throw DataError("write failure: " + path.string());
}

Network<float> load_model(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open model: " + path.string());
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, kMagic, 4) != 0)
        throw DataError("not a model file: " + path.string());
    if (read_pod<uint16_t>(f) != kVersion) throw DataError("unsupported model version");
    Network<float> net;
    auto& c = net.cfg;
    for (int* v : {&c.input_h, &c.input_w, &c.channels, &c.crop_top, &c.crop_bottom, &c.crop_left,
                   &c.crop_right, &c.conv_filters, &c.kernel, &c.pool, &c.dense_hidden, &c.classes})
        *v = read_pod<int32_t>(f);
    c.dropout_rate = read_pod<float>(f);
    c.validate();
    auto nvocab = read_pod<uint32_t>(f);
    for (uint32_t i = 0; i < nvocab; ++i) net.vocab.push_back(read_string(f));
    net.run_config = read_string(f);
    net.adam_step_count = read_pod<uint64_t>(f);
    net.params.resize(c);
    net.adam_m.resize(c);
    net.adam_v.resize(c);
    auto groups = {&net.params, &net.adam_m, &net.adam_v};
    for (auto* g : groups) {
        auto ts = g->tensors();
        for (auto* t : ts) *t = read_tensor(f, t->size());
    }
    return net;
}

}  // namespace ekmid::nn
