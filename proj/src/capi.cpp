#include "ekmid.h"

#include <cstring>
#include <string>

#include "config.hpp"
#include "errors.hpp"
#include "nn.hpp"
#include "pipeline.hpp"

namespace {

thread_local std::string g_last_error;

template <typename F>
ekmid_status guarded(F&& fn) {
    try {
        fn();
        g_last_error.clear();
        return EKMID_OK;
    } catch (const ekmid::ConfigError& e) {
        g_last_error = e.what();
        return EKMID_ERR_CONFIG;
    } catch (const ekmid::DataError& e) {
        g_last_error = e.what();
        return EKMID_ERR_DATA;
    } catch (const ekmid::NumericError& e) {
        g_last_error = e.what();
        return EKMID_ERR_NUMERIC;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return EKMID_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return EKMID_ERR_INTERNAL;
    }
}

}  // namespace

struct ekmid_config {
    ekmid::config::RunConfig cfg;
};

struct ekmid_model {
    ekmid::nn::Network<float> net;
};

extern "C" {

const char* ekmid_version(void) { return "0.1.0"; }

const char* ekmid_last_error(void) { return g_last_error.c_str(); }

ekmid_config* ekmid_config_create(void) { return new (std::nothrow) ekmid_config(); }

void ekmid_config_free(ekmid_config* cfg) { delete cfg; }

ekmid_status ekmid_config_set(ekmid_config* cfg, const char* key, const char* value) {
    if (!cfg || !key || !value) {
        g_last_error = "null argument";
        return EKMID_ERR_CONFIG;
    }
    return guarded([&] { cfg->cfg.set(key, value); });
}

ekmid_status ekmid_config_load_file(ekmid_config* cfg, const char* path) {
    if (!cfg || !path) {
        g_last_error = "null argument";
        return EKMID_ERR_CONFIG;
    }
    return guarded([&] { cfg->cfg.load_file(path); });
}

ekmid_status ekmid_build(const ekmid_config* cfg) {
    if (!cfg) {
        g_last_error = "null config";
        return EKMID_ERR_CONFIG;
    }
    return guarded([&] { ekmid::pipeline::cmd_build(cfg->cfg); });
}

ekmid_status ekmid_train(const ekmid_config* cfg) {
    if (!cfg) {
        g_last_error = "null config";
        return EKMID_ERR_CONFIG;
    }
    return guarded([&] { ekmid::pipeline::cmd_train(cfg->cfg); });
}

ekmid_status ekmid_evaluate(const ekmid_config* cfg, char** table_out) {
    if (!cfg) {
        g_last_error = "null config";
        return EKMID_ERR_CONFIG;
    }
    return guarded([&] {
        auto row = ekmid::pipeline::cmd_eval(cfg->cfg);
        if (table_out) {
            auto table = ekmid::eval::report_table(row);
            *table_out = new char[table.size() + 1];
            std::memcpy(*table_out, table.c_str(), table.size() + 1);
        }
    });
}

ekmid_status ekmid_reproduce(const ekmid_config* cfg) {
    if (!cfg) {
        g_last_error = "null config";
        return EKMID_ERR_CONFIG;
    }
    return guarded([&] { ekmid::pipeline::cmd_reproduce(cfg->cfg); });
}

void ekmid_string_free(char* s) { delete[] s; }

ekmid_status ekmid_model_load(const char* path, ekmid_model** out) {
    if (!path || !out) {
        g_last_error = "null argument";
        return EKMID_ERR_CONFIG;
    }
    return guarded([&] {
        auto* m = new ekmid_model();
        try {
            m->net = ekmid::nn::load_model(path);
        } catch (...) {
            delete m;
            throw;
        }
        *out = m;
    });
}

void ekmid_model_free(ekmid_model* model) { delete model; }

int ekmid_model_num_classes(const ekmid_model* model) {
    return model ? model->net.cfg.classes : 0;
}

const char* ekmid_model_label(const ekmid_model* model, int class_index) {
    if (!model || class_index < 0 ||
        class_index >= static_cast<int>(model->net.vocab.size()))
        return nullptr;
    return model->net.vocab[class_index].c_str();
}

int ekmid_model_input_height(const ekmid_model* model) {
    return model ? model->net.cfg.input_h : 0;
}

int ekmid_model_input_width(const ekmid_model* model) {
    return model ? model->net.cfg.input_w : 0;
}

ekmid_status ekmid_model_predict(const ekmid_model* model, const unsigned char* rgb, int height,
                                 int width, int* class_index, float* probs) {
    if (!model || !rgb || !class_index) {
        g_last_error = "null argument";
        return EKMID_ERR_CONFIG;
    }
    return guarded([&] {
        const auto& net = model->net;
        if (height != net.cfg.input_h || width != net.cfg.input_w)
            throw ekmid::DataError("ShapeMismatch: model expects " +
                                   std::to_string(net.cfg.input_h) + "x" +
                                   std::to_string(net.cfg.input_w));
        ekmid::dataset::Batch batch;
        batch.batch = 1;
        batch.height = height;
        batch.width = width;
        batch.num_classes = net.cfg.classes;
        size_t n = static_cast<size_t>(height) * width * 3;
        batch.images.resize(n);
        for (size_t i = 0; i < n; ++i) batch.images[i] = rgb[i] / 255.0f;
        batch.labels.push_back(0);
        auto pred = ekmid::nn::predict(net, batch);
        *class_index = pred.classes[0];
        if (probs)
            std::memcpy(probs, pred.probabilities.data(),
                        sizeof(float) * static_cast<size_t>(net.cfg.classes));
    });
}

}  // extern "C"
