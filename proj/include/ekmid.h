/* ekmid — ECG-biometric identification toolkit.
 *
 * C API over the C++ core: opaque handles, integer status codes, thread-local
 * error messages. Status codes double as process exit codes for the CLI:
 * 0 ok, 2 configuration error, 3 data error, 4 numeric divergence.
 */
#ifndef EKMID_H
#define EKMID_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ekmid_status {
    EKMID_OK = 0,
    EKMID_ERR_CONFIG = 2,
    EKMID_ERR_DATA = 3,
    EKMID_ERR_NUMERIC = 4,
    EKMID_ERR_INTERNAL = 5
} ekmid_status;

const char* ekmid_version(void);

/* Message for the most recent failing call on this thread ("" when none). */
const char* ekmid_last_error(void);

/* ---- configuration (flat key=value) ---- */

typedef struct ekmid_config ekmid_config;

ekmid_config* ekmid_config_create(void);
void ekmid_config_free(ekmid_config* cfg);
ekmid_status ekmid_config_set(ekmid_config* cfg, const char* key, const char* value);
ekmid_status ekmid_config_load_file(ekmid_config* cfg, const char* path);

/* ---- pipeline commands ---- */

/* Ingest a database (db=wfdb|plaintext|synthetic), run QRS detection and EKM
 * generation, write PNGs + manifest.csv under out=<dir>. */
ekmid_status ekmid_build(const ekmid_config* cfg);

/* Train the CNN on dataset=<dir>, write model=<path> and a history CSV. */
ekmid_status ekmid_train(const ekmid_config* cfg);

/* Evaluate model=<path> on the test split of dataset=<dir>; when report=<path>
 * is set, write the metrics CSV. The formatted table is returned via the out
 * parameter (caller must free with ekmid_string_free; may be NULL). */
ekmid_status ekmid_evaluate(const ekmid_config* cfg, char** table_out);

/* Sweep grid=<file> (lines of key=value overrides, e.g. "bpf=3 epochs=150")
 * and write one combined report CSV. */
ekmid_status ekmid_reproduce(const ekmid_config* cfg);

void ekmid_string_free(char* s);

/* ---- trained model access ---- */

typedef struct ekmid_model ekmid_model;

ekmid_status ekmid_model_load(const char* path, ekmid_model** out);
void ekmid_model_free(ekmid_model* model);
int ekmid_model_num_classes(const ekmid_model* model);
/* Subject id for a class index, or NULL when out of range. */
const char* ekmid_model_label(const ekmid_model* model, int class_index);
int ekmid_model_input_height(const ekmid_model* model);
int ekmid_model_input_width(const ekmid_model* model);

/* Classify one H x W RGB8 image (row-major, 3 bytes per pixel). probs may be
 * NULL; otherwise it must hold num_classes floats. */
ekmid_status ekmid_model_predict(const ekmid_model* model, const unsigned char* rgb, int height,
                                 int width, int* class_index, float* probs);

#ifdef __cplusplus
}
#endif

#endif /* EKMID_H */
