#ifndef MISSGAN_H
#define MISSGAN_H

/*
 * C interface to the missgan library. All functions are thread-compatible:
 * distinct handles may be used from distinct threads, a single handle must
 * not be shared without external locking.
 *
 * Functions returning mg_status return MG_OK (0) on success or a nonzero
 * code; mg_last_error() returns the message for the most recent failure on
 * the calling thread. Functions returning a pointer return NULL on failure.
 *
 * Images are float arrays in CHW order (3 x h x w), values in [-1, 1].
 */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mg_status {
    MG_OK = 0,
    MG_ERR_ARGS = 1,
    MG_ERR_CONFIG = 2,
    MG_ERR_DATA = 3,
    MG_ERR_CHECKPOINT = 4,
    MG_ERR_IO = 5,
    MG_ERR_NUMERIC = 6,
    MG_ERR_INTERNAL = 7
} mg_status;

typedef struct mg_config mg_config;
typedef struct mg_model mg_model;

const char* mg_status_name(mg_status s);
/* Message and status of the most recent failure on the calling thread. */
const char* mg_last_error(void);
mg_status mg_last_status(void);

/* Configuration. preset is one of the published preset names ("A".."E",
 * "MISSGAN"); NULL means MISSGAN defaults. */
mg_config* mg_config_create(const char* preset);
mg_config* mg_config_load(const char* path);
void mg_config_free(mg_config* cfg);
mg_status mg_config_set(mg_config* cfg, const char* key, const char* value);
/* Writes the value into buf (NUL terminated, truncated to bufsize). */
mg_status mg_config_get(const mg_config* cfg, const char* key, char* buf, size_t bufsize);

/* Trains from scratch, or resumes when resume_dir is non-NULL. Writes
 * checkpoints and train_log.csv under out_dir. */
mg_status mg_train(const mg_config* cfg, const char* data_root, int64_t iterations,
                   int64_t checkpoint_every, const char* out_dir, const char* resume_dir);

/* Inference over a saved checkpoint directory. use_ema nonzero selects the
 * averaged weights. */
mg_model* mg_model_open(const char* checkpoint_dir, int use_ema);
void mg_model_free(mg_model* m);
int64_t mg_model_iteration(const mg_model* m);
int mg_model_image_size(const mg_model* m);
int mg_model_num_domains(const mg_model* m);

/* Input is 3 x h x w with h and w divisible by 16; outputs keep that shape.
 * out must hold num_styles * 3 * h * w floats; style i is written at offset
 * i * 3 * h * w. */
mg_status mg_generate_latent(const mg_model* m, const float* image_chw, int h, int w,
                             int target_domain, int num_styles, uint64_t seed, float* out);
/* reference_chw must be 3 x s x s where s = mg_model_image_size(m). */
mg_status mg_generate_reference(const mg_model* m, const float* image_chw, int h, int w,
                                const float* reference_chw, int target_domain, float* out);
/* Mean perceptual distance of the styled outputs from the input, and mean
 * pairwise pixel distance among them. */
mg_status mg_eval(mg_model* m, const float* image_chw, int h, int w, int target_domain,
                  int num_styles, uint64_t seed, float* content, float* diversity);

/* Decodes an image file to 3 x h x w floats in [-1, 1]. resize_to > 0 forces
 * an resize_to x resize_to decode; 0 keeps the stored size. The buffer is
 * allocated by the library; release it with mg_image_free. */
mg_status mg_image_load(const char* path, int resize_to, float** out_chw, int* out_h,
                        int* out_w);
void mg_image_free(float* chw);
/* Clamps to [-1, 1], converts to 8-bit and writes a PNG. */
mg_status mg_image_save(const char* path, const float* chw, int h, int w);

#ifdef __cplusplus
}
#endif

#endif
