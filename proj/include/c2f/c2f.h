// Copyright 2026 The c2f Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/* C interface to the c2f library. Every function returns a c2f_status; on
 * failure c2f_last_error() describes the problem. Strings returned through
 * char** are owned by the caller and released with c2f_string_free. */
#ifndef C2F_C2F_H
#define C2F_C2F_H

#include <stddef.h>

#if defined(_WIN32)
#define C2F_API __declspec(dllexport)
#else
#define C2F_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum c2f_status {
  C2F_OK = 0,
  C2F_ERR_CONFIG = 1,  /* bad arguments, config keys, or mismatched checkpoints */
  C2F_ERR_EXISTS = 2,  /* refusal to overwrite a dataset root or run directory */
  C2F_ERR_RUNTIME = 3  /* I/O, generation or training failures */
} c2f_status;

typedef struct c2f_config c2f_config;
typedef struct c2f_dataset c2f_dataset;
typedef struct c2f_checkpoint c2f_checkpoint;

/* Receives one human-readable progress line at a time. */
typedef void (*c2f_progress_fn)(const char* line, void* user);

C2F_API const char* c2f_version(void);
/* Message of the last failure on the calling thread ("" if none). */
C2F_API const char* c2f_last_error(void);
C2F_API void c2f_string_free(char* s);

/* path NULL gives the defaults. */
C2F_API c2f_status c2f_config_load(const char* path, c2f_config** out);
C2F_API c2f_status c2f_config_parse(const char* json, c2f_config** out);
/* Flat dotted-key JSON of every setting. */
C2F_API c2f_status c2f_config_to_json(const c2f_config* cfg, char** out);
C2F_API c2f_status c2f_config_set_seed(c2f_config* cfg, unsigned long long seed);
C2F_API void c2f_config_free(c2f_config* cfg);

/* Generates the dataset described by cfg under root. force = 0 refuses a
 * non-empty root. summary receives a JSON summary (may be NULL). */
C2F_API c2f_status c2f_dataset_generate(const c2f_config* cfg, const char* root, int force,
                                        char** summary);
C2F_API c2f_status c2f_dataset_load(const char* root, c2f_dataset** out);
/* split: "train", "val" or "test". */
C2F_API c2f_status c2f_dataset_size(const c2f_dataset* ds, const char* split, size_t* n);
/* Domain-shift statistics; split NULL or "all" pools every split. */
C2F_API c2f_status c2f_dataset_stats(const c2f_dataset* ds, const char* split, char** report);
C2F_API void c2f_dataset_free(c2f_dataset* ds);

C2F_API c2f_status c2f_checkpoint_load(const char* path, c2f_checkpoint** out);
C2F_API c2f_status c2f_checkpoint_info(const c2f_checkpoint* ckpt, char** out);
C2F_API void c2f_checkpoint_free(c2f_checkpoint* ckpt);

/* Creates run_dir (refusing a non-empty one), writes manifest.json from
 * manifest_json plus config.json, then log.jsonl, best.ckpt and report.json. */
C2F_API c2f_status c2f_train_teacher(const c2f_config* cfg, const c2f_dataset* ds,
                                     const char* run_dir, const char* manifest_json,
                                     c2f_progress_fn progress, void* user, char** report);
C2F_API c2f_status c2f_train_student(const c2f_config* cfg, const c2f_dataset* ds,
                                     const c2f_checkpoint* teacher, const char* run_dir,
                                     const char* manifest_json, c2f_progress_fn progress,
                                     void* user, char** report);

/* labels: "fine" or "coarse". teacher is required for student checkpoints.
 * cfg (may be NULL) supplies the eval.* settings. */
C2F_API c2f_status c2f_evaluate(const c2f_checkpoint* ckpt, const c2f_checkpoint* teacher,
                                const c2f_dataset* ds, const char* split, const char* labels,
                                const c2f_config* cfg, char** report);

/* which: "injection", "distill", "bands" or "loss". Finished rows found in
 * out_dir are reused. Writes table.csv and table.json into out_dir. */
C2F_API c2f_status c2f_ablate(const c2f_config* cfg, const c2f_dataset* ds, const char* which,
                              const char* out_dir, c2f_progress_fn progress, void* user,
                              char** table);

#ifdef __cplusplus
}
#endif

#endif /* C2F_C2F_H */
