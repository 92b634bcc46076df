// Copyright 2026 The Siteplan Authors. All Rights Reserved.
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

/* C interface to the siteplan library.
 *
 * Every call returns an sp_status. On failure sp_last_error() holds a
 * message for the calling thread. Documents cross the boundary as UTF-8
 * JSON text; strings handed out through char** must be released with
 * sp_free(). Handles are opaque and owned by the caller. */

#ifndef SITEPLAN_SITEPLAN_H_
#define SITEPLAN_SITEPLAN_H_

#include <stdint.h>

#if defined(_WIN32)
#define SP_API __declspec(dllexport)
#else
#define SP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sp_status {
  SP_OK = 0,
  SP_INVALID_ARGUMENT = 1,
  SP_IO = 2,
  SP_PARSE = 3,
  SP_INVALID_SCENE = 4,
  SP_TOO_LARGE = 5,
  SP_CATALOG_MISMATCH = 6,
  SP_DIVERGED = 7,
  SP_UNAVAILABLE = 8,
  SP_INTERNAL = 9
} sp_status;

typedef struct sp_catalog sp_catalog;
typedef struct sp_model sp_model;
typedef struct sp_service sp_service;

SP_API const char* sp_version(void);
SP_API const char* sp_status_name(sp_status status);
SP_API const char* sp_last_error(void);
SP_API void sp_free(char* text);

/* Catalogs. */
SP_API sp_status sp_catalog_default(sp_catalog** out);
SP_API sp_status sp_catalog_from_json(const char* json, sp_catalog** out);
SP_API sp_status sp_catalog_to_json(const sp_catalog* catalog, char** out);
SP_API void sp_catalog_free(sp_catalog* catalog);

/* Scenes. violations_json receives an array, empty for a valid scene. */
SP_API sp_status sp_validate_scene(const sp_catalog* catalog, const char* scene_json,
                                   char** violations_json);
SP_API sp_status sp_extract_graph(const sp_catalog* catalog, const char* scene_json,
                                  char** graph_json);
/* Top-down image. A path ending in .pgm gets the height channel as an
 * 8-bit image, anything else a two-channel float grid. */
SP_API sp_status sp_render(const sp_catalog* catalog, const char* scene_json, int resolution,
                           const char* out_path);

/* Synthetic dataset of n scenes under out_dir. config_json may be NULL for
 * the desk defaults. summary_json may be NULL. */
SP_API sp_status sp_generate_dataset(const sp_catalog* catalog, const char* config_json, int n,
                                     uint64_t seed, const char* out_dir, char** summary_json);

/* Trains on the train split of a dataset and writes a checkpoint.
 * config_json holds optional "model" and "train" objects. log_path, when
 * not NULL, receives one JSON line per epoch. */
SP_API sp_status sp_train(const sp_catalog* catalog, const char* dataset_dir,
                          const char* config_json, const char* checkpoint_path,
                          const char* log_path, char** summary_json);

/* Models. */
SP_API sp_status sp_model_load(const sp_catalog* catalog, const char* checkpoint_path,
                               sp_model** out);
SP_API sp_status sp_model_info(const sp_model* model, char** info_json);
SP_API void sp_model_free(sp_model* model);

/* Scores the test split. options_json may be NULL. */
SP_API sp_status sp_evaluate(const sp_model* model, const char* dataset_dir,
                             const char* options_json, char** report_json);
/* Response document as served by POST /v1/recommend. */
SP_API sp_status sp_recommend(const sp_model* model, const char* scene_json,
                              const char* options_json, char** response_json);

/* HTTP service. Settings come from config_json, then SITEPLAN_PORT and
 * SITEPLAN_CHECKPOINT, then overrides_json; either document may be NULL.
 * sp_service_run blocks until sp_service_stop. */
SP_API sp_status sp_service_create(const sp_catalog* catalog, const char* config_json,
                                   const char* overrides_json, sp_service** out);
SP_API sp_status sp_service_run(sp_service* service);
SP_API void sp_service_stop(sp_service* service);
SP_API int sp_service_port(const sp_service* service);
SP_API void sp_service_free(sp_service* service);

#ifdef __cplusplus
}
#endif

#endif /* SITEPLAN_SITEPLAN_H_ */
