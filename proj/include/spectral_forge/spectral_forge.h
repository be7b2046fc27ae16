#ifndef SPECTRAL_FORGE_H
#define SPECTRAL_FORGE_H

/* C interface to spectral_forge. All functions return an sf_status; on
 * failure sf_last_error() holds a message for the calling thread. Strings
 * handed out by the library are released with sf_string_free. */

#include <stddef.h>
#include <stdint.h>

#if defined(SFORGE_BUILDING_LIBRARY)
#define SF_API __attribute__((visibility("default")))
#else
#define SF_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sf_status {
  SF_OK = 0,
  SF_INVALID_ARGUMENT = 1,
  SF_MISSING_FILE = 2,
  SF_HEADER_MISMATCH = 3,
  SF_UNKNOWN_CLASS_ID = 4,
  SF_IO_ERROR = 5,
  SF_NON_FINITE_VALUE = 6,
  SF_DIMENSION_MISMATCH = 7,
  SF_DEGENERATE_REFERENCE = 8,
  SF_MISSING_WAVELENGTHS = 9,
  SF_EMPTY_BAND = 10,
  SF_BATCH_TOO_SMALL = 11,
  SF_EMPTY_BACKGROUND_POOL = 12,
  SF_TARGET_ABSENT = 13,
  SF_INSUFFICIENT_BACKGROUND = 14,
  SF_EMPTY_INPUT = 15,
  SF_CLASS_MISMATCH = 16,
  SF_LENGTH_MISMATCH = 17,
  SF_ALGORITHM_SET_MISMATCH = 18,
  SF_DIVERGENCE_DETECTED = 19,
  SF_CHANNEL_MISMATCH = 20,
  SF_SPLIT_OVERLAP = 21,
  SF_INTERNAL = 99
} sf_status;

/* Coarse grouping used for process exit codes. */
typedef enum sf_status_family {
  SF_FAMILY_OK = 0,
  SF_FAMILY_USAGE = 2,
  SF_FAMILY_DATA = 3,
  SF_FAMILY_INTERNAL = 4
} sf_status_family;

SF_API const char* sf_version(void);
SF_API const char* sf_status_name(sf_status status);
SF_API sf_status_family sf_status_family_of(sf_status status);
SF_API const char* sf_last_error(void);
SF_API void sf_string_free(char* s);

/* ---- label sets ---- */

typedef struct sf_label_set sf_label_set;

SF_API sf_status sf_label_set_surgical(sf_label_set** out);
SF_API sf_status sf_label_set_generic(size_t n_classes, sf_label_set** out);
SF_API sf_status sf_label_set_from_json(const char* json, sf_label_set** out);
SF_API size_t sf_label_set_size(const sf_label_set* set);
SF_API void sf_label_set_free(sf_label_set* set);

/* ---- scenes ---- */

typedef struct sf_scene sf_scene;

/* Zero cube, background mask. The label set is shared, not consumed. */
SF_API sf_status sf_scene_create(size_t height, size_t width, size_t channels, const sf_label_set* labels,
                                 sf_scene** out);
SF_API sf_status sf_scene_load(const char* cube_path, const char* mask_path, const sf_label_set* labels,
                               sf_scene** out);
SF_API sf_status sf_scene_save(const sf_scene* scene, const char* cube_path, const char* mask_path);
SF_API sf_status sf_scene_dims(const sf_scene* scene, size_t* height, size_t* width, size_t* channels);
/* Borrowed pointers into the scene, valid until it is freed. */
SF_API float* sf_scene_cube(sf_scene* scene);
SF_API uint8_t* sf_scene_mask(sf_scene* scene);
SF_API void sf_scene_free(sf_scene* scene);

/* ---- array-level entry points ---- */

/* Augments a batch in place. cubes: n x h x w x c float32, masks: n x h x w
 * class ids drawn from a generic label set of n_classes. config_json uses
 * the augmentation config format; NULL selects defaults. records_json, when
 * non-NULL, receives the per-scene records. */
SF_API sf_status sf_augment_arrays(float* cubes, uint8_t* masks, size_t n, size_t h, size_t w, size_t c,
                                   size_t n_classes, const char* config_json, uint64_t batch_index,
                                   char** records_json);

/* Per-class DSC and NSD of one image pair as a JSON array of
 * {"class_id","metric","value"} (value null when undefined). */
SF_API sf_status sf_evaluate_masks(const uint8_t* pred, const uint8_t* ref, size_t h, size_t w, size_t n_classes,
                                   const char* thresholds_json, char** scores_json);

/* ---- file workflows ----
 * command: calibrate, rgb, augment, synthesize, evaluate, rank, demo-train.
 * job_json holds the command's options (see the README). */
SF_API sf_status sf_run(const char* command, const char* job_json);

#ifdef __cplusplus
}
#endif

#endif
