#ifndef NPC_ROBUST_H
#define NPC_ROBUST_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NpcStatus {
  NPC_STATUS_OK = 0,
  NPC_STATUS_NULL_POINTER = 1,
  NPC_STATUS_INVALID_ARGUMENT = 2,
  NPC_STATUS_DIMENSION_MISMATCH = 3,
  // The requested (metric, threat, domain) cell has no supported solver.
  NPC_STATUS_UNSUPPORTED = 4,
  NPC_STATUS_IO = 5,
  NPC_STATUS_PARSE = 6,
  NPC_STATUS_SOLVER = 7,
  NPC_STATUS_PANIC = 8,
} NpcStatus;

typedef enum NpcMetric {
  NPC_METRIC_L1 = 0,
  NPC_METRIC_L2 = 1,
  NPC_METRIC_LINF = 2,
} NpcMetric;

typedef enum NpcDomain {
  NPC_DOMAIN_UNBOUNDED = 0,
  NPC_DOMAIN_UNIT_BOX = 1,
  NPC_DOMAIN_SPHERE_PRODUCT = 2,
} NpcDomain;

typedef enum NpcThreat {
  NPC_THREAT_L1 = 0,
  NPC_THREAT_L2 = 1,
  NPC_THREAT_LINF = 2,
  NPC_THREAT_EMBEDDED_L2 = 3,
} NpcThreat;

typedef enum NpcMode {
  NPC_MODE_LOWER_BOUND = 0,
  NPC_MODE_EXACT = 1,
} NpcMode;

// Opaque model handle.
typedef struct NpcModel NpcModel;

// Result of [`npc_certify`]. Absent values are NaN.
typedef struct NpcCertificate {
  uint32_t predicted;
  bool correct;
  double lower_bound;
  double exact;
  double upper_bound;
  bool shortcut_hit;
  uint32_t subproblems_solved;
  double wall_time;
} NpcCertificate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. Valid until the
// next failing call on the same thread.
const char *npc_last_error(void);

// Builds a model from `num_prototypes` row-major rows of length `dim`.
//
// # Safety
// `prototypes` must hold `num_prototypes * dim` doubles, `labels`
// `num_prototypes` entries, and `out` must be writable.
enum NpcStatus npc_model_new(size_t dim,
                             size_t num_classes,
                             size_t num_prototypes,
                             const double *prototypes,
                             const uint32_t *labels,
                             enum NpcMetric metric,
                             enum NpcDomain domain,
                             struct NpcModel **out);

// Loads a JSON or NPC1 model file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` writable.
enum NpcStatus npc_model_load(const char *path, struct NpcModel **out);

// Writes the model as JSON (or NPC1 for a `.npc` / `.bin` extension).
//
// # Safety
// `model` must come from this library; `path` must be NUL-terminated.
enum NpcStatus npc_model_save(const struct NpcModel *model, const char *path);

// Releases a model. NULL is ignored.
//
// # Safety
// `model` must come from this library and not be used afterwards.
void npc_model_free(struct NpcModel *model);

// # Safety
// `model` must be a live handle or NULL (which yields 0).
size_t npc_model_dim(const struct NpcModel *model);

// # Safety
// `model` must be a live handle or NULL (which yields 0).
size_t npc_model_num_classes(const struct NpcModel *model);

// Predicted class of `z`.
//
// # Safety
// `z` must hold `len` doubles; `out_class` must be writable.
enum NpcStatus npc_classify(const struct NpcModel *model,
                            const double *z,
                            size_t len,
                            uint32_t *out_class);

// Certifies `z` with label `label` against the given threat.
//
// # Safety
// `z` must hold `len` doubles; `out` must be writable.
enum NpcStatus npc_certify(const struct NpcModel *model,
                           const double *z,
                           size_t len,
                           uint32_t label,
                           enum NpcThreat threat,
                           enum NpcDomain domain,
                           enum NpcMode mode,
                           struct NpcCertificate *out);

// Library version as a static NUL-terminated string.
const char *npc_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NPC_ROBUST_H */
