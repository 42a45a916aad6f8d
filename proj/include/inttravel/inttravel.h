#ifndef INTTRAVEL_INTTRAVEL_H
#define INTTRAVEL_INTTRAVEL_H

#include <stddef.h>

#if defined _WIN32 || defined __CYGWIN__
#ifdef INTTRAVEL_BUILDING_DLL
#define IT_API __declspec(dllexport)
#else
#define IT_API __declspec(dllimport)
#endif
#else
#define IT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum it_status {
  IT_OK = 0,
  IT_ERR_INVALID_ARGUMENT = 1,
  IT_ERR_SHAPE = 2,
  IT_ERR_NON_FINITE = 3,
  IT_ERR_PARSE = 4,
  IT_ERR_IO = 5,
  IT_ERR_VALIDATION = 6,
  IT_ERR_VERSION = 7,
  IT_ERR_INTERNAL = 8
} it_status;

/* Opaque handles. */
typedef struct it_config it_config;
typedef struct it_report it_report;

IT_API const char* it_version(void);
IT_API const char* it_status_name(it_status status);
/* Message of the last failed call on this thread; "" when none. */
IT_API const char* it_last_error(void);

/* Log threshold: 0 quiet, 1 info, 2 debug. */
IT_API void it_set_verbosity(int level);

IT_API it_status it_config_create(it_config** out);
/* Reads `key = value` text; keys not in the file keep their defaults. */
IT_API it_status it_config_load(const char* path, it_config** out);
IT_API it_status it_config_set(it_config* config, const char* key, const char* value);
/* Serialized config, readable through it_report_text(). */
IT_API it_status it_config_to_text(const it_config* config, it_report** out);
IT_API void it_config_destroy(it_config* config);

/* Key/value result of a command. Values are doubles; text() is the
   serialized form written to disk. */
IT_API size_t it_report_size(const it_report* report);
IT_API const char* it_report_key(const it_report* report, size_t index);
IT_API double it_report_value(const it_report* report, size_t index);
/* Returns 1 and stores the value when the key exists, else 0. */
IT_API int it_report_get(const it_report* report, const char* key, double* value);
IT_API const char* it_report_text(const it_report* report);
IT_API void it_report_destroy(it_report* report);

IT_API it_status it_generate(const it_config* config, const char* out_dir);
/* resume_checkpoint may be NULL. The report holds step counts, first and last
   loss, and validation metrics when enabled. */
IT_API it_status it_train(const it_config* config, const char* resume_checkpoint, it_report** out);
/* split: "validation" or "test". */
IT_API it_status it_eval(const it_config* config, const char* checkpoint, const char* split, it_report** out);
IT_API it_status it_ablate(const it_config* config, const char* variant, it_report** out);
/* *passed is set to 1 when every parameter group is within tolerance. */
IT_API it_status it_gradcheck(const it_config* config, it_report** out, int* passed);

#ifdef __cplusplus
}
#endif

#endif
