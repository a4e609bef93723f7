/* SPDX-License-Identifier: Apache-2.0 */
/*
 * C interface to the gridshield library. All objects are opaque handles.
 * Every function that can fail returns a gs_status; on failure the message
 * is available from gs_last_error() on the same thread until the next call.
 * Strings returned through `char**` are owned by the caller and released
 * with gs_string_free.
 */
#ifndef GRIDSHIELD_GRIDSHIELD_H
#define GRIDSHIELD_GRIDSHIELD_H

#include <stddef.h>
#include <stdint.h>

#if defined(GRIDSHIELD_BUILDING_LIBRARY)
#define GS_API __attribute__((visibility("default")))
#else
#define GS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gs_status {
  GS_OK = 0,
  GS_ERR_INVALID_ARGUMENT = 1,
  GS_ERR_CONFIG = 2,     /* bad config document or input data */
  GS_ERR_ILL_POSED = 3,  /* empty safe set */
  GS_ERR_SOLVER = 4,     /* solver failure or infeasible projection */
  GS_ERR_IO = 5,
  GS_ERR_PROTOCOL = 6,
  GS_ERR_INTERNAL = 7
} gs_status;

typedef struct gs_config gs_config;
typedef struct gs_env gs_env;
typedef struct gs_session gs_session;
typedef struct gs_server gs_server;

GS_API const char* gs_version(void);
GS_API const char* gs_last_error(void);
GS_API void gs_string_free(char* s);

/* Configuration. */
GS_API gs_status gs_config_default(gs_config** out);
GS_API gs_status gs_config_load_file(const char* path, gs_config** out);
GS_API gs_status gs_config_load_string(const char* json, gs_config** out);
/* Applies a JSON merge patch in place. */
GS_API gs_status gs_config_override(gs_config* cfg, const char* patch_json);
GS_API gs_status gs_config_to_json(const gs_config* cfg, char** out_json);
GS_API void gs_config_free(gs_config* cfg);

/* Writes the safe set files for (day, t0); band != 0 adds the day's safe band. */
GS_API gs_status gs_safeset_write(const gs_config* cfg, size_t day, int t0, int band,
                                  const char* out_dir);

/*
 * Runs `agent` ("greedy", "random") over days 0..n_days-1 and writes traces and
 * metrics to out_dir. `out_metrics_json` may be NULL. `out_aborted` (may be
 * NULL) receives the number of aborted episodes; *out_status_of_abort then
 * holds GS_ERR_ILL_POSED or GS_ERR_SOLVER for the first abort, GS_OK if none.
 */
GS_API gs_status gs_simulate(const gs_config* cfg, const char* agent, size_t n_days,
                             const char* out_dir, char** out_metrics_json, size_t* out_aborted,
                             gs_status* out_status_of_abort);

/* Single environment. Actions are stacked [p_storage_1..n, p_market_1..m]. */
GS_API gs_status gs_env_create(const gs_config* cfg, size_t n_days, gs_env** out);
GS_API gs_status gs_env_dims(const gs_env* env, size_t* n, size_t* m, size_t* obs_dim);
GS_API gs_status gs_env_reset(gs_env* env, size_t day, uint64_t seed, double* obs, size_t obs_len);
/* `info` (may be NULL) receives correction, violation, cost, penalty, shield_time. */
GS_API gs_status gs_env_step(gs_env* env, const double* action, size_t action_len, double* obs,
                             size_t obs_len, double* reward, int* done, double info[5]);
GS_API gs_status gs_env_last_safe_action(const gs_env* env, double* action, size_t action_len);
GS_API void gs_env_free(gs_env* env);

/* Protocol session: one request frame in, one reply frame out. */
GS_API gs_status gs_session_create(const gs_config* cfg, size_t n_days, gs_session** out);
GS_API gs_status gs_session_handle(gs_session* s, const char* frame, char** out_reply);
GS_API void gs_session_free(gs_session* s);

/* TCP service. endpoint is "host:port" or "tcp://host:port"; port 0 picks one. */
GS_API gs_status gs_server_start(const gs_config* cfg, size_t n_days, const char* endpoint,
                                 gs_server** out);
GS_API int gs_server_port(const gs_server* srv);
GS_API gs_status gs_server_stop(gs_server* srv);
/* Blocks until gs_server_stop is called from another thread. */
GS_API gs_status gs_server_wait(gs_server* srv);
/* Writes the episodes recorded so far as traces plus metrics. */
GS_API gs_status gs_server_write_outputs(const gs_server* srv, const char* out_dir);
GS_API void gs_server_free(gs_server* srv);

/* Serves one session over file descriptors until EOF or close. out_dir may be NULL. */
GS_API gs_status gs_serve_fd(const gs_config* cfg, size_t n_days, int in_fd, int out_fd,
                             const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif /* GRIDSHIELD_GRIDSHIELD_H */
