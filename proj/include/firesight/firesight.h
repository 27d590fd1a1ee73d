/* C interface to the firesight pipeline. All functions are thread-safe with
 * respect to distinct handles; a single handle must not be destroyed while
 * another thread is using it. */
#ifndef FIRESIGHT_H
#define FIRESIGHT_H

#include <stddef.h>
#include <stdint.h>

#if defined(FIRESIGHT_BUILDING_LIBRARY)
#define FS_API __attribute__((visibility("default")))
#else
#define FS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fs_status {
    FS_OK = 0,
    FS_ERR_INVALID_ARGUMENT = 1,
    FS_ERR_CONFIG = 2,        /* invalid config, missing file, bad script */
    FS_ERR_BIND = 3,          /* server could not bind its port */
    FS_ERR_MALFORMED_FRAME = 4,
    FS_ERR_PATH_NOT_FOUND = 5,
    FS_ERR_STORAGE = 6,
    FS_ERR_INTERNAL = 7,
    FS_ERR_BUFFER_TOO_SMALL = 8,
} fs_status;

typedef struct fs_pipeline fs_pipeline;

FS_API const char* fs_version(void);

/* Message for the last failing call on this thread; never NULL. */
FS_API const char* fs_last_error(void);

FS_API fs_status fs_pipeline_create_from_file(const char* config_path, fs_pipeline** out);
/* base_dir anchors relative paths inside the document; may be NULL. */
FS_API fs_status fs_pipeline_create_from_json(const char* config_json, const char* base_dir, fs_pipeline** out);

FS_API fs_status fs_pipeline_start(fs_pipeline* p);

/* Writes "host:port" (NUL-terminated) of the listening socket. */
FS_API fs_status fs_pipeline_bound_address(const fs_pipeline* p, char* buf, size_t buf_len);
FS_API int fs_pipeline_port(const fs_pipeline* p);

/* Waits up to timeout_ms; *finished is set to 1 once every source has ended
 * and drained. *exit_when_done reports the config's exit policy. */
FS_API fs_status fs_pipeline_wait(fs_pipeline* p, int timeout_ms, int* finished, int* exit_when_done);

FS_API void fs_pipeline_request_stop(fs_pipeline* p);
FS_API void fs_pipeline_destroy(fs_pipeline* p);

/* Validates a replay directory. On success fills the count, geometry and
 * format name ("GRAY16", "RGB8", "DEPTH16"; at least 8 bytes). */
FS_API fs_status fs_replay_check(const char* dir, uint64_t* frame_count, uint32_t* width, uint32_t* height,
                                 char* format_buf, size_t format_len);

/* Renders `frames` frames of a scene script to <out_dir>/frame_<n>.fgf.
 * format is "GRAY16", "RGB8" or "DEPTH16"; width/height 0 pick defaults. */
FS_API fs_status fs_synth_render(const char* script_path, const char* out_dir, uint32_t frames, const char* format,
                                 uint32_t width, uint32_t height);

#ifdef __cplusplus
}
#endif

#endif /* FIRESIGHT_H */
