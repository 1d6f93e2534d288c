/* C interface to the roibin toolkit. Objects are opaque handles released
 * with the matching *_free function. Every call returning roibin_status
 * leaves a message for roibin_last_error() on failure (per thread). Strings
 * handed out through char** must be released with roibin_free_string. */
#ifndef ROIBIN_H
#define ROIBIN_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define ROIBIN_API __declspec(dllexport)
#else
#define ROIBIN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum roibin_status {
  ROIBIN_OK = 0,
  ROIBIN_E_SIZE = 1,
  ROIBIN_E_GEOMETRY = 2,
  ROIBIN_E_INDEX = 3,
  ROIBIN_E_CONFIG = 4,
  ROIBIN_E_CORRUPT = 5,
  ROIBIN_E_UNSUPPORTED_VERSION = 6,
  ROIBIN_E_UNDEFINED_RATIO = 7,
  ROIBIN_E_TUNING = 8,
  ROIBIN_E_IO = 9,
  ROIBIN_E_INVALID_ARGUMENT = 10,
  ROIBIN_E_INTERNAL = 99
} roibin_status;

typedef struct roibin_dims {
  uint64_t events, panels, rows, cols;
} roibin_dims;

typedef struct roibin_peak {
  uint64_t event, panel, row, col;
  double total_intensity;
  uint32_t n_pixels;
  double snr;
} roibin_peak;

typedef struct roibin_peak_params {
  uint32_t window;
  double max_threshold;
  double member_floor;
  double total_floor;
  double snr_floor;
  uint32_t min_pixels;
  uint32_t max_pixels;
} roibin_peak_params;

typedef struct roibin_synth_params {
  roibin_dims dims;
  uint32_t peaks_lo, peaks_hi;
  double amplitude_lo, amplitude_hi;
  double peak_sigma;
  double spot_radius; /* <= 0: twice peak_sigma */
  double background_mean;
  int uniform_noise; /* 0: gaussian */
  double min_separation;
  int integer_adu;
  uint64_t seed;
  size_t threads;
} roibin_synth_params;

typedef struct roibin_batch roibin_batch;
typedef struct roibin_peaks roibin_peaks;
typedef struct roibin_config roibin_config;
typedef struct roibin_buffer roibin_buffer;

ROIBIN_API const char* roibin_version(void);
ROIBIN_API const char* roibin_status_name(roibin_status status);
ROIBIN_API const char* roibin_last_error(void);
ROIBIN_API void roibin_free_string(char* s);

ROIBIN_API const uint8_t* roibin_buffer_data(const roibin_buffer* buf);
ROIBIN_API size_t roibin_buffer_size(const roibin_buffer* buf);
ROIBIN_API void roibin_buffer_free(roibin_buffer* buf);

/* "E,P,R,C" */
ROIBIN_API roibin_status roibin_dims_parse(const char* text, roibin_dims* out);

/* Little-endian uint16 frames. pedestal/gain are P*R*C floats each; NULL for
 * both means the identity calibration. */
ROIBIN_API roibin_status roibin_batch_from_raw(const uint8_t* bytes, size_t n, roibin_dims dims, const float* pedestal,
                                               const float* gain, size_t threads, roibin_batch** out);
ROIBIN_API roibin_status roibin_batch_from_floats(const float* values, roibin_dims dims, roibin_batch** out);
ROIBIN_API roibin_dims roibin_batch_dims(const roibin_batch* batch);
ROIBIN_API const float* roibin_batch_values(const roibin_batch* batch, size_t* count);
/* Little-endian float32 serialization of the values. */
ROIBIN_API roibin_status roibin_batch_to_bytes(const roibin_batch* batch, roibin_buffer** out);
ROIBIN_API void roibin_batch_free(roibin_batch* batch);

ROIBIN_API roibin_peak_params roibin_peak_params_default(void);
ROIBIN_API roibin_status roibin_find_peaks(const roibin_batch* batch, const roibin_peak_params* params, size_t threads,
                                           roibin_peaks** out);
ROIBIN_API roibin_status roibin_peaks_from_csv(const char* text, uint64_t n_events, roibin_peaks** out);
ROIBIN_API roibin_status roibin_peaks_to_csv(const roibin_peaks* peaks, char** out);
ROIBIN_API size_t roibin_peaks_count(const roibin_peaks* peaks);
ROIBIN_API roibin_status roibin_peaks_get(const roibin_peaks* peaks, size_t i, roibin_peak* out);
ROIBIN_API void roibin_peaks_free(roibin_peaks* peaks);

/* Keeps events with at least min_peaks peaks; both outputs are new handles. */
ROIBIN_API roibin_status roibin_nhr(const roibin_batch* batch, const roibin_peaks* peaks, uint64_t min_peaks,
                                    roibin_batch** batch_out, roibin_peaks** peaks_out, uint64_t* kept);
ROIBIN_API roibin_status roibin_nhr_ratio(uint64_t total_events, uint64_t kept_events, double* out);

/* Keys: roi.window roi.fill roi.parallel_threshold bin (FRxFC) bin.rows
 * bin.cols codec background.abs_error background.rel_error background.dims
 * roi_codec chunk_events measure_errors threads threads.roi threads.bin
 * threads.codec threads.lossless threads.tasks */
ROIBIN_API roibin_status roibin_config_new(roibin_config** out);
ROIBIN_API roibin_status roibin_config_set(roibin_config* cfg, const char* key, const char* value);
ROIBIN_API roibin_status roibin_config_to_json(const roibin_config* cfg, char** out);
ROIBIN_API void roibin_config_free(roibin_config* cfg);

/* report_json may be NULL. */
ROIBIN_API roibin_status roibin_compress(const roibin_batch* batch, const roibin_peaks* peaks, const roibin_config* cfg,
                                         roibin_buffer** container, char** report_json);
/* cfg may be NULL; only its thread settings are used. */
ROIBIN_API roibin_status roibin_decompress(const uint8_t* bytes, size_t n, const roibin_config* cfg,
                                           roibin_batch** out);
ROIBIN_API roibin_status roibin_decompress_event(const uint8_t* bytes, size_t n, uint64_t event,
                                                 const roibin_config* cfg, roibin_batch** out);
ROIBIN_API roibin_status roibin_container_info(const uint8_t* bytes, size_t n, char** json);
/* The ROI anchors stored in a container, as a peak list. */
ROIBIN_API roibin_status roibin_container_peaks(const uint8_t* bytes, size_t n, roibin_peaks** out);

/* space_json NULL: default space. budget 0: derived from the space. Writes a
 * tuning record (space, trials, winner, seed, host). */
ROIBIN_API roibin_status roibin_tune(const roibin_batch* batch, const roibin_peaks* peaks, const roibin_config* cfg,
                                     const char* space_json, uint64_t budget, uint64_t seed, char** record_json);
ROIBIN_API roibin_status roibin_host_descriptor(char** out);
/* Copies the winning thread allocation of a tuning record into cfg. */
ROIBIN_API roibin_status roibin_config_apply_tuning(roibin_config* cfg, const char* record_json);

ROIBIN_API roibin_synth_params roibin_synth_params_default(void);
ROIBIN_API roibin_status roibin_generate(const roibin_synth_params* params, roibin_batch** batch,
                                         roibin_peaks** planted);
/* Peak finder settings suited to generated data of the given parameters. */
ROIBIN_API roibin_peak_params roibin_synth_finder_params(const roibin_synth_params* params);

/* Either output may be NULL. */
ROIBIN_API roibin_status roibin_grid(const roibin_batch* batch, const roibin_peaks* peaks, const roibin_config* cfg,
                                     int factorial, char** csv, char** json);
ROIBIN_API roibin_status roibin_throughput(const roibin_batch* batch, const roibin_peaks* peaks,
                                           const roibin_config* cfg, uint32_t reps, char** csv, char** json);

/* Two intensity columns (one value per line; header and '#' lines skipped).
 * Emits rsplit, cc_half, r_factor, psnr and mpe as JSON. */
ROIBIN_API roibin_status roibin_metrics_from_text(const char* first, const char* second, char** json);
ROIBIN_API roibin_status roibin_compression_ratio(uint64_t raw_bytes, uint64_t compressed_bytes, double* out);

#ifdef __cplusplus
}
#endif

#endif /* ROIBIN_H */
