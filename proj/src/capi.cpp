#include "roibin/roibin.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <string>

#include "json.hpp"
#include "roibin/bench.hpp"
#include "roibin/error.hpp"
#include "roibin/metrics.hpp"
#include "roibin/pipeline.hpp"
#include "roibin/tuner.hpp"

using nlohmann::json;
using namespace roibin;

struct roibin_batch {
  EventBatch batch;
};
struct roibin_peaks {
  PeakList peaks;
};
struct roibin_config {
  RoibinConfig cfg;
};
struct roibin_buffer {
  std::vector<std::uint8_t> bytes;
};

namespace {

thread_local std::string last_error;

template <class F>
roibin_status guard(F&& fn) {
  try {
    fn();
    last_error.clear();
    return ROIBIN_OK;
  } catch (const Error& e) {
    last_error = e.what();
    return static_cast<roibin_status>(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return ROIBIN_E_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return ROIBIN_E_INTERNAL;
  } catch (...) {
    last_error = "unknown failure";
    return ROIBIN_E_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (p == nullptr) fail(ErrorCode::invalid_argument, std::string(what) + " must not be NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

Dims4 to_dims(roibin_dims d) { return Dims4{d.events, d.panels, d.rows, d.cols}; }
roibin_dims from_dims(const Dims4& d) { return {d.events, d.panels, d.rows, d.cols}; }

PeakFinderParams to_params(const roibin_peak_params& p) {
  return {p.window, p.max_threshold, p.member_floor, p.total_floor, p.snr_floor, p.min_pixels, p.max_pixels};
}
roibin_peak_params from_params(const PeakFinderParams& p) {
  return {p.window, p.max_threshold, p.member_floor, p.total_floor, p.snr_floor, p.min_pixels, p.max_pixels};
}

SynthParams to_synth(const roibin_synth_params& p) {
  SynthParams s;
  s.dims = to_dims(p.dims);
  s.peaks_lo = p.peaks_lo;
  s.peaks_hi = p.peaks_hi;
  s.amplitude_lo = p.amplitude_lo;
  s.amplitude_hi = p.amplitude_hi;
  s.peak_sigma = p.peak_sigma;
  s.spot_radius = p.spot_radius;
  s.background_mean = p.background_mean;
  s.noise = p.uniform_noise ? SynthParams::Noise::uniform : SynthParams::Noise::gaussian;
  s.min_separation = p.min_separation;
  s.integer_adu = p.integer_adu != 0;
  s.seed = p.seed;
  s.threads = p.threads;
  return s;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
    const auto x = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::logic_error&) {
    fail(ErrorCode::invalid_argument, key + ": expected a nonnegative integer, got '" + v + "'");
  }
}

double parse_f64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size() || !std::isfinite(x)) throw std::invalid_argument(v);
    return x;
  } catch (const std::logic_error&) {
    fail(ErrorCode::invalid_argument, key + ": expected a number, got '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  fail(ErrorCode::invalid_argument, key + ": expected a boolean, got '" + v + "'");
}

void set_bin(BinSpec& b, const std::string& v) {
  const auto x = v.find_first_of("xX");
  if (x == std::string::npos) fail(ErrorCode::invalid_argument, "bin: expected FRxFC, got '" + v + "'");
  b.factor_rows = static_cast<std::uint32_t>(parse_u64("bin", v.substr(0, x)));
  b.factor_cols = static_cast<std::uint32_t>(parse_u64("bin", v.substr(x + 1)));
}

void config_set(RoibinConfig& c, std::string key, const std::string& v) {
  // Accepted aliases map onto one canonical spelling.
  if (key == "roi.codec" || key == "roi_codec") key = "roi_codec";
  if (key == "chunk.events") key = "chunk_events";
  if (key == "measure.errors") key = "measure_errors";
  if (key == "background.codec") key = "codec";
  if (key == "bin.factor") key = "bin";
  if (key == "background.pq_dims" || key == "pq.dims" || key == "pq_dims") key = "background.dims";

  auto threads_value = [&] { return static_cast<std::size_t>(parse_u64(key, v)); };
  if (key == "roi.window") {
    c.roi.window = static_cast<std::uint32_t>(parse_u64(key, v));
  } else if (key == "roi.fill") {
    c.roi.fill = static_cast<float>(parse_f64(key, v));
  } else if (key == "roi.parallel_threshold") {
    c.roi.parallel_threshold = parse_u64(key, v);
  } else if (key == "bin") {
    set_bin(c.bin, v);
  } else if (key == "bin.rows") {
    c.bin.factor_rows = static_cast<std::uint32_t>(parse_u64(key, v));
  } else if (key == "bin.cols") {
    c.bin.factor_cols = static_cast<std::uint32_t>(parse_u64(key, v));
  } else if (key == "codec") {
    if (v == "pq") {
      if (c.background.kind != CodecId::Kind::pq) c.background = CodecId::pq(c.background.bound, c.background.dims_mode);
    } else {
      c.background = CodecId::parse(v);
    }
  } else if (key == "background.abs_error") {
    c.background.bound = ErrorBound::absolute(parse_f64(key, v));
  } else if (key == "background.rel_error") {
    c.background.bound = ErrorBound::relative(parse_f64(key, v));
  } else if (key == "background.dims") {
    c.background.dims_mode = static_cast<int>(parse_u64(key, v));
  } else if (key == "roi_codec") {
    c.roi_codec = CodecId::parse(v);
  } else if (key == "chunk_events") {
    c.chunk_events = parse_u64(key, v);
  } else if (key == "measure_errors") {
    c.measure_errors = parse_bool(key, v);
  } else if (key == "threads") {
    const auto t = threads_value();
    c.threads = ThreadAlloc{t, t, t, t, t};
  } else if (key == "threads.roi") {
    c.threads.roi = threads_value();
  } else if (key == "threads.bin") {
    c.threads.bin = threads_value();
  } else if (key == "threads.codec") {
    c.threads.codec = threads_value();
  } else if (key == "threads.lossless") {
    c.threads.lossless = threads_value();
  } else if (key == "threads.tasks") {
    c.threads.tasks = threads_value();
  } else {
    fail(ErrorCode::invalid_argument, "unknown configuration key '" + key + "'");
  }
}

json threads_json(const ThreadAlloc& t) {
  return {{"roi", t.roi}, {"bin", t.bin}, {"codec", t.codec}, {"lossless", t.lossless}, {"tasks", t.tasks}};
}

json config_json(const RoibinConfig& c) {
  return {{"roi", {{"window", c.roi.window}, {"fill", c.roi.fill}, {"parallel_threshold", c.roi.parallel_threshold}}},
          {"bin", {{"rows", c.bin.factor_rows}, {"cols", c.bin.factor_cols}}},
          {"background", c.background.to_string()},
          {"roi_codec", c.roi_codec.to_string()},
          {"chunk_events", c.chunk_events},
          {"measure_errors", c.measure_errors},
          {"threads", threads_json(c.threads)}};
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json report_json(const CompressionReport& r, const RoibinConfig& c) {
  return {{"schema_version", kContainerVersion},
          {"compressed_bytes", r.compressed_bytes},
          {"raw_bytes", r.raw_bytes},
          {"cr", optional_json(r.cr)},
          {"roi_bytes", r.roi_bytes},
          {"background_bytes", r.background_bytes},
          {"chunks", r.chunks},
          {"peaks", r.peaks},
          {"seconds",
           {{"roi", r.seconds.roi},
            {"bin", r.seconds.bin},
            {"codec", r.seconds.codec},
            {"lossless", r.seconds.lossless},
            {"total", r.seconds.total}}},
          {"max_binned_error", optional_json(r.max_binned_error)},
          {"max_raw_error", optional_json(r.max_raw_error)},
          {"config", config_json(c)}};
}

const RoibinConfig& config_or_default(const roibin_config* cfg) {
  static const RoibinConfig defaults;
  return cfg ? cfg->cfg : defaults;
}

// Metrics that can be undefined come out as null with the reason alongside.
template <class F>
json metric(F&& fn, json& notes, const char* name) {
  try {
    return fn();
  } catch (const Error& e) {
    notes[name] = e.what();
    return nullptr;
  }
}

json finite_or_tag(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

}  // namespace

extern "C" {

const char* roibin_version(void) { return "1.0.0"; }

const char* roibin_status_name(roibin_status status) {
  switch (status) {
    case ROIBIN_OK: return "ok";
    case ROIBIN_E_INTERNAL: return "internal";
    default:
      if (status >= ROIBIN_E_SIZE && status <= ROIBIN_E_INVALID_ARGUMENT)
        return to_string(static_cast<ErrorCode>(status));
      return "unknown";
  }
}

const char* roibin_last_error(void) { return last_error.c_str(); }

void roibin_free_string(char* s) { std::free(s); }

const uint8_t* roibin_buffer_data(const roibin_buffer* buf) { return buf ? buf->bytes.data() : nullptr; }
size_t roibin_buffer_size(const roibin_buffer* buf) { return buf ? buf->bytes.size() : 0; }
void roibin_buffer_free(roibin_buffer* buf) { delete buf; }

roibin_status roibin_dims_parse(const char* text, roibin_dims* out) {
  return guard([&] {
    need(text, "text");
    need(out, "out");
    const Dims4 d = Dims4::parse(text);
    d.validate();
    *out = from_dims(d);
  });
}

roibin_status roibin_batch_from_raw(const uint8_t* bytes, size_t n, roibin_dims dims, const float* pedestal,
                                    const float* gain, size_t threads, roibin_batch** out) {
  return guard([&] {
    need(out, "out");
    if (bytes == nullptr && n > 0) fail(ErrorCode::invalid_argument, "bytes must not be NULL");
    if ((pedestal == nullptr) != (gain == nullptr))
      fail(ErrorCode::invalid_argument, "pedestal and gain must both be given or both be NULL");
    const Dims4 d = to_dims(dims);
    const auto raw = ingest_raw({bytes, n}, d);
    Calibration cal = Calibration::identity(d);
    if (pedestal != nullptr) {
      const std::size_t m = d.frame_size();
      cal.pedestal.assign(pedestal, pedestal + m);
      cal.gain.assign(gain, gain + m);
    }
    *out = new roibin_batch{calibrate(raw, cal, threads == 0 ? 1 : threads)};
  });
}

roibin_status roibin_batch_from_floats(const float* values, roibin_dims dims, roibin_batch** out) {
  return guard([&] {
    need(out, "out");
    const Dims4 d = to_dims(dims);
    d.validate();
    if (values == nullptr) fail(ErrorCode::invalid_argument, "values must not be NULL");
    *out = new roibin_batch{identity_batch(std::vector<float>(values, values + d.count()), d)};
  });
}

roibin_dims roibin_batch_dims(const roibin_batch* batch) {
  return batch ? from_dims(batch->batch.dims()) : roibin_dims{0, 0, 0, 0};
}

const float* roibin_batch_values(const roibin_batch* batch, size_t* count) {
  if (batch == nullptr) {
    if (count) *count = 0;
    return nullptr;
  }
  const auto v = batch->batch.values();
  if (count) *count = v.size();
  return v.data();
}

roibin_status roibin_batch_to_bytes(const roibin_batch* batch, roibin_buffer** out) {
  return guard([&] {
    need(batch, "batch");
    need(out, "out");
    *out = new roibin_buffer{float_bytes(batch->batch.values())};
  });
}

void roibin_batch_free(roibin_batch* batch) { delete batch; }

roibin_peak_params roibin_peak_params_default(void) { return from_params(PeakFinderParams{}); }

roibin_status roibin_find_peaks(const roibin_batch* batch, const roibin_peak_params* params, size_t threads,
                                roibin_peaks** out) {
  return guard([&] {
    need(batch, "batch");
    need(out, "out");
    const PeakFinderParams p = params ? to_params(*params) : PeakFinderParams{};
    *out = new roibin_peaks{find_peaks(batch->batch.view(), p, threads == 0 ? 1 : threads)};
  });
}

roibin_status roibin_peaks_from_csv(const char* text, uint64_t n_events, roibin_peaks** out) {
  return guard([&] {
    need(text, "text");
    need(out, "out");
    *out = new roibin_peaks{peaks_from_csv(text, n_events)};
  });
}

roibin_status roibin_peaks_to_csv(const roibin_peaks* peaks, char** out) {
  return guard([&] {
    need(peaks, "peaks");
    need(out, "out");
    *out = dup_string(peaks_to_csv(peaks->peaks));
  });
}

size_t roibin_peaks_count(const roibin_peaks* peaks) { return peaks ? peaks->peaks.size() : 0; }

roibin_status roibin_peaks_get(const roibin_peaks* peaks, size_t i, roibin_peak* out) {
  return guard([&] {
    need(peaks, "peaks");
    need(out, "out");
    if (i >= peaks->peaks.size())
      fail(ErrorCode::index, "peak " + std::to_string(i) + " of " + std::to_string(peaks->peaks.size()));
    const Peak& p = peaks->peaks.peaks[i];
    *out = {p.event, p.panel, p.row, p.col, p.total_intensity, p.n_pixels, p.snr};
  });
}

void roibin_peaks_free(roibin_peaks* peaks) { delete peaks; }

roibin_status roibin_nhr(const roibin_batch* batch, const roibin_peaks* peaks, uint64_t min_peaks,
                         roibin_batch** batch_out, roibin_peaks** peaks_out, uint64_t* kept) {
  return guard([&] {
    need(batch, "batch");
    need(peaks, "peaks");
    need(batch_out, "batch_out");
    need(peaks_out, "peaks_out");
    auto r = non_hit_rejection(batch->batch, peaks->peaks, min_peaks);
    if (kept) *kept = r.kept_events.size();
    auto b = std::make_unique<roibin_batch>(roibin_batch{std::move(r.batch)});
    *peaks_out = new roibin_peaks{std::move(r.peaks)};
    *batch_out = b.release();
  });
}

roibin_status roibin_nhr_ratio(uint64_t total_events, uint64_t kept_events, double* out) {
  return guard([&] {
    need(out, "out");
    *out = nhr_ratio(total_events, kept_events);
  });
}

roibin_status roibin_config_new(roibin_config** out) {
  return guard([&] {
    need(out, "out");
    *out = new roibin_config{};
  });
}

roibin_status roibin_config_set(roibin_config* cfg, const char* key, const char* value) {
  return guard([&] {
    need(cfg, "cfg");
    need(key, "key");
    need(value, "value");
    RoibinConfig next = cfg->cfg;
    config_set(next, key, value);
    next.validate();
    cfg->cfg = next;
  });
}

roibin_status roibin_config_to_json(const roibin_config* cfg, char** out) {
  return guard([&] {
    need(cfg, "cfg");
    need(out, "out");
    *out = dup_string(config_json(cfg->cfg).dump(2));
  });
}

void roibin_config_free(roibin_config* cfg) { delete cfg; }

roibin_status roibin_compress(const roibin_batch* batch, const roibin_peaks* peaks, const roibin_config* cfg,
                              roibin_buffer** container, char** report) {
  return guard([&] {
    need(batch, "batch");
    need(peaks, "peaks");
    need(container, "container");
    const RoibinConfig& c = config_or_default(cfg);
    auto result = compress(batch->batch, peaks->peaks, c);
    char* rep = report ? dup_string(report_json(result.report, c).dump(2)) : nullptr;
    *container = new roibin_buffer{std::move(result.container)};
    if (report) *report = rep;
  });
}

roibin_status roibin_decompress(const uint8_t* bytes, size_t n, const roibin_config* cfg, roibin_batch** out) {
  return guard([&] {
    need(out, "out");
    if (bytes == nullptr && n > 0) fail(ErrorCode::invalid_argument, "bytes must not be NULL");
    *out = new roibin_batch{decompress({bytes, n}, config_or_default(cfg).threads)};
  });
}

roibin_status roibin_decompress_event(const uint8_t* bytes, size_t n, uint64_t event, const roibin_config* cfg,
                                      roibin_batch** out) {
  return guard([&] {
    need(out, "out");
    if (bytes == nullptr && n > 0) fail(ErrorCode::invalid_argument, "bytes must not be NULL");
    *out = new roibin_batch{decompress_event({bytes, n}, event, config_or_default(cfg).threads)};
  });
}

roibin_status roibin_container_info(const uint8_t* bytes, size_t n, char** out) {
  return guard([&] {
    need(out, "out");
    if (bytes == nullptr && n > 0) fail(ErrorCode::invalid_argument, "bytes must not be NULL");
    const auto info = read_container({bytes, n});
    json j = {{"version", info.version},
              {"dims", info.dims.to_string()},
              {"chunk_events", info.chunk_events},
              {"roi_window", info.roi.window},
              {"roi_fill", info.roi.fill},
              {"bin", {{"rows", info.bin.factor_rows}, {"cols", info.bin.factor_cols}}},
              {"background", info.background.to_string()},
              {"roi_codec", info.roi_codec.to_string()},
              {"raw_byte_size", info.raw_byte_size},
              {"peaks", info.anchors.size()},
              {"chunks", info.chunks.size()},
              {"bytes", n}};
    *out = dup_string(j.dump(2));
  });
}

roibin_status roibin_container_peaks(const uint8_t* bytes, size_t n, roibin_peaks** out) {
  return guard([&] {
    need(out, "out");
    if (bytes == nullptr && n > 0) fail(ErrorCode::invalid_argument, "bytes must not be NULL");
    const auto info = read_container({bytes, n});
    std::vector<Peak> peaks;
    peaks.reserve(info.anchors.size());
    for (const auto& a : info.anchors) peaks.push_back(Peak{a.event, a.panel, a.row, a.col});
    *out = new roibin_peaks{PeakList::from_peaks(std::move(peaks), info.dims.events)};
  });
}

roibin_status roibin_tune(const roibin_batch* batch, const roibin_peaks* peaks, const roibin_config* cfg,
                          const char* space_json, uint64_t budget, uint64_t seed, char** record_json) {
  return guard([&] {
    need(batch, "batch");
    need(peaks, "peaks");
    need(record_json, "record_json");
    TuneSpace space = TuneSpace::defaults();
    if (space_json != nullptr) {
      space.dims.clear();
      try {
        for (const auto& d : json::parse(space_json))
          space.dims.push_back({d.at("name").get<std::string>(), d.at("lo").get<int>(), d.at("hi").get<int>(),
                                d.value("task", d.at("name").get<std::string>() == "tasks")});
      } catch (const json::exception& e) {
        fail(ErrorCode::config, std::string("tuning space: ") + e.what());
      }
    }
    space.validate();
    TuneBudget b = TuneBudget::for_space(space);
    if (budget > 0) b.max_evals = budget;
    const RoibinConfig& c = config_or_default(cfg);
    TuningRecord record;
    record.space = space;
    record.seed = seed;
    record.host = host_descriptor();
    record.result = tune(space, compress_objective(batch->batch, peaks->peaks, c, space), b, seed);
    *record_json = dup_string(tuning_to_json(record));
  });
}

roibin_status roibin_host_descriptor(char** out) {
  return guard([&] {
    need(out, "out");
    *out = dup_string(host_descriptor());
  });
}

roibin_status roibin_config_apply_tuning(roibin_config* cfg, const char* record_json) {
  return guard([&] {
    need(cfg, "cfg");
    need(record_json, "record_json");
    const auto record = tuning_from_json(record_json);
    cfg->cfg.threads = to_thread_alloc(record.space, record.result.assignment, cfg->cfg.threads);
  });
}

roibin_synth_params roibin_synth_params_default(void) {
  const SynthParams s;
  return {from_dims(s.dims),   s.peaks_lo,         s.peaks_hi,
          s.amplitude_lo,      s.amplitude_hi,     s.peak_sigma,
          s.spot_radius,       s.background_mean,  s.noise == SynthParams::Noise::uniform ? 1 : 0,
          s.min_separation,    s.integer_adu ? 1 : 0, s.seed,
          s.threads};
}

roibin_status roibin_generate(const roibin_synth_params* params, roibin_batch** batch, roibin_peaks** planted) {
  return guard([&] {
    need(params, "params");
    need(batch, "batch");
    auto data = generate(to_synth(*params));
    auto b = std::make_unique<roibin_batch>(roibin_batch{std::move(data.batch)});
    if (planted) *planted = new roibin_peaks{std::move(data.planted)};
    *batch = b.release();
  });
}

roibin_peak_params roibin_synth_finder_params(const roibin_synth_params* params) {
  if (params == nullptr) return roibin_peak_params_default();
  return from_params(finder_params_for(to_synth(*params)));
}

roibin_status roibin_grid(const roibin_batch* batch, const roibin_peaks* peaks, const roibin_config* cfg,
                          int factorial, char** csv, char** json_out) {
  return guard([&] {
    need(batch, "batch");
    need(peaks, "peaks");
    GridSearchPlan plan;
    plan.factorial = factorial != 0;
    const auto cells = run_grid(plan, batch->batch, peaks->peaks, config_or_default(cfg));
    char* a = csv ? dup_string(grid_to_csv(cells)) : nullptr;
    char* b = nullptr;
    try {
      b = json_out ? dup_string(grid_to_json(cells)) : nullptr;
    } catch (...) {
      std::free(a);
      throw;
    }
    if (csv) *csv = a;
    if (json_out) *json_out = b;
  });
}

roibin_status roibin_throughput(const roibin_batch* batch, const roibin_peaks* peaks, const roibin_config* cfg,
                                uint32_t reps, char** csv, char** json_out) {
  return guard([&] {
    need(batch, "batch");
    need(peaks, "peaks");
    const RoibinConfig& base = config_or_default(cfg);
    std::vector<std::pair<std::string, RoibinConfig>> cfgs{{"roibin", base}};
    RoibinConfig lossless = base;
    lossless.bin.factor_rows = lossless.bin.factor_cols = 1;
    lossless.background = CodecId::deflate(9);
    cfgs.emplace_back("deflate9", lossless);
    const auto report = run_throughput(cfgs, batch->batch, peaks->peaks, reps);
    char* a = csv ? dup_string(throughput_to_csv(report)) : nullptr;
    char* b = nullptr;
    try {
      b = json_out ? dup_string(throughput_to_json(report)) : nullptr;
    } catch (...) {
      std::free(a);
      throw;
    }
    if (csv) *csv = a;
    if (json_out) *json_out = b;
  });
}

roibin_status roibin_metrics_from_text(const char* first, const char* second, char** out) {
  return guard([&] {
    need(first, "first");
    need(second, "second");
    need(out, "out");
    PairedIntensities p{read_value_column(first), read_value_column(second)};
    p.validate();
    json notes = json::object();
    json j;
    j["n"] = p.i1.size();
    j["scale"] = metric([&] { return json(least_squares_scale(p)); }, notes, "scale");
    j["rsplit"] = metric([&] { return finite_or_tag(rsplit(p)); }, notes, "rsplit");
    j["cc_half"] = metric([&] { return finite_or_tag(cc_half(p)); }, notes, "cc_half");
    j["r_factor"] = metric([&] { return finite_or_tag(r_factor(p.i1, p.i2)); }, notes, "r_factor");
    j["psnr"] = metric([&] { return finite_or_tag(psnr(std::span<const double>(p.i1), p.i2)); }, notes, "psnr");
    j["mpe"] = metric(
        [&] {
          const auto m = mpe(p.i1, p.i2);
          return m ? finite_or_tag(*m) : json(nullptr);
        },
        notes, "mpe");
    if (!notes.empty()) j["notes"] = notes;
    *out = dup_string(j.dump(2));
  });
}

roibin_status roibin_compression_ratio(uint64_t raw_bytes, uint64_t compressed_bytes, double* out) {
  return guard([&] {
    need(out, "out");
    *out = compression_ratio(raw_bytes, compressed_bytes);
  });
}

}  // extern "C"
