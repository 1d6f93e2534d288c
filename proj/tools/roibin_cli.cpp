// roibin-cli: batch front end over the roibin C API.
//
// Exit codes: 0 success, 1 internal failure, 2 usage, 3 data, 4 I/O.
// Settings are layered defaults < ROIBIN_* environment < --config file < flags.

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "roibin/roibin.h"

namespace {

using nlohmann::json;

enum Exit { kOk = 0, kInternal = 1, kUsage = 2, kData = 3, kIo = 4 };

struct Failure {
  int code;
  std::string message;
};

[[noreturn]] void die(int code, const std::string& message) { throw Failure{code, message}; }

int exit_for(roibin_status s) {
  switch (s) {
    case ROIBIN_OK: return kOk;
    case ROIBIN_E_IO: return kIo;
    case ROIBIN_E_INVALID_ARGUMENT: return kUsage;
    case ROIBIN_E_INTERNAL: return kInternal;
    default: return kData;
  }
}

void check(roibin_status s, const std::string& what) {
  if (s != ROIBIN_OK) die(exit_for(s), what + ": " + roibin_last_error());
}

// Owning wrappers for the C handles.
template <class T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  Handle(Handle&& o) noexcept : p(o.p) { o.p = nullptr; }
  Handle& operator=(Handle&& o) noexcept {
    std::swap(p, o.p);
    return *this;
  }
  ~Handle() {
    if (p) Free(p);
  }
  T** out() { return &p; }
  T* get() const { return p; }
};
using Batch = Handle<roibin_batch, roibin_batch_free>;
using Peaks = Handle<roibin_peaks, roibin_peaks_free>;
using Config = Handle<roibin_config, roibin_config_free>;
using Buffer = Handle<roibin_buffer, roibin_buffer_free>;

std::string take(char* s) {
  std::string out = s ? s : "";
  roibin_free_string(s);
  return out;
}

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) die(kIo, "cannot open '" + path + "' for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) die(kIo, "error reading '" + path + "'");
  return bytes;
}

std::string read_text(const std::string& path) {
  const auto b = read_file(path);
  return std::string(b.begin(), b.end());
}

void write_file(const std::string& path, const void* data, std::size_t n) {
  if (path == "-") {
    std::cout.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    std::cout.flush();
    if (!std::cout) die(kIo, "error writing to stdout");
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) die(kIo, "cannot open '" + path + "' for writing");
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  out.close();
  if (!out) die(kIo, "error writing '" + path + "'");
}

void write_text(const std::string& path, const std::string& text) { write_file(path, text.data(), text.size()); }

bool is_container(const std::vector<std::uint8_t>& b) {
  return b.size() >= 4 && b[0] == 'R' && b[1] == 'B' && b[2] == 'S' && b[3] == 'Z';
}

// ---------------------------------------------------------------------------
// Layered settings.

const char* const kConfigKeys[] = {
    "roi.window",       "roi.fill",        "roi.parallel_threshold", "bin",           "bin.rows",
    "bin.cols",         "codec",           "background.abs_error",   "background.rel_error",
    "background.dims",  "roi_codec",       "chunk_events",           "measure_errors", "threads",
    "threads.roi",      "threads.bin",     "threads.codec",          "threads.lossless", "threads.tasks"};

std::string env_name(const std::string& key) {
  std::string n = "ROIBIN_";
  for (char c : key) n += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return n;
}

struct Settings {
  Config cfg;
  std::vector<std::pair<std::string, std::string>> applied;  // key, source

  Settings() { check(roibin_config_new(cfg.out()), "config"); }

  void set(const std::string& key, const std::string& value, const std::string& source) {
    if (roibin_config_set(cfg.get(), key.c_str(), value.c_str()) != ROIBIN_OK)
      die(kUsage, source + ": " + roibin_last_error());
    applied.emplace_back(key, source);
  }

  void apply_env() {
    for (const char* key : kConfigKeys)
      if (const char* v = std::getenv(env_name(key).c_str())) set(key, v, "environment " + env_name(key));
  }

  // key = value lines, optional [section] headers prefixing keys, '#' comments.
  void apply_file(const std::string& path) {
    std::istringstream in(read_text(path));
    std::string line, section;
    for (int no = 1; std::getline(in, line); ++no) {
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r"), b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
      };
      line = trim(line);
      if (line.empty()) continue;
      const std::string where = path + ":" + std::to_string(no);
      if (line.front() == '[') {
        if (line.back() != ']') die(kUsage, where + ": malformed section header");
        section = trim(line.substr(1, line.size() - 2));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) die(kUsage, where + ": expected key = value");
      std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
      if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front())
        value = value.substr(1, value.size() - 2);
      if (!section.empty()) key = section + "." + key;
      set(key, value, where);
    }
  }

  json effective() const {
    char* s = nullptr;
    check(roibin_config_to_json(cfg.get(), &s), "config");
    return json::parse(take(s));
  }
};

// Flags shared by every subcommand that builds a configuration.
struct ConfigFlags {
  std::string config_file;
  std::map<std::string, std::string> values;  // config key -> flag value

  void add(CLI::App* app) {
    app->add_option("--config", config_file, "TOML-style settings file")->check(CLI::ExistingFile);
    auto opt = [&](const char* flag, const char* key, const char* help) {
      app->add_option_function<std::string>(flag, [this, key](const std::string& v) { values[key] = v; }, help);
    };
    opt("--bin", "bin", "binning factor FRxFC");
    auto* abs = app->add_option_function<std::string>(
        "--abs-error", [this](const std::string& v) { values["background.abs_error"] = v; }, "absolute error bound");
    auto* rel = app->add_option_function<std::string>(
        "--rel-error", [this](const std::string& v) { values["background.rel_error"] = v; },
        "value-range-relative error bound");
    abs->excludes(rel);
    opt("--pq-dims", "background.dims", "predictor dimensionality 1, 2 or 3");
    opt("--chunk", "chunk_events", "events per chunk");
    opt("--roi-window", "roi.window", "ROI window (odd)");
    opt("--roi-fill", "roi.fill", "fill value outside the frame");
    opt("--codec", "codec", "background codec: pq, raw or deflate:L");
    opt("--roi-codec", "roi_codec", "ROI codec: raw or deflate:L");
    opt("--threads", "threads", "threads for every stage");
    opt("--threads-roi", "threads.roi", "ROI stage threads");
    opt("--threads-bin", "threads.bin", "binning stage threads");
    opt("--threads-codec", "threads.codec", "background codec threads");
    opt("--threads-lossless", "threads.lossless", "ROI lossless stage threads");
    opt("--threads-tasks", "threads.tasks", "concurrent chunk tasks");
    app->add_flag_callback("--measure-errors", [this] { values["measure_errors"] = "true"; },
                           "report maximum binned and raw errors");
  }

  // Codec first so a following bound or dims setting applies to it.
  void apply(Settings& s) const {
    if (auto it = values.find("codec"); it != values.end()) s.set(it->first, it->second, "--codec");
    for (const auto& [k, v] : values)
      if (k != "codec") s.set(k, v, "flag for " + k);
  }
};

struct PeakFlags {
  std::optional<double> max_threshold, member_floor, total_floor, snr_floor;
  std::optional<std::uint32_t> window, min_pixels, max_pixels;

  void add(CLI::App* app) {
    app->add_option("--peak-window", window, "peak finder window (odd)");
    app->add_option("--max-threshold", max_threshold, "peak finder local-maximum threshold (ADU)");
    app->add_option("--member-floor", member_floor, "peak region membership floor (ADU)");
    app->add_option("--total-floor", total_floor, "minimum integrated intensity (ADU)");
    app->add_option("--snr-floor", snr_floor, "minimum signal-to-noise ratio");
    app->add_option("--min-pixels", min_pixels, "minimum peak size");
    app->add_option("--max-pixels", max_pixels, "maximum peak size");
  }

  roibin_peak_params params() const {
    roibin_peak_params p = roibin_peak_params_default();
    if (window) p.window = *window;
    if (max_threshold) p.max_threshold = *max_threshold;
    if (member_floor) p.member_floor = *member_floor;
    if (total_floor) p.total_floor = *total_floor;
    if (snr_floor) p.snr_floor = *snr_floor;
    if (min_pixels) p.min_pixels = *min_pixels;
    if (max_pixels) p.max_pixels = *max_pixels;
    return p;
  }
};

// Input frames: a raw uint16 file with --dims (plus optional calibration),
// or a container, which is decoded first.
struct InputFlags {
  std::string path, dims, pedestal, gain, peaks_csv;
  std::size_t io_threads = 1;

  void add(CLI::App* app, bool peaks = true) {
    app->add_option("input", path, "raw uint16 frames or a .rbsz container")->required();
    app->add_option("--dims", dims, "E,P,R,C extents of a raw input");
    app->add_option("--pedestal", pedestal, "float32 pedestal per pixel (P*R*C)")->check(CLI::ExistingFile);
    app->add_option("--gain", gain, "float32 gain per pixel (P*R*C)")->check(CLI::ExistingFile);
    if (peaks) app->add_option("--peaks", peaks_csv, "peak list CSV (default: run the peak finder)");
  }
};

struct Loaded {
  Batch batch;
  Peaks stored_peaks;  // anchors of a container input
};

std::vector<float> read_floats(const std::string& path, std::size_t expect, const char* what) {
  const auto b = read_file(path);
  if (b.size() != expect * 4)
    die(kData, std::string(what) + " '" + path + "' holds " + std::to_string(b.size()) + " bytes, expected " +
                   std::to_string(expect * 4));
  std::vector<float> v(expect);
  for (std::size_t i = 0; i < expect; ++i) {
    const std::uint32_t u = std::uint32_t(b[4 * i]) | std::uint32_t(b[4 * i + 1]) << 8 |
                            std::uint32_t(b[4 * i + 2]) << 16 | std::uint32_t(b[4 * i + 3]) << 24;
    std::memcpy(&v[i], &u, 4);
  }
  return v;
}

Loaded load_input(const InputFlags& in, const CLI::App& app, const Config* threads_cfg) {
  Loaded out;
  const auto bytes = read_file(in.path);
  if (is_container(bytes)) {
    check(roibin_decompress(bytes.data(), bytes.size(), threads_cfg ? threads_cfg->get() : nullptr, out.batch.out()),
          "decompress " + in.path);
    check(roibin_container_peaks(bytes.data(), bytes.size(), out.stored_peaks.out()), "container peaks");
    return out;
  }
  if (in.dims.empty()) die(kUsage, "--dims is required for raw input\n\n" + app.help());
  roibin_dims dims{};
  if (roibin_dims_parse(in.dims.c_str(), &dims) != ROIBIN_OK) die(kUsage, std::string("--dims: ") + roibin_last_error());
  if (in.pedestal.empty() != in.gain.empty()) die(kUsage, "--pedestal and --gain must be given together");
  std::vector<float> ped, gain;
  if (!in.pedestal.empty()) {
    const std::size_t m = dims.panels * dims.rows * dims.cols;
    ped = read_floats(in.pedestal, m, "pedestal");
    gain = read_floats(in.gain, m, "gain");
  }
  check(roibin_batch_from_raw(bytes.data(), bytes.size(), dims, ped.empty() ? nullptr : ped.data(),
                              gain.empty() ? nullptr : gain.data(), in.io_threads, out.batch.out()),
        "input " + in.path);
  return out;
}

Peaks peaks_for(const InputFlags& in, Loaded& loaded, const PeakFlags& pf, std::size_t threads) {
  Peaks peaks;
  const auto events = roibin_batch_dims(loaded.batch.get()).events;
  if (!in.peaks_csv.empty()) {
    check(roibin_peaks_from_csv(read_text(in.peaks_csv).c_str(), events, peaks.out()), "peaks " + in.peaks_csv);
  } else if (loaded.stored_peaks.get()) {
    peaks = std::move(loaded.stored_peaks);
  } else {
    const auto params = pf.params();
    check(roibin_find_peaks(loaded.batch.get(), &params, threads, peaks.out()), "peak finding");
  }
  return peaks;
}

std::optional<json> load_tuning(const std::string& path) {
  std::ifstream probe(path);
  if (!probe) return std::nullopt;
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    die(kData, "tune cache '" + path + "': " + e.what());
  }
}

std::string host() {
  char* s = nullptr;
  check(roibin_host_descriptor(&s), "host");
  return take(s);
}

// Settings in precedence order; tuned thread counts sit just below explicit flags.
void build_settings(Settings& s, const ConfigFlags& cf, const std::string& tune_cache, json* tuning_note) {
  s.apply_env();
  if (!cf.config_file.empty()) s.apply_file(cf.config_file);
  if (!tune_cache.empty()) {
    if (auto rec = load_tuning(tune_cache)) {
      if (rec->value("host", "") == host()) {
        check(roibin_config_apply_tuning(s.cfg.get(), rec->dump().c_str()), "tune cache " + tune_cache);
        if (tuning_note) *tuning_note = {{"cache", tune_cache}, {"applied", true}};
      } else {
        std::cerr << "roibin-cli: tune cache " << tune_cache << " was recorded on another host; ignored\n";
        if (tuning_note) *tuning_note = {{"cache", tune_cache}, {"applied", false}};
      }
    }
  }
  cf.apply(s);
}

std::size_t config_threads(const Settings& s, const char* stage) {
  return s.effective()["threads"][stage].get<std::size_t>();
}

// ---------------------------------------------------------------------------
// Subcommands.

struct CompressCmd {
  InputFlags in;
  ConfigFlags cf;
  PeakFlags pf;
  std::string out, report, tune_cache;
  std::optional<std::uint64_t> nhr;

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("compress", "compress frames into a .rbsz container");
    in.add(app);
    cf.add(app);
    pf.add(app);
    app->add_option("--nhr", nhr, "drop events with fewer peaks than this before compressing");
    app->add_option("--tune-cache", tune_cache, "apply thread counts from a tuning record");
    app->add_option("--out", out, "container path")->required();
    app->add_option("--report", report, "JSON report path ('-' for stdout)");
    app->callback([this, app] { run(*app); });
  }

  void run(const CLI::App& app) {
    Settings s;
    json tuning = nullptr;
    build_settings(s, cf, tune_cache, &tuning);
    in.io_threads = config_threads(s, "bin");
    Loaded loaded = load_input(in, app, &s.cfg);
    Peaks peaks = peaks_for(in, loaded, pf, config_threads(s, "roi"));

    const auto total_events = roibin_batch_dims(loaded.batch.get()).events;
    json nhr_note = nullptr;
    Batch kept_batch;
    Peaks kept_peaks;
    const roibin_batch* batch = loaded.batch.get();
    const roibin_peaks* plist = peaks.get();
    if (nhr) {
      std::uint64_t kept = 0;
      check(roibin_nhr(batch, plist, *nhr, kept_batch.out(), kept_peaks.out(), &kept), "non-hit rejection");
      batch = kept_batch.get();
      plist = kept_peaks.get();
      double ratio = 0;
      nhr_note = {{"min_peaks", *nhr}, {"events_total", total_events}, {"events_kept", kept}};
      if (roibin_nhr_ratio(total_events, kept, &ratio) == ROIBIN_OK)
        nhr_note["ratio"] = ratio;
      else
        nhr_note["ratio"] = nullptr;
    }

    Buffer container;
    char* rep = nullptr;
    check(roibin_compress(batch, plist, s.cfg.get(), container.out(), &rep), "compress");
    json r = json::parse(take(rep));
    write_file(out, roibin_buffer_data(container.get()), roibin_buffer_size(container.get()));
    r["input"] = in.path;
    r["output"] = out;
    r["nhr"] = nhr_note;  // kept apart from cr, which covers the stored events only
    r["tuning"] = tuning;
    if (!report.empty()) write_text(report, r.dump(2) + "\n");
  }
};

struct DecompressCmd {
  std::string path, out;
  std::optional<std::uint64_t> event;
  ConfigFlags cf;

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("decompress", "restore float32 frames from a container");
    app->add_option("input", path, "container")->required();
    app->add_option("--event", event, "extract a single event");
    app->add_option("--out", out, "float32 little-endian output ('-' for stdout)")->required();
    cf.add(app);
    app->callback([this] { run(); });
  }

  void run() {
    Settings s;
    build_settings(s, cf, "", nullptr);
    const auto bytes = read_file(path);
    Batch b;
    if (event)
      check(roibin_decompress_event(bytes.data(), bytes.size(), *event, s.cfg.get(), b.out()), "decompress " + path);
    else
      check(roibin_decompress(bytes.data(), bytes.size(), s.cfg.get(), b.out()), "decompress " + path);
    Buffer raw;
    check(roibin_batch_to_bytes(b.get(), raw.out()), "serialize");
    write_file(out, roibin_buffer_data(raw.get()), roibin_buffer_size(raw.get()));
  }
};

struct InfoCmd {
  std::string path;
  void add(CLI::App& root) {
    auto* app = root.add_subcommand("info", "describe a container");
    app->add_option("input", path, "container")->required();
    app->callback([this] {
      const auto bytes = read_file(path);
      char* s = nullptr;
      check(roibin_container_info(bytes.data(), bytes.size(), &s), "info " + path);
      std::cout << take(s) << "\n";
    });
  }
};

struct PeaksCmd {
  InputFlags in;
  PeakFlags pf;
  std::string out = "-";
  std::size_t threads = 1;

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("peaks", "find peaks and write them as CSV");
    in.add(app, false);
    pf.add(app);
    app->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    app->add_option("--out", out, "CSV path ('-' for stdout)");
    app->callback([this, app] {
      Loaded loaded = load_input(in, *app, nullptr);
      loaded.stored_peaks = Peaks{};
      const Peaks p = peaks_for(in, loaded, pf, threads);
      char* csv = nullptr;
      check(roibin_peaks_to_csv(p.get(), &csv), "peaks");
      write_text(out, take(csv));
    });
  }
};

// Parses "name=lo:hi,..." into the JSON space description the C API takes.
std::string parse_space(const std::string& text) {
  json space = json::array();
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('='), colon = item.find(':');
    if (eq == std::string::npos || colon == std::string::npos || colon < eq)
      die(kUsage, "--space: expected name=lo:hi, got '" + item + "'");
    try {
      const std::string name = item.substr(0, eq);
      space.push_back({{"name", name},
                       {"lo", std::stoi(item.substr(eq + 1, colon - eq - 1))},
                       {"hi", std::stoi(item.substr(colon + 1))},
                       {"task", name == "tasks"}});
    } catch (const std::logic_error&) {
      die(kUsage, "--space: bad bounds in '" + item + "'");
    }
  }
  return space.dump();
}

struct TuneCmd {
  InputFlags in;
  ConfigFlags cf;
  PeakFlags pf;
  std::string cache, space;
  std::uint64_t budget = 0, seed = 0;
  bool force = false;

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("tune", "search thread allocations minimizing compression time");
    in.add(app);
    cf.add(app);
    pf.add(app);
    app->add_option("--tune-cache", cache, "tuning record to write or reuse")->required();
    app->add_option("--space", space, "search space as name=lo:hi,... (names: tasks roi bin codec lossless)");
    app->add_option("--budget", budget, "evaluation budget (default from the space size)");
    app->add_option("--seed", seed, "search seed");
    app->add_flag("--force", force, "re-measure even when the cache matches this host");
    app->callback([this, app] { run(*app); });
  }

  void run(const CLI::App& app) {
    const std::string space_json = space.empty() ? std::string() : parse_space(space);
    if (!force) {
      if (auto rec = load_tuning(cache)) {
        const bool same_space = space.empty() || json::parse(space_json) == (*rec)["space"];
        if (rec->value("host", "") == host() && same_space) {
          std::cerr << "roibin-cli: reusing tuning record " << cache << "\n";
          std::cout << (*rec)["winner"].dump(2) << "\n";
          return;
        }
      }
    }
    Settings s;
    build_settings(s, cf, "", nullptr);
    Loaded loaded = load_input(in, app, &s.cfg);
    Peaks peaks = peaks_for(in, loaded, pf, 1);
    char* rec = nullptr;
    check(roibin_tune(loaded.batch.get(), peaks.get(), s.cfg.get(), space.empty() ? nullptr : space_json.c_str(),
                      budget, seed, &rec),
          "tune");
    const json record = json::parse(take(rec));
    write_text(cache, record.dump(2) + "\n");
    std::cout << record["winner"].dump(2) << "\n";
  }
};

// Benchmarks run on a given input or, without one, on generated frames.
struct BenchInput {
  std::string path, dims = "16,1,512,512", peaks_csv;
  std::uint64_t seed = 1;
  std::uint32_t peaks_lo = 0, peaks_hi = 64;
  double background = 400;

  void add(CLI::App* app) {
    app->add_option("input", path, "raw uint16 frames (default: synthetic data)");
    app->add_option("--dims", dims, "E,P,R,C of the raw input or the synthetic batch");
    app->add_option("--peaks", peaks_csv, "peak list CSV for a raw input");
    app->add_option("--seed", seed, "synthetic seed");
    app->add_option("--peaks-per-event", peaks_hi, "synthetic peaks per event, upper bound");
    app->add_option("--background", background, "synthetic background mean (ADU)");
  }

  std::pair<Batch, Peaks> load(const CLI::App& app, const PeakFlags& pf) const {
    Batch b;
    Peaks p;
    if (path.empty()) {
      roibin_synth_params sp = roibin_synth_params_default();
      check(roibin_dims_parse(dims.c_str(), &sp.dims), "--dims");
      sp.peaks_lo = peaks_lo;
      sp.peaks_hi = peaks_hi;
      sp.seed = seed;
      sp.background_mean = background;
      check(roibin_generate(&sp, b.out(), p.out()), "generate");
      return {std::move(b), std::move(p)};
    }
    InputFlags in;
    in.path = path;
    in.dims = dims;
    in.peaks_csv = peaks_csv;
    Loaded l = load_input(in, app, nullptr);
    Peaks found = peaks_for(in, l, pf, 1);
    return {std::move(l.batch), std::move(found)};
  }
};

struct GridCmd {
  BenchInput bi;
  ConfigFlags cf;
  PeakFlags pf;
  bool factorial = false, as_json = false;
  std::string out = "-";

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("grid", "compression ratio over binning, tolerance and dims");
    bi.add(app);
    cf.add(app);
    pf.add(app);
    app->add_flag("--factorial", factorial, "every combination instead of one-at-a-time sweeps");
    app->add_flag("--json", as_json, "emit JSON instead of CSV");
    app->add_option("--out", out, "output path ('-' for stdout)");
    app->callback([this, app] {
      Settings s;
      build_settings(s, cf, "", nullptr);
      auto [b, p] = bi.load(*app, pf);
      char *csv = nullptr, *js = nullptr;
      check(roibin_grid(b.get(), p.get(), s.cfg.get(), factorial ? 1 : 0, as_json ? nullptr : &csv,
                        as_json ? &js : nullptr),
            "grid");
      write_text(out, as_json ? take(js) + "\n" : take(csv));
    });
  }
};

struct BenchCmd {
  BenchInput bi;
  ConfigFlags cf;
  PeakFlags pf;
  std::uint32_t reps = 3;
  bool as_json = false;
  std::string out = "-";

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("bench", "throughput of the configured pipeline and a lossless baseline");
    bi.add(app);
    cf.add(app);
    pf.add(app);
    app->add_option("--reps", reps, "repetitions per measurement (>= 3)");
    app->add_flag("--json", as_json, "emit JSON instead of CSV");
    app->add_option("--out", out, "output path ('-' for stdout)");
    app->callback([this, app] {
      Settings s;
      build_settings(s, cf, "", nullptr);
      auto [b, p] = bi.load(*app, pf);
      char *csv = nullptr, *js = nullptr;
      check(roibin_throughput(b.get(), p.get(), s.cfg.get(), reps, as_json ? nullptr : &csv, as_json ? &js : nullptr),
            "bench");
      write_text(out, as_json ? take(js) + "\n" : take(csv));
    });
  }
};

struct MetricsCmd {
  std::string first, second;
  void add(CLI::App& root) {
    auto* app = root.add_subcommand("metrics", "Rsplit, CC1/2, R-factor, PSNR and MPE of two intensity columns");
    app->add_option("first", first, "first intensity file (or observed)")->required()->check(CLI::ExistingFile);
    app->add_option("second", second, "second intensity file (or calculated)")->required()->check(CLI::ExistingFile);
    app->callback([this] {
      char* s = nullptr;
      check(roibin_metrics_from_text(read_text(first).c_str(), read_text(second).c_str(), &s), "metrics");
      std::cout << take(s) << "\n";
    });
  }
};

struct GenerateCmd {
  std::string dims = "4,1,512,512", out, peaks_out, noise = "gaussian";
  std::uint32_t peaks_lo = 0, peaks_hi = 16;
  std::uint64_t seed = 0;
  double amp_lo = 500, amp_hi = 5000, background = 20, sigma = 1.5;

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("generate", "write seeded synthetic frames as raw uint16");
    app->add_option("--dims", dims, "E,P,R,C");
    app->add_option("--peaks-min", peaks_lo, "fewest spots per event");
    app->add_option("--peaks-max", peaks_hi, "most spots per event");
    app->add_option("--amplitude-min", amp_lo, "smallest spot amplitude (ADU)");
    app->add_option("--amplitude-max", amp_hi, "largest spot amplitude (ADU)");
    app->add_option("--sigma", sigma, "spot width (pixels)");
    app->add_option("--background", background, "background mean (ADU)");
    app->add_option("--noise", noise, "gaussian or uniform")->check(CLI::IsMember({"gaussian", "uniform"}));
    app->add_option("--seed", seed, "seed");
    app->add_option("--out", out, "raw uint16 output")->required();
    app->add_option("--peaks-out", peaks_out, "planted spot list CSV");
    app->callback([this] { run(); });
  }

  void run() {
    roibin_synth_params sp = roibin_synth_params_default();
    if (roibin_dims_parse(dims.c_str(), &sp.dims) != ROIBIN_OK) die(kUsage, std::string("--dims: ") + roibin_last_error());
    sp.peaks_lo = peaks_lo;
    sp.peaks_hi = peaks_hi;
    sp.amplitude_lo = amp_lo;
    sp.amplitude_hi = amp_hi;
    sp.peak_sigma = sigma;
    sp.background_mean = background;
    sp.uniform_noise = noise == "uniform";
    sp.seed = seed;
    Batch b;
    Peaks p;
    check(roibin_generate(&sp, b.out(), p.out()), "generate");
    std::size_t n = 0;
    const float* v = roibin_batch_values(b.get(), &n);
    std::vector<std::uint8_t> raw(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto u = static_cast<std::uint16_t>(v[i]);
      raw[2 * i] = static_cast<std::uint8_t>(u & 0xff);
      raw[2 * i + 1] = static_cast<std::uint8_t>(u >> 8);
    }
    write_file(out, raw.data(), raw.size());
    if (!peaks_out.empty()) {
      char* csv = nullptr;
      check(roibin_peaks_to_csv(p.get(), &csv), "peaks");
      write_text(peaks_out, take(csv));
    }
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"roibin-cli: ROI-preserving, binned, error-bounded compression of detector frames"};
  app.require_subcommand(1);
  app.set_version_flag("--version", roibin_version());
  app.footer("Exit codes: 0 ok, 1 internal, 2 usage, 3 data, 4 I/O.");

  CompressCmd compress;
  DecompressCmd decompress;
  InfoCmd info;
  PeaksCmd peaks;
  TuneCmd tune;
  GridCmd grid;
  BenchCmd bench;
  MetricsCmd metrics;
  GenerateCmd generate;
  compress.add(app);
  decompress.add(app);
  info.add(app);
  peaks.add(app);
  tune.add(app);
  grid.add(app);
  bench.add(app);
  metrics.add(app);
  generate.add(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion& e) {
    std::cout << roibin_version() << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << "roibin-cli: " << e.what() << "\n\n" << app.help();
    return kUsage;
  } catch (const Failure& f) {
    std::cerr << "roibin-cli: " << f.message << "\n";
    return f.code;
  } catch (const std::bad_alloc&) {
    std::cerr << "roibin-cli: out of memory\n";
    return kInternal;
  } catch (const std::exception& e) {
    std::cerr << "roibin-cli: " << e.what() << "\n";
    return kInternal;
  }
  return kOk;
}
