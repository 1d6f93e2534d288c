#include "roibin/tuner.hpp"

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <thread>

#include "json.hpp"
#include "roibin/error.hpp"

namespace roibin {

TuneSpace TuneSpace::defaults() {
  return {{{"tasks", 1, 40, true}, {"roi", 1, 8, false}, {"bin", 1, 8, false}, {"codec", 1, 8, false},
           {"lossless", 1, 8, false}}};
}

void TuneSpace::validate() const {
  if (dims.empty()) fail(ErrorCode::config, "tune space has no dimensions");
  for (const auto& d : dims)
    if (d.lo > d.hi) fail(ErrorCode::config, "tune dimension '" + d.name + "' has an empty range");
}

std::uint64_t TuneSpace::size() const {
  std::uint64_t n = 1;
  for (const auto& d : dims) n *= static_cast<std::uint64_t>(d.hi - d.lo + 1);
  return n;
}

std::uint64_t TuneSpace::non_task_size() const {
  std::uint64_t n = 1;
  for (const auto& d : dims)
    if (!d.is_task) n *= static_cast<std::uint64_t>(d.hi - d.lo + 1);
  return n;
}

bool TuneSpace::contains(const Assignment& a) const {
  if (a.size() != dims.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] < dims[i].lo || a[i] > dims[i].hi) return false;
  return true;
}

TuneBudget TuneBudget::for_space(const TuneSpace& space) {
  const auto n = static_cast<double>(space.non_task_size());
  return {std::max<std::uint64_t>(8, static_cast<std::uint64_t>(std::ceil(std::sqrt(n)))), false};
}

namespace {

class Search {
 public:
  Search(const TuneSpace& space, const Objective& objective, std::uint64_t max_evals, int repeats)
      : space_(space), objective_(objective), max_evals_(max_evals), repeats_(std::max(1, repeats)) {}

  bool exhausted() const { return result_.trials.size() >= max_evals_; }
  bool seen(const Assignment& a) const { return cache_.count(a) > 0; }

  // Returns the median seconds, +inf for infeasible points.
  double evaluate(const Assignment& a) {
    if (auto it = cache_.find(a); it != cache_.end()) return it->second;
    std::vector<double> samples;
    bool feasible = true;
    try {
      for (int k = 0; k < repeats_; ++k) samples.push_back(objective_(a));
      for (double s : samples) feasible &= std::isfinite(s);
    } catch (const std::exception&) {
      feasible = false;
    }
    double median = std::numeric_limits<double>::quiet_NaN();
    if (feasible) {
      std::sort(samples.begin(), samples.end());
      median = samples[samples.size() / 2];
    }
    result_.trials.push_back({a, median, feasible});
    const double score = feasible ? median : std::numeric_limits<double>::infinity();
    cache_[a] = score;
    if (feasible && (!have_best_ || median < result_.objective)) {
      have_best_ = true;
      result_.assignment = a;
      result_.objective = median;
    }
    return score;
  }

  bool have_best() const { return have_best_; }
  const Assignment& best() const { return result_.assignment; }
  const std::map<Assignment, double>& scores() const { return cache_; }
  TunedAllocation take() { return std::move(result_); }

 private:
  const TuneSpace& space_;
  const Objective& objective_;
  std::uint64_t max_evals_;
  int repeats_;
  std::map<Assignment, double> cache_;
  TunedAllocation result_;
  bool have_best_ = false;
};

std::uint64_t draw(std::mt19937_64& rng, std::uint64_t n) { return n <= 1 ? 0 : rng() % n; }

// Spaces up to this size are scanned whole when choosing a probe.
constexpr std::uint64_t kScanLimit = 4096;
// Latin-hypercube draws tried for a non-degenerate spread.
constexpr int kSpreadDraws = 16;

// Separable quadratic surrogate f = c + sum_i (a_i u_i^2 + b_i u_i), u_i being
// coordinate i scaled to [-1, 1]. Axes with two values carry no curvature
// term and single-valued axes no term at all.
struct Surrogate {
  const TuneSpace& space;
  std::vector<int> lin, quad;  // column per axis, -1 when absent
  std::size_t columns = 1;

  explicit Surrogate(const TuneSpace& s) : space(s), lin(s.dims.size(), -1), quad(s.dims.size(), -1) {
    for (std::size_t i = 0; i < s.dims.size(); ++i) {
      const int range = s.dims[i].hi - s.dims[i].lo;
      if (range >= 1) lin[i] = static_cast<int>(columns++);
      if (range >= 2) quad[i] = static_cast<int>(columns++);
    }
  }

  long double scaled(std::size_t i, int x) const {
    const auto& d = space.dims[i];
    const long double half = (d.hi - d.lo) / 2.0L;
    return half == 0 ? 0.0L : (x - (d.lo + d.hi) / 2.0L) / half;
  }

  std::vector<long double> features(const Assignment& a) const {
    std::vector<long double> r(columns, 0.0L);
    r[0] = 1.0L;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const long double u = scaled(i, a[i]);
      if (lin[i] >= 0) r[static_cast<std::size_t>(lin[i])] = u;
      if (quad[i] >= 0) r[static_cast<std::size_t>(quad[i])] = u * u;
    }
    return r;
  }

  std::vector<std::vector<long double>> rows(const std::map<Assignment, double>& scores) const {
    std::vector<std::vector<long double>> out;
    for (const auto& [a, y] : scores)
      if (std::isfinite(y)) out.push_back(features(a));
    return out;
  }

  // Least-squares minimizer over the integers, or nothing while the fit is
  // undetermined.
  std::optional<Assignment> argmin(const std::map<Assignment, double>& scores) const {
    const auto x = rows(scores);
    std::vector<long double> ys;
    for (const auto& [a, y] : scores)
      if (std::isfinite(y)) ys.push_back(y);
    const std::size_t np = columns;
    if (x.size() < np) return std::nullopt;

    // Normal equations, solved by Gauss-Jordan elimination with partial pivoting.
    std::vector<std::vector<long double>> m(np, std::vector<long double>(np + 1, 0.0L));
    for (std::size_t k = 0; k < x.size(); ++k)
      for (std::size_t i = 0; i < np; ++i) {
        for (std::size_t j = 0; j < np; ++j) m[i][j] += x[k][i] * x[k][j];
        m[i][np] += x[k][i] * ys[k];
      }
    long double scale = 0;
    for (std::size_t i = 0; i < np; ++i) scale = std::max(scale, std::fabs(m[i][i]));
    for (std::size_t c = 0; c < np; ++c) {
      std::size_t piv = c;
      for (std::size_t r = c + 1; r < np; ++r)
        if (std::fabs(m[r][c]) > std::fabs(m[piv][c])) piv = r;
      if (std::fabs(m[piv][c]) <= 1e-12L * scale) return std::nullopt;
      std::swap(m[c], m[piv]);
      for (std::size_t r = 0; r < np; ++r) {
        if (r == c) continue;
        const long double f = m[r][c] / m[c][c];
        for (std::size_t j = c; j <= np; ++j) m[r][j] -= f * m[c][j];
      }
    }
    auto coef = [&](int col) { return col < 0 ? 0.0L : m[static_cast<std::size_t>(col)][np] / m[static_cast<std::size_t>(col)][static_cast<std::size_t>(col)]; };

    // Separable: each coordinate minimizes its own quadratic over the integers.
    Assignment best(space.dims.size());
    for (std::size_t i = 0; i < space.dims.size(); ++i) {
      const long double a = coef(quad[i]), b = coef(lin[i]);
      long double lowest = std::numeric_limits<long double>::infinity();
      for (int v = space.dims[i].lo; v <= space.dims[i].hi; ++v) {
        const long double u = scaled(i, v), f = a * u * u + b * u;
        if (f < lowest) {
          lowest = f;
          best[i] = v;
        }
      }
    }
    return best;
  }
};

// Rank of a design matrix.
std::size_t design_rank(std::vector<std::vector<long double>> rows) {
  std::size_t rank = 0;
  const std::size_t cols = rows.empty() ? 0 : rows[0].size();
  for (std::size_t c = 0; c < cols && rank < rows.size(); ++c) {
    std::size_t piv = rank;
    for (std::size_t r = rank + 1; r < rows.size(); ++r)
      if (std::fabs(rows[r][c]) > std::fabs(rows[piv][c])) piv = r;
    if (std::fabs(rows[piv][c]) <= 1e-9L) continue;
    std::swap(rows[rank], rows[piv]);
    for (std::size_t r = rank + 1; r < rows.size(); ++r) {
      const long double f = rows[r][c] / rows[rank][c];
      for (std::size_t j = c; j < cols; ++j) rows[r][j] -= f * rows[rank][j];
    }
    ++rank;
  }
  return rank;
}

}  // namespace

TunedAllocation tune(const TuneSpace& space, const Objective& objective, const TuneBudget& budget,
                     std::uint64_t seed, int repeats) {
  space.validate();
  if (budget.max_evals < 1) fail(ErrorCode::config, "tune budget must allow at least one evaluation");
  Search search(space, objective, budget.max_evals, repeats);
  const std::size_t nd = space.dims.size();
  std::mt19937_64 rng(seed);

  if (space.size() <= budget.max_evals) {
    Assignment a(nd);
    for (std::size_t i = 0; i < nd; ++i) a[i] = space.dims[i].lo;
    for (;;) {
      search.evaluate(a);
      std::size_t i = nd;
      while (i > 0 && a[i - 1] == space.dims[i - 1].hi) {
        a[i - 1] = space.dims[i - 1].lo;
        --i;
      }
      if (i == 0) break;
      ++a[i - 1];
    }
  } else {
    // Latin-hypercube spread: one stratum per sample along every axis. Draws
    // whose points are degenerate for the surrogate are redrawn a few times.
    const Surrogate surrogate(space);
    const std::uint64_t spread = std::max<std::uint64_t>(1, budget.max_evals / 2);
    std::vector<Assignment> sample;
    std::size_t sample_rank = 0;
    for (int attempt = 0; attempt < kSpreadDraws; ++attempt) {
      std::vector<std::vector<int>> columns(nd);
      for (std::size_t i = 0; i < nd; ++i) {
        const auto& d = space.dims[i];
        const std::uint64_t range = static_cast<std::uint64_t>(d.hi - d.lo + 1);
        for (std::uint64_t k = 0; k < spread; ++k) {
          const std::uint64_t lo = k * range / spread, hi = std::max(lo + 1, (k + 1) * range / spread);
          columns[i].push_back(d.lo + static_cast<int>(lo + draw(rng, hi - lo)));
        }
        for (std::uint64_t k = spread; k > 1; --k) std::swap(columns[i][k - 1], columns[i][draw(rng, k)]);
      }
      std::vector<Assignment> points(spread, Assignment(nd));
      std::vector<std::vector<long double>> rows;
      for (std::uint64_t k = 0; k < spread; ++k) {
        for (std::size_t i = 0; i < nd; ++i) points[k][i] = columns[i][k];
        rows.push_back(surrogate.features(points[k]));
      }
      const std::size_t r = design_rank(std::move(rows));
      if (sample.empty() || r > sample_rank) {
        sample = std::move(points);
        sample_rank = r;
      }
      if (sample_rank >= std::min<std::uint64_t>(spread, surrogate.columns)) break;
    }
    for (const auto& a : sample) {
      if (search.exhausted()) break;
      search.evaluate(a);
    }

    // Refinement around the incumbent: jump to the minimizer of a separable
    // quadratic fit when it is new, otherwise take a coordinate step.
    std::vector<int> step(nd);
    for (std::size_t i = 0; i < nd; ++i) step[i] = std::max(1, (space.dims[i].hi - space.dims[i].lo + 1) / 4);
    std::size_t next_axis = 0;
    int max_range = 0;
    for (const auto& d : space.dims) max_range = std::max(max_range, d.hi - d.lo);
    while (!search.exhausted() && search.have_best()) {
      if (auto m = surrogate.argmin(search.scores()); m && !search.seen(*m)) {
        search.evaluate(*m);
        continue;
      }
      // Axes take turns; while the fit is undetermined, prefer a probe that
      // adds a new direction to it.
      const auto rows = surrogate.rows(search.scores());
      const std::size_t rank = design_rank(rows);
      const bool undetermined = rank < surrogate.columns;
      std::optional<Assignment> probe;
      for (;;) {
        std::optional<Assignment> fallback;
        std::size_t fallback_axis = 0;
        for (std::size_t k = 0; k < nd && !probe; ++k) {
          const std::size_t i = (next_axis + k) % nd;
          for (int dir : {+1, -1}) {
            Assignment a = search.best();
            a[i] = std::clamp(a[i] + dir * step[i], space.dims[i].lo, space.dims[i].hi);
            if (search.seen(a)) continue;
            auto grown = rows;
            grown.push_back(surrogate.features(a));
            if (!undetermined || design_rank(std::move(grown)) > rank) {
              probe = std::move(a);
              next_axis = (i + 1) % nd;
              break;
            }
            if (!fallback) {
              fallback = std::move(a);
              fallback_axis = i;
            }
          }
        }
        // Farther along the axis lines through the incumbent, nearest first.
        for (int dist = 1; undetermined && !probe && dist <= max_range; ++dist)
          for (std::size_t k = 0; k < nd && !probe; ++k) {
            const std::size_t i = (next_axis + k) % nd;
            for (int dir : {+1, -1}) {
              Assignment a = search.best();
              a[i] += dir * dist;
              if (a[i] < space.dims[i].lo || a[i] > space.dims[i].hi || search.seen(a)) continue;
              auto grown = rows;
              grown.push_back(surrogate.features(a));
              if (design_rank(std::move(grown)) > rank) {
                probe = std::move(a);
                next_axis = (i + 1) % nd;
                break;
              }
            }
          }
        // Small spaces: any unexplored point, nearest to the incumbent first.
        if (undetermined && !probe && space.size() <= kScanLimit) {
          std::uint64_t nearest = std::numeric_limits<std::uint64_t>::max();
          Assignment a(nd);
          for (std::size_t i = 0; i < nd; ++i) a[i] = space.dims[i].lo;
          for (;;) {
            std::uint64_t dist = 0;
            for (std::size_t i = 0; i < nd; ++i) dist += static_cast<std::uint64_t>(std::abs(a[i] - search.best()[i]));
            if (dist < nearest && !search.seen(a)) {
              auto grown = rows;
              grown.push_back(surrogate.features(a));
              if (design_rank(std::move(grown)) > rank) {
                nearest = dist;
                probe = a;
              }
            }
            std::size_t i = nd;
            while (i > 0 && a[i - 1] == space.dims[i - 1].hi) {
              a[i - 1] = space.dims[i - 1].lo;
              --i;
            }
            if (i == 0) break;
            ++a[i - 1];
          }
        }
        if (!probe && fallback) {
          probe = std::move(fallback);
          next_axis = (fallback_axis + 1) % nd;
        }
        if (probe || std::all_of(step.begin(), step.end(), [](int s) { return s == 1; })) break;
        for (auto& s : step) s = std::max(1, s / 2);
      }
      if (!probe) break;
      search.evaluate(*probe);
    }
    // Unused budget goes to unexplored random points.
    for (std::uint64_t guard = 0; !search.exhausted() && guard < 64 * budget.max_evals; ++guard) {
      Assignment a(nd);
      for (std::size_t i = 0; i < nd; ++i)
        a[i] = space.dims[i].lo + static_cast<int>(draw(rng, static_cast<std::uint64_t>(space.dims[i].hi - space.dims[i].lo + 1)));
      if (!search.seen(a)) search.evaluate(a);
    }
  }

  if (!search.have_best()) fail(ErrorCode::tuning, "every evaluated assignment was infeasible");
  return search.take();
}

Assignment aggregate_mode(std::span<const TunedAllocation> runs) {
  if (runs.empty()) fail(ErrorCode::invalid_argument, "aggregate_mode needs at least one allocation");
  struct Tally {
    std::uint64_t count = 0;
    double sum = 0.0;
  };
  std::map<Assignment, Tally> tally;
  for (const auto& r : runs) {
    auto& t = tally[r.assignment];
    ++t.count;
    t.sum += r.objective;
  }
  // std::map iterates lexicographically, so strict comparisons keep the smallest.
  const Assignment* best = nullptr;
  Tally best_t;
  for (const auto& [a, t] : tally) {
    const double mean = t.sum / static_cast<double>(t.count);
    const double best_mean = best ? best_t.sum / static_cast<double>(best_t.count) : 0.0;
    if (!best || t.count > best_t.count || (t.count == best_t.count && mean < best_mean)) {
      best = &a;
      best_t = t;
    }
  }
  return *best;
}

ThreadAlloc to_thread_alloc(const TuneSpace& space, const Assignment& a, ThreadAlloc base) {
  if (!space.contains(a)) fail(ErrorCode::invalid_argument, "assignment outside tune space");
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto v = static_cast<std::size_t>(a[i]);
    const auto& n = space.dims[i].name;
    if (n == "tasks") base.tasks = v;
    else if (n == "roi") base.roi = v;
    else if (n == "bin") base.bin = v;
    else if (n == "codec") base.codec = v;
    else if (n == "lossless") base.lossless = v;
  }
  return base;
}

Objective compress_objective(const BatchView& batch, const PeakList& peaks, const RoibinConfig& cfg,
                             const TuneSpace& space) {
  return [batch, &peaks, cfg, space](const Assignment& a) {
    RoibinConfig c = cfg;
    c.threads = to_thread_alloc(space, a, cfg.threads);
    c.measure_errors = false;
    const auto t0 = std::chrono::steady_clock::now();
    auto result = compress(batch, peaks, c);
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
}

std::string host_descriptor() {
  char name[256] = {};
  if (gethostname(name, sizeof(name) - 1) != 0) std::snprintf(name, sizeof(name), "unknown");
  return std::string(name) + "/" + std::to_string(std::thread::hardware_concurrency());
}

using nlohmann::json;

std::string tuning_to_json(const TuningRecord& record) {
  json j;
  j["version"] = 1;
  j["seed"] = record.seed;
  j["host"] = record.host;
  for (const auto& d : record.space.dims)
    j["space"].push_back({{"name", d.name}, {"lo", d.lo}, {"hi", d.hi}, {"task", d.is_task}});
  j["trials"] = json::array();
  for (const auto& t : record.result.trials)
    j["trials"].push_back({{"assignment", t.assignment},
                           {"seconds", t.feasible ? json(t.seconds) : json(nullptr)},
                           {"feasible", t.feasible}});
  j["winner"] = {{"assignment", record.result.assignment}, {"seconds", record.result.objective}};
  return j.dump(2);
}

TuningRecord tuning_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.at("version").get<int>() != 1) fail(ErrorCode::unsupported_version, "tuning record version");
    TuningRecord r;
    r.seed = j.at("seed").get<std::uint64_t>();
    r.host = j.at("host").get<std::string>();
    for (const auto& d : j.at("space"))
      r.space.dims.push_back({d.at("name").get<std::string>(), d.at("lo").get<int>(), d.at("hi").get<int>(),
                              d.at("task").get<bool>()});
    for (const auto& t : j.at("trials")) {
      Trial trial;
      trial.assignment = t.at("assignment").get<Assignment>();
      trial.feasible = t.at("feasible").get<bool>();
      trial.seconds = trial.feasible ? t.at("seconds").get<double>() : std::numeric_limits<double>::quiet_NaN();
      r.result.trials.push_back(std::move(trial));
    }
    r.result.assignment = j.at("winner").at("assignment").get<Assignment>();
    r.result.objective = j.at("winner").at("seconds").get<double>();
    r.space.validate();
    if (!r.space.contains(r.result.assignment)) fail(ErrorCode::invalid_argument, "tuning record winner outside space");
    return r;
  } catch (const json::exception& e) {
    fail(ErrorCode::invalid_argument, std::string("tuning record: ") + e.what());
  }
}

}  // namespace roibin
