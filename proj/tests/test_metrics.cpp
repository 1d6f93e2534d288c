#include "doctest.h"
#include "helpers.hpp"
#include "oracles.hpp"
#include "roibin/metrics.hpp"

using namespace roibin;
using testing::error_of;

namespace {

bool rel_close(double got, long double want, double tol) {
  return std::fabs(static_cast<long double>(got) - want) <= tol * std::max(std::fabs(want), 1e-300L);
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("compression ratio") {
    CHECK(compression_ratio(200, 100) == 2.0);
    CHECK(compression_ratio(2, 4) == 0.5);
    CHECK(error_of([] { compression_ratio(10, 0); }) == ErrorCode::undefined_ratio);
  }

  TEST_CASE("psnr") {
    const std::vector<float> a{0, 2}, b{0, 1};
    CHECK(psnr(a, b) == doctest::Approx(9.031).epsilon(1e-4));
    CHECK(std::isinf(psnr(a, a)));
    CHECK(psnr(a, a) > 0);
    std::vector<double> o{1, 5, 3, 9}, r;
    for (double v : o) r.push_back(v + 0.25);
    CHECK(psnr(std::span<const double>(o), r) == doctest::Approx(20 * std::log10(8 / 0.25)));
    CHECK(error_of([&] { psnr(a, std::vector<float>{1}); }) == ErrorCode::size);
  }

  TEST_CASE("psnr falls as the error grows") {
    const std::vector<double> o{0, 1, 2, 3, 10};
    double last = std::numeric_limits<double>::infinity();
    for (double c : {0.01, 0.1, 1.0, 3.0}) {
      std::vector<double> r;
      for (double v : o) r.push_back(v + c);
      const double p = psnr(std::span<const double>(o), r);
      CHECK(p < last);
      last = p;
    }
  }

  TEST_CASE("mpe") {
    const std::vector<double> o{100}, r{90};
    CHECK(*mpe(o, r) == doctest::Approx(10.0));
    CHECK(*mpe(o, o) == 0.0);
    CHECK_FALSE(mpe(std::vector<double>{0}, std::vector<double>{5}).has_value());
  }

  TEST_CASE("rsplit") {
    PairedIntensities same{{1, 2, 3}, {1, 2, 3}};
    CHECK(rsplit(same, 1.0) == 0.0);
    PairedIntensities p{{2}, {1}};
    CHECK(rsplit(p, 1.0) == doctest::Approx(0.4714).epsilon(1e-4));
    PairedIntensities doubled{{2, 4, 6}, {1, 2, 3}};
    CHECK(least_squares_scale(doubled) == doctest::Approx(2.0));
    CHECK(rsplit(doubled) == doctest::Approx(0.0));
    PairedIntensities q{{3, 1, 7}, {2, 2, 5}}, q5{{15, 5, 35}, {10, 10, 25}};
    CHECK(rsplit(q5, 1.3) == doctest::Approx(rsplit(q, 1.3)));
    CHECK(error_of([] { rsplit(PairedIntensities{{1}, {-1}}, 1.0); }) == ErrorCode::undefined_ratio);
  }

  TEST_CASE("cc half") {
    PairedIntensities p{{1, 2, 3}, {1, 2, 4}};
    CHECK(cc_half(p) == doctest::Approx(0.982).epsilon(1e-3));
    CHECK(cc_half(PairedIntensities{{1, 5, 2}, {1, 5, 2}}) == doctest::Approx(1.0));
    CHECK(cc_half(PairedIntensities{{1, 5, 2}, {-1, -5, -2}}) == doctest::Approx(-1.0));
    CHECK(cc_half(PairedIntensities{{7, 11, 3}, {1, 2, 4}}) ==
          doctest::Approx(cc_half(PairedIntensities{{17, 25, 9}, {1, 2, 4}})));
    CHECK(error_of([] { cc_half(PairedIntensities{{1, 1}, {1, 2}}); }).has_value());
  }

  TEST_CASE("r factor") {
    const std::vector<double> o{10}, c{8}, n{-10};
    CHECK(r_factor(o, c) == doctest::Approx(0.2));
    CHECK(r_factor(o, o) == 0.0);
    CHECK(r_factor(o, n) == 0.0);
    CHECK(error_of([] { r_factor(std::vector<double>{0}, std::vector<double>{1}); }).has_value());
  }

  TEST_CASE("max errors") {
    const std::vector<float> a{1, 2, 3}, b{1, 2.5f, 3};
    CHECK(max_errors(a, a).max_abs == 0.0);
    CHECK(max_errors(a, a).index == 0);
    CHECK(max_errors(a, b).max_abs == 0.5);
    CHECK(max_errors(a, b).index == 1);
    std::mt19937_64 rng(1);
    const auto x = testing::random_floats(rng, 500, -10, 10), y = testing::random_floats(rng, 500, -10, 10);
    double m = -1;
    std::size_t at = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (std::fabs(double(x[i]) - y[i]) > m) m = std::fabs(double(x[i]) - y[i]), at = i;
    CHECK(max_errors(x, y).max_abs == m);
    CHECK(max_errors(x, y).index == at);
  }

  TEST_CASE("high-precision references on random arrays") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t n = 2 + rng() % 300;
      std::uniform_real_distribution<double> d(0.5, 1e4);
      std::vector<double> a(n), b(n);
      for (std::size_t i = 0; i < n; ++i) {
        a[i] = d(rng);
        b[i] = a[i] * (0.8 + 0.4 * std::uniform_real_distribution<double>(0, 1)(rng));
      }
      PairedIntensities p{a, b};
      CHECK(rel_close(least_squares_scale(p), oracle::ls_scale(a, b), 1e-9));
      CHECK(rel_close(rsplit(p), oracle::rsplit(a, b, oracle::ls_scale(a, b)), 1e-9));
      CHECK(rel_close(rsplit(p, 1.0), oracle::rsplit(a, b, 1.0L), 1e-9));
      CHECK(rel_close(cc_half(p), oracle::pearson(a, b), 1e-9));
      CHECK(rel_close(r_factor(a, b), oracle::r_factor(a, b), 1e-9));
      CHECK(rel_close(psnr(std::span<const double>(a), b), oracle::psnr(a, b), 1e-9));
      CHECK(rel_close(*mpe(a, b), *oracle::mpe(a, b, 1e-6), 1e-9));
    }
  }

  TEST_CASE("value columns") {
    CHECK(read_value_column("intensity\n1.5\n# note\n2\n\n-3e2\n") == std::vector<double>{1.5, 2, -300});
    CHECK(read_value_column("h,k,l,I\n1,0,0,12.5\n") == std::vector<double>{12.5});
    CHECK(error_of([] { read_value_column("1\nabc\n"); }).has_value());
  }
}
