#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sys/wait.h>

#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out;
};

// Runs the CLI through the shell; stderr goes to err.txt in the work dir.
struct Workdir {
  fs::path dir;
  Workdir() {
    dir = fs::temp_directory_path() / ("roibin_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(dir);
  }
  ~Workdir() {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }
  std::string path(const std::string& name) const { return (dir / name).string(); }

  Run run(const std::string& args, const std::string& env = "") const {
    const std::string cmd = "cd '" + dir.string() + "' && " + env + " '" ROIBIN_CLI_PATH "' " + args + " 2>err.txt";
    FILE* p = ::popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    std::string out;
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, n);
    const int status = ::pclose(p);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
  }

  std::string err() const { return read_text("err.txt"); }

  std::vector<unsigned char> read(const std::string& name) const {
    std::ifstream in(path(name), std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  }
  std::string read_text(const std::string& name) const {
    const auto b = read(name);
    return {b.begin(), b.end()};
  }
  void write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name), std::ios::binary) << text;
  }
};

std::vector<float> floats(const std::vector<unsigned char>& b) {
  std::vector<float> v(b.size() / 4);
  std::memcpy(v.data(), b.data(), v.size() * 4);
  return v;
}

std::vector<float> u16_as_floats(const std::vector<unsigned char>& b) {
  std::vector<float> v(b.size() / 2);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<float>(b[2 * i] | b[2 * i + 1] << 8);
  return v;
}

const std::string kDims = "3,1,96,112";

void generate(const Workdir& w) {
  const auto r = w.run("generate --dims " + kDims + " --peaks-min 1 --peaks-max 3 --seed 4 --out in.raw --peaks-out in.csv");
  REQUIRE(r.code == 0);
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("lossless round trip through files") {
    Workdir w;
    generate(w);
    REQUIRE(w.run("compress in.raw --dims " + kDims + " --peaks in.csv --bin 1x1 --codec raw --out a.rbsz").code == 0);
    REQUIRE(w.run("decompress a.rbsz --out a.f32").code == 0);
    CHECK(floats(w.read("a.f32")) == u16_as_floats(w.read("in.raw")));
  }

  TEST_CASE("single event extraction") {
    Workdir w;
    generate(w);
    REQUIRE(w.run("compress in.raw --dims " + kDims + " --peaks in.csv --out a.rbsz").code == 0);
    REQUIRE(w.run("decompress a.rbsz --out all.f32").code == 0);
    REQUIRE(w.run("decompress a.rbsz --event 1 --out one.f32").code == 0);
    const auto all = floats(w.read("all.f32")), one = floats(w.read("one.f32"));
    REQUIRE(one.size() == 96u * 112);
    CHECK(std::equal(one.begin(), one.end(), all.begin() + 96 * 112));
    CHECK(w.run("decompress a.rbsz --event 3 --out x.f32").code == 3);
  }

  TEST_CASE("report on stdout") {
    Workdir w;
    generate(w);
    const auto r = w.run("compress in.raw --dims " + kDims + " --peaks in.csv --out a.rbsz --report - --measure-errors");
    REQUIRE(r.code == 0);
    const auto j = json::parse(r.out);
    CHECK(j["compressed_bytes"].get<std::size_t>() == w.read("a.rbsz").size());
    CHECK(j["max_binned_error"].get<double>() <= 90.0);
  }

  TEST_CASE("missing dims is a usage error") {
    Workdir w;
    generate(w);
    const auto r = w.run("compress in.raw --out a.rbsz");
    CHECK(r.code == 2);
    CHECK(r.out.empty());
    CHECK(w.err().find("--dims") != std::string::npos);
    CHECK(w.run("no-such-command").code == 2);
    CHECK(w.run("compress in.raw --dims 1,2,3 --out a.rbsz").code == 2);
  }

  TEST_CASE("relative bound on constant data is a data error") {
    Workdir w;
    w.write("flat.raw", std::string(2 * 4 * 32 * 32, '\x05'));
    const auto r = w.run("compress flat.raw --dims 4,1,32,32 --rel-error 1e-3 --out c.rbsz");
    CHECK(r.code == 3);
    CHECK(w.err().find("value range is zero") != std::string::npos);
  }

  TEST_CASE("io errors") {
    Workdir w;
    CHECK(w.run("decompress missing.rbsz --out x.f32").code == 4);
    CHECK(w.run("info missing.rbsz").code == 4);
  }

  TEST_CASE("corrupt container is a data error") {
    Workdir w;
    generate(w);
    REQUIRE(w.run("compress in.raw --dims " + kDims + " --peaks in.csv --out a.rbsz").code == 0);
    auto bytes = w.read("a.rbsz");
    bytes[bytes.size() / 2] ^= 0xff;
    w.write("bad.rbsz", std::string(bytes.begin(), bytes.end()));
    CHECK(w.run("decompress bad.rbsz --out x.f32").code == 3);
  }

  TEST_CASE("compression is deterministic") {
    Workdir w;
    generate(w);
    REQUIRE(w.run("compress in.raw --dims " + kDims + " --peaks in.csv --out a.rbsz").code == 0);
    REQUIRE(w.run("compress in.raw --dims " + kDims + " --peaks in.csv --threads 3 --out b.rbsz").code == 0);
    CHECK(w.read("a.rbsz") == w.read("b.rbsz"));
  }

  TEST_CASE("container input recompresses with its own anchors") {
    Workdir w;
    generate(w);
    REQUIRE(w.run("compress in.raw --dims " + kDims + " --peaks in.csv --bin 1x1 --codec deflate:6 --out a.rbsz").code == 0);
    REQUIRE(w.run("compress a.rbsz --bin 1x1 --codec raw --out b.rbsz").code == 0);
    REQUIRE(w.run("decompress b.rbsz --out b.f32").code == 0);
    CHECK(floats(w.read("b.f32")) == u16_as_floats(w.read("in.raw")));
    const auto info = json::parse(w.run("info b.rbsz").out);
    CHECK(info["peaks"] == json::parse(w.run("info a.rbsz").out)["peaks"]);
  }

  TEST_CASE("settings precedence") {
    Workdir w;
    generate(w);
    w.write("cfg.toml", "# settings\n[bin]\nrows = 3\ncols = 3\n[background]\nabs_error = \"45\"\n");
    const std::string base = "compress in.raw --dims " + kDims + " --peaks in.csv --out a.rbsz --report -";
    auto cfg = [](const Run& r) { return json::parse(r.out)["config"]; };

    auto c = cfg(w.run(base, "ROIBIN_BIN=2x1"));
    CHECK(c["bin"]["rows"] == 2);
    CHECK(c["bin"]["cols"] == 1);
    c = cfg(w.run(base + " --config cfg.toml", "ROIBIN_BIN=2x1"));
    CHECK(c["bin"]["rows"] == 3);
    CHECK(c["background"] == "pq:abs:45:3");
    c = cfg(w.run(base + " --config cfg.toml --bin 1x2", "ROIBIN_BIN=2x1"));
    CHECK(c["bin"]["rows"] == 1);
    CHECK(c["bin"]["cols"] == 2);
    CHECK(w.run(base, "ROIBIN_ROI_WINDOW=4").code == 2);
  }

  TEST_CASE("non-hit rejection is reported apart from the ratio") {
    Workdir w;
    w.write("p.csv", "event,panel,row,col\n0,0,10,10\n2,0,40,40\n2,0,60,60\n");
    REQUIRE(w.run("generate --dims " + kDims + " --peaks-max 0 --out z.raw").code == 0);
    const auto r = w.run("compress z.raw --dims " + kDims + " --peaks p.csv --nhr 2 --out a.rbsz --report -");
    REQUIRE(r.code == 0);
    const auto j = json::parse(r.out);
    CHECK(j["nhr"]["events_kept"] == 1);
    CHECK(j["nhr"]["ratio"].get<double>() == doctest::Approx(3.0));
    CHECK(j["raw_bytes"] == 96 * 112 * 2);
  }

  TEST_CASE("metrics of identical files") {
    Workdir w;
    w.write("a.txt", "h,k,l,I\n1,0,0,10.5\n0,1,0,20\n0,0,1,33\n1,1,0,7\n");
    const auto r = w.run("metrics a.txt a.txt");
    REQUIRE(r.code == 0);
    const auto j = json::parse(r.out);
    CHECK(j["rsplit"].get<double>() == 0.0);
    CHECK(j["cc_half"].get<double>() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(j["n"] == 4);
  }

  TEST_CASE("grid emits the one-at-a-time table") {
    Workdir w;
    const auto r = w.run("grid --dims 2,1,128,128 --peaks-per-event 4");
    REQUIRE(r.code == 0);
    CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 10);
    CHECK(r.out.rfind("axis,binning,tolerance,dims,cr,compressed_bytes\n", 0) == 0);
    const auto f = w.run("grid --dims 2,1,128,128 --peaks-per-event 4 --factorial --json");
    REQUIRE(f.code == 0);
    CHECK(json::parse(f.out).size() == 27);
  }

  TEST_CASE("tune writes and reuses a cache") {
    Workdir w;
    generate(w);
    const std::string args = "tune in.raw --dims " + kDims + " --peaks in.csv --tune-cache t.json --space tasks=1:1,codec=1:1";
    const auto first = w.run(args);
    REQUIRE(first.code == 0);
    const auto record = json::parse(w.read_text("t.json"));
    CHECK(record["trials"].size() == 1);
    CHECK(record["winner"]["assignment"] == json::array({1, 1}));
    const auto second = w.run(args);
    REQUIRE(second.code == 0);
    CHECK(w.err().find("reusing") != std::string::npos);
    CHECK(json::parse(w.read_text("t.json")) == record);
    REQUIRE(w.run(args + " --force").code == 0);
    CHECK(w.err().find("reusing") == std::string::npos);
    CHECK(w.run("compress in.raw --dims " + kDims + " --peaks in.csv --tune-cache t.json --out a.rbsz").code == 0);
    CHECK(w.run("tune in.raw --dims " + kDims + " --tune-cache u.json --space tasks=1").code == 2);
  }

  TEST_CASE("peaks subcommand finds planted spots") {
    Workdir w;
    generate(w);
    const auto r = w.run("peaks in.raw --dims " + kDims + " --member-floor 47");
    REQUIRE(r.code == 0);
    CHECK(std::count(r.out.begin(), r.out.end(), '\n') >= 2);
  }
}
