#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "stsep/errors.hpp"
#include "stsep/io.hpp"
#include "stsep/permutation.hpp"
#include "stsep/rng.hpp"

using namespace stsep;

namespace {

std::string tmp_path(const std::string& name) {
  static const std::string dir = [] {
    auto d = std::filesystem::temp_directory_path() / "stsep_io_tests";
    std::filesystem::create_directories(d);
    return d.string();
  }();
  return dir + "/" + name;
}

// Message carried by a thrown data_error, or "" when nothing was thrown.
template <typename Fn>
std::string data_error_message(Fn&& fn) {
  try {
    fn();
  } catch (const data_error& e) {
    return e.what();
  }
  return "";
}

PointPattern uniform_pattern(const Window& w, int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<PointST> pts;
  const Rect& b = w.bounding_box();
  while (pts.size() < static_cast<std::size_t>(n)) {
    double x = rng.uniform(b.xmin, b.xmax);
    double y = rng.uniform(b.ymin, b.ymax);
    if (!w.contains(x, y)) continue;
    pts.push_back({x, y, rng.uniform(w.t0(), w.t1())});
  }
  return PointPattern(std::move(pts), w);
}

}  // namespace

TEST_CASE("shortest round-trip double formatting") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 12345.6789, 7.0, -2.5e17, 0.0}) {
    std::string s = format_double(v);
    CHECK(std::strtod(s.c_str(), nullptr) == v);
  }
  CHECK(format_double(7.0) == "7");
}

TEST_CASE("pattern csv round trip") {
  Window w = Window::rectangle(0, 2, 0, 1, 0, 3);
  PointPattern p = uniform_pattern(w, 40, 19);
  std::string path = tmp_path("pattern.csv");
  write_pattern_csv(p, path);
  PointPattern q = read_pattern_csv(path, w);
  REQUIRE(q.size() == p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    CHECK(q.points()[i].x == p.points()[i].x);
    CHECK(q.points()[i].y == p.points()[i].y);
    CHECK(q.points()[i].t == p.points()[i].t);
  }
  CHECK(read_text_file(path).substr(0, 6) == "x,y,t\n");
}

TEST_CASE("csv errors carry line numbers") {
  std::string bad = tmp_path("bad.csv");
  write_text_file(bad, "x,y,t\n0.5,0.5,0.5\n0.1,0.2\n");
  std::string msg = data_error_message([&] { read_points_csv(bad); });
  CHECK(msg.find("line 3") != std::string::npos);

  std::string head = tmp_path("head.csv");
  write_text_file(head, "x,y,z\n0.5,0.5,0.5\n");
  CHECK(data_error_message([&] { read_points_csv(head); }) != "");

  std::string nan = tmp_path("nan.csv");
  write_text_file(nan, "x,y,t\n0.5,nan,0.5\n");
  CHECK(data_error_message([&] { read_points_csv(nan); }) != "");

  std::string outside = tmp_path("outside.csv");
  write_text_file(outside, "x,y,t\n0.5,0.5,0.5\n1.5,0.5,0.5\n2.5,0.5,0.5\n");
  std::string omsg = data_error_message(
      [&] { read_pattern_csv(outside, Window::unit_cube()); });
  CHECK(omsg.find("3") != std::string::npos);
  CHECK(omsg.find("4") != std::string::npos);

  CHECK_THROWS_AS(read_points_csv(tmp_path("missing.csv")), data_error);
}

TEST_CASE("window files round trip") {
  std::string rp = tmp_path("rect.window");
  Window r = Window::rectangle(-1, 2, 0.5, 4, 10, 20);
  write_window(r, rp);
  Window r2 = read_window(rp);
  CHECK(r2.is_rectangle());
  CHECK(r2.bounding_box().xmin == -1.0);
  CHECK(r2.bounding_box().ymax == 4.0);
  CHECK(r2.t1() == 20.0);

  std::string pp = tmp_path("poly.window");
  Window p =
      Window::polygon({{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}}, 0, 5);
  write_window(p, pp);
  Window p2 = read_window(pp);
  CHECK(!p2.is_rectangle());
  CHECK(p2.area() == doctest::Approx(3.0));
  CHECK(p2.vertices().size() == 6);
  CHECK(p2.t1() == 5.0);

  std::string junk = tmp_path("junk.window");
  write_text_file(junk, "circle 0 0 1\n");
  CHECK_THROWS_AS(read_window(junk), data_error);
}

TEST_CASE("reconstruction config files") {
  std::string path = tmp_path("recon.cfg");
  ReconConfig cfg;
  cfg.w_k = 2.5;
  cfg.t_k = 9.0;
  cfg.k_max = 4;
  cfg.max_iter = 5000;
  write_recon_config(cfg, path);
  ReconConfig in = read_recon_config(path);
  CHECK(in.w_k == 2.5);
  CHECK(in.t_k == 9.0);
  CHECK(in.k_max == 4);
  CHECK(in.max_iter == 5000);
  CHECK(in.w_dk == cfg.w_dk);

  std::string partial = tmp_path("partial.cfg");
  write_text_file(partial, "# comment line\n\nw_k = 7\n");
  ReconConfig base;
  base.w_delta = 123.0;
  ReconConfig merged = read_recon_config(partial, base);
  CHECK(merged.w_k == 7.0);
  CHECK(merged.w_delta == 123.0);

  std::string unknown = tmp_path("unknown.cfg");
  write_text_file(unknown, "w_q = 7\n");
  CHECK_THROWS_AS(read_recon_config(unknown), data_error);
}

TEST_CASE("result json reserializes byte for byte") {
  PointPattern p = uniform_pattern(Window::unit_cube(), 40, 3);
  PermTestConfig cfg;
  cfg.statistic = Statistic::S;
  cfg.n_perm = 9;
  cfg.alpha = 0.2;
  cfg.nx = 8;
  cfg.ny = 8;
  cfg.nt = 5;
  cfg.seed = 11;
  MonteCarloTestResult res = run_permutation_test(p, cfg);
  std::string s1 = result_to_json(res);
  MonteCarloTestResult back = result_from_json(s1);
  std::string s2 = result_to_json(back);
  CHECK(s1 == s2);
  CHECK(back.p_value == res.p_value);
  CHECK(back.statistic == res.statistic);
  CHECK(back.n_perm == res.n_perm);
  CHECK(back.seed == res.seed);
  CHECK(back.grid_dims == res.grid_dims);
  CHECK(back.bandwidths.space == res.bandwidths.space);
  REQUIRE(back.envelope.has_value());
  CHECK(back.envelope->low == res.envelope->low);
  CHECK(back.envelope->upp == res.envelope->upp);
  CHECK(back.envelope->above == res.envelope->above);

  std::string path = tmp_path("result.json");
  write_result(res, path);
  MonteCarloTestResult file = read_result(path);
  CHECK(result_to_json(file) == s1);

  cfg.statistic = Statistic::SDev;
  MonteCarloTestResult dev = run_permutation_test(p, cfg);
  std::string d1 = result_to_json(dev);
  CHECK(result_to_json(result_from_json(d1)) == d1);
  CHECK(result_from_json(d1).deviation_stats == dev.deviation_stats);
}

TEST_CASE("grid csv export") {
  Grid3 g = build_grid(Window::unit_cube(), 3, 2, 2);
  Eigen::MatrixXd vals(6, 2);
  vals << 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12;
  std::string path = tmp_path("grid.csv");
  write_grid_csv(g, vals, path);
  std::string text = read_text_file(path);
  CHECK(text.substr(0, 12) == "x,y,t,value\n");
  int lines = 0;
  for (char c : text)
    if (c == '\n') ++lines;
  CHECK(lines == 1 + 12);
}

TEST_CASE("fnv1a digests") {
  CHECK(fnv1a64("", 0) == 0xcbf29ce484222325ull);
  CHECK(digest_string("a") == "af63dc4c8601ec8c");
  CHECK(digest_string("hello") == "a430d84680aabd0b");
  std::string path = tmp_path("digest.txt");
  write_text_file(path, "hello");
  CHECK(digest_file(path) == "a430d84680aabd0b");
  CHECK(digest_hex(0xcbf29ce484222325ull) == "cbf29ce484222325");
}

TEST_CASE("run manifest") {
  RunManifest m;
  m.command_line = "stsep test perm data.csv win.txt";
  m.config_digest = digest_string("cfg");
  m.seed = 42;
  m.input_digests = {{"data.csv", digest_string("abc")}};
  m.wall_seconds = 1.25;
  std::string json = manifest_to_json(m);
  CHECK(json.find("\"version\": \"0.1.0\"") != std::string::npos);
  CHECK(json.find("stsep test perm") != std::string::npos);
  CHECK(json.find("data.csv") != std::string::npos);
  CHECK(manifest_to_json(m) == json);
  std::string path = tmp_path("manifest.json");
  write_manifest(m, path);
  CHECK(read_text_file(path) == json);
}
