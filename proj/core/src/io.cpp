#include "stsep/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "stsep/errors.hpp"
#include "stsep/stats.hpp"

namespace stsep {

namespace {

using nlohmann::json;

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

std::string trim(const std::string& s) {
  const std::size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return {};
  const std::size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

// Whole-string double parse; rejects partial matches and non-finite values.
bool parse_double(const std::string& s, double& out) {
  const char* b = s.data();
  const char* e = b + s.size();
  const auto res = std::from_chars(b, e, out);
  return res.ec == std::errc() && res.ptr == e && std::isfinite(out);
}

bool parse_long(const std::string& s, long& out) {
  const char* b = s.data();
  const char* e = b + s.size();
  const auto res = std::from_chars(b, e, out);
  return res.ec == std::errc() && res.ptr == e;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string::npos) {
      parts.push_back(s.substr(start));
      return parts;
    }
    parts.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

json envelope_to_json(const EnvelopeResult& e) {
  json j;
  j["data"] = e.data;
  j["low"] = e.low;
  j["upp"] = e.upp;
  j["exit_codes"] = e.exit_codes();
  j["m_alpha"] = e.m_alpha;
  return j;
}

}  // namespace

std::string format_double(double v) {
  std::array<char, 32> buf;
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write " + path);
  out << text;
  if (!out) throw data_error("write failed: " + path);
}

std::vector<PointST> read_points_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw data_error("empty pattern file: " + path);
  strip_cr(line);
  if (line != "x,y,t")
    throw data_error(path + ": expected header \"x,y,t\"");

  std::vector<PointST> pts;
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    const std::vector<std::string> parts = split(line, ',');
    PointST p;
    if (parts.size() != 3 || !parse_double(parts[0], p.x) ||
        !parse_double(parts[1], p.y) || !parse_double(parts[2], p.t))
      throw data_error(path + ": malformed line " + std::to_string(lineno));
    pts.push_back(p);
  }
  return pts;
}

PointPattern read_pattern_csv(const std::string& path, const Window& w) {
  std::vector<PointST> pts = read_points_csv(path);
  std::string offenders;
  long outside = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (w.contains(pts[i])) continue;
    ++outside;
    if (outside <= 10) offenders += " " + std::to_string(i + 2);
  }
  if (outside > 0)
    throw data_error(path + ": " + std::to_string(outside) +
                     " points outside window (lines" + offenders +
                     (outside > 10 ? " ...)" : ")"));
  return PointPattern(std::move(pts), w);
}

void write_pattern_csv(const PointPattern& p, const std::string& path) {
  std::string text = "x,y,t\n";
  for (const PointST& q : p.points()) {
    text += format_double(q.x);
    text += ',';
    text += format_double(q.y);
    text += ',';
    text += format_double(q.t);
    text += '\n';
  }
  write_text_file(path, text);
}

Window read_window(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw data_error("empty window file: " + path);
  strip_cr(line);
  std::istringstream head(line);
  std::string kind;
  head >> kind;
  if (kind == "rect") {
    double xmin, xmax, ymin, ymax, t0, t1;
    if (!(head >> xmin >> xmax >> ymin >> ymax >> t0 >> t1))
      throw data_error(path + ": malformed rect window line");
    return Window::rectangle(xmin, xmax, ymin, ymax, t0, t1);
  }
  if (kind == "poly") {
    double t0, t1;
    if (!(head >> t0 >> t1))
      throw data_error(path + ": malformed poly window line");
    std::vector<Point2> vs;
    long lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      strip_cr(line);
      if (trim(line).empty()) continue;
      std::istringstream row(line);
      Point2 v;
      if (!(row >> v.x >> v.y))
        throw data_error(path + ": malformed vertex at line " +
                         std::to_string(lineno));
      vs.push_back(v);
    }
    return Window::polygon(std::move(vs), t0, t1);
  }
  throw data_error(path + ": unknown window kind \"" + kind + "\"");
}

void write_window(const Window& w, const std::string& path) {
  std::string text;
  if (w.is_rectangle()) {
    const Rect& b = w.bounding_box();
    text = "rect " + format_double(b.xmin) + " " + format_double(b.xmax) +
           " " + format_double(b.ymin) + " " + format_double(b.ymax) + " " +
           format_double(w.t0()) + " " + format_double(w.t1()) + "\n";
  } else {
    text = "poly " + format_double(w.t0()) + " " + format_double(w.t1()) +
           "\n";
    for (const Point2& v : w.vertices())
      text += format_double(v.x) + " " + format_double(v.y) + "\n";
  }
  write_text_file(path, text);
}

ReconConfig read_recon_config(const std::string& path,
                              const ReconConfig& base) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open " + path);
  ReconConfig cfg = base;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    const std::string body = trim(line);
    if (body.empty() || body[0] == '#') continue;
    const std::size_t eq = body.find('=');
    if (eq == std::string::npos)
      throw data_error(path + ": expected key = value at line " +
                       std::to_string(lineno));
    const std::string key = trim(body.substr(0, eq));
    const std::string val = trim(body.substr(eq + 1));
    const auto bad = [&]() {
      return data_error(path + ": bad value for " + key + " at line " +
                        std::to_string(lineno));
    };
    double d = 0.0;
    long l = 0;
    if (key == "w_k") {
      if (!parse_double(val, d)) throw bad();
      cfg.w_k = d;
    } else if (key == "w_dk") {
      if (!parse_double(val, d)) throw bad();
      cfg.w_dk = d;
    } else if (key == "w_delta") {
      if (!parse_double(val, d)) throw bad();
      cfg.w_delta = d;
    } else if (key == "t_k") {
      if (!parse_double(val, d)) throw bad();
      cfg.t_k = d;
    } else if (key == "r_k") {
      if (!parse_double(val, d)) throw bad();
      cfg.r_k = d;
    } else if (key == "t_d") {
      if (!parse_double(val, d)) throw bad();
      cfg.t_d = d;
    } else if (key == "r_d") {
      if (!parse_double(val, d)) throw bad();
      cfg.r_d = d;
    } else if (key == "k_max") {
      if (!parse_long(val, l)) throw bad();
      cfg.k_max = static_cast<int>(l);
    } else if (key == "max_iter") {
      if (!parse_long(val, l)) throw bad();
      cfg.max_iter = l;
    } else if (key == "max_consecutive_rejects") {
      if (!parse_long(val, l)) throw bad();
      cfg.max_consecutive_rejects = static_cast<int>(l);
    } else {
      throw data_error(path + ": unknown config key \"" + key +
                       "\" at line " + std::to_string(lineno));
    }
  }
  return cfg;
}

void write_recon_config(const ReconConfig& cfg, const std::string& path) {
  std::string text;
  text += "w_k = " + format_double(cfg.w_k) + "\n";
  text += "w_dk = " + format_double(cfg.w_dk) + "\n";
  text += "w_delta = " + format_double(cfg.w_delta) + "\n";
  text += "t_k = " + format_double(cfg.t_k) + "\n";
  text += "r_k = " + format_double(cfg.r_k) + "\n";
  text += "t_d = " + format_double(cfg.t_d) + "\n";
  text += "r_d = " + format_double(cfg.r_d) + "\n";
  text += "k_max = " + std::to_string(cfg.k_max) + "\n";
  text += "max_iter = " + std::to_string(cfg.max_iter) + "\n";
  text += "max_consecutive_rejects = " +
          std::to_string(cfg.max_consecutive_rejects) + "\n";
  write_text_file(path, text);
}

std::string result_to_json(const MonteCarloTestResult& r) {
  json j;
  j["alpha"] = r.alpha;
  j["bandwidths"] = {{"space", r.bandwidths.space}, {"time", r.bandwidths.time}};
  j["grid"] = r.grid_dims;
  j["n_perm"] = r.n_perm;
  j["p_value"] = r.p_value;
  j["seed"] = r.seed;
  j["statistic"] = statistic_name(r.statistic);
  j["support"] = {{"t", r.data_sample.t},
                  {"x", r.data_sample.x},
                  {"y", r.data_sample.y}};
  if (r.envelope) j["envelope"] = envelope_to_json(*r.envelope);
  if (!r.deviation_stats.empty()) j["deviation_stats"] = r.deviation_stats;
  return j.dump(2) + "\n";
}

MonteCarloTestResult result_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw data_error(std::string("result parse error: ") + e.what());
  }
  try {
    MonteCarloTestResult r;
    r.alpha = j.at("alpha").get<double>();
    r.bandwidths.space = j.at("bandwidths").at("space").get<double>();
    r.bandwidths.time = j.at("bandwidths").at("time").get<double>();
    const auto grid = j.at("grid");
    for (int k = 0; k < 3; ++k) r.grid_dims[k] = grid.at(k).get<int>();
    r.n_perm = j.at("n_perm").get<int>();
    r.p_value = j.at("p_value").get<double>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.statistic = statistic_from_name(j.at("statistic").get<std::string>());
    r.data_sample.stat = r.statistic;
    r.data_sample.t = j.at("support").at("t").get<std::vector<double>>();
    r.data_sample.x = j.at("support").at("x").get<std::vector<double>>();
    r.data_sample.y = j.at("support").at("y").get<std::vector<double>>();
    if (j.contains("envelope")) {
      const auto& je = j.at("envelope");
      EnvelopeResult e;
      e.data = je.at("data").get<std::vector<double>>();
      e.low = je.at("low").get<std::vector<double>>();
      e.upp = je.at("upp").get<std::vector<double>>();
      e.m_alpha = je.at("m_alpha").get<double>();
      e.p_value = r.p_value;
      e.alpha = r.alpha;
      const auto codes = je.at("exit_codes").get<std::vector<int>>();
      e.above.assign(codes.size(), 0);
      e.below.assign(codes.size(), 0);
      for (std::size_t i = 0; i < codes.size(); ++i) {
        if (codes[i] > 0) e.above[i] = 1;
        if (codes[i] < 0) e.below[i] = 1;
      }
      r.envelope = std::move(e);
      r.data_sample.values = r.envelope->data;
    }
    if (j.contains("deviation_stats")) {
      r.deviation_stats =
          j.at("deviation_stats").get<std::vector<double>>();
      if (!r.deviation_stats.empty())
        r.data_sample.values = {r.deviation_stats.front()};
    }
    return r;
  } catch (const json::exception& e) {
    throw data_error(std::string("result field error: ") + e.what());
  }
}

void write_result(const MonteCarloTestResult& r, const std::string& path) {
  write_text_file(path, result_to_json(r));
}

MonteCarloTestResult read_result(const std::string& path) {
  return result_from_json(read_text_file(path));
}

void write_grid_csv(const Grid3& grid, const Eigen::MatrixXd& values,
                    const std::string& path) {
  if (values.rows() != grid.spatial_cells() || values.cols() != grid.nt)
    throw data_error("grid shape mismatch");
  std::string text = "x,y,t,value\n";
  for (int it = 0; it < grid.nt; ++it)
    for (int iy = 0; iy < grid.ny; ++iy)
      for (int ix = 0; ix < grid.nx; ++ix) {
        text += format_double(grid.xs[ix]);
        text += ',';
        text += format_double(grid.ys[iy]);
        text += ',';
        text += format_double(grid.ts[it]);
        text += ',';
        text += format_double(values(grid.spatial_index(ix, iy), it));
        text += '\n';
      }
  write_text_file(path, text);
}

std::uint64_t fnv1a64(const void* data, std::size_t n) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 14695981039346656037ull;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

std::string digest_hex(std::uint64_t h) {
  static const char* hex = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = hex[h & 0xf];
    h >>= 4;
  }
  return s;
}

std::string digest_string(const std::string& s) {
  return digest_hex(fnv1a64(s.data(), s.size()));
}

std::string digest_file(const std::string& path) {
  return digest_string(read_text_file(path));
}

std::string manifest_to_json(const RunManifest& m) {
  json j;
  j["command"] = m.command_line;
  j["config_digest"] = m.config_digest;
  json inputs = json::object();
  for (const auto& [path, dig] : m.input_digests) inputs[path] = dig;
  j["inputs"] = inputs;
  j["seed"] = m.seed;
  j["version"] = m.version;
  j["wall_seconds"] = m.wall_seconds;
  return j.dump(2) + "\n";
}

void write_manifest(const RunManifest& m, const std::string& path) {
  write_text_file(path, manifest_to_json(m));
}

}  // namespace stsep
