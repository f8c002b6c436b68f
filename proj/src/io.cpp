#include "plume/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "plume/experiment.hpp"

namespace plume {

namespace {

// Line reader that strips '#' comments and blank lines and tracks line numbers
// for error messages.
class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  bool next(std::istringstream& fields) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      fields.clear();
      fields.str(line);
      return true;
    }
    return false;
  }

  std::istringstream require(const char* what) {
    std::istringstream fields;
    if (!next(fields)) fail(std::string("unexpected end of input, expected ") + what);
    return fields;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw IoError("line " + std::to_string(line_no_) + ": " + msg);
  }

  // Parse exactly N whitespace-separated doubles (accepting "nan").
  template <std::size_t N>
  std::array<double, N> numbers(std::istringstream& fields, const char* what) {
    std::array<double, N> out{};
    for (auto& v : out) {
      std::string tok;
      if (!(fields >> tok)) fail(std::string("too few values in ") + what);
      v = to_double(tok, what);
    }
    std::string extra;
    if (fields >> extra) fail(std::string("trailing data in ") + what + ": '" + extra + "'");
    return out;
  }

  double to_double(const std::string& tok, const char* what) const {
    try {
      std::size_t used = 0;
      double v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      return v;
    } catch (const std::out_of_range&) {
      fail(std::string("value out of range in ") + what + ": '" + tok + "'");
    } catch (const std::invalid_argument&) {
      fail(std::string("not a number in ") + what + ": '" + tok + "'");
    }
  }

  std::size_t header(const char* keyword) {
    auto fields = require(keyword);
    std::string kw;
    long long count = -1;
    fields >> kw >> count;
    if (kw != keyword || !fields || count < 0) fail(std::string("expected '") + keyword + " <count>'");
    return static_cast<std::size_t>(count);
  }

 private:
  std::istream& in_;
  std::size_t line_no_ = 0;
};

std::size_t as_index(double v, LineReader& r, const char* what) {
  if (!(v >= 0) || v != std::floor(v) || v > 1e15) r.fail(std::string("bad index in ") + what);
  return static_cast<std::size_t>(v);
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

template <class Fn>
void write_file(const std::filesystem::path& path, Fn&& fn) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  fn(out);
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// --- mesh -------------------------------------------------------------------

TriMesh parse_mesh(std::istream& in) {
  LineReader r(in);
  const std::size_t c = r.header("nodes");
  std::vector<Point2> nodes(c);
  for (auto& p : nodes) {
    auto f = r.require("node coordinates");
    auto [x, y] = r.numbers<2>(f, "node line");
    if (!std::isfinite(x) || !std::isfinite(y)) r.fail("non-finite node coordinate");
    p = {x, y};
  }
  const std::size_t e = r.header("elements");
  std::vector<Triangle> elements(e);
  for (auto& t : elements) {
    auto f = r.require("element indices");
    auto v = r.numbers<3>(f, "element line");
    t = {as_index(v[0], r, "element"), as_index(v[1], r, "element"), as_index(v[2], r, "element")};
  }
  std::istringstream extra;
  if (r.next(extra)) r.fail("unexpected data after the element block");
  try {
    return TriMesh(std::move(nodes), std::move(elements));
  } catch (const MeshError& err) {
    throw MeshError(std::string("invalid mesh: ") + err.what());
  }
}

void write_mesh(std::ostream& out, const TriMesh& mesh) {
  out << "nodes " << mesh.node_count() << '\n';
  for (const auto& p : mesh.nodes()) out << format_double(p.x) << ' ' << format_double(p.y) << '\n';
  out << "elements " << mesh.element_count() << '\n';
  for (const auto& t : mesh.elements()) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

TriMesh read_mesh_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_mesh(in);
}

void write_mesh_file(const std::filesystem::path& path, const TriMesh& mesh) {
  write_file(path, [&](std::ostream& out) { write_mesh(out, mesh); });
}

// --- flow -------------------------------------------------------------------

GriddedFlow parse_flow(std::istream& in) {
  LineReader r(in);
  auto head = r.require("grid header");
  std::string kw;
  long long nx = -1, ny = -1, nt = -1;
  head >> kw >> nx >> ny >> nt;
  if (kw != "grid" || !head || nx < 2 || ny < 2 || nt < 1) r.fail("expected 'grid nx ny nt' with nx, ny >= 2, nt >= 1");

  GriddedFlow flow;
  auto axis = [&](const char* label, long long n, std::vector<double>& dst) {
    auto f = r.require(label);
    std::string tag;
    f >> tag;
    if (tag != label) r.fail(std::string("expected '") + label + "' axis line");
    std::string tok;
    while (f >> tok) dst.push_back(r.to_double(tok, label));
    if (static_cast<long long>(dst.size()) != n) r.fail(std::string("wrong number of values on ") + label);
  };
  axis("xs:", nx, flow.xs);
  axis("ys:", ny, flow.ys);
  axis("ts:", nt, flow.ts);

  const auto total = static_cast<std::size_t>(nx * ny * nt);
  flow.u.resize(total);
  flow.v.resize(total);
  flow.mask.resize(total);
  for (std::size_t i = 0; i < total; ++i) {
    auto f = r.require("velocity sample");
    auto [u, v] = r.numbers<2>(f, "velocity line");
    const bool land = std::isnan(u) || std::isnan(v);
    if (land && !(std::isnan(u) && std::isnan(v))) r.fail("half-masked velocity sample");
    if (!land && (!std::isfinite(u) || !std::isfinite(v))) r.fail("infinite velocity sample");
    flow.mask[i] = land;
    flow.u[i] = land ? 0.0 : u;
    flow.v[i] = land ? 0.0 : v;
  }
  std::istringstream extra;
  if (r.next(extra)) r.fail("unexpected data after the velocity block");
  try {
    flow.validate();
  } catch (const std::invalid_argument& err) {
    throw IoError(std::string("invalid flow grid: ") + err.what());
  }
  return flow;
}

void write_flow(std::ostream& out, const GriddedFlow& flow) {
  out << "grid " << flow.nx() << ' ' << flow.ny() << ' ' << flow.nt() << '\n';
  auto axis = [&](const char* label, const std::vector<double>& values) {
    out << label;
    for (double v : values) out << ' ' << format_double(v);
    out << '\n';
  };
  axis("xs:", flow.xs);
  axis("ys:", flow.ys);
  axis("ts:", flow.ts);
  for (std::size_t i = 0; i < flow.u.size(); ++i) {
    if (flow.mask[i]) {
      out << "nan nan\n";
    } else {
      out << format_double(flow.u[i]) << ' ' << format_double(flow.v[i]) << '\n';
    }
  }
}

GriddedFlow read_flow_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_flow(in);
}

void write_flow_file(const std::filesystem::path& path, const GriddedFlow& flow) {
  write_file(path, [&](std::ostream& out) { write_flow(out, flow); });
}

// --- sensors ----------------------------------------------------------------

std::vector<Sensor> parse_sensors(std::istream& in) {
  LineReader r(in);
  std::vector<Sensor> out;
  std::istringstream f;
  while (r.next(f)) {
    auto v = r.numbers<6>(f, "sensor line");
    Sensor s;
    s.position = {v[0], v[1]};
    s.eta = v[2];
    if (v[3] < 1 || v[3] != std::floor(v[3]) || v[3] > 9e15) r.fail("levels must be a positive integer");
    s.levels = static_cast<std::int64_t>(v[3]);
    s.noise_variance = v[4];
    s.detection_prob = v[5];
    if (!(s.eta > 0)) r.fail("eta must be positive");
    if (!(s.noise_variance > 0)) r.fail("noise variance must be positive");
    if (!(s.detection_prob >= 0 && s.detection_prob <= 1)) r.fail("detection probability must lie in [0, 1]");
    out.push_back(s);
  }
  return out;
}

void write_sensors(std::ostream& out, const std::vector<Sensor>& sensors) {
  out << "# x y eta levels noise_variance detection_prob\n";
  for (const auto& s : sensors) {
    out << format_double(s.position.x) << ' ' << format_double(s.position.y) << ' ' << format_double(s.eta) << ' '
        << s.levels << ' ' << format_double(s.noise_variance) << ' ' << format_double(s.detection_prob) << '\n';
  }
}

std::vector<Sensor> read_sensor_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_sensors(in);
}

void write_sensor_file(const std::filesystem::path& path, const std::vector<Sensor>& sensors) {
  write_file(path, [&](std::ostream& out) { write_sensors(out, sensors); });
}

// --- observations -------------------------------------------------------------

void write_observations(std::ostream& out, const ObservationLog& log) {
  out << "# config_hash=" << log.config_hash << '\n';
  out << "trial,step,sensor,value\n";
  for (std::size_t q = 0; q < log.levels.size(); ++q) {
    for (std::size_t k = 0; k < log.levels[q].size(); ++k) {
      const auto& row = log.levels[q][k];
      for (std::size_t j = 0; j < row.size(); ++j) {
        out << q << ',' << k + 1 << ',' << j << ',' << format_double(row[j]) << '\n';
      }
    }
  }
}

ObservationLog parse_observations(std::istream& in) {
  ObservationLog log;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& msg) -> void {
    throw IoError("observations line " + std::to_string(line_no) + ": " + msg);
  };
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.rfind("# config_hash=", 0) == 0) {
      log.config_hash = line.substr(14);
      continue;
    }
    if (line[0] == '#') continue;
    if (!header) {
      if (line != "trial,step,sensor,value") fail("expected header 'trial,step,sensor,value'");
      header = true;
      continue;
    }
    unsigned long long q = 0, k = 0, j = 0;
    char value[64] = {};
    if (std::sscanf(line.c_str(), "%llu,%llu,%llu,%63s", &q, &k, &j, value) != 4 || k == 0) fail("malformed row");
    char* end = nullptr;
    const double v = std::strtod(value, &end);
    if (*end != '\0' || !std::isfinite(v)) fail("bad value");
    if (q > log.levels.size() || (q == log.levels.size() && !(k == 1 && j == 0))) fail("trial out of order");
    if (q == log.levels.size()) log.levels.emplace_back();
    auto& trial = log.levels[q];
    if (k == trial.size() + 1 && j == 0) {
      trial.emplace_back();
    } else if (k != trial.size()) {
      fail("step out of order");
    }
    if (j != trial.back().size()) fail("sensor out of order");
    trial.back().push_back(v);
  }
  if (log.config_hash.empty()) throw IoError("observations lack a '# config_hash=' header");
  if (!header) throw IoError("observations lack a column header");
  return log;
}

ObservationLog read_observation_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_observations(in);
}

// --- results ------------------------------------------------------------------

void write_truth(std::ostream& out, const std::string& config_hash,
                 const std::vector<std::vector<Eigen::VectorXd>>& trials, std::size_t stride) {
  if (stride == 0) throw IoError("truth stride must be positive");
  out << "# config_hash=" << config_hash << '\n';
  if (trials.empty() || trials.front().empty()) {
    out << "trial,step,strength\n";
    return;
  }
  const auto nodes = static_cast<std::size_t>(trials.front().front().size()) - 1;
  out << "trial,step";
  for (std::size_t i = 0; i < nodes; i += stride) out << ",c" << i;
  out << ",strength\n";
  for (std::size_t q = 0; q < trials.size(); ++q) {
    for (std::size_t k = 0; k < trials[q].size(); ++k) {
      const auto& x = trials[q][k];
      out << q << ',' << k;
      for (std::size_t i = 0; i < nodes; i += stride) out << ',' << format_double(x(static_cast<Eigen::Index>(i)));
      out << ',' << format_double(x(x.size() - 1)) << '\n';
    }
  }
}

void write_estimates(std::ostream& out, const std::string& config_hash, const std::vector<TrialResult>& results) {
  out << "# config_hash=" << config_hash << '\n';
  out << "trial,step,error_norm,strength_estimate,true_strength\n";
  for (const auto& r : results) {
    for (std::size_t k = 0; k < r.error_norms.size(); ++k) {
      out << r.trial << ',' << k + 1 << ',' << format_double(r.error_norms[k]) << ','
          << format_double(r.strength_estimates[k]) << ',' << format_double(r.true_strengths[k]) << '\n';
    }
  }
}

std::ofstream open_output(const std::filesystem::path& path, bool force) {
  if (!force && std::filesystem::exists(path)) {
    throw IoError(path.string() + " exists; pass --force to overwrite");
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

}  // namespace plume
