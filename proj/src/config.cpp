#include "plume/config.hpp"

#include <openssl/evp.h>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "plume/io.hpp"

namespace plume {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>> kSchema = {
    {"mesh", {"file", "rect", "nx", "ny"}},
    {"flow", {"kind", "u", "v", "center", "rate", "file"}},
    {"model",
     {"diffusivity", "artificial_diffusivity", "dt", "steps", "mass", "process_variance", "strength_variance"}},
    {"source", {"position", "strength"}},
    {"sensors", {"count", "file", "detection_prob", "eta", "levels", "noise_variance"}},
    {"estimator", {"method", "size", "trials", "prior_variance", "ess_threshold", "inflation", "threads"}},
    {"output", {"truth_stride"}},
    {"run", {"seed"}},
};

// Also drops an inline comment: ';' or '#' preceded by whitespace.
std::string trim(std::string s) {
  for (std::size_t i = 1; i < s.size(); ++i) {
    if ((s[i] == ';' || s[i] == '#') && (s[i - 1] == ' ' || s[i - 1] == '\t')) {
      s.erase(i);
      break;
    }
  }
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

class Reader {
 public:
  explicit Reader(const pt::ptree& tree) : tree_(tree) {}

  const std::string* raw(const std::string& section, const std::string& key) const {
    auto sec = tree_.find(section);
    if (sec == tree_.not_found()) return nullptr;
    auto it = sec->second.find(key);
    if (it == sec->second.not_found()) return nullptr;
    return &it->second.data();
  }

  void real(const std::string& s, const std::string& k, double& dst) const {
    if (auto v = raw(s, k)) dst = parse_real(s + "." + k, trim(*v));
  }

  template <class Int>
  void integer(const std::string& s, const std::string& k, Int& dst) const {
    if (auto v = raw(s, k)) {
      const std::string t = trim(*v);
      try {
        std::size_t used = 0;
        const long long n = std::stoll(t, &used);
        if (used != t.size()) throw std::invalid_argument(t);
        if (std::is_unsigned_v<Int> && n < 0) throw ConfigError(s + "." + k + " must be non-negative");
        dst = static_cast<Int>(n);
      } catch (const std::logic_error& e) {
        if (dynamic_cast<const ConfigError*>(&e)) throw;
        throw ConfigError(s + "." + k + ": expected an integer, got '" + t + "'");
      }
    }
  }

  void text(const std::string& s, const std::string& k, std::string& dst) const {
    if (auto v = raw(s, k)) dst = trim(*v);
  }

  void flag(const std::string& s, const std::string& k, bool& dst) const {
    if (auto v = raw(s, k)) {
      const std::string t = trim(*v);
      if (t == "true" || t == "yes" || t == "on" || t == "1") {
        dst = true;
      } else if (t == "false" || t == "no" || t == "off" || t == "0") {
        dst = false;
      } else {
        throw ConfigError(s + "." + k + ": expected true/false, got '" + t + "'");
      }
    }
  }

  // "auto" maps to 0, which downstream code treats as "derive it".
  void real_or_auto(const std::string& s, const std::string& k, double& dst) const {
    if (auto v = raw(s, k)) {
      const std::string t = trim(*v);
      dst = t == "auto" ? 0.0 : parse_real(s + "." + k, t);
    }
  }

  std::vector<double> reals(const std::string& s, const std::string& k, std::size_t n) const {
    auto v = raw(s, k);
    if (!v) return {};
    std::istringstream in(trim(*v));
    std::vector<double> out;
    std::string tok;
    while (in >> tok) out.push_back(parse_real(s + "." + k, tok));
    if (out.size() != n) {
      throw ConfigError(s + "." + k + ": expected " + std::to_string(n) + " numbers, got " +
                        std::to_string(out.size()));
    }
    return out;
  }

  static double parse_real(const std::string& name, const std::string& t) {
    try {
      std::size_t used = 0;
      const double d = std::stod(t, &used);
      if (used != t.size() || !std::isfinite(d)) throw std::invalid_argument(t);
      return d;
    } catch (const std::logic_error&) {
      throw ConfigError(name + ": expected a finite number, got '" + t + "'");
    }
  }

 private:
  const pt::ptree& tree_;
};

std::string resolve(const std::string& file, const std::filesystem::path& base) {
  if (file.empty()) return file;
  std::filesystem::path p(file);
  if (p.is_relative() && !base.empty()) p = base / p;
  return p.lexically_normal().string();
}

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return sha256_hex(buf.str());
}

}  // namespace

ScenarioConfig parse_config(std::istream& in, const std::filesystem::path& base_dir) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  for (const auto& [section, body] : tree) {
    auto known = kSchema.find(section);
    if (known == kSchema.end()) {
      if (body.empty()) throw ConfigError("config: key '" + section + "' outside any section");
      throw ConfigError("config: unknown section [" + section + "]");
    }
    for (const auto& [key, value] : body) {
      if (!known->second.count(key)) throw ConfigError("config: unknown key '" + key + "' in [" + section + "]");
    }
  }

  Reader r(tree);
  ScenarioConfig c;

  r.text("mesh", "file", c.mesh_file);
  c.mesh_file = resolve(c.mesh_file, base_dir);
  if (auto rect = r.reals("mesh", "rect", 4); !rect.empty()) c.domain = {rect[0], rect[1], rect[2], rect[3]};
  r.integer("mesh", "nx", c.nx);
  r.integer("mesh", "ny", c.ny);

  std::string kind;
  r.text("flow", "kind", kind);
  if (kind.empty() || kind == "uniform") {
    c.flow_kind = FlowKind::uniform;
  } else if (kind == "zero") {
    c.flow_kind = FlowKind::zero;
  } else if (kind == "rotation") {
    c.flow_kind = FlowKind::rotation;
  } else if (kind == "grid") {
    c.flow_kind = FlowKind::grid;
  } else {
    throw ConfigError("flow.kind: expected zero|uniform|rotation|grid, got '" + kind + "'");
  }
  r.real("flow", "u", c.flow_velocity.u);
  r.real("flow", "v", c.flow_velocity.v);
  if (auto ctr = r.reals("flow", "center", 2); !ctr.empty()) c.rotation_center = {ctr[0], ctr[1]};
  r.real("flow", "rate", c.rotation_rate);
  r.text("flow", "file", c.flow_file);
  c.flow_file = resolve(c.flow_file, base_dir);

  r.real("model", "diffusivity", c.diffusivity);
  r.flag("model", "artificial_diffusivity", c.artificial_diffusivity);
  r.real_or_auto("model", "dt", c.dt);
  r.integer("model", "steps", c.steps);
  std::string mass;
  r.text("model", "mass", mass);
  if (mass == "consistent") {
    c.mass_kind = MassKind::consistent;
  } else if (mass.empty() || mass == "lumped") {
    c.mass_kind = MassKind::lumped;
  } else {
    throw ConfigError("model.mass: expected lumped|consistent, got '" + mass + "'");
  }
  r.real("model", "process_variance", c.process_variance);
  r.real("model", "strength_variance", c.strength_variance);

  if (auto pos = r.reals("source", "position", 2); !pos.empty()) c.source = {pos[0], pos[1]};
  r.real("source", "strength", c.strength);

  r.integer("sensors", "count", c.sensor_count);
  r.text("sensors", "file", c.sensor_file);
  c.sensor_file = resolve(c.sensor_file, base_dir);
  r.real("sensors", "detection_prob", c.detection_prob);
  r.real_or_auto("sensors", "eta", c.eta);
  r.integer("sensors", "levels", c.levels);
  r.real("sensors", "noise_variance", c.noise_variance);

  std::string method;
  r.text("estimator", "method", method);
  if (!method.empty()) {
    try {
      c.method = parse_estimator(method);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("estimator.method: ") + e.what());
    }
  }
  r.integer("estimator", "size", c.size);
  r.integer("estimator", "trials", c.trials);
  r.real("estimator", "prior_variance", c.prior_variance);
  r.real("estimator", "ess_threshold", c.ess_threshold);
  r.real("estimator", "inflation", c.inflation);
  r.integer("estimator", "threads", c.threads);

  r.integer("output", "truth_stride", c.truth_stride);

  if (auto seed = r.raw("run", "seed")) {
    const std::string t = trim(*seed);
    try {
      std::size_t used = 0;
      c.seed = std::stoull(t, &used);
      if (used != t.size() || t.front() == '-') throw std::invalid_argument(t);
    } catch (const std::logic_error&) {
      throw ConfigError("run.seed: expected a non-negative integer, got '" + t + "'");
    }
  }

  validate(c);
  return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  return parse_config(in, path.parent_path());
}

void validate(const ScenarioConfig& c) {
  auto need = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  if (c.mesh_file.empty()) {
    need(c.domain.width() > 0 && c.domain.height() > 0, "mesh.rect must have positive width and height");
    need(c.nx >= 1 && c.ny >= 1, "mesh.nx and mesh.ny must be at least 1");
  }
  if (c.flow_kind == FlowKind::grid) need(!c.flow_file.empty(), "flow.kind = grid needs flow.file");
  need(c.diffusivity >= 0, "model.diffusivity must be non-negative");
  need(c.dt >= 0, "model.dt must be positive or 'auto'");
  need(c.process_variance >= 0, "model.process_variance must be non-negative");
  need(c.strength_variance >= 0, "model.strength_variance must be non-negative");
  need(c.sensor_count >= 1 || !c.sensor_file.empty(), "sensors.count must be at least 1");
  need(c.detection_prob >= 0 && c.detection_prob <= 1, "sensors.detection_prob must lie in [0, 1]");
  need(c.eta >= 0, "sensors.eta must be positive or 'auto'");
  need(c.levels >= 1, "sensors.levels must be at least 1");
  need(c.noise_variance > 0, "sensors.noise_variance must be positive");
  need(c.size >= 1, "estimator.size must be at least 1");
  need(c.method != EstimatorKind::enkf || c.size >= 2, "estimator.size must be at least 2 for the EnKF");
  need(c.prior_variance > 0, "estimator.prior_variance must be positive");
  need(c.ess_threshold >= 0 && c.ess_threshold <= 1, "estimator.ess_threshold must lie in [0, 1]");
  need(c.inflation > 0, "estimator.inflation must be positive");
  need(c.threads >= 1, "estimator.threads must be at least 1");
  need(c.truth_stride >= 1, "output.truth_stride must be at least 1");
}

std::string canonical_scenario(const ScenarioConfig& c) {
  std::ostringstream s;
  auto line = [&](const char* key, const std::string& v) { s << key << '=' << v << '\n'; };
  auto num = [](double v) { return format_double(v); };
  if (c.mesh_file.empty()) {
    line("mesh.rect", num(c.domain.x0) + ' ' + num(c.domain.y0) + ' ' + num(c.domain.x1) + ' ' + num(c.domain.y1));
    line("mesh.nx", std::to_string(c.nx));
    line("mesh.ny", std::to_string(c.ny));
  } else {
    line("mesh.file_sha256", file_digest(c.mesh_file));
  }
  line("flow.kind", std::to_string(static_cast<int>(c.flow_kind)));
  switch (c.flow_kind) {
    case FlowKind::zero:
      break;
    case FlowKind::uniform:
      line("flow.velocity", num(c.flow_velocity.u) + ' ' + num(c.flow_velocity.v));
      break;
    case FlowKind::rotation:
      line("flow.center", num(c.rotation_center.x) + ' ' + num(c.rotation_center.y));
      line("flow.rate", num(c.rotation_rate));
      break;
    case FlowKind::grid:
      line("flow.file_sha256", file_digest(c.flow_file));
      break;
  }
  line("model.diffusivity", num(c.diffusivity));
  line("model.artificial_diffusivity", c.artificial_diffusivity ? "1" : "0");
  line("model.dt", num(c.dt));
  line("model.steps", std::to_string(c.steps));
  line("model.mass", c.mass_kind == MassKind::lumped ? "lumped" : "consistent");
  line("model.process_variance", num(c.process_variance));
  line("model.strength_variance", num(c.strength_variance));
  line("source.position", num(c.source.x) + ' ' + num(c.source.y));
  line("source.strength", num(c.strength));
  if (c.sensor_file.empty()) {
    line("sensors.count", std::to_string(c.sensor_count));
    line("sensors.detection_prob", num(c.detection_prob));
    line("sensors.eta", num(c.eta));
    line("sensors.levels", std::to_string(c.levels));
    line("sensors.noise_variance", num(c.noise_variance));
  } else {
    line("sensors.file_sha256", file_digest(c.sensor_file));
  }
  line("estimator.trials", std::to_string(c.trials));
  line("run.seed", std::to_string(c.seed));
  return s.str();
}

std::string scenario_hash(const ScenarioConfig& config) { return sha256_hex(canonical_scenario(config)); }

}  // namespace plume
