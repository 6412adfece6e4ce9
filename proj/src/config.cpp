#include "l2g/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>

namespace l2g {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad(const std::string& field, const std::string& msg) {
  throw Error(ErrorKind::Config, "field '" + field + "': " + msg);
}

double to_double(const std::string& field, const std::string& v) {
  const std::string s = trim(v);
  char* end = nullptr;
  const double d = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0' || !std::isfinite(d)) bad(field, "expected a number, got '" + v + "'");
  return d;
}

std::int64_t to_int(const std::string& field, const std::string& v) {
  const std::string s = trim(v);
  std::int64_t out = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) bad(field, "expected an integer, got '" + v + "'");
  return out;
}

std::uint64_t to_uint(const std::string& field, const std::string& v) {
  const std::string s = trim(v);
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    bad(field, "expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

std::vector<std::string> split_commas(const std::string& v) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(v);
  while (std::getline(is, item, ',')) out.push_back(trim(item));
  return out;
}

std::vector<diff::Index> to_widths(const std::string& field, const std::string& v) {
  std::vector<diff::Index> out;
  for (const auto& s : split_commas(v)) out.push_back(to_int(field, s));
  if (out.empty()) bad(field, "expected a comma-separated list");
  return out;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
std::string join(const std::vector<T>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ",";
    if constexpr (std::is_floating_point_v<T>) {
      out += num(xs[i]);
    } else {
      out += std::to_string(xs[i]);
    }
  }
  return out;
}

struct Field {
  const char* key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
  bool dataset = false;
};

template <typename Access>
Field real(const char* key, Access acc, bool dataset = false) {
  return {key,
          [=](RunConfig& c, const std::string& v) { acc(c) = to_double(key, v); },
          [=](const RunConfig& c) { return num(acc(const_cast<RunConfig&>(c))); }, dataset};
}

template <typename Access>
Field integer(const char* key, Access acc, bool dataset = false) {
  return {key,
          [=](RunConfig& c, const std::string& v) {
            acc(c) = static_cast<std::remove_reference_t<decltype(acc(c))>>(to_int(key, v));
          },
          [=](const RunConfig& c) { return std::to_string(acc(const_cast<RunConfig&>(c))); }, dataset};
}

template <typename Access>
Field widths(const char* key, Access acc) {
  return {key, [=](RunConfig& c, const std::string& v) { acc(c) = to_widths(key, v); },
          [=](const RunConfig& c) { return join(acc(const_cast<RunConfig&>(c))); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"seed", [](RunConfig& c, const std::string& v) { c.seed = to_uint("seed", v); },
       [](const RunConfig& c) { return std::to_string(c.seed); }, true},
      {"dataset", [](RunConfig& c, const std::string& v) { c.dataset = trim(v); },
       [](const RunConfig& c) { return c.dataset; }},
      {"split",
       [](RunConfig& c, const std::string& v) {
         const std::string s = trim(v);
         if (s != "train" && s != "test" && s != "all") bad("split", "expected train, test or all");
         c.split = s;
       },
       [](const RunConfig& c) { return c.split; }},
      {"variant",
       [](RunConfig& c, const std::string& v) {
         try {
           c.variant = variant_from_string(trim(v));
         } catch (const Error&) {
           bad("variant", "expected full, no-proj, fps or no-sample");
         }
       },
       [](const RunConfig& c) { return std::string(to_string(c.variant)); }},

      integer("num_shapes", [](RunConfig& c) -> int& { return c.data.num_shapes; }, true),
      integer("views_per_shape", [](RunConfig& c) -> int& { return c.data.views_per_shape; }, true),
      integer("grasps_per_shape", [](RunConfig& c) -> int& { return c.data.grasps_per_shape; }, true),
      integer("points_per_view", [](RunConfig& c) -> Eigen::Index& { return c.data.points_per_view; }, true),
      real("size_min", [](RunConfig& c) -> double& { return c.data.size_min; }, true),
      real("size_max", [](RunConfig& c) -> double& { return c.data.size_max; }, true),
      real("test_fraction", [](RunConfig& c) -> double& { return c.data.test_fraction; }, true),
      real("elevation_min_deg", [](RunConfig& c) -> double& { return c.data.elevation_min_deg; }, true),
      real("elevation_max_deg", [](RunConfig& c) -> double& { return c.data.elevation_max_deg; }, true),
      real("placement_radius", [](RunConfig& c) -> double& { return c.data.placement_radius; }, true),
      real("gripper_opening", [](RunConfig& c) -> double& { return c.data.gripper.max_opening; }, true),
      real("finger_length", [](RunConfig& c) -> double& { return c.data.gripper.finger_length; }, true),
      real("friction", [](RunConfig& c) -> double& { return c.data.gripper.friction; }, true),
      real("clearance", [](RunConfig& c) -> double& { return c.data.gripper.clearance; }, true),

      widths("encoder_stage1", [](RunConfig& c) -> std::vector<diff::Index>& { return c.model.encoder.stage1; }),
      widths("encoder_stage2", [](RunConfig& c) -> std::vector<diff::Index>& { return c.model.encoder.stage2; }),
      widths("generator_hidden", [](RunConfig& c) -> std::vector<diff::Index>& { return c.model.sampler.hidden; }),
      widths("head_hidden", [](RunConfig& c) -> std::vector<diff::Index>& { return c.model.heads.hidden; }),
      real("length_scale", [](RunConfig& c) -> double& { return c.length_scale; }),
      integer("M", [](RunConfig& c) -> diff::Index& { return c.model.sampler.num_points; }),
      integer("k", [](RunConfig& c) -> diff::Index& { return c.model.sampler.k; }),
      integer("nn", [](RunConfig& c) -> diff::Index& { return c.model.nn; }),
      real("alpha", [](RunConfig& c) -> double& { return c.model.sampler.alpha; }),
      real("lambda", [](RunConfig& c) -> double& { return c.model.loss.lambda; }),
      real("t_init", [](RunConfig& c) -> double& { return c.model.sampler.t_init; }),
      real("t_min", [](RunConfig& c) -> double& { return c.model.sampler.t_min; }),
      real("eps_vis", [](RunConfig& c) -> double& { return c.model.eps_vis; }),

      {"optimizer",
       [](RunConfig& c, const std::string& v) {
         const std::string s = trim(v);
         if (s == "adam") {
           c.train.optimizer.kind = diff::OptimizerKind::Adam;
         } else if (s == "sgd") {
           c.train.optimizer.kind = diff::OptimizerKind::Sgd;
         } else {
           bad("optimizer", "expected adam or sgd");
         }
       },
       [](const RunConfig& c) {
         return std::string(c.train.optimizer.kind == diff::OptimizerKind::Adam ? "adam" : "sgd");
       }},
      real("lr", [](RunConfig& c) -> double& { return c.train.optimizer.lr; }),
      real("momentum", [](RunConfig& c) -> double& { return c.train.optimizer.momentum; }),
      real("beta1", [](RunConfig& c) -> double& { return c.train.optimizer.beta1; }),
      real("beta2", [](RunConfig& c) -> double& { return c.train.optimizer.beta2; }),
      integer("steps", [](RunConfig& c) -> std::int64_t& { return c.train.steps; }),
      integer("batch_size", [](RunConfig& c) -> int& { return c.train.batch_size; }),

      {"k_list", [](RunConfig& c, const std::string& v) { c.k_list = parse_double_list("k_list", v); },
       [](const RunConfig& c) { return join(c.k_list); }},
      real("tol_x", [](RunConfig& c) -> double& { return c.tol_x; }),
      real("tol_theta_deg", [](RunConfig& c) -> double& { return c.tol_theta_deg; }),
  };
  return table;
}

const Field* find_field(const std::string& key) {
  for (const auto& f : fields()) {
    if (key == f.key) return &f;
  }
  return nullptr;
}

void require(bool ok, const std::string& field, const std::string& msg) {
  if (!ok) bad(field, msg);
}

void require_widths(const std::vector<diff::Index>& w, const std::string& field) {
  require(!w.empty(), field, "must not be empty");
  for (auto x : w) require(x >= 1, field, "widths must be positive");
}

std::map<std::string, std::string> parse_assignments(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::Config, "line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    if (!find_field(key)) throw Error(ErrorKind::Config, "unknown key '" + key + "' at line " + std::to_string(lineno));
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

}  // namespace

std::vector<double> parse_double_list(const std::string& field, const std::string& value) {
  std::vector<double> out;
  for (const auto& s : split_commas(value)) out.push_back(to_double(field, s));
  if (out.empty()) bad(field, "expected a comma-separated list");
  return out;
}

void RunConfig::finalize() {
  data.seed = seed;
  model.seed = seed;
  train.seed = seed;
  model.variant = variant;
  model.encoder.length_scale = length_scale;
  model.sampler.length_scale = length_scale;
  model.heads.length_scale = length_scale;
  model.loss.alpha = model.sampler.alpha;
  model.loss.tol_x = tol_x;
  model.loss.tol_theta = deg2rad(tol_theta_deg);
}

Tolerances RunConfig::tolerances() const { return {tol_x, deg2rad(tol_theta_deg)}; }

void validate(const RunConfig& c) {
  require(c.data.num_shapes >= 1, "num_shapes", "must be >= 1");
  require(c.data.views_per_shape >= 1, "views_per_shape", "must be >= 1");
  require(c.data.grasps_per_shape >= 1, "grasps_per_shape", "must be >= 1");
  require(c.data.points_per_view >= 1, "points_per_view", "must be >= 1");
  require(c.data.size_min >= 0.005, "size_min", "dimensions must be >= 0.005 m");
  require(c.data.size_max >= c.data.size_min, "size_max", "must be >= size_min");
  require(c.data.test_fraction >= 0.0 && c.data.test_fraction < 1.0, "test_fraction", "must lie in [0, 1)");
  require(c.data.elevation_min_deg > 0.0 && c.data.elevation_min_deg <= 90.0, "elevation_min_deg",
          "must lie in (0, 90]");
  require(c.data.elevation_max_deg >= c.data.elevation_min_deg && c.data.elevation_max_deg <= 90.0,
          "elevation_max_deg", "must lie in [elevation_min_deg, 90]");
  require(c.data.placement_radius >= 0.0, "placement_radius", "must be >= 0");
  require(c.data.gripper.max_opening > 0.0, "gripper_opening", "must be > 0");
  require(c.data.gripper.finger_length >= 0.0, "finger_length", "must be >= 0");
  require(c.data.gripper.friction > 0.0, "friction", "must be > 0");
  require(c.data.gripper.clearance >= 0.0, "clearance", "must be >= 0");
  require_widths(c.model.encoder.stage1, "encoder_stage1");
  require_widths(c.model.encoder.stage2, "encoder_stage2");
  require_widths(c.model.sampler.hidden, "generator_hidden");
  require_widths(c.model.heads.hidden, "head_hidden");
  require(c.length_scale > 0.0, "length_scale", "must be > 0");
  require(c.model.sampler.num_points >= 1, "M", "must be >= 1");
  require(c.model.sampler.k >= 1, "k", "must be >= 1");
  require(c.model.nn >= 1, "nn", "must be >= 1");
  require(c.model.sampler.alpha >= 0.0, "alpha", "must be >= 0");
  require(c.model.loss.lambda >= 0.0, "lambda", "must be >= 0");
  require(c.model.sampler.t_min > 0.0, "t_min", "must be > 0");
  require(c.model.sampler.t_init >= c.model.sampler.t_min, "t_init", "must be >= t_min");
  require(c.model.eps_vis >= 0.0, "eps_vis", "must be >= 0");
  require(c.train.optimizer.lr > 0.0, "lr", "must be > 0");
  require(c.train.optimizer.momentum >= 0.0 && c.train.optimizer.momentum < 1.0, "momentum", "must lie in [0, 1)");
  require(c.train.optimizer.beta1 >= 0.0 && c.train.optimizer.beta1 < 1.0, "beta1", "must lie in [0, 1)");
  require(c.train.optimizer.beta2 >= 0.0 && c.train.optimizer.beta2 < 1.0, "beta2", "must lie in [0, 1)");
  require(c.train.steps >= 0, "steps", "must be >= 0");
  require(c.train.batch_size >= 1, "batch_size", "must be >= 1");
  for (double k : c.k_list) require(k > 0.0 && k <= 100.0, "k_list", "entries must lie in (0, 100]");
  require(c.tol_x > 0.0, "tol_x", "must be > 0");
  require(c.tol_theta_deg > 0.0 && c.tol_theta_deg <= 90.0, "tol_theta_deg", "must lie in (0, 90]");
}

RunConfig parse_run_config(const std::string& text, RunConfig base) {
  for (const auto& [key, value] : parse_assignments(text)) find_field(key)->set(base, value);
  validate(base);
  base.finalize();
  return base;
}

std::string read_config_file(const std::string& path) {
  try {
    return read_file(path);
  } catch (const Error&) {
    throw Error(ErrorKind::Config, "cannot read config file " + path);
  }
}

RunConfig load_run_config(const std::string& path) { return parse_run_config(read_config_file(path)); }

std::string config_text(const RunConfig& cfg) {
  std::string out;
  for (const auto& f : fields()) out += std::string(f.key) + " = " + f.get(cfg) + "\n";
  return out;
}

std::string dataset_config_text(const DatasetConfig& data) {
  RunConfig c;
  c.data = data;
  c.seed = data.seed;
  std::string out;
  for (const auto& f : fields()) {
    if (f.dataset) out += std::string(f.key) + " = " + f.get(c) + "\n";
  }
  return out;
}

DatasetConfig parse_dataset_config(const std::string& text) {
  RunConfig c;
  for (const auto& [key, value] : parse_assignments(text)) {
    const Field* f = find_field(key);
    if (!f->dataset) throw Error(ErrorKind::Config, "key '" + key + "' does not belong in a dataset config");
    f->set(c, value);
  }
  validate(c);
  c.finalize();
  return c.data;
}

}  // namespace l2g
