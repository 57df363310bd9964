#include "brwlab/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace brw {

namespace {

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

[[noreturn]] void fail(const std::string& origin, int line, const std::string& msg) {
  std::ostringstream os;
  os << origin << ":" << line << ": " << msg;
  throw ConfigError(os.str());
}

double parse_decimal(const std::string& origin, int line, const std::string& value) {
  const char* begin = value.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0') fail(origin, line, "expected a decimal: " + value);
  return v;
}

uint64_t parse_u64(const std::string& origin, int line, const std::string& value) {
  const char* begin = value.c_str();
  char* end = nullptr;
  const unsigned long long v = std::strtoull(begin, &end, 10);
  if (end == begin || *end != '\0') fail(origin, line, "expected an integer: " + value);
  return v;
}

int parse_int(const std::string& origin, int line, const std::string& value) {
  const uint64_t v = parse_u64(origin, line, value);
  if (v > 1u << 30) fail(origin, line, "integer out of range: " + value);
  return static_cast<int>(v);
}

}  // namespace

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(origin, line_no, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "model" && section != "experiment" && section != "execution")
        fail(origin, line_no, "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(origin, line_no, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty()) fail(origin, line_no, "key outside any section: " + key);

    if (section == "model") {
      if (key == "name") cfg.model_name = value;
      else if (key == "children") cfg.children = parse_int(origin, line_no, value);
      else if (key == "m") cfg.poisson_m = parse_decimal(origin, line_no, value);
      else if (key == "drift") cfg.drift = parse_decimal(origin, line_no, value);
      else if (key == "envelope") cfg.envelope = parse_decimal(origin, line_no, value);
      else fail(origin, line_no, "unknown [model] key: " + key);
    } else if (section == "experiment") {
      if (key == "n") cfg.n = parse_int(origin, line_no, value);
      else if (key == "n_low") cfg.n_low = parse_int(origin, line_no, value);
      else if (key == "beta") cfg.beta = parse_decimal(origin, line_no, value);
      else if (key == "z_min") cfg.z_min = parse_decimal(origin, line_no, value);
      else if (key == "z_max") cfg.z_max = parse_decimal(origin, line_no, value);
      else if (key == "z_step") cfg.z_step = parse_decimal(origin, line_no, value);
      else if (key == "x_min") cfg.x_min = parse_decimal(origin, line_no, value);
      else if (key == "x_max") cfg.x_max = parse_decimal(origin, line_no, value);
      else if (key == "x_step") cfg.x_step = parse_decimal(origin, line_no, value);
      else if (key == "A") cfg.A = parse_decimal(origin, line_no, value);
      else if (key == "L") cfg.L = parse_decimal(origin, line_no, value);
      else fail(origin, line_no, "unknown [experiment] key: " + key);
    } else {  // execution
      if (key == "seed") cfg.seed = parse_u64(origin, line_no, value);
      else if (key == "replications") cfg.replications = parse_u64(origin, line_no, value);
      else if (key == "walk_budget") cfg.walk_budget = parse_u64(origin, line_no, value);
      else if (key == "ladder_budget") cfg.ladder_budget = parse_u64(origin, line_no, value);
      else if (key == "ladder_step_cap")
        cfg.ladder_step_cap = parse_u64(origin, line_no, value);
      else if (key == "renewal_reps") cfg.renewal_reps = parse_u64(origin, line_no, value);
      else if (key == "workers")
        cfg.workers = static_cast<unsigned>(parse_u64(origin, line_no, value));
      else if (key == "chunk_size") cfg.chunk_size = parse_u64(origin, line_no, value);
      else if (key == "memory_cap_mb")
        cfg.memory_cap_mb = parse_u64(origin, line_no, value);
      else if (key == "out_dir") cfg.out_dir = value;
      else if (key == "prune") {
        if (value != "none" && value != "barrier")
          fail(origin, line_no, "prune must be none or barrier");
        cfg.prune = value;
      } else if (key == "prune_lambda")
        cfg.prune_lambda = parse_decimal(origin, line_no, value);
      else fail(origin, line_no, "unknown [execution] key: " + key);
    }
  }
  if (cfg.z_step <= 0.0 || cfg.x_step <= 0.0)
    throw ConfigError(origin + ": z_step and x_step must be positive");
  return cfg;
}

RunConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path.string());
}

PointProcessModel RunConfig::make_model() const {
  if (model_name == "binary-gaussian") return make_binary_gaussian(children);
  if (model_name == "poisson-gaussian") return make_poisson_gaussian(poisson_m);
  if (model_name == "one-child-zero") return make_one_child_zero();
  if (model_name == "drift-one") return make_drift_one(drift);
  throw ConfigError("unknown model name: " + model_name);
}

PrunePolicy RunConfig::make_policy() const {
  PrunePolicy policy;
  policy.mode = prune == "barrier" ? PrunePolicy::Mode::Barrier : PrunePolicy::Mode::None;
  policy.barrier_offset = prune_lambda;
  return policy;
}

ParallelConfig RunConfig::make_parallel() const {
  ParallelConfig par;
  par.workers = workers;
  par.chunk_size = chunk_size;
  return par;
}

size_t RunConfig::population_cap() const {
  // Roughly 44 bytes per particle with double buffering.
  return static_cast<size_t>(memory_cap_mb) * 1024 * 1024 / 44;
}

namespace {

std::vector<double> make_grid(double lo, double hi, double step) {
  std::vector<double> grid;
  for (int i = 0;; ++i) {
    const double v = lo + step * i;
    if (v > hi + 1e-12) break;
    grid.push_back(v);
  }
  return grid;
}

}  // namespace

std::vector<double> RunConfig::z_grid() const { return make_grid(z_min, z_max, z_step); }
std::vector<double> RunConfig::x_grid() const { return make_grid(x_min, x_max, x_step); }

}  // namespace brw
