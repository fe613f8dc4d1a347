#include "narxmpc/config.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace narxmpc {
namespace {

using SectionMap = std::map<std::string, std::map<std::string, std::string>>;

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

SectionMap read_sections(std::istream& in, const std::string& source) {
  SectionMap sections;
  std::string line;
  std::string current;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto comment = line.find_first_of("#;");
    if (comment != std::string::npos) line.erase(comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw std::invalid_argument(source + ":" + std::to_string(line_no) +
                                    ": malformed section header");
      }
      current = trim(line.substr(1, line.size() - 2));
      sections[current];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(source + ":" + std::to_string(line_no) +
                                  ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (current.empty()) {
      throw std::invalid_argument(source + ":" + std::to_string(line_no) +
                                  ": key outside of a [section]");
    }
    if (key.empty()) {
      throw std::invalid_argument(source + ":" + std::to_string(line_no) +
                                  ": empty key");
    }
    if (!sections[current].emplace(key, value).second) {
      throw std::invalid_argument("duplicate config key: " + current + "." + key);
    }
  }
  return sections;
}

/// Typed view over one parsed config with consumption tracking, so that
/// unknown keys can be reported by name after the schema walk.
class ConfigReader {
 public:
  explicit ConfigReader(SectionMap sections) : sections_(std::move(sections)) {}

  bool has(const std::string& section, const std::string& key) const {
    const auto s = sections_.find(section);
    return s != sections_.end() && s->second.count(key) > 0;
  }

  std::string get_string(const std::string& section, const std::string& key) {
    const auto s = sections_.find(section);
    if (s == sections_.end() || !s->second.count(key)) {
      throw std::invalid_argument("missing config key: " + section + "." + key);
    }
    consumed_.insert(section + "." + key);
    return s->second.at(key);
  }

  std::string get_string_or(const std::string& section, const std::string& key,
                            const std::string& fallback) {
    return has(section, key) ? get_string(section, key) : fallback;
  }

  double get_double(const std::string& section, const std::string& key) {
    return parse_double(section, key, get_string(section, key));
  }

  double get_double_or(const std::string& section, const std::string& key,
                       double fallback) {
    return has(section, key) ? get_double(section, key) : fallback;
  }

  long get_long(const std::string& section, const std::string& key) {
    const std::string raw = get_string(section, key);
    try {
      std::size_t pos = 0;
      const long v = std::stol(raw, &pos);
      if (pos != raw.size()) throw std::invalid_argument(raw);
      return v;
    } catch (const std::exception&) {
      throw std::invalid_argument("config key " + section + "." + key +
                                  ": expected an integer, got '" + raw + "'");
    }
  }

  long get_long_or(const std::string& section, const std::string& key,
                   long fallback) {
    return has(section, key) ? get_long(section, key) : fallback;
  }

  std::uint64_t get_seed_or(const std::string& section, const std::string& key,
                            std::uint64_t fallback) {
    if (!has(section, key)) return fallback;
    const std::string raw = get_string(section, key);
    try {
      std::size_t pos = 0;
      const unsigned long long v = std::stoull(raw, &pos);
      if (pos != raw.size()) throw std::invalid_argument(raw);
      return v;
    } catch (const std::exception&) {
      throw std::invalid_argument("config key " + section + "." + key +
                                  ": expected a non-negative integer, got '" +
                                  raw + "'");
    }
  }

  bool get_bool(const std::string& section, const std::string& key) {
    const std::string raw = get_string(section, key);
    if (raw == "true" || raw == "1" || raw == "yes") return true;
    if (raw == "false" || raw == "0" || raw == "no") return false;
    throw std::invalid_argument("config key " + section + "." + key +
                                ": expected a boolean, got '" + raw + "'");
  }

  bool get_bool_or(const std::string& section, const std::string& key,
                   bool fallback) {
    return has(section, key) ? get_bool(section, key) : fallback;
  }

  Eigen::VectorXd get_vector(const std::string& section, const std::string& key) {
    std::string raw = get_string(section, key);
    for (auto& c : raw) {
      if (c == ',') c = ' ';
    }
    std::istringstream in(raw);
    std::vector<double> values;
    std::string token;
    while (in >> token) {
      values.push_back(parse_double(section, key, token));
    }
    if (values.empty()) {
      throw std::invalid_argument("config key " + section + "." + key +
                                  ": expected a list of numbers");
    }
    return Eigen::Map<Eigen::VectorXd>(values.data(),
                                       static_cast<Index>(values.size()));
  }

  /// After the schema walk: reject any key that was never consumed.
  void reject_unconsumed() const {
    for (const auto& [section, entries] : sections_) {
      for (const auto& [key, value] : entries) {
        if (!consumed_.count(section + "." + key)) {
          throw std::invalid_argument("unknown config key: " + section + "." + key);
        }
      }
    }
  }

 private:
  double parse_double(const std::string& section, const std::string& key,
                      const std::string& raw) const {
    try {
      std::size_t pos = 0;
      const double v = std::stod(raw, &pos);
      if (pos != raw.size()) throw std::invalid_argument(raw);
      return v;
    } catch (const std::exception&) {
      throw std::invalid_argument("config key " + section + "." + key +
                                  ": expected a number, got '" + raw + "'");
    }
  }

  SectionMap sections_;
  std::set<std::string> consumed_;
};

PlantConfig read_plant(ConfigReader& reader) {
  PlantConfig plant;
  const std::string kind = reader.get_string("plant", "type");
  if (kind == "linear") {
    plant.kind = PlantConfig::Kind::Linear;
    plant.linear.theta1 = reader.get_double_or("plant", "theta1", 0.5);
    plant.linear.theta2 = reader.get_double_or("plant", "theta2", -0.5);
    plant.linear.initial_output = reader.get_double_or("plant", "y0", 0.0);
    plant.linear.noise_std = reader.get_double_or("plant", "noise_std", 0.0);
  } else if (kind == "pendulum") {
    plant.kind = PlantConfig::Kind::Pendulum;
    plant.pendulum.mass = reader.get_double_or("plant", "mass", 1.0);
    plant.pendulum.length = reader.get_double_or("plant", "length", 0.5);
    plant.pendulum.friction = reader.get_double_or("plant", "friction", 0.01);
    plant.pendulum.dt = reader.get_double_or("plant", "dt", 0.1);
    plant.pendulum.gravity = reader.get_double_or("plant", "gravity", 9.81);
    plant.pendulum.noise_std = reader.get_double_or("plant", "noise_std", 0.001);
    plant.pendulum.initial_angle = reader.get_double_or("plant", "theta0", 0.0);
    plant.pendulum.initial_velocity = reader.get_double_or("plant", "omega0", 0.0);
  } else {
    throw std::invalid_argument(
        "config key plant.type: expected 'linear' or 'pendulum', got '" + kind +
        "'");
  }
  return plant;
}

PolyBasis read_basis(ConfigReader& reader) {
  PolyBasis basis;
  basis.degree = static_cast<int>(reader.get_long("basis", "degree"));
  basis.include_intercept = reader.get_bool("basis", "intercept");
  basis.cross_terms = reader.get_bool_or("basis", "cross_terms", false);
  basis.delays.past_outputs = reader.get_long("basis", "m_y");
  basis.delays.past_inputs = reader.get_long("basis", "m_u");
  basis.validate();
  return basis;
}

AgentConfig read_agent(ConfigReader& reader, const PolyBasis& basis) {
  AgentConfig agent;
  agent.basis = basis;

  const std::string objective = reader.get_string("control", "objective");
  if (objective == "efe") {
    agent.objective = ObjectiveKind::ExpectedFreeEnergy;
  } else if (objective == "qcr") {
    agent.objective = ObjectiveKind::QuadraticCost;
  } else {
    throw std::invalid_argument(
        "config key control.objective: expected 'efe' or 'qcr', got '" +
        objective + "'");
  }
  agent.control_penalty = reader.get_double("control", "eta");
  agent.horizon = reader.get_long("control", "horizon");
  agent.input_min = reader.get_double("control", "u_min");
  agent.input_max = reader.get_double("control", "u_max");

  const Index dim = basis.feature_dim();
  if (reader.has("prior", "mu")) {
    agent.prior_mean = reader.get_vector("prior", "mu");
    if (agent.prior_mean.size() != dim) {
      throw std::invalid_argument(
          "config key prior.mu: expected " + std::to_string(dim) +
          " entries (basis feature dimension), got " +
          std::to_string(agent.prior_mean.size()));
    }
  } else {
    agent.prior_mean =
        Eigen::VectorXd::Constant(dim, reader.get_double("prior", "mu_fill"));
  }
  if (reader.has("prior", "lambda")) {
    const Eigen::VectorXd flat = reader.get_vector("prior", "lambda");
    if (flat.size() != dim * dim) {
      throw std::invalid_argument(
          "config key prior.lambda: expected " + std::to_string(dim * dim) +
          " row-major entries, got " + std::to_string(flat.size()));
    }
    agent.prior_precision =
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                       Eigen::RowMajor>>(flat.data(), dim, dim);
  } else {
    const double scale = reader.get_double("prior", "lambda_scale");
    if (!(scale > 0.0)) {
      throw std::invalid_argument("config key prior.lambda_scale: must be > 0");
    }
    agent.prior_precision = scale * Eigen::MatrixXd::Identity(dim, dim);
  }
  agent.prior_shape = reader.get_double("prior", "alpha");
  agent.prior_rate = reader.get_double("prior", "beta");

  agent.goal.mean = reader.get_double("goal", "m_star");
  agent.goal.variance = reader.get_double("goal", "v_star");

  agent.optimizer.num_starts =
      static_cast<int>(reader.get_long_or("optimizer", "n_starts", 8));
  agent.optimizer.max_iterations =
      static_cast<int>(reader.get_long_or("optimizer", "max_iters", 200));
  agent.optimizer.gradient_tolerance =
      reader.get_double_or("optimizer", "grad_tol", 1e-8);
  agent.optimizer.step_tolerance =
      reader.get_double_or("optimizer", "step_tol", 1e-10);
  agent.optimizer.seed = reader.get_seed_or("optimizer", "seed", 0);

  agent.validate();
  return agent;
}

EpisodeConfig read_episode(ConfigReader& reader) {
  EpisodeConfig episode;
  episode.length = reader.get_long("episode", "length");
  if (episode.length < 0) {
    throw std::invalid_argument("config key episode.length: must be >= 0");
  }
  episode.seed = reader.get_seed_or("episode", "seed", 1);
  episode.goal_band = reader.get_double_or("episode", "goal_band", 0.3);
  episode.goal_hold =
      static_cast<int>(reader.get_long_or("episode", "goal_hold", 20));
  return episode;
}

}  // namespace

ExperimentConfig parse_experiment_config(std::istream& in,
                                         const std::string& source_name) {
  ConfigReader reader(read_sections(in, source_name));
  ExperimentConfig config;
  config.plant = read_plant(reader);
  const PolyBasis basis = read_basis(reader);
  config.agent = read_agent(reader, basis);
  config.episode = read_episode(reader);
  reader.reject_unconsumed();
  return config;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("cannot open config file: " + path);
  }
  return parse_experiment_config(in, path);
}

}  // namespace narxmpc
