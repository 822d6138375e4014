#include "cotrack/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cotrack {

std::string scheme_name(Scheme s) {
  switch (s) {
    case Scheme::offline_fixed: return "offline";
    case Scheme::online: return "online";
    case Scheme::greedy_stat: return "greedy-stat";
    case Scheme::greedy_csi: return "greedy-csi";
  }
  return "?";
}

Scheme scheme_from_name(const std::string& name) {
  if (name == "offline") return Scheme::offline_fixed;
  if (name == "online") return Scheme::online;
  if (name == "greedy-stat") return Scheme::greedy_stat;
  if (name == "greedy-csi") return Scheme::greedy_csi;
  throw std::invalid_argument("unknown scheme: " + name);
}

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) parts.push_back(trim(item));
  return parts;
}

double to_double(const std::string& s) {
  size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("bad number: " + s);
  return v;
}

} // namespace

VectorXd parse_vector(const std::string& text, int n) {
  const auto parts = split(text, ',');
  if (parts.size() == 1) return VectorXd::Constant(n, to_double(parts[0]));
  if (static_cast<int>(parts.size()) != n)
    throw std::invalid_argument("vector '" + text + "' must have length " +
                                std::to_string(n));
  VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = to_double(parts[i]);
  return v;
}

MatrixXd parse_matrix(const std::string& text, int n) {
  const auto colon = text.find(':');
  const std::string kind = trim(text.substr(0, colon));
  const std::string arg =
      colon == std::string::npos ? "" : trim(text.substr(colon + 1));
  if (kind == "zero") return MatrixXd::Zero(n, n);
  if (kind == "identity") return to_double(arg) * MatrixXd::Identity(n, n);
  if (kind == "scaled_i_plus_ones")
    return to_double(arg) * (MatrixXd::Identity(n, n) + MatrixXd::Ones(n, n));
  if (kind == "diag") return parse_vector(arg, n).asDiagonal();
  throw std::invalid_argument("unknown matrix generator: " + text);
}

SystemStatistics StatSpec::build(int n, int m) const {
  SystemStatistics s;
  s.alpha = alpha;
  s.sigma_tau2 = sigma_tau2;
  s.sigma_kappa2 = sigma_kappa2 / collab_snr_scale;
  s.sigma_fc2 = sigma_fc2;
  s.eta = eta;
  s.s0 = s0;
  s.eps_cov = parse_matrix(eps_cov, n) / meas_snr_scale;
  s.mu = parse_vector(mu, n);
  switch (gain_model) {
    case GainModel::rayleigh:
      s.h_mean = VectorXd::Constant(n, rayleigh_mean(xi));
      s.h_cov = rayleigh_var(xi) * MatrixXd::Identity(n, n);
      s.g_mean = VectorXd::Constant(m, rayleigh_mean(xi));
      s.g_cov = rayleigh_var(xi) * MatrixXd::Identity(m, m);
      break;
    case GainModel::gaussian:
      s.h_mean = parse_vector(h_mean, n);
      s.g_mean = parse_vector(g_mean, m);
      s.h_cov = parse_matrix(h_cov, n);
      s.g_cov = parse_matrix(g_cov, m);
      break;
    case GainModel::deterministic:
      s.h_mean = parse_vector(h_mean, n);
      s.g_mean = parse_vector(g_mean, m);
      s.h_cov = MatrixXd::Zero(n, n);
      s.g_cov = MatrixXd::Zero(m, m);
      break;
  }
  return s;
}

SimConfig parse_config(const std::string& text) {
  SimConfig cfg;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));

    if (key == "alpha") cfg.spec.alpha = to_double(val);
    else if (key == "sigma_tau2") cfg.spec.sigma_tau2 = to_double(val);
    else if (key == "sigma_kappa2") cfg.spec.sigma_kappa2 = to_double(val);
    else if (key == "sigma_fc2") cfg.spec.sigma_fc2 = to_double(val);
    else if (key == "eta") cfg.spec.eta = to_double(val);
    else if (key == "s0") cfg.spec.s0 = to_double(val);
    else if (key == "eps_cov") cfg.spec.eps_cov = val;
    else if (key == "mu") cfg.spec.mu = val;
    else if (key == "h_mean") cfg.spec.h_mean = val;
    else if (key == "g_mean") cfg.spec.g_mean = val;
    else if (key == "h_cov") cfg.spec.h_cov = val;
    else if (key == "g_cov") cfg.spec.g_cov = val;
    else if (key == "gain_model") {
      const auto parts = split(val, ':');
      if (parts[0] == "rayleigh") {
        cfg.spec.gain_model = GainModel::rayleigh;
        cfg.spec.xi = parts.size() > 1 ? to_double(parts[1]) : 1.0;
      } else if (parts[0] == "gaussian") {
        cfg.spec.gain_model = GainModel::gaussian;
      } else if (parts[0] == "deterministic") {
        cfg.spec.gain_model = GainModel::deterministic;
      } else {
        throw std::invalid_argument("unknown gain model: " + val);
      }
    } else if (key == "harvest") {
      if (val == "exponential") cfg.harvest = HarvestModel::exponential;
      else if (val == "deterministic") cfg.harvest = HarvestModel::deterministic;
      else throw std::invalid_argument("unknown harvest model: " + val);
    } else if (key == "n") cfg.n = static_cast<int>(to_double(val));
    else if (key == "m") cfg.m = static_cast<int>(to_double(val));
    else if (key == "r") cfg.r = to_double(val);
    else if (key == "k_max") cfg.k_max = static_cast<int>(to_double(val));
    else if (key == "trials") cfg.trials = static_cast<int>(to_double(val));
    else if (key == "threads") cfg.threads = static_cast<int>(to_double(val));
    else if (key == "seed") cfg.seed = std::stoull(val);
    else if (key == "schemes") {
      cfg.schemes.clear();
      for (const auto& name : split(val, ','))
        cfg.schemes.push_back(scheme_from_name(name));
    } else if (key == "sweep") {
      const auto colon = val.find(':');
      if (colon == std::string::npos)
        throw std::invalid_argument("sweep must be param:v1,v2,...");
      SweepSpec sw;
      sw.param = trim(val.substr(0, colon));
      for (const auto& v : split(val.substr(colon + 1), ','))
        sw.values.push_back(to_double(v));
      cfg.sweep = std::move(sw);
    } else {
      throw std::invalid_argument("unknown config key: " + key);
    }
  }
  return cfg;
}

SimConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

} // namespace cotrack
