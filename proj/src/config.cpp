#include "deq/config.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "deq/models.hpp"

namespace deq {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& why) {
  throw config_error("config field '" + field + "': " + why);
}

const json& require(const json& node, const std::string& field) {
  if (!node.contains(field)) fail(field, "missing");
  return node.at(field);
}

double number_at(const json& node, const std::string& field) {
  const json& v = require(node, field);
  if (!v.is_number()) fail(field, "expected a number");
  return v.get<double>();
}

Eigen::VectorXd vector_from(const json& v, const std::string& field) {
  if (!v.is_array() || v.empty()) fail(field, "expected a nonempty array");
  Eigen::VectorXd out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) fail(field, "expected numeric entries");
    out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
  }
  return out;
}

Eigen::MatrixXd matrix_from(const json& v, const std::string& field) {
  if (!v.is_array() || v.empty()) fail(field, "expected a nonempty 2-d array");
  const std::size_t rows = v.size();
  if (!v[0].is_array() || v[0].empty()) fail(field, "expected a nonempty 2-d array");
  const std::size_t cols = v[0].size();
  Eigen::MatrixXd out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!v[r].is_array() || v[r].size() != cols) fail(field, "ragged rows");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!v[r][c].is_number()) fail(field, "expected numeric entries");
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          v[r][c].get<double>();
    }
  }
  return out;
}

// Either an explicit array of times or {start, stop, step}.
std::vector<double> times_from(const json& v, const std::string& field) {
  std::vector<double> times;
  if (v.is_array()) {
    for (const auto& t : v) {
      if (!t.is_number()) fail(field, "expected numeric times");
      times.push_back(t.get<double>());
    }
    return times;
  }
  if (!v.is_object()) fail(field, "expected an array or {start, stop, step}");
  const double start = number_at(v, "start");
  const double stop = number_at(v, "stop");
  const double step = number_at(v, "step");
  if (!(step > 0.0) || stop < start) fail(field, "need step > 0 and stop >= start");
  const long n = std::lround((stop - start) / step);
  for (long i = 0; i <= n; ++i) {
    times.push_back(start + static_cast<double>(i) * step);
  }
  return times;
}

InitialSigmaPrior init_sigma_from(const json& v, const std::string& field) {
  const std::string mode = require(v, "mode").get<std::string>();
  if (mode == "zero") return InitialSigmaPrior::zero();
  if (mode == "fixed") {
    return InitialSigmaPrior::fixed(vector_from(require(v, "value"), field + ".value"));
  }
  if (mode == "scaled") {
    return InitialSigmaPrior::scaled(number_at(v, "c0"),
                                     number_at(v, "beta_exponent"));
  }
  fail(field + ".mode", "expected zero | fixed | scaled");
}

json init_sigma_to(const InitialSigmaPrior& init) {
  json v;
  switch (init.mode) {
    case InitialSigmaPrior::Mode::zero:
      v["mode"] = "zero";
      break;
    case InitialSigmaPrior::Mode::fixed:
      v["mode"] = "fixed";
      v["value"] = std::vector<double>(
          init.fixed_value.data(), init.fixed_value.data() + init.fixed_value.size());
      break;
    case InitialSigmaPrior::Mode::scaled:
      v["mode"] = "scaled";
      v["c0"] = init.c0;
      v["beta_exponent"] = init.beta_exponent;
      break;
  }
  return v;
}

ParamPrior param_priors_from(const json& v) {
  if (!v.is_array() || v.empty()) fail("param_priors", "expected a nonempty array");
  ParamPrior prior;
  for (const auto& item : v) {
    const std::string name = require(item, "name").get<std::string>();
    const std::string type = require(item, "type").get<std::string>();
    const double mean = number_at(item, "mean");
    const double sd = number_at(item, "sd");
    if (type == "normal") {
      prior.marginals.push_back(ParamMarginal::normal(name, mean, sd));
    } else if (type == "truncated_normal") {
      prior.marginals.push_back(ParamMarginal::truncated(
          name, mean, sd, number_at(item, "lower"), number_at(item, "upper")));
    } else {
      fail("param_priors.type", "expected normal | truncated_normal");
    }
  }
  return prior;
}

std::vector<double> grid_axis_from(const json& v, const std::string& field) {
  if (v.is_array()) return times_from(v, field);
  const double start = number_at(v, "start");
  const double stop = number_at(v, "stop");
  const double step = number_at(v, "step");
  if (!(step > 0.0) || stop < start) fail(field, "need step > 0 and stop >= start");
  std::vector<double> axis;
  const long n = std::lround((stop - start) / step);
  for (long i = 0; i <= n; ++i) {
    axis.push_back(start + static_cast<double>(i) * step);
  }
  return axis;
}

}  // namespace

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file '" + path + "'");
  json root;
  try {
    in >> root;
  } catch (const json::parse_error& e) {
    throw config_error("config file '" + path + "': " + e.what());
  }

  ExperimentConfig c;
  c.system = require(root, "system").get<std::string>();
  c.x0 = vector_from(require(root, "x0"), "x0");
  if (root.contains("initial_time")) c.initial_time = number_at(root, "initial_time");
  if (root.contains("theta_true")) {
    c.theta_true = vector_from(root.at("theta_true"), "theta_true");
  }
  if (root.contains("theta_fixed")) {
    c.theta_fixed = vector_from(root.at("theta_fixed"), "theta_fixed");
  }

  const json& grid = require(root, "grid");
  c.h = number_at(grid, "h");
  c.observation_times = times_from(require(grid, "times"), "grid.times");

  const json& obs = require(root, "observation");
  c.H = matrix_from(require(obs, "H"), "observation.H");
  c.noise_cov = matrix_from(require(obs, "noise_cov"), "observation.noise_cov");

  if (root.contains("prior")) {
    c.alpha = number_at(root.at("prior"), "alpha");
    c.beta = number_at(root.at("prior"), "beta");
  }
  if (root.contains("init_sigma")) {
    c.init_sigma = init_sigma_from(root.at("init_sigma"), "init_sigma");
  }
  if (root.contains("param_priors")) {
    c.param_priors = param_priors_from(root.at("param_priors"));
  }
  if (root.contains("theta_jitter")) {
    c.theta_jitter = vector_from(root.at("theta_jitter"), "theta_jitter");
  }
  if (root.contains("particles")) {
    c.particles = static_cast<int>(number_at(root, "particles"));
  }
  if (root.contains("lag")) c.lag = static_cast<long>(number_at(root, "lag"));
  if (root.contains("seed")) {
    c.seed = root.at("seed").get<std::uint64_t>();
  }
  if (root.contains("resampling")) {
    const std::string scheme = root.at("resampling").get<std::string>();
    if (scheme == "multinomial") {
      c.resampling = ResamplingScheme::multinomial;
    } else if (scheme == "systematic") {
      c.resampling = ResamplingScheme::systematic;
    } else {
      fail("resampling", "expected multinomial | systematic");
    }
  }
  if (root.contains("h_ref_factor")) c.h_ref_factor = number_at(root, "h_ref_factor");
  if (root.contains("observations_file")) {
    c.observations_file = root.at("observations_file").get<std::string>();
  }
  if (root.contains("band")) {
    c.band.level = number_at(root.at("band"), "level");
    c.band.draws = static_cast<int>(number_at(root.at("band"), "draws"));
  }

  if (root.contains("tune")) {
    const json& t = root.at("tune");
    TuneConfig tune;
    tune.alphas = grid_axis_from(require(t, "alpha"), "tune.alpha");
    if (t.contains("beta_family")) {
      if (t.at("beta_family").get<std::string>() != "reciprocal") {
        fail("tune.beta_family", "expected 'reciprocal'");
      }
      tune.beta_reciprocal = true;
    } else {
      tune.betas = grid_axis_from(require(t, "beta"), "tune.beta");
    }
    if (t.contains("particles")) {
      tune.particles = static_cast<int>(number_at(t, "particles"));
    }
    if (t.contains("seed_policy")) {
      const std::string policy = t.at("seed_policy").get<std::string>();
      if (policy == "shared") {
        tune.seed_policy = SeedPolicy::shared;
      } else if (policy == "per-cell") {
        tune.seed_policy = SeedPolicy::per_cell;
      } else {
        fail("tune.seed_policy", "expected shared | per-cell");
      }
    }
    c.tune = std::move(tune);
  }

  if (root.contains("rate_check")) {
    const json& r = root.at("rate_check");
    RateCheckConfig rate;
    rate.h_values = times_from(require(r, "h_values"), "rate_check.h_values");
    if (r.contains("start_time")) rate.start_time = number_at(r, "start_time");
    rate.final_time = number_at(r, "final_time");
    if (r.contains("schedule_c")) rate.schedule_c = number_at(r, "schedule_c");
    if (r.contains("mc_samples")) {
      rate.mc_samples = static_cast<int>(number_at(r, "mc_samples"));
    }
    if (r.contains("init_sigma")) {
      rate.init = init_sigma_from(r.at("init_sigma"), "rate_check.init_sigma");
    }
    c.rate = std::move(rate);
  }

  validate_config(c);
  return c;
}

void save_config(const ExperimentConfig& c, const std::string& path) {
  json root;
  root["system"] = c.system;
  root["x0"] = std::vector<double>(c.x0.data(), c.x0.data() + c.x0.size());
  root["initial_time"] = c.initial_time;
  if (c.theta_true) {
    root["theta_true"] = std::vector<double>(
        c.theta_true->data(), c.theta_true->data() + c.theta_true->size());
  }
  if (c.theta_fixed) {
    root["theta_fixed"] = std::vector<double>(
        c.theta_fixed->data(), c.theta_fixed->data() + c.theta_fixed->size());
  }
  root["grid"] = {{"h", c.h}, {"times", c.observation_times}};

  auto matrix_to = [](const Eigen::MatrixXd& m) {
    std::vector<std::vector<double>> rows;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      std::vector<double> row;
      for (Eigen::Index col = 0; col < m.cols(); ++col) row.push_back(m(r, col));
      rows.push_back(std::move(row));
    }
    return rows;
  };
  root["observation"] = {{"H", matrix_to(c.H)}, {"noise_cov", matrix_to(c.noise_cov)}};
  root["prior"] = {{"alpha", c.alpha}, {"beta", c.beta}};
  root["init_sigma"] = init_sigma_to(c.init_sigma);
  if (c.param_priors) {
    json priors = json::array();
    for (const auto& m : c.param_priors->marginals) {
      json item = {{"name", m.name}, {"mean", m.mean}, {"sd", m.sd}};
      if (m.type == ParamMarginal::Type::normal) {
        item["type"] = "normal";
      } else {
        item["type"] = "truncated_normal";
        item["lower"] = m.lower;
        item["upper"] = m.upper;
      }
      priors.push_back(item);
    }
    root["param_priors"] = priors;
  }
  if (c.theta_jitter) {
    root["theta_jitter"] = std::vector<double>(
        c.theta_jitter->data(), c.theta_jitter->data() + c.theta_jitter->size());
  }
  root["particles"] = c.particles;
  root["lag"] = c.lag;
  root["seed"] = c.seed;
  root["resampling"] =
      c.resampling == ResamplingScheme::multinomial ? "multinomial" : "systematic";
  root["h_ref_factor"] = c.h_ref_factor;
  if (c.observations_file) root["observations_file"] = *c.observations_file;
  root["band"] = {{"level", c.band.level}, {"draws", c.band.draws}};
  if (c.tune) {
    json t;
    t["alpha"] = c.tune->alphas;
    if (c.tune->beta_reciprocal) {
      t["beta_family"] = "reciprocal";
    } else {
      t["beta"] = c.tune->betas;
    }
    t["particles"] = c.tune->particles;
    t["seed_policy"] =
        c.tune->seed_policy == SeedPolicy::shared ? "shared" : "per-cell";
    root["tune"] = t;
  }
  if (c.rate) {
    json r;
    r["h_values"] = c.rate->h_values;
    r["start_time"] = c.rate->start_time;
    r["final_time"] = c.rate->final_time;
    r["schedule_c"] = c.rate->schedule_c;
    r["mc_samples"] = c.rate->mc_samples;
    r["init_sigma"] = init_sigma_to(c.rate->init);
    root["rate_check"] = r;
  }

  std::ofstream out(path);
  if (!out) throw config_error("cannot open '" + path + "' for writing");
  out << root.dump(2) << "\n";
}

void validate_config(const ExperimentConfig& c) {
  const OdeSystem sys = make_system(c.system);
  if (c.x0.size() != sys.dimension) fail("x0", "dimension mismatch with system");
  auto check_theta = [&](const std::optional<ParamVector>& theta,
                         const char* field) {
    if (theta && theta->size() != sys.param_dimension) {
      fail(field, "dimension mismatch with system");
    }
  };
  check_theta(c.theta_true, "theta_true");
  check_theta(c.theta_fixed, "theta_fixed");
  if (c.param_priors && c.param_priors->dimension() != sys.param_dimension) {
    fail("param_priors", "dimension mismatch with system");
  }
  if (c.theta_jitter) {
    if (c.theta_jitter->size() != sys.param_dimension) {
      fail("theta_jitter", "dimension mismatch with system");
    }
    if ((c.theta_jitter->array() < 0.0).any()) {
      fail("theta_jitter", "standard deviations must be >= 0");
    }
  }
  if (c.H.cols() != sys.dimension) fail("observation.H", "column count != d_X");
  if (!(c.alpha > 0.0) || !(c.beta > 0.0)) fail("prior", "alpha, beta must be > 0");
  if (c.particles < 1) fail("particles", "must be >= 1");
  if (!(c.h_ref_factor > 0.0)) fail("h_ref_factor", "must be > 0");
  if (!(c.band.level > 0.0 && c.band.level < 1.0)) fail("band.level", "must be in (0,1)");
  if (c.band.draws < 1) fail("band.draws", "must be >= 1");
  // Grid and operator constructors run their own invariant checks.
  make_grid(c);
  make_operator(c);
}

SolverGrid make_grid(const ExperimentConfig& c) {
  return SolverGrid(c.initial_time, c.h, c.observation_times);
}

ObservationOperator make_operator(const ExperimentConfig& c) {
  return ObservationOperator(c.H, c.noise_cov);
}

}  // namespace deq
