#include "deq/hyperparam.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "deq/io.hpp"

namespace deq {

namespace {

std::vector<std::pair<double, double>> grid_cells(const GridSpec& grid) {
  if (grid.alphas.empty()) throw config_error("tune grid: alpha list is empty");
  for (double a : grid.alphas) {
    if (!(a > 0.0)) throw config_error("tune grid: alpha values must be > 0");
  }
  std::vector<std::pair<double, double>> cells;
  if (grid.constrain_beta_reciprocal) {
    if (!grid.betas.empty()) {
      throw config_error("tune grid: beta list conflicts with the 1/alpha family");
    }
    for (double a : grid.alphas) cells.emplace_back(a, 1.0 / a);
    return cells;
  }
  if (grid.betas.empty()) throw config_error("tune grid: beta list is empty");
  for (double b : grid.betas) {
    if (!(b > 0.0)) throw config_error("tune grid: beta values must be > 0");
  }
  for (double a : grid.alphas) {
    for (double b : grid.betas) cells.emplace_back(a, b);
  }
  return cells;
}

}  // namespace

double evaluate_cell(const GammaMultiplierPrior& lambda, const RunSpec& spec,
                     int particles, std::uint64_t seed) {
  FilterConfig config;
  config.particles = particles;
  config.lag = spec.lag;
  config.resampling = spec.resampling;
  config.seed = seed;
  config.threads = 1;  // cells are the unit of parallelism

  if (spec.param_prior != nullptr) {
    return run_joint_filter(*spec.sys, spec.x0, *spec.obs, *spec.grid, lambda,
                            spec.init_prior, *spec.param_prior, *spec.op, config)
        .log_marginal;
  }
  return run_filter(*spec.sys, spec.theta, spec.x0, *spec.obs, *spec.grid,
                    lambda, spec.init_prior, *spec.op, config)
      .log_marginal;
}

SearchResult search(const GridSpec& grid, const RunSpec& spec,
                    std::uint64_t seed, int threads) {
  const auto cells = grid_cells(grid);
  const int n = static_cast<int>(cells.size());

  SearchResult result;
  result.heatmap.resize(n);
  parallel_for(n, threads, [&](int idx) {
    HeatmapCell cell;
    cell.alpha = cells[idx].first;
    cell.beta = cells[idx].second;
    cell.evaluation_seed =
        grid.seed_policy == SeedPolicy::shared
            ? seed
            : derive_stream_seed(seed, StreamTag::search_cell,
                                 static_cast<std::uint64_t>(idx));
    try {
      cell.log_likelihood =
          evaluate_cell(GammaMultiplierPrior(cell.alpha, cell.beta), spec,
                        grid.particles_per_eval, cell.evaluation_seed);
    } catch (const filter_collapse_error& e) {
      cell.log_likelihood = -std::numeric_limits<double>::infinity();
      cell.failure_reason = e.what();
    } catch (const integration_error& e) {
      cell.log_likelihood = -std::numeric_limits<double>::infinity();
      cell.failure_reason = e.what();
    }
    result.heatmap[idx] = std::move(cell);
  });

  std::vector<int> order(result.heatmap.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const auto& ca = result.heatmap[a];
    const auto& cb = result.heatmap[b];
    if (ca.log_likelihood != cb.log_likelihood) {
      return ca.log_likelihood > cb.log_likelihood;
    }
    if (ca.alpha != cb.alpha) return ca.alpha < cb.alpha;
    return ca.beta < cb.beta;
  });

  if (!std::isfinite(result.heatmap[order[0]].log_likelihood)) {
    throw search_error("hyperparameter search failed: every cell evaluated to -inf");
  }
  result.best = result.heatmap[order[0]];
  const std::size_t top = std::min<std::size_t>(10, order.size());
  for (std::size_t i = 0; i < top; ++i) {
    result.leaderboard.push_back(result.heatmap[order[i]]);
  }
  return result;
}

void write_heatmap_csv(const std::vector<HeatmapCell>& cells,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw config_error("cannot open '" + path + "' for writing");
  out << "alpha,beta,loglik\n";
  for (const auto& cell : cells) {
    out << format_number(cell.alpha) << "," << format_number(cell.beta) << ","
        << format_number(cell.log_likelihood) << "\n";
  }
}

std::vector<HeatmapCell> read_heatmap_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open heatmap file '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != "alpha,beta,loglik") {
    throw config_error("heatmap file '" + path + "': unexpected header");
  }
  std::vector<HeatmapCell> cells;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 3) {
      throw config_error("heatmap file '" + path + "': bad row '" + line + "'");
    }
    HeatmapCell cell;
    cell.alpha = parse_number(fields[0]);
    cell.beta = parse_number(fields[1]);
    cell.log_likelihood = parse_number(fields[2]);
    cells.push_back(cell);
  }
  return cells;
}

void write_leaderboard_csv(const std::vector<HeatmapCell>& leaderboard,
                           const std::string& path) {
  std::ofstream out(path);
  if (!out) throw config_error("cannot open '" + path + "' for writing");
  out << "rank,alpha,beta,alpha_times_beta,loglik\n";
  for (std::size_t i = 0; i < leaderboard.size(); ++i) {
    const auto& cell = leaderboard[i];
    out << i + 1 << "," << format_number(cell.alpha) << ","
        << format_number(cell.beta) << ","
        << format_number(cell.alpha * cell.beta) << ","
        << format_number(cell.log_likelihood) << "\n";
  }
}

}  // namespace deq
