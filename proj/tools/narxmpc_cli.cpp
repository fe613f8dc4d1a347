#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "narxmpc/config.hpp"
#include "narxmpc/experiment.hpp"
#include "narxmpc/trace.hpp"

namespace {

std::vector<double> parse_scales(const std::string& raw) {
  std::vector<double> scales;
  std::string token;
  std::istringstream in(raw);
  while (std::getline(in, token, ',')) {
    scales.push_back(std::stod(token));
  }
  if (scales.empty()) {
    throw std::invalid_argument("--scales: expected a comma-separated list");
  }
  return scales;
}

struct GridSpec {
  double lo = -1.0;
  double hi = 1.0;
  int n = 101;
};

GridSpec parse_grid(const std::string& raw) {
  GridSpec grid;
  const auto first = raw.find(':');
  const auto second = raw.find(':', first + 1);
  if (first == std::string::npos || second == std::string::npos) {
    throw std::invalid_argument("--grid: expected lo:hi:n");
  }
  grid.lo = std::stod(raw.substr(0, first));
  grid.hi = std::stod(raw.substr(first + 1, second - first - 1));
  grid.n = std::stoi(raw.substr(second + 1));
  return grid;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive NARX model-predictive control harness"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string scales_raw;
  std::string grid_raw = "-1:1:101";

  CLI::App* run = app.add_subcommand("run", "Run one closed-loop episode");
  run->add_option("config", config_path, "Experiment config file")->required();
  run->add_option("--seed", seed, "Override the episode seed")
      ->each([&](const std::string&) { seed_given = true; });
  run->add_option("--out", out_dir, "Output directory");

  CLI::App* sweep = app.add_subcommand(
      "sweep-lambda", "First-step argmin for a family of prior precisions");
  sweep->add_option("config", config_path, "Experiment config file")->required();
  sweep->add_option("--scales", scales_raw, "Comma-separated precision scales")
      ->required();
  sweep->add_option("--out", out_dir, "Output directory");

  CLI::App* curve = app.add_subcommand(
      "objective-curve", "Objective values over a one-step control grid");
  curve->add_option("config", config_path, "Experiment config file")->required();
  curve->add_option("--grid", grid_raw, "Control grid as lo:hi:n");
  curve->add_option("--out", out_dir, "Output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    const narxmpc::ExperimentConfig config =
        narxmpc::load_experiment_config(config_path);
    std::filesystem::create_directories(out_dir);

    if (run->parsed()) {
      const auto trace = narxmpc::run_experiment(
          config, out_dir,
          seed_given ? std::optional<std::uint64_t>(seed) : std::nullopt);
      std::printf("steps=%ld u1=%.6g final_error=%.6g success=%s\n",
                  trace.summary.steps, trace.summary.first_control,
                  trace.summary.final_error,
                  trace.summary.success ? "true" : "false");
      std::printf("wrote %s/{trace.csv,belief_history.json,summary.json}\n",
                  out_dir.c_str());
    } else if (sweep->parsed()) {
      const auto rows = narxmpc::sweep_lambda(config, parse_scales(scales_raw));
      narxmpc::write_lambda_sweep_csv(out_dir + "/sweep.csv", rows);
      std::printf("%12s %12s %12s\n", "scale", "argmin_efe", "mi_range");
      for (const auto& row : rows) {
        std::printf("%12.6g %12.6g %12.6g\n", row.scale, row.argmin_efe,
                    row.mutual_information_range);
      }
      std::printf("wrote %s/sweep.csv\n", out_dir.c_str());
    } else if (curve->parsed()) {
      const GridSpec grid = parse_grid(grid_raw);
      const auto rows =
          narxmpc::objective_curve(config, grid.lo, grid.hi, grid.n);
      narxmpc::write_objective_curve_csv(out_dir + "/objective_curve.csv", rows);
      std::printf("wrote %s/objective_curve.csv (%zu rows)\n", out_dir.c_str(),
                  rows.size());
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
