#pragma once

#include <map>
#include <string>
#include <vector>

#include "hiddenou/adaptive.hpp"
#include "hiddenou/csv.hpp"
#include "hiddenou/stats.hpp"

namespace hou {

struct McConfig {
  std::string experiment = "onestep";  // mme | onestep | mle_grid | adaptive | filter_check
  Case model_case = Case::F;
  std::vector<double> theta0{1.0};
  Coefficients knowns{};
  double sigma = 1.0;
  std::vector<Interval> box;  // empty: [theta0/5, 5 theta0] per coordinate
  double T = 2000.0;
  double dt = 0.01;
  double delta = 0.6;
  double epsilon_star = 0.5;
  std::size_t reps = 300;
  std::uint64_t seed = 20240601;
  std::vector<double> v_grid{0.25, 0.5, 1.0};
  std::string out;
  unsigned workers = 0;  // 0: hardware concurrency; not part of the report
  std::string variant = "steady_state";
  std::size_t grid_points = 50;
  std::size_t refine_points = 81;
  // Start the one-step correction from theta0 instead of the moment
  // estimator (diagnostic only).
  bool oracle_preliminary = false;

  bool operator==(const McConfig&) const = default;

  ModelSpec spec() const;
  Theta theta() const;
  void validate() const;
};

struct Verdict {
  std::string name;
  bool pass = false;
  bool informational = false;  // reported, not counted
  double value = 0.0;
  double target = 0.0;
  std::string rule;

  bool operator==(const Verdict&) const = default;
};

struct RepFailure {
  std::size_t rep = 0;
  std::string message;
  bool operator==(const RepFailure&) const = default;
};

struct McReport {
  std::string experiment;
  McConfig config;
  std::vector<std::string> columns;  // per_rep columns, first is "rep"
  std::vector<std::vector<double>> per_rep;
  std::vector<RepFailure> failures;
  std::map<std::string, double> summary;
  std::map<std::string, double> theory;
  std::vector<Verdict> verdicts;
  Table curves;
  std::string tolerances;

  bool operator==(const McReport&) const;

  bool all_pass() const;
  std::vector<double> column(const std::string& name) const;
  const Verdict* verdict(const std::string& name) const;
};

McReport run_mc(const McConfig& cfg);

// report.json, per_rep.csv and (when present) curves.csv inside dir.
void emit_report(const McReport& report, const std::string& dir);

std::string report_to_json(const McReport& report);
McReport report_from_json(const std::string& text);

McConfig config_from_json(const std::string& text);
std::string config_to_json(const McConfig& cfg);
McConfig load_config(const std::string& path);

}  // namespace hou
