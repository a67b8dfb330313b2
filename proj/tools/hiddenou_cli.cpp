#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hiddenou/error.hpp"
#include "hiddenou/harness.hpp"
#include "hiddenou/kalman.hpp"
#include "json.hpp"

using namespace hou;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Flags {
  std::string config, input, out, experiment, variant, model_case;
  std::vector<double> theta0, v_grid;
  std::optional<double> f, a, b, sigma, T, dt, delta;
  std::optional<std::size_t> reps;
  std::optional<std::uint64_t> seed;
  unsigned workers = 0;
};

void add_common(CLI::App* app, Flags& fl, bool single_path) {
  app->add_option("--config", fl.config, "JSON file with McConfig keys")->check(CLI::ExistingFile);
  app->add_option("--case", fl.model_case, "F, A, B, AF or AB");
  app->add_option("--theta0", fl.theta0, "true parameter (comma separated for pairs)")
      ->delimiter(',');
  app->add_option("--f", fl.f, "fixed f");
  app->add_option("--a", fl.a, "fixed a");
  app->add_option("--b", fl.b, "fixed b");
  app->add_option("--sigma", fl.sigma, "observation noise level");
  app->add_option("--T", fl.T, "horizon");
  app->add_option("--dt", fl.dt, "grid step");
  app->add_option("--delta", fl.delta, "learning interval exponent");
  app->add_option("--seed", fl.seed, "master seed");
  app->add_option("--v-grid", fl.v_grid, "fractions of T (comma separated)")->delimiter(',');
  app->add_option("--out", fl.out, "output directory");
  app->add_option("--variant", fl.variant, "adaptive filter variant");
  if (single_path)
    app->add_option("--input", fl.input, "trajectory CSV (t,x[,y]); simulated when absent")
        ->check(CLI::ExistingFile);
  app->add_option("--reps", fl.reps, "Monte Carlo replications");
  app->add_option("--workers", fl.workers, "threads (0: all cores)");
}

McConfig resolve(const Flags& fl, const std::string& experiment) {
  McConfig c = fl.config.empty() ? McConfig{} : load_config(fl.config);
  if (!experiment.empty()) c.experiment = experiment;
  if (!fl.experiment.empty()) c.experiment = fl.experiment;
  if (!fl.model_case.empty()) c.model_case = case_from_string(fl.model_case);
  if (!fl.theta0.empty()) c.theta0 = fl.theta0;
  if (fl.f) c.knowns.f = *fl.f;
  if (fl.a) c.knowns.a = *fl.a;
  if (fl.b) c.knowns.b = *fl.b;
  if (fl.sigma) c.sigma = *fl.sigma;
  if (fl.T) c.T = *fl.T;
  if (fl.dt) c.dt = *fl.dt;
  if (fl.delta) c.delta = *fl.delta;
  if (fl.reps) c.reps = *fl.reps;
  if (fl.seed) c.seed = *fl.seed;
  if (!fl.v_grid.empty()) c.v_grid = fl.v_grid;
  if (!fl.variant.empty()) c.variant = fl.variant;
  if (!fl.out.empty()) c.out = fl.out;
  c.workers = fl.workers;
  const std::size_t d = (c.model_case == Case::AF || c.model_case == Case::AB) ? 2 : 1;
  if (c.theta0.size() != d) {
    if (c.theta0.size() == 1 && d == 2) c.theta0.push_back(c.theta0[0]);
    else throw Error(ErrorKind::kWrongArity, "theta0 needs " + std::to_string(d) + " entries");
  }
  return c;
}

Trajectory load_or_simulate(const Flags& fl, const McConfig& c) {
  if (!fl.input.empty()) return read_trajectory_csv(fl.input);
  RngStream rng(c.seed, 0);
  return simulate_path(c.spec(), c.theta(), c.T, c.dt, rng, {.retain_hidden = true});
}

void write_table(const McConfig& c, const std::string& name, const Table& t) {
  if (c.out.empty()) return;
  fs::create_directories(c.out);
  write_csv((fs::path(c.out) / name).string(), t);
}

json theta_json(const Theta& t) {
  json j = json::array();
  for (std::size_t i = 0; i < t.size(); ++i) j.push_back(t[i]);
  return j;
}

int run_mc_and_report(const McConfig& c) {
  const McReport r = run_mc(c);
  if (!c.out.empty()) emit_report(r, c.out);
  for (const auto& v : r.verdicts)
    std::cout << (v.pass ? "PASS " : (v.informational ? "INFO " : "FAIL ")) << v.name << "  value="
              << v.value << " target=" << v.target << "  (" << v.rule << ")\n";
  if (!r.failures.empty())
    std::cout << r.failures.size() << " of " << c.reps << " replications failed; first: "
              << r.failures.front().message << '\n';
  return r.all_pass() ? 0 : 2;
}

int cmd_simulate(const McConfig& c) {
  RngStream rng(c.seed, 0);
  const Trajectory tr = simulate_path(c.spec(), c.theta(), c.T, c.dt, rng, {.retain_hidden = true});
  if (c.out.empty()) throw Error(ErrorKind::kConfig, "simulate needs --out");
  fs::create_directories(c.out);
  const auto path = (fs::path(c.out) / "trajectory.csv").string();
  write_trajectory_csv(tr, path);
  std::cout << json{{"path", path}, {"n_steps", tr.n_steps}, {"x_T", tr.x.back()}}.dump(2) << '\n';
  return 0;
}

int cmd_filter(const Flags& fl, const McConfig& c) {
  const Trajectory tr = load_or_simulate(fl, c);
  const ModelSpec spec = c.spec();
  const Theta th = c.theta();
  const auto dq = derived_quantities(spec, th);
  const double g0 = dq.b * dq.b / (2.0 * dq.a);
  const FilterPath fp = kb_filter(tr.x, tr.dt, spec, th, 0.0, g0);
  Table t{{"t", "x", "m", "gamma"}, {}};
  if (tr.y) t.header.push_back("y");
  for (std::size_t i = 0; i <= tr.n_steps; ++i) {
    t.rows.push_back({tr.dt * i, tr.x[i], fp.m[i], fp.gamma[i]});
    if (tr.y) t.rows.back().push_back((*tr.y)[i]);
  }
  write_table(c, "filter.csv", t);
  json j{{"gamma_T", fp.gamma.back()}, {"gamma_star", dq.gamma_star}, {"m_T", fp.m.back()}};
  if (tr.y) {
    double se = 0.0;
    for (std::size_t i = 0; i <= tr.n_steps; ++i) se += std::pow(fp.m[i] - (*tr.y)[i], 2);
    j["mean_sq_error"] = se / static_cast<double>(tr.n_steps + 1);
  }
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_mme(const Flags& fl, const McConfig& c) {
  const Trajectory tr = load_or_simulate(fl, c);
  const MomentStats st = r_statistics(unit_increments(tr, std::floor(tr.horizon())));
  const MmeResult r = mme(c.spec(), st);
  std::cout << json{{"r1", st.r1},
                    {"r2", st.r2},
                    {"theta_star", theta_json(r.theta_star)},
                    {"clamped", r.clamped},
                    {"residual", r.residual},
                    {"diagnostic", r.diagnostic}}
                   .dump(2)
            << '\n';
  return 0;
}

int cmd_onestep(const Flags& fl, const McConfig& c) {
  const Trajectory tr = load_or_simulate(fl, c);
  LearningConfig lc;
  lc.delta = c.delta;
  lc.epsilon_star = c.epsilon_star;
  const EstimatorPath e = onestep_process(tr, c.spec(), lc);
  Table t{{"t", "theta"}, {}};
  if (e.path.front().size() == 2) t.header.push_back("theta_2");
  for (std::size_t k = 0; k < e.path.size(); ++k) {
    t.rows.push_back({e.times[k]});
    for (std::size_t j = 0; j < e.path[k].size(); ++j) t.rows.back().push_back(e.path[k][j]);
  }
  write_table(c, "estimator.csv", t);
  std::cout << json{{"tau", e.tau},
                    {"preliminary", theta_json(e.preliminary.theta_star)},
                    {"theta_T", theta_json(e.path.back())}}
                   .dump(2)
            << '\n';
  return 0;
}

int cmd_mle_grid(const Flags& fl, const McConfig& c) {
  const Trajectory tr = load_or_simulate(fl, c);
  const ModelSpec spec = c.spec();
  if (spec.dim() != 1) throw Error(ErrorKind::kWrongArity, "mle-grid needs a scalar case");
  const Interval box = spec.box()[0];
  std::vector<double> grid(c.grid_points);
  for (std::size_t i = 0; i < grid.size(); ++i)
    grid[i] = box.lo + (box.hi - box.lo) * static_cast<double>(i) / (grid.size() - 1.0);
  const GridEstimate g = grid_mle_and_bayes(tr.x, tr.dt, spec, grid);
  Table t{{"theta", "loglik"}, {}};
  for (std::size_t i = 0; i < g.theta.size(); ++i) t.rows.push_back({g.theta[i], g.loglik[i]});
  write_table(c, "loglik.csv", t);
  std::cout << json{{"mle", g.mle}, {"bayes", g.bayes}}.dump(2) << '\n';
  return 0;
}

int cmd_adaptive(const Flags& fl, const McConfig& c) {
  const Trajectory tr = load_or_simulate(fl, c);
  const ModelSpec spec = c.spec();
  LearningConfig lc;
  lc.delta = c.delta;
  lc.epsilon_star = c.epsilon_star;
  lc.stride = 1;
  const EstimatorPath e = onestep_process(tr, spec, lc);
  const AdaptiveFilterPath af = adaptive_filter(tr, spec, e, variant_from_string(c.variant));
  Table t{{"t", "m_star"}, {}};
  if (tr.y) t.header.push_back("y");
  for (std::size_t k = 0; k < af.m_star.size(); ++k) {
    const std::size_t i = af.tau_index + k;
    t.rows.push_back({tr.dt * i, af.m_star[k]});
    if (tr.y) t.rows.back().push_back((*tr.y)[i]);
  }
  write_table(c, "adaptive.csv", t);
  json j{{"variant", to_string(af.variant)}, {"m_star_T", af.m_star.back()}};
  if (tr.y) j["y_T"] = tr.y->back();
  std::cout << j.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hidden Ornstein-Uhlenbeck estimation and adaptive filtering"};
  app.require_subcommand(1);
  Flags fl;
  auto* sim = app.add_subcommand("simulate", "simulate one observation path");
  auto* filt = app.add_subcommand("filter", "Kalman-Bucy filter at theta0");
  auto* mm = app.add_subcommand("mme", "method-of-moments estimator");
  auto* os = app.add_subcommand("onestep", "one-step MLE-process");
  auto* mg = app.add_subcommand("mle-grid", "grid MLE and Bayes estimator");
  auto* ad = app.add_subcommand("adaptive", "adaptive filter");
  auto* mc = app.add_subcommand("mc", "Monte Carlo experiment");
  add_common(sim, fl, false);
  for (auto* s : {filt, mm, os, mg, ad}) add_common(s, fl, true);
  add_common(mc, fl, false);
  mc->add_option("--experiment", fl.experiment,
                 "mme, onestep, mle_grid, adaptive or filter_check");
  for (auto* s : {mm, os, mg, ad})
    s->footer("Without --input the command runs the Monte Carlo experiment of the same name.");
  CLI11_PARSE(app, argc, argv);

  try {
    const bool single = !fl.input.empty();
    if (sim->parsed()) return cmd_simulate(resolve(fl, ""));
    if (filt->parsed()) return cmd_filter(fl, resolve(fl, ""));
    if (mc->parsed()) return run_mc_and_report(resolve(fl, ""));
    const std::pair<CLI::App*, const char*> mc_names[] = {
        {mm, "mme"}, {os, "onestep"}, {mg, "mle_grid"}, {ad, "adaptive"}};
    for (const auto& [cmd, name] : mc_names) {
      if (!cmd->parsed()) continue;
      const McConfig c = resolve(fl, name);
      if (!single) return run_mc_and_report(c);
      if (cmd == mm) return cmd_mme(fl, c);
      if (cmd == os) return cmd_onestep(fl, c);
      if (cmd == mg) return cmd_mle_grid(fl, c);
      return cmd_adaptive(fl, c);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
