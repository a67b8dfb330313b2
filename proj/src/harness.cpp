#include "hiddenou/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <thread>

#include "hiddenou/error.hpp"
#include "hiddenou/kalman.hpp"
#include "json.hpp"

namespace hou {

using json = nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const char* kTolerances =
    "variances: 20% relative (MME variance, one-step variance, eta variance/covariance); "
    "K11: 15%; grid MLE variance and AF covariance: 25%; adaptive T*MSE ratios: 30%; "
    "means: 3 standard errors; KS: 1% asymptotic critical value 1.628/sqrt(n); "
    "run error when more than 5% of replications fail";

bool within_rel(double value, double target, double tol) {
  return std::isfinite(value) && std::abs(value - target) <= tol * std::abs(target);
}

std::string pct(double tol) { return std::to_string(static_cast<int>(std::lround(tol * 100))) + "%"; }

void verdict(McReport& rep, std::string name, bool pass, double value, double target,
             std::string rule, bool info = false) {
  rep.verdicts.push_back({std::move(name), pass, info, value, target, std::move(rule)});
}

void rel_verdict(McReport& rep, const std::string& name, double value, double target, double tol) {
  verdict(rep, name, within_rel(value, target, tol), value, target, "within " + pct(tol));
}

// mean within k standard errors of target
void mean_verdict(McReport& rep, const std::string& name, const std::vector<double>& v,
                  double target, double k = 3.0) {
  const double m = mean(v);
  const double se = std::sqrt(variance(v) / static_cast<double>(v.size()));
  rep.summary[name + "_mean"] = m;
  rep.summary[name + "_se"] = se;
  verdict(rep, name + "_mean_3se", std::abs(m - target) <= k * se, m, target,
          "within 3 SE (" + format_double(se) + ")");
}

std::string fmt_v(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

struct Experiment {
  std::vector<std::string> columns;
  std::function<std::vector<double>(std::size_t)> rep;
  std::function<void(McReport&)> summarize;
};

Experiment make_mme(const McConfig& cfg) {
  const ModelSpec spec = cfg.spec();
  const Theta th0 = cfg.theta();
  const std::size_t d = spec.dim();
  Experiment e;
  e.columns = {"r1", "r2", "theta_star"};
  if (d == 2) e.columns.push_back("theta_star_2");
  e.columns.insert(e.columns.end(), {"clamped", "residual"});
  e.rep = [=](std::size_t i) {
    RngStream rng(cfg.seed, i);
    const Trajectory tr = simulate_path(spec, th0, cfg.T, cfg.dt, rng);
    const MomentStats st = r_statistics(unit_increments(tr, cfg.T));
    const MmeResult r = mme(spec, st);
    std::vector<double> rec{st.r1, st.r2, r.theta_star[0]};
    if (d == 2) rec.push_back(r.theta_star[1]);
    rec.push_back(r.clamped ? 1.0 : 0.0);
    rec.push_back(r.residual);
    return rec;
  };
  e.summarize = [=](McReport& rep) {
    const Coefficients c = spec.coeff(th0);
    const MomentFunctions mf = moment_functions(c, spec.sigma());
    const double k11 = k11_variance(c, spec.sigma());
    const double tt = std::floor(cfg.T + 1e-9);
    rep.theory["phi1"] = mf.phi1;
    rep.theory["phi2"] = mf.phi2;
    rep.theory["k11"] = k11;
    rep.theory["k11_four_term"] = k11_variance_four_term(c, spec.sigma());

    const auto r1 = rep.column("r1");
    mean_verdict(rep, "r1", r1, mf.phi1);
    const double tv = tt * variance(r1);
    rep.summary["T_var_r1"] = tv;
    rel_verdict(rep, "T_var_r1_vs_k11", tv, k11, 0.15);
    verdict(rep, "T_var_r1_vs_k11_four_term", within_rel(tv, rep.theory["k11_four_term"], 0.15), tv,
            rep.theory["k11_four_term"], "within 15% (four-term form with the e^{4a} factor)", true);
    std::vector<double> z;
    for (double v : r1) z.push_back(std::sqrt(tt) * (v - mf.phi1) / std::sqrt(k11));
    if (z.size() >= 100) {
      const NormalityResult nr = normality_check(z, 1.0);
      rep.summary["r1_ks"] = nr.ks;
      rep.summary["r1_skewness"] = nr.skewness;
      rep.summary["r1_kurtosis"] = nr.kurtosis;
      verdict(rep, "r1_ks_1pct", nr.ks < nr.ks_critical_1pct, nr.ks, nr.ks_critical_1pct,
              "below 1% critical value");
    }
    rep.summary["clamped_fraction"] = mean(rep.column("clamped"));

    for (std::size_t j = 0; j < d; ++j) {
      const std::string col = j == 0 ? "theta_star" : "theta_star_2";
      std::vector<double> err;
      for (double v : rep.column(col)) err.push_back(std::sqrt(tt) * (v - th0[j]));
      const std::string tag = j == 0 ? "" : "_2";
      rep.summary["var_sqrtT_err" + tag] = variance(err);
      if (d == 2) {
        std::vector<double> raw = rep.column(col);
        mean_verdict(rep, "theta_star" + tag, raw, th0[j]);
      }
    }
    if (d == 2) {
      std::vector<double> e1, e2;
      for (double v : rep.column("theta_star")) e1.push_back(std::sqrt(tt) * (v - th0[0]));
      for (double v : rep.column("theta_star_2")) e2.push_back(std::sqrt(tt) * (v - th0[1]));
      rep.summary["cov_sqrtT_err_12"] = covariance(e1, e2);
    }
    if (spec.kind() == Case::F || spec.kind() == Case::A || spec.kind() == Case::B) {
      const double d2 = mme_asymptotic_variance(spec, th0);
      rep.theory["mme_D2"] = d2;
      rel_verdict(rep, "var_mme_vs_D2", rep.summary["var_sqrtT_err"], d2, 0.20);
    }
  };
  return e;
}

LearningConfig learning(const McConfig& cfg, std::size_t stride = 0) {
  LearningConfig lc;
  if (cfg.oracle_preliminary) lc.preliminary_override = cfg.theta();
  lc.delta = cfg.delta;
  lc.epsilon_star = cfg.epsilon_star;
  lc.stride = stride;
  return lc;
}

Experiment make_onestep(const McConfig& cfg) {
  const ModelSpec spec = cfg.spec();
  const Theta th0 = cfg.theta();
  const std::size_t d = spec.dim();
  if (spec.kind() == Case::AB)
    throw Error(ErrorKind::kConfig, "one-step experiment not available for case AB");
  Experiment e;
  e.columns = {"preliminary"};
  if (d == 2) e.columns.push_back("preliminary_2");
  e.columns.push_back("theta_T");
  if (d == 2) e.columns.push_back("theta_T_2");
  if (d == 1)
    for (double v : cfg.v_grid) e.columns.push_back("eta_" + fmt_v(v));
  e.columns.push_back("info_empirical");
  e.rep = [=](std::size_t i) {
    RngStream rng(cfg.seed, i);
    const Trajectory tr = simulate_path(spec, th0, cfg.T, cfg.dt, rng);
    const EstimatorPath est = onestep_process(tr, spec, learning(cfg));
    std::vector<double> rec{est.preliminary.theta_star[0]};
    if (d == 2) rec.push_back(est.preliminary.theta_star[1]);
    const Theta& last = est.path.back();
    rec.push_back(last[0]);
    if (d == 2) rec.push_back(last[1]);
    if (d == 1)
      for (double eta : eta_process(est, th0, spec, cfg.v_grid, cfg.T)) rec.push_back(eta);
    rec.push_back(est.info_empirical.m11);
    return rec;
  };
  e.summarize = [=](McReport& rep) {
    const double sq = std::sqrt(cfg.T);
    auto err = [&](const std::string& col, double t0) {
      std::vector<double> out;
      for (double v : rep.column(col)) out.push_back(sq * (v - t0));
      return out;
    };
    if (d == 1) {
      const double info = fisher_scalar(spec, th0);
      rep.theory["fisher"] = info;
      rep.theory["inv_fisher"] = 1.0 / info;
      const auto e1 = err("theta_T", th0[0]);
      rep.summary["var_sqrtT_err"] = variance(e1);
      rel_verdict(rep, "var_onestep_vs_inv_fisher", variance(e1), 1.0 / info, 0.20);
      rep.summary["var_sqrtT_err_preliminary"] = variance(err("preliminary", th0[0]));
      const auto ie = rep.column("info_empirical");
      rep.summary["info_empirical_mean"] = mean(ie);
      Table curves;
      curves.header = {"v", "eta_var", "wiener_var"};
      for (std::size_t a = 0; a < cfg.v_grid.size(); ++a) {
        const double va = cfg.v_grid[a];
        const auto ea = rep.column("eta_" + fmt_v(va));
        rep.summary["eta_var_" + fmt_v(va)] = variance(ea);
        rel_verdict(rep, "eta_var_" + fmt_v(va), variance(ea), va, 0.20);
        mean_verdict(rep, "eta_" + fmt_v(va), ea, 0.0);
        curves.rows.push_back({va, variance(ea), va});
        for (std::size_t b = a + 1; b < cfg.v_grid.size(); ++b) {
          const double vb = cfg.v_grid[b];
          const auto eb = rep.column("eta_" + fmt_v(vb));
          const std::string nm = "eta_cov_" + fmt_v(va) + "_" + fmt_v(vb);
          rep.summary[nm] = covariance(ea, eb);
          rel_verdict(rep, nm, covariance(ea, eb), std::min(va, vb), 0.20);
        }
      }
      rep.curves = curves;
    } else {
      const Mat2 inv = fisher_matrix_af(spec, th0).inverse();
      rep.theory["inv_fisher_11"] = inv.m11;
      rep.theory["inv_fisher_12"] = inv.m12;
      rep.theory["inv_fisher_22"] = inv.m22;
      const auto e1 = err("theta_T", th0[0]);
      const auto e2 = err("theta_T_2", th0[1]);
      rep.summary["cov_sqrtT_err_11"] = variance(e1);
      rep.summary["cov_sqrtT_err_12"] = covariance(e1, e2);
      rep.summary["cov_sqrtT_err_22"] = variance(e2);
      rel_verdict(rep, "cov_11_vs_inv_fisher", variance(e1), inv.m11, 0.25);
      rel_verdict(rep, "cov_12_vs_inv_fisher", covariance(e1, e2), inv.m12, 0.25);
      rel_verdict(rep, "cov_22_vs_inv_fisher", variance(e2), inv.m22, 0.25);
      mean_verdict(rep, "theta_T", rep.column("theta_T"), th0[0]);
      mean_verdict(rep, "theta_T_2", rep.column("theta_T_2"), th0[1]);
    }
  };
  return e;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i)
    g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return g;
}

Experiment make_mle_grid(const McConfig& cfg) {
  const ModelSpec spec = cfg.spec();
  const Theta th0 = cfg.theta();
  if (spec.dim() != 1) throw Error(ErrorKind::kConfig, "grid MLE experiment needs a scalar case");
  const Interval box = spec.box()[0];
  const double far = box.contains(2.0 * th0[0]) ? 2.0 * th0[0] : 0.5 * th0[0];
  Experiment e;
  e.columns = {"mle", "bayes", "onestep", "loglik_gap"};
  e.rep = [=](std::size_t i) {
    RngStream rng(cfg.seed, i);
    const Trajectory tr = simulate_path(spec, th0, cfg.T, cfg.dt, rng);
    const std::span<const double> x(tr.x);
    // coarse scan of the box, then a fine grid around its maximum
    const auto coarse = linspace(box.lo, box.hi, std::max<std::size_t>(cfg.grid_points, 50));
    const GridEstimate g0 = grid_mle_and_bayes(x, tr.dt, spec, coarse);
    const double h = coarse[1] - coarse[0];
    const double lo = box.clamp(g0.mle - 4.0 * h), hi = box.clamp(g0.mle + 4.0 * h);
    const GridEstimate g =
        grid_mle_and_bayes(x, tr.dt, spec, linspace(lo, hi, std::max<std::size_t>(cfg.refine_points, 50)));
    const EstimatorPath est = onestep_process(tr, spec, learning(cfg));
    const double gap = log_likelihood(x, tr.dt, spec, th0) -
                       log_likelihood(x, tr.dt, spec, Theta::scalar(far));
    return std::vector<double>{g.mle, g.bayes, est.path.back()[0], gap};
  };
  e.summarize = [=](McReport& rep) {
    const double info = fisher_scalar(spec, th0);
    rep.theory["inv_fisher"] = 1.0 / info;
    rep.theory["far_theta"] = far;
    const double sq = std::sqrt(cfg.T);
    std::vector<double> em, eb;
    for (double v : rep.column("mle")) em.push_back(sq * (v - th0[0]));
    for (double v : rep.column("bayes")) eb.push_back(sq * (v - th0[0]));
    rep.summary["var_sqrtT_err_mle"] = variance(em);
    rep.summary["var_sqrtT_err_bayes"] = variance(eb);
    rel_verdict(rep, "var_mle_vs_inv_fisher", variance(em), 1.0 / info, 0.25);
    verdict(rep, "var_bayes_vs_inv_fisher", within_rel(variance(eb), 1.0 / info, 0.25),
            variance(eb), 1.0 / info, "within 25%", true);
    const double corr = correlation(rep.column("mle"), rep.column("onestep"));
    rep.summary["corr_mle_onestep"] = corr;
    verdict(rep, "corr_mle_onestep", corr > 0.9, corr, 0.9, "greater than 0.9");
    double wins = 0.0;
    const auto gaps = rep.column("loglik_gap");
    for (double g : gaps) wins += g > 0.0 ? 1.0 : 0.0;
    const double frac = wins / static_cast<double>(gaps.size());
    rep.summary["loglik_true_beats_far"] = frac;
    verdict(rep, "loglik_true_beats_far", frac >= 0.95, frac, 0.95, "at least 95% of replications");
  };
  return e;
}

Experiment make_adaptive(const McConfig& cfg) {
  const ModelSpec spec = cfg.spec();
  const Theta th0 = cfg.theta();
  if (spec.dim() != 1 && spec.kind() != Case::AF)
    throw Error(ErrorKind::kConfig, "adaptive experiment needs a scalar case or AF");
  const AdaptiveVariant variant = variant_from_string(cfg.variant);
  Experiment e;
  for (double v : cfg.v_grid) e.columns.push_back("sqerr_" + fmt_v(v));
  e.rep = [=](std::size_t i) {
    RngStream rng(cfg.seed, i);
    const Trajectory tr = simulate_path(spec, th0, cfg.T, cfg.dt, rng);
    const EstimatorPath est = onestep_process(tr, spec, learning(cfg, 1));
    const AdaptiveFilterPath af = adaptive_filter(tr, spec, est, variant);
    const std::vector<double> truth = stationary_m(tr.x, tr.dt, spec, th0);
    std::vector<double> rec;
    for (double v : cfg.v_grid) {
      const std::size_t idx = tr.index_of(v * cfg.T);
      if (idx < est.tau_index)
        throw Error(ErrorKind::kOutOfRange, "v inside the learning interval");
      const double err = af.m_star[idx - est.tau_index] - truth[idx];
      rec.push_back(err * err);
    }
    return rec;
  };
  e.summarize = [=](McReport& rep) {
    std::optional<ErrorConstants> ec;
    if (spec.dim() == 1) {
      ec = error_constants(spec, th0);
      rep.theory["k1"] = ec->k1;
      rep.theory["k2"] = ec->k2;
      rep.theory["r12"] = ec->r12;
      rep.theory["limit_eq70_v1"] = ec->limit_eq70(1.0);
      rep.theory["s_star_sq"] = ec->s_star_sq;
    }
    Table curves;
    curves.header = {"v", "empirical_Tmse", "limit_eq70", "limit_sstar"};
    const double vmax = *std::max_element(cfg.v_grid.begin(), cfg.v_grid.end());
    const auto ref = rep.column("sqerr_" + fmt_v(vmax));
    const double tref = cfg.T * mean(ref);
    for (double v : cfg.v_grid) {
      const auto col = rep.column("sqerr_" + fmt_v(v));
      const double tm = cfg.T * mean(col);
      const double se = cfg.T * std::sqrt(variance(col) / static_cast<double>(col.size()));
      rep.summary["Tmse_" + fmt_v(v)] = tm;
      rep.summary["Tmse_se_" + fmt_v(v)] = se;
      curves.rows.push_back({v, tm, ec ? ec->limit_eq70(v) : kNaN, ec ? ec->s_star_sq / v : kNaN});
      if (v != vmax) {
        const std::string nm = "Tmse_ratio_" + fmt_v(v) + "_" + fmt_v(vmax);
        rep.summary[nm] = tm / tref;
        rel_verdict(rep, nm, tm / tref, vmax / v, 0.30);
      }
    }
    rep.curves = curves;
    if (ec) {
      // Reported against both candidate limits; the two candidate constants disagree.
      const double lim70 = ec->limit_eq70(vmax), lims = ec->s_star_sq / vmax;
      const double lo = std::min(lim70, lims), hi = std::max(lim70, lims);
      const double within = tref >= lo && tref <= hi ? 1.0 : 0.0;
      rep.summary["bracket_inside"] = within;
      rep.summary["bracket_nearer_eq70"] =
          std::abs(tref - lim70) <= std::abs(tref - lims) ? 1.0 : 0.0;
      verdict(rep, "Tmse_vs_limit_eq70", within_rel(tref, lim70, 0.30), tref, lim70,
              "within 30% (informational)", true);
      verdict(rep, "Tmse_vs_limit_sstar", within_rel(tref, lims, 0.30), tref, lims,
              "within 30% (informational)", true);
      verdict(rep, "Tmse_bracketed", within > 0.0, tref, 0.5 * (lo + hi),
              "between the two candidate limits (informational)", true);
    }
  };
  return e;
}

Experiment make_filter_check(const McConfig& cfg) {
  const ModelSpec spec = cfg.spec();
  const Theta th0 = cfg.theta();
  Experiment e;
  e.columns = {"sqerr_T", "innovation_qv_ratio"};
  e.rep = [=](std::size_t i) {
    RngStream rng(cfg.seed, i);
    SimulateOptions opt;
    opt.retain_hidden = true;
    const Trajectory tr = simulate_path(spec, th0, cfg.T, cfg.dt, rng, opt);
    const DerivedQuantities q = derived_quantities(spec, th0);
    const FilterPath fp = kb_filter(tr.x, tr.dt, spec, th0, 0.0, q.b * q.b / (2.0 * q.a));
    const double err = (*tr.y).back() - fp.m.back();
    double qv = 0.0;
    for (std::size_t k = 0; k < tr.n_steps; ++k) {
      const double inn = (tr.x[k + 1] - tr.x[k] - q.f * fp.m[k] * tr.dt) / q.sigma;
      qv += inn * inn;
    }
    return std::vector<double>{err * err, qv / tr.horizon()};
  };
  e.summarize = [=](McReport& rep) {
    const DerivedQuantities q = derived_quantities(spec, th0);
    const double g = riccati_closed(q, q.b * q.b / (2.0 * q.a), cfg.T);
    rep.theory["gamma_T"] = g;
    rep.theory["gamma_star"] = q.gamma_star;
    mean_verdict(rep, "sqerr_T", rep.column("sqerr_T"), g);
    const double qv = mean(rep.column("innovation_qv_ratio"));
    rep.summary["innovation_qv_ratio_mean"] = qv;
    verdict(rep, "innovation_qv_ratio", within_rel(qv, 1.0, 0.01), qv, 1.0, "within 1%");
  };
  return e;
}

Experiment make_experiment(const McConfig& cfg) {
  if (cfg.experiment == "mme") return make_mme(cfg);
  if (cfg.experiment == "onestep") return make_onestep(cfg);
  if (cfg.experiment == "mle_grid") return make_mle_grid(cfg);
  if (cfg.experiment == "adaptive") return make_adaptive(cfg);
  if (cfg.experiment == "filter_check") return make_filter_check(cfg);
  throw Error(ErrorKind::kConfig, "unknown experiment '" + cfg.experiment + "'");
}

// ---- JSON ----

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double num(const json& j) { return j.is_null() ? kNaN : j.get<double>(); }

json config_json(const McConfig& c) {
  json j;
  j["experiment"] = c.experiment;
  j["case"] = to_string(c.model_case);
  j["theta0"] = c.theta0;
  j["f"] = c.knowns.f;
  j["a"] = c.knowns.a;
  j["b"] = c.knowns.b;
  j["sigma"] = c.sigma;
  json box = json::array();
  for (const auto& iv : c.box) box.push_back({iv.lo, iv.hi});
  j["box"] = box;
  j["T"] = c.T;
  j["dt"] = c.dt;
  j["delta"] = c.delta;
  j["epsilon_star"] = c.epsilon_star;
  j["reps"] = c.reps;
  j["seed"] = c.seed;
  j["v_grid"] = c.v_grid;
  j["variant"] = c.variant;
  j["grid_points"] = c.grid_points;
  j["refine_points"] = c.refine_points;
  j["oracle_preliminary"] = c.oracle_preliminary;
  return j;
}

McConfig config_of(const json& j) {
  McConfig c;
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& k = it.key();
      const json& v = it.value();
      if (k == "experiment") c.experiment = v.get<std::string>();
      else if (k == "case") c.model_case = case_from_string(v.get<std::string>());
      else if (k == "theta0") c.theta0 = v.is_array() ? v.get<std::vector<double>>()
                                                      : std::vector<double>{v.get<double>()};
      else if (k == "f") c.knowns.f = v.get<double>();
      else if (k == "a") c.knowns.a = v.get<double>();
      else if (k == "b") c.knowns.b = v.get<double>();
      else if (k == "sigma") c.sigma = v.get<double>();
      else if (k == "box") {
        c.box.clear();
        for (const auto& iv : v) c.box.push_back({iv.at(0).get<double>(), iv.at(1).get<double>()});
      } else if (k == "T") c.T = v.get<double>();
      else if (k == "dt") c.dt = v.get<double>();
      else if (k == "delta") c.delta = v.get<double>();
      else if (k == "epsilon_star") c.epsilon_star = v.get<double>();
      else if (k == "reps") c.reps = v.get<std::size_t>();
      else if (k == "seed") c.seed = v.get<std::uint64_t>();
      else if (k == "v_grid") c.v_grid = v.get<std::vector<double>>();
      else if (k == "out") c.out = v.get<std::string>();
      else if (k == "workers") c.workers = v.get<unsigned>();
      else if (k == "variant") c.variant = v.get<std::string>();
      else if (k == "grid_points") c.grid_points = v.get<std::size_t>();
      else if (k == "refine_points") c.refine_points = v.get<std::size_t>();
      else if (k == "oracle_preliminary") c.oracle_preliminary = v.get<bool>();
      else throw Error(ErrorKind::kConfig, "unknown config key '" + k + "'");
    }
  } catch (const json::exception& ex) {
    throw Error(ErrorKind::kConfig, ex.what());
  }
  return c;
}

}  // namespace

ModelSpec McConfig::spec() const {
  std::vector<Interval> b = box;
  if (b.empty())
    for (double t : theta0) {
      const double lo = t / 5.0, hi = 5.0 * t;
      b.push_back({std::min(lo, hi), std::max(lo, hi)});
    }
  if (model_case == Case::Gen)
    throw Error(ErrorKind::kConfig, "GEN case is only available through the library API");
  return ModelSpec(model_case, knowns, sigma, b);
}

Theta McConfig::theta() const {
  if (theta0.size() == 1) return Theta::scalar(theta0[0]);
  if (theta0.size() == 2) return Theta::pair(theta0[0], theta0[1]);
  throw Error(ErrorKind::kConfig, "theta0 must have 1 or 2 entries");
}

void McConfig::validate() const {
  if (reps < 1) throw Error(ErrorKind::kConfig, "reps must be >= 1");
  if (!(T >= 1.0) || !(dt > 0.0)) throw Error(ErrorKind::kConfig, "need T >= 1 and dt > 0");
  const ModelSpec s = spec();
  const Theta th = theta();
  s.require_inside(th);
  for (std::size_t i = 0; i < s.dim(); ++i)
    if (th[i] <= s.box()[i].lo || th[i] >= s.box()[i].hi)
      throw Error(ErrorKind::kConfig, "theta0 must lie strictly inside the box");
  if (experiment != "onestep" && experiment != "adaptive") return;
  const double eps = std::floor(std::pow(T, delta)) / T;
  if (v_grid.empty()) throw Error(ErrorKind::kConfig, "v_grid is empty");
  for (double v : v_grid)
    if (!(v > eps && v <= 1.0))
      throw Error(ErrorKind::kConfig, "v_grid entries must lie in (tau/T, 1]");
}

bool McReport::operator==(const McReport& o) const {
  return report_to_json(*this) == report_to_json(o);
}

bool McReport::all_pass() const {
  for (const auto& v : verdicts)
    if (!v.informational && !v.pass) return false;
  return true;
}

std::vector<double> McReport::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw Error(ErrorKind::kConfig, "no per-rep column '" + name + "'");
  const auto j = static_cast<std::size_t>(it - columns.begin());
  std::vector<double> out;
  out.reserve(per_rep.size());
  for (const auto& row : per_rep) out.push_back(row[j]);
  return out;
}

const Verdict* McReport::verdict(const std::string& name) const {
  for (const auto& v : verdicts)
    if (v.name == name) return &v;
  return nullptr;
}

McReport run_mc(const McConfig& cfg) {
  cfg.validate();
  const Experiment ex = make_experiment(cfg);

  std::vector<std::optional<std::vector<double>>> slots(cfg.reps);
  std::vector<std::string> errors(cfg.reps);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < cfg.reps;) {
      try {
        auto rec = ex.rep(i);
        bool finite = true;
        for (double v : rec) finite = finite && std::isfinite(v);
        if (!finite) throw Error(ErrorKind::kNumericalFailure, "non-finite record");
        slots[i] = std::move(rec);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  unsigned nw = cfg.workers ? cfg.workers : std::max(1u, std::thread::hardware_concurrency());
  nw = static_cast<unsigned>(std::min<std::size_t>(nw, cfg.reps));
  if (nw <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < nw; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  McReport rep;
  rep.experiment = cfg.experiment;
  rep.config = cfg;
  rep.config.workers = 0;
  rep.config.out.clear();
  rep.tolerances = kTolerances;
  rep.columns = {"rep"};
  rep.columns.insert(rep.columns.end(), ex.columns.begin(), ex.columns.end());
  for (std::size_t i = 0; i < cfg.reps; ++i) {
    if (slots[i]) {
      std::vector<double> row{static_cast<double>(i)};
      row.insert(row.end(), slots[i]->begin(), slots[i]->end());
      rep.per_rep.push_back(std::move(row));
    } else {
      rep.failures.push_back({i, errors[i]});
    }
  }
  const double fail_frac =
      static_cast<double>(rep.failures.size()) / static_cast<double>(cfg.reps);
  rep.summary["n_ok"] = static_cast<double>(rep.per_rep.size());
  rep.summary["failure_fraction"] = fail_frac;
  verdict(rep, "run_failures", fail_frac <= 0.05, fail_frac, 0.05, "at most 5% failed replications");
  if (rep.per_rep.size() >= 2) {
    try {
      ex.summarize(rep);
    } catch (const std::exception& e) {
      verdict(rep, "summary", false, kNaN, kNaN, std::string("summary failed: ") + e.what());
    }
  }
  return rep;
}

std::string report_to_json(const McReport& r) {
  json j;
  j["experiment"] = r.experiment;
  j["config"] = config_json(r.config);
  j["tolerances"] = r.tolerances;
  j["columns"] = r.columns;
  json rows = json::array();
  for (const auto& row : r.per_rep) {
    json jr = json::array();
    for (double v : row) jr.push_back(num(v));
    rows.push_back(jr);
  }
  j["per_rep"] = rows;
  json fails = json::array();
  for (const auto& f : r.failures) fails.push_back({{"rep", f.rep}, {"message", f.message}});
  j["failures"] = fails;
  json summ = json::object(), theo = json::object();
  for (const auto& [k, v] : r.summary) summ[k] = num(v);
  for (const auto& [k, v] : r.theory) theo[k] = num(v);
  j["summary"] = summ;
  j["theory"] = theo;
  json verds = json::array();
  for (const auto& v : r.verdicts)
    verds.push_back({{"name", v.name},
                     {"pass", v.pass},
                     {"informational", v.informational},
                     {"value", num(v.value)},
                     {"target", num(v.target)},
                     {"rule", v.rule}});
  j["verdicts"] = verds;
  json curves;
  curves["header"] = r.curves.header;
  json crow = json::array();
  for (const auto& row : r.curves.rows) {
    json jr = json::array();
    for (double v : row) jr.push_back(num(v));
    crow.push_back(jr);
  }
  curves["rows"] = crow;
  j["curves"] = curves;
  j["all_pass"] = r.all_pass();
  return j.dump(2);
}

McReport report_from_json(const std::string& text) {
  McReport r;
  try {
    const json j = json::parse(text);
    r.experiment = j.at("experiment").get<std::string>();
    r.config = config_of(j.at("config"));
    r.tolerances = j.at("tolerances").get<std::string>();
    r.columns = j.at("columns").get<std::vector<std::string>>();
    for (const auto& row : j.at("per_rep")) {
      std::vector<double> v;
      for (const auto& x : row) v.push_back(num(x));
      r.per_rep.push_back(std::move(v));
    }
    for (const auto& f : j.at("failures"))
      r.failures.push_back({f.at("rep").get<std::size_t>(), f.at("message").get<std::string>()});
    for (auto it = j.at("summary").begin(); it != j.at("summary").end(); ++it)
      r.summary[it.key()] = num(it.value());
    for (auto it = j.at("theory").begin(); it != j.at("theory").end(); ++it)
      r.theory[it.key()] = num(it.value());
    for (const auto& v : j.at("verdicts"))
      r.verdicts.push_back({v.at("name").get<std::string>(), v.at("pass").get<bool>(),
                            v.at("informational").get<bool>(), num(v.at("value")),
                            num(v.at("target")), v.at("rule").get<std::string>()});
    r.curves.header = j.at("curves").at("header").get<std::vector<std::string>>();
    for (const auto& row : j.at("curves").at("rows")) {
      std::vector<double> v;
      for (const auto& x : row) v.push_back(num(x));
      r.curves.rows.push_back(std::move(v));
    }
  } catch (const json::exception& ex) {
    throw Error(ErrorKind::kIo, std::string("malformed report: ") + ex.what());
  }
  return r;
}

void emit_report(const McReport& report, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create '" + dir + "': " + ec.message());
  const std::string jpath = (fs::path(dir) / "report.json").string();
  std::ofstream out(jpath);
  if (!out) throw Error(ErrorKind::kIo, "cannot open '" + jpath + "' for writing");
  out << report_to_json(report) << '\n';
  if (!out) throw Error(ErrorKind::kIo, "write failed for '" + jpath + "'");
  write_csv((fs::path(dir) / "per_rep.csv").string(), Table{report.columns, report.per_rep});
  if (!report.curves.header.empty())
    write_csv((fs::path(dir) / "curves.csv").string(), report.curves);
}

McConfig config_from_json(const std::string& text) {
  try {
    return config_of(json::parse(text));
  } catch (const json::parse_error& ex) {
    throw Error(ErrorKind::kConfig, ex.what());
  }
}

std::string config_to_json(const McConfig& cfg) { return config_json(cfg).dump(2); }

McConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

}  // namespace hou
