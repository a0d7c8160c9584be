// ising: command-line front end for the tising library.
//
// Every subcommand takes --out PREFIX. Results go to PREFIX.json, array data
// to PREFIX.tsv or PREFIX.spins, and wall-clock details to PREFIX.meta.json so
// that the first two are byte-for-byte reproducible. Without --out the result
// JSON is printed on stdout.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "tising/tising.hpp"

using json = nlohmann::json;
using namespace tising;

namespace {

struct Common {
  std::string out;
  std::uint64_t seed = 1;
  int threads = 0;
};

// Non-finite values have no JSON literal; they are written as strings.
json num(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

json interval(const Interval& i) { return json::array({num(i.lo), num(i.hi)}); }

json report_json(const EstimateReport& r) {
  json j;
  j["estimate"] = num(r.estimate);
  j["exists"] = r.exists;
  j["sentinel"] = r.is_sentinel() ? json(r.estimate > 0 ? "+inf" : "-inf") : json(nullptr);
  j["residual"] = num(r.residual);
  j["iterations"] = r.iterations;
  j["std_error"] = r.std_error ? num(*r.std_error) : json(nullptr);
  j["ci"] = r.ci ? interval(*r.ci) : json(nullptr);
  return j;
}

json curve_json(const CurveInterval& ci) {
  json pts = json::array();
  for (double c : ci.curve_points) pts.push_back(num(c));
  return {{"regular", interval(ci.regular)}, {"curve_points", pts}, {"enclosing", interval(ci.enclosing)}};
}

int resolve_threads(int flag) {
  if (const char* env = std::getenv("ISING_THREADS")) {
    try {
      const int t = std::stoi(env);
      if (t > 0) return t;
    } catch (const std::exception&) {
    }
    throw Error("ISING_THREADS must be a positive integer");
  }
  return flag > 0 ? flag : default_threads();
}

std::ofstream open_output(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write '" + path + "'");
  return f;
}

// Parse errors from files are reported as "path: message (line k)".
template <class F>
auto load(const std::string& path, F reader) {
  try {
    return reader(path);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + std::string(e.what()).substr(0, std::string(e.what()).rfind(" (line")), e.line());
  }
}

class Run {
 public:
  Run(std::string command, const Common& c) : command_(std::move(command)), common_(c) {
    start_ = std::chrono::steady_clock::now();
  }

  std::string path(const std::string& ext) const { return common_.out + ext; }
  bool to_files() const { return !common_.out.empty(); }

  void finish(json result, const json& config, int threads) {
    result["command"] = command_;
    result["config"] = config;
    const std::string text = result.dump(2) + "\n";
    if (!to_files()) {
      std::cout << text;
      return;
    }
    open_output(path(".json")) << text;
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    char stamp[32];
    const std::time_t now = std::time(nullptr);
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    json meta{{"command", command_}, {"runtime_seconds", secs}, {"threads", threads}, {"finished_utc", stamp}};
    open_output(path(".meta.json")) << meta.dump(2) << "\n";
    std::cerr << "wrote " << path(".json") << "\n";
  }

 private:
  std::string command_;
  Common common_;
  std::chrono::steady_clock::time_point start_;
};

// ---------------------------------------------------------------------------
// sample
// ---------------------------------------------------------------------------

struct SampleArgs {
  std::string model = "cw";
  double beta = 0.0;
  double h = 0.0;
  int p = 2;
  int n = 100;
  int sweeps = 1000;
  int thin = 5;
  std::size_t count = 1;
  bool magnetization = false;
  double theta = 1.0;
  std::string edges;
  std::string hsbm;
  std::vector<int> parts;
};

SparseTensor sample_tensor(const SampleArgs& a, std::uint64_t seed) {
  const std::uint64_t gseed = derive_seed(seed, 0x67726170ULL);
  if (a.model == "sk") return gen_sk(a.p, a.n, gseed);
  if (a.model == "er") return gen_hsbm(HsbmSpec::erdos_renyi(a.p, a.theta), a.n, gseed);
  if (a.model == "hsbm") {
    if (a.hsbm.empty()) throw Error("--model hsbm needs --spec");
    return gen_hsbm(load(a.hsbm, [](const std::string& f) { return read_hsbm_spec(f); }), a.n, gseed);
  }
  if (a.model == "partite") {
    if (a.parts.empty()) throw Error("--model partite needs --parts");
    return gen_partite(static_cast<int>(a.parts.size()), a.parts, a.theta, gseed);
  }
  if (a.model == "file") {
    if (a.edges.empty()) throw Error("--model file needs --edges");
    return load(a.edges, [](const std::string& f) { return read_hyperedges(f); });
  }
  throw Error("unknown model '" + a.model + "'");
}

void cmd_sample(const SampleArgs& a, const Common& c) {
  Run run("sample", c);
  json config{{"model", a.model}, {"beta", a.beta}, {"h", a.h}, {"seed", c.seed}, {"count", a.count}};
  json result;
  std::ostringstream data;
  std::string ext = ".spins";

  if (a.model == "cw") {
    const CwSpec spec{a.beta, a.h, a.p, a.n};
    spec.validate();
    config["p"] = a.p;
    config["n"] = a.n;
    config["magnetization"] = a.magnetization;
    result["path"] = "exact";
    const MagnetizationSampler sampler(spec);
    Rng rng(c.seed);
    double sum = 0.0;
    for (std::size_t k = 0; k < a.count; ++k) {
      const int plus = sampler.draw_count(rng);
      const double xbar = (2.0 * plus - a.n) / a.n;
      sum += xbar;
      // The law is exchangeable given the count, so a uniform shuffle is exact.
      if (a.magnetization)
        data << format_double(xbar) << '\n';
      else
        write_spin_row(data, SpinVector::with_count(static_cast<std::size_t>(a.n), static_cast<std::size_t>(plus), rng));
    }
    if (a.magnetization) ext = ".tsv";
    result["mean_magnetization"] = num(sum / static_cast<double>(a.count));
  } else {
    const auto t = sample_tensor(a, c.seed);
    config["sweeps"] = a.sweeps;
    config["thin"] = a.thin;
    if (a.model == "file") config["edges"] = a.edges;
    else {
      config["p"] = t.p();
      config["n"] = t.n();
      config["theta"] = a.theta;
    }
    result["path"] = "gibbs";
    result["edges"] = t.edge_count();
    Rng rng(derive_seed(c.seed, 1));
    const auto x0 = SpinVector::random(static_cast<std::size_t>(t.n()), rng);
    const std::vector<double> field(static_cast<std::size_t>(t.n()), a.h);
    const auto states = gibbs_chain(t, x0, a.beta, field, a.count, derive_seed(c.seed, 2), {a.sweeps, a.thin});
    double sum = 0.0;
    for (const auto& s : states) {
      sum += s.mean();
      if (a.magnetization)
        data << format_double(s.mean()) << '\n';
      else
        write_spin_row(data, s);
    }
    if (a.magnetization) ext = ".tsv";
    result["mean_magnetization"] = num(sum / static_cast<double>(a.count));
  }

  if (run.to_files()) {
    open_output(run.path(ext)) << data.str();
  } else {
    std::cout << data.str();
  }
  run.finish(result, config, 1);
}

// ---------------------------------------------------------------------------
// estimate
// ---------------------------------------------------------------------------

struct EstimateArgs {
  std::string method;
  std::string data;
  std::optional<double> xbar;
  std::optional<int> n;
  double beta = 0.0;
  double h = 0.0;
  int p = 2;
  double level = 0.95;
  std::string edges;
  bool diagnostics = false;
  std::string network;
  std::string covariates;
  double delta = 1.0;
  std::optional<double> lambda;
  int max_iter = 10000;
  double tol = 1e-12;
};

void cmd_estimate(const EstimateArgs& a, const Common& c) {
  Run run("estimate", c);
  json config{{"method", a.method}};
  json result;

  std::optional<SpinVector> x;
  if (!a.data.empty()) {
    x = load(a.data, [](const std::string& f) { return read_spins(f); });
    config["data"] = a.data;
  }

  if (a.method == "mle-beta" || a.method == "mle-h") {
    double xbar = 0.0;
    int n = 0;
    if (x) {
      xbar = x->mean();
      n = static_cast<int>(x->size());
    } else {
      if (!a.xbar || !a.n) throw Error(a.method + " needs --data or both --xbar and --n");
      xbar = *a.xbar;
      n = *a.n;
    }
    config["p"] = a.p;
    config["n"] = n;
    config["xbar"] = num(xbar);
    config["level"] = a.level;
    const bool for_h = a.method == "mle-h";
    if (for_h) config["beta"] = a.beta;
    else config["h"] = a.h;
    const auto rep = for_h ? mle_h(a.beta, a.p, n, xbar) : mle_beta(a.h, a.p, n, xbar);
    result = report_json(rep);
    result["ci"] = nullptr;
    if (!rep.is_sentinel()) {
      try {
        const auto ci = for_h ? confidence_interval_h(a.beta, a.p, n, xbar, rep.estimate, a.level)
                              : confidence_interval_beta(a.h, a.p, n, xbar, rep.estimate, a.level);
        result["ci"] = curve_json(ci);
      } catch (const DomainError& e) {
        result["ci_note"] = e.what();
      }
    }
  } else if (a.method == "mple") {
    if (!x) throw Error("mple needs --data");
    const int n = static_cast<int>(x->size());
    EstimateReport rep;
    json diag;
    if (!a.edges.empty()) {
      const auto t = load(a.edges, [](const std::string& f) { return read_hyperedges(f); });
      config["edges"] = a.edges;
      rep = mple(t, *x);
      if (a.diagnostics) {
        diag["codegree_norm"] = num(codegree_norm(t));
        diag["local_interaction_norm"] = num(local_interaction_norm(t, *x));
      }
    } else {
      const DenseCw m(a.p, n);
      config["p"] = a.p;
      config["model"] = "cw";
      rep = mple(m, *x);
      result["closed_form"] = num(mple_cw_closed_form(a.p, x->mean()));
      if (!rep.is_sentinel() && std::abs(x->mean()) < 1.0 && x->mean() != 0.0) {
        try {
          const auto ci = mple_cw_ci(a.p, x->mean(), n, a.level);
          rep.std_error = ci.std_error;
          rep.ci = ci.ci;
        } catch (const DomainError& e) {
          result["ci_note"] = e.what();
        }
      }
      if (a.diagnostics) diag["local_interaction_norm"] = num(local_interaction_norm(m, *x));
    }
    const json base = report_json(rep);
    result.update(base);
    if (a.diagnostics) result["diagnostics"] = diag;
  } else if (a.method == "pmple") {
    if (!x || a.network.empty() || a.covariates.empty()) throw Error("pmple needs --data, --network and --covariates");
    CovariateModel model;
    model.Z = load(a.covariates, [](const std::string& f) { return read_matrix_csv(f); });
    model.A = load(a.network, [&](const std::string& f) { return read_network(f, static_cast<int>(model.Z.rows())); });
    model.theta = Eigen::VectorXd::Zero(model.Z.cols());
    model.validate();
    config["network"] = a.network;
    config["covariates"] = a.covariates;
    config["delta"] = a.delta;
    config["max_iter"] = a.max_iter;
    config["tol"] = a.tol;
    if (a.lambda) config["lambda"] = *a.lambda;
    const auto fit = a.lambda ? fit_penalized_lambda(model, *x, *a.lambda, a.max_iter, a.tol)
                              : fit_penalized(model, *x, a.delta, a.max_iter, a.tol);
    result["lambda"] = num(fit.lambda);
    result["beta"] = num(fit.gamma_hat(0));
    json theta = json::array();
    for (Eigen::Index k = 1; k < fit.gamma_hat.size(); ++k) theta.push_back(num(fit.gamma_hat(k)));
    result["theta"] = theta;
    result["support"] = fit.support;
    result["converged"] = fit.converged;
    result["iterations"] = fit.iterations;
    result["kkt_residual"] = num(fit.kkt_residual);
    const auto ar = assumption_report(model);
    result["assumptions"] = {{"violated", ar.violated},
                             {"a_inf_norm", num(ar.a_inf_norm)},
                             {"lambda_min_ztz", num(ar.lambda_min_ztz)},
                             {"dobrushin", num(ar.dobrushin)}};
  } else {
    throw Error("unknown method '" + a.method + "'");
  }
  run.finish(result, config, 1);
}

// ---------------------------------------------------------------------------
// threshold
// ---------------------------------------------------------------------------

struct ThresholdArgs {
  bool er = false;
  bool equipartite = false;
  bool cw_table = false;
  bool beta_tilde = false;
  bool special = false;
  std::string hsbm;
  int p = 2;
  double theta = 1.0;
  double tol = 1e-6;
};

void cmd_threshold(const ThresholdArgs& a, const Common& c) {
  Run run("threshold", c);
  json config{{"p", a.p}, {"tol", a.tol}};
  json result;
  if (a.er || !a.hsbm.empty()) {
    HsbmSpec spec;
    if (!a.hsbm.empty()) {
      spec = load(a.hsbm, [](const std::string& f) { return read_hsbm_spec(f); });
      config["kind"] = "hsbm";
      config["spec"] = a.hsbm;
    } else {
      spec = HsbmSpec::erdos_renyi(a.p, a.theta);
      config["kind"] = "er";
      config["theta"] = a.theta;
    }
    const auto r = threshold_hsbm(spec, a.tol);
    result["beta_star"] = num(r.beta_star);
    result["tolerance"] = num(r.tolerance);
    json t = json::array();
    for (double v : r.argmax_t) t.push_back(num(v));
    result["argmax_t"] = t;
    std::cerr << "beta* = " << format_double(r.beta_star) << "\n";
  } else if (a.equipartite) {
    config["kind"] = "equipartite";
    config["theta"] = a.theta;
    result["beta_star"] = num(threshold_equipartite(a.p, a.theta, a.tol));
  } else if (a.cw_table) {
    config["kind"] = "cw-table";
    json rows = json::array();
    for (const auto& [p, b] : cw_threshold_table(a.p, a.tol)) rows.push_back({{"p", p}, {"beta_star", num(b)}});
    result["table"] = rows;
  } else if (a.beta_tilde) {
    config["kind"] = "beta-tilde";
    result["beta_tilde"] = num(beta_tilde(a.p));
  } else if (a.special) {
    config["kind"] = "special";
    const auto sp = special_point(a.p);
    result["beta"] = num(sp.beta);
    result["h"] = num(sp.h);
  } else {
    throw Error("threshold needs one of --er, --hsbm, --equipartite, --cw-table, --beta-tilde, --special");
  }
  run.finish(result, config, 1);
}

// ---------------------------------------------------------------------------
// phasediagram
// ---------------------------------------------------------------------------

struct PhaseArgs {
  int p = 4;
  int grid = 200;
  double beta_lo = 0.0;
  double beta_hi = 1.0;
  double h_lo = -0.5;
  double h_hi = 0.5;
};

void cmd_phasediagram(const PhaseArgs& a, const Common& c) {
  Run run("phasediagram", c);
  const int threads = resolve_threads(c.threads);
  const auto d = phase_diagram(a.p, {a.beta_lo, a.beta_hi}, {a.h_lo, a.h_hi}, a.grid, threads);
  std::ostringstream tsv;
  write_phase_diagram_tsv(tsv, d);
  json config{{"p", a.p}, {"grid", a.grid}, {"beta_range", {a.beta_lo, a.beta_hi}}, {"h_range", {a.h_lo, a.h_hi}}};
  json counts{{"regular", 0}, {"special", 0}, {"weakly_critical", 0}, {"strongly_critical", 0}};
  for (const auto& cell : d.cells) {
    switch (cell.kind) {
      case PointKind::Regular:
        counts["regular"] = counts["regular"].get<int>() + 1;
        break;
      case PointKind::Special:
        counts["special"] = counts["special"].get<int>() + 1;
        break;
      case PointKind::WeaklyCritical:
        counts["weakly_critical"] = counts["weakly_critical"].get<int>() + 1;
        break;
      case PointKind::StronglyCritical:
        counts["strongly_critical"] = counts["strongly_critical"].get<int>() + 1;
        break;
    }
  }
  json result{{"cells", d.cells.size()}, {"counts", counts}};
  if (run.to_files()) {
    open_output(run.path(".tsv")) << tsv.str();
  } else {
    std::cout << tsv.str();
  }
  run.finish(result, config, threads);
}

// ---------------------------------------------------------------------------
// gof
// ---------------------------------------------------------------------------

struct GofArgs {
  std::string graph;
  std::string data;
  int sims = 100;
  int burn_in = 1000;
  int thin = 5;
};

void cmd_gof(const GofArgs& a, const Common& c) {
  Run run("gof", c);
  const auto g = load(a.graph, [](const std::string& f) { return read_hyperedges(f); });
  const auto x = load(a.data, [](const std::string& f) { return read_spins(f); });
  const auto r = gof_test(g, x, a.sims, c.seed, {a.burn_in, a.thin});
  json config{{"graph", a.graph}, {"data", a.data}, {"sims", a.sims}, {"seed", c.seed},
              {"burn_in", a.burn_in}, {"thin", a.thin}};
  json result{{"verdict", to_string(r.verdict)},
              {"beta_hat", num(r.beta_hat)},
              {"observed", num(r.observed)},
              {"band", interval(r.band)}};
  std::cerr << "band [" << format_double(r.band.lo) << ", " << format_double(r.band.hi) << "] observed "
            << format_double(r.observed) << ": " << to_string(r.verdict) << "\n";
  run.finish(result, config, 1);
}

// ---------------------------------------------------------------------------
// mc
// ---------------------------------------------------------------------------

struct McArgs {
  std::string experiment = "sampling";
  std::string estimator = "mean";
  std::string target = "h";
  double beta = 0.0;
  double h = 0.0;
  int p = 2;
  int n = 1000;
  int reps = 1000;
  std::optional<double> scaling;
  int bins = 50;
  double level = 0.95;
};

Estimator parse_estimator(const std::string& s) {
  for (auto e : {Estimator::Mean, Estimator::MleH, Estimator::MleBeta, Estimator::Mple})
    if (s == to_string(e)) return e;
  throw Error("unknown estimator '" + s + "'");
}

void cmd_mc(const McArgs& a, const Common& c) {
  Run run("mc", c);
  const int threads = resolve_threads(c.threads);
  const CwSpec model{a.beta, a.h, a.p, a.n};
  json config{{"experiment", a.experiment}, {"beta", a.beta}, {"h", a.h}, {"p", a.p},
              {"n", a.n}, {"reps", a.reps}, {"seed", c.seed}};
  json result;
  std::ostringstream tsv;
  if (a.experiment == "sampling") {
    ExperimentSpec spec;
    spec.model = model;
    spec.estimator = parse_estimator(a.estimator);
    spec.replications = a.reps;
    spec.seed = c.seed;
    spec.bins = a.bins;
    spec.threads = threads;
    if (a.scaling) spec.scaling = *a.scaling;
    config["estimator"] = a.estimator;
    config["scaling"] = spec.scaling;
    config["bins"] = a.bins;
    const auto r = run_sampling_distribution(spec);
    const auto& hs = r.histogram;
    result = {{"kind", to_string(r.kind)},
              {"center", num(r.center)},
              {"mean", num(hs.mean)},
              {"sd", num(hs.sd)},
              {"skewness", num(hs.skewness)},
              {"excess_kurtosis", num(hs.excess_kurtosis)},
              {"nonfinite", hs.nonfinite},
              {"reference", hs.reference}};
    write_histogram_tsv(tsv, hs);
  } else if (a.experiment == "coverage") {
    CoverageSpec spec;
    spec.model = model;
    spec.target = a.target == "beta" ? Target::Beta : Target::H;
    if (a.target != "h" && a.target != "beta") throw Error("--target must be h or beta");
    spec.replications = a.reps;
    spec.level = a.level;
    spec.seed = c.seed;
    spec.threads = threads;
    config["target"] = a.target;
    config["level"] = a.level;
    const auto r = run_coverage(spec);
    json pts = json::array();
    for (double v : r.curve_points) pts.push_back(num(v));
    result = {{"coverage", num(r.coverage)}, {"curve_points", pts}};
    tsv << "xbar\testimate\tlo\thi\tcovered\n";
    for (const auto& rec : r.records)
      tsv << format_double(rec.xbar) << '\t' << format_double(rec.estimate) << '\t' << format_double(rec.lo) << '\t'
          << format_double(rec.hi) << '\t' << (rec.covered ? 1 : 0) << '\n';
  } else {
    throw Error("unknown experiment '" + a.experiment + "'");
  }
  if (run.to_files()) open_output(run.path(".tsv")) << tsv.str();
  run.finish(result, config, threads);
}

void add_common(CLI::App* app, Common& c) {
  app->add_option("--out", c.out, "Output prefix; results go to PREFIX.json");
  app->add_option("--seed", c.seed, "Random seed");
  app->add_option("--threads", c.threads, "Worker threads (ISING_THREADS overrides)")->check(CLI::NonNegativeNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inference and simulation for p-tensor Ising models"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.require_subcommand(1);
  Common common;

  SampleArgs sa;
  auto* sample = app.add_subcommand("sample", "Draw spin configurations");
  sample->add_option("--model", sa.model)->check(CLI::IsMember({"cw", "sk", "er", "hsbm", "partite", "file"}));
  sample->add_option("--beta", sa.beta);
  sample->add_option("--h", sa.h);
  sample->add_option("--p", sa.p);
  sample->add_option("--n", sa.n);
  sample->add_option("--sweeps", sa.sweeps, "Burn-in sweeps for Gibbs models");
  sample->add_option("--thin", sa.thin);
  sample->add_option("--count", sa.count);
  sample->add_option("--theta", sa.theta, "Edge probability for er and partite");
  sample->add_option("--edges", sa.edges, "Hyperedge file for --model file");
  sample->add_option("--spec", sa.hsbm, "HSBM spec file for --model hsbm");
  sample->add_option("--parts", sa.parts, "Part sizes for --model partite");
  sample->add_flag("--magnetization", sa.magnetization, "Write magnetizations instead of spins");
  add_common(sample, common);

  EstimateArgs ea;
  auto* estimate = app.add_subcommand("estimate", "Fit a parameter");
  estimate->add_option("--method", ea.method)->required()->check(CLI::IsMember({"mle-beta", "mle-h", "mple", "pmple"}));
  estimate->add_option("--data", ea.data, "Spin file");
  estimate->add_option("--xbar", ea.xbar);
  estimate->add_option("--n", ea.n);
  estimate->add_option("--beta", ea.beta);
  estimate->add_option("--h", ea.h);
  estimate->add_option("--p", ea.p);
  estimate->add_option("--level", ea.level);
  estimate->add_option("--edges", ea.edges, "Hyperedge file; default is the Curie-Weiss model");
  estimate->add_flag("--diagnostics", ea.diagnostics);
  estimate->add_option("--network", ea.network, "Network edge list for pmple");
  estimate->add_option("--covariates", ea.covariates, "Covariate CSV for pmple");
  estimate->add_option("--delta", ea.delta);
  estimate->add_option("--lambda", ea.lambda);
  estimate->add_option("--max-iter", ea.max_iter);
  estimate->add_option("--tol", ea.tol);
  add_common(estimate, common);

  ThresholdArgs ta;
  auto* threshold = app.add_subcommand("threshold", "Estimability thresholds");
  threshold->add_flag("--er", ta.er);
  threshold->add_flag("--equipartite", ta.equipartite);
  threshold->add_flag("--cw-table", ta.cw_table, "Table for p = 2..P");
  threshold->add_flag("--beta-tilde", ta.beta_tilde);
  threshold->add_flag("--special", ta.special);
  threshold->add_option("--hsbm", ta.hsbm, "HSBM spec file");
  threshold->add_option("--p", ta.p);
  threshold->add_option("--theta", ta.theta);
  threshold->add_option("--tol", ta.tol);
  add_common(threshold, common);

  PhaseArgs pa;
  auto* phase = app.add_subcommand("phasediagram", "Classify a (beta, h) grid");
  phase->add_option("--p", pa.p);
  phase->add_option("--grid", pa.grid);
  phase->add_option("--beta-lo", pa.beta_lo);
  phase->add_option("--beta-hi", pa.beta_hi);
  phase->add_option("--h-lo", pa.h_lo);
  phase->add_option("--h-hi", pa.h_hi);
  add_common(phase, common);

  GofArgs ga;
  auto* gof = app.add_subcommand("gof", "Simulation goodness-of-fit test");
  gof->add_option("--graph", ga.graph)->required();
  gof->add_option("--data", ga.data)->required();
  gof->add_option("--sims", ga.sims);
  gof->add_option("--burn-in", ga.burn_in);
  gof->add_option("--thin", ga.thin);
  add_common(gof, common);

  McArgs ma;
  auto* mc = app.add_subcommand("mc", "Monte-Carlo experiments on the Curie-Weiss model");
  mc->add_option("--experiment", ma.experiment)->check(CLI::IsMember({"sampling", "coverage"}));
  mc->add_option("--estimator", ma.estimator)->check(CLI::IsMember({"mean", "mle-h", "mle-beta", "mple"}));
  mc->add_option("--target", ma.target)->check(CLI::IsMember({"h", "beta"}));
  mc->add_option("--beta", ma.beta);
  mc->add_option("--h", ma.h);
  mc->add_option("--p", ma.p);
  mc->add_option("--n", ma.n);
  mc->add_option("--reps", ma.reps);
  mc->add_option("--scaling", ma.scaling);
  mc->add_option("--bins", ma.bins);
  mc->add_option("--level", ma.level);
  add_common(mc, common);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sample) cmd_sample(sa, common);
    else if (*estimate) cmd_estimate(ea, common);
    else if (*threshold) cmd_threshold(ta, common);
    else if (*phase) cmd_phasediagram(pa, common);
    else if (*gof) cmd_gof(ga, common);
    else if (*mc) cmd_mc(ma, common);
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
