#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gibbs/retrodiction.hpp"
#include "gibbs/workbench.hpp"

using namespace gibbs;

namespace {

enum class OutputMode { defaulted, json, table };

struct GlobalOpts {
  std::string model_spec;
  std::string data_path;
  std::vector<int> m_values;
  double level = 0.95;
  std::uint64_t seed = 0;
  OutputMode mode = OutputMode::defaulted;
};

bool want_json(const GlobalOpts& g, bool json_default) {
  if (g.mode == OutputMode::json) return true;
  if (g.mode == OutputMode::table) return false;
  return json_default;
}

GibbsModel need_model(const GlobalOpts& g) {
  if (g.model_spec.empty())
    throw ValidationError("this command needs --model <spec> "
                          "(dp:theta=<v> | py:sigma=<v>,theta=<v> | gg:sigma=<v>,beta=<v>)");
  return parse_model(g.model_spec);
}

Dataset need_data(const GlobalOpts& g) {
  if (g.data_path.empty()) throw ValidationError("this command needs --data <file>");
  return load_dataset(g.data_path);
}

int need_single_m(const GlobalOpts& g, const std::string& command) {
  if (g.m_values.size() != 1)
    throw ValidationError(command + " needs exactly one --m value");
  return g.m_values[0];
}

// Composition grammar: <count>x<size>[+<count>x<size>...], e.g. 32x1+1x8.
std::vector<int> parse_composition(const std::string& text) {
  std::vector<int> out;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t plus = text.find('+', pos);
    std::string term =
        text.substr(pos, plus == std::string::npos ? std::string::npos : plus - pos);
    size_t x = term.find('x');
    auto parse_int = [&term](const std::string& digits, const char* what) {
      char* end = nullptr;
      long v = std::strtol(digits.c_str(), &end, 10);
      if (end == digits.c_str() || *end != '\0' || v < 1)
        throw ValidationError("composition grammar: bad " + std::string(what) + " in '" +
                              term + "' (expected <count>x<size>, e.g. 32x1+1x8)");
      return static_cast<int>(v);
    };
    if (x == std::string::npos)
      throw ValidationError("composition grammar: expected <count>x<size>, got '" + term + "'");
    int count = parse_int(term.substr(0, x), "count");
    int size = parse_int(term.substr(x + 1), "size");
    out.insert(out.end(), count, size);
    if (plus == std::string::npos) break;
    pos = plus + 1;
  }
  if (out.empty()) throw ValidationError("composition grammar: empty composition");
  return out;
}

void emit(const nlohmann::json& doc) { std::cout << doc.dump(2) << "\n"; }

nlohmann::json params_json(ModelFamily family, const GibbsModel& model) {
  switch (family) {
    case ModelFamily::dirichlet:
      return {{"theta", scale_of(model)}};
    case ModelFamily::poisson_dirichlet:
      return {{"sigma", sigma_of(model)}, {"theta", scale_of(model)}};
    default:
      return {{"sigma", sigma_of(model)}, {"beta", scale_of(model)}};
  }
}

int run_fit(const GlobalOpts& g, const std::string& family_tag, double sigma_step) {
  Dataset d = need_data(g);
  ModelFamily family = parse_family(family_tag);
  FitOptions options;
  options.sigma_step = sigma_step;
  FitResult fit = fit_empirical_bayes(d.sample, family, options);
  if (want_json(g, true)) {
    emit({{"family", family_name(family)},
          {"params", params_json(family, fit.model)},
          {"log_likelihood", fit.log_likelihood},
          {"converged", fit.converged},
          {"boundary", fit.boundary}});
  } else {
    std::cout << "family         " << family_name(family) << "\n"
              << "model          " << format_model(fit.model) << "\n"
              << "log_likelihood " << fit.log_likelihood << "\n"
              << "converged      " << (fit.converged ? "yes" : "no") << "\n"
              << "boundary       " << (fit.boundary ? "yes" : "no") << "\n";
  }
  return fit.converged ? 0 : 4;
}

int run_predict(const GlobalOpts& g) {
  Dataset d = need_data(g);
  GibbsModel model = need_model(g);
  PredictReport report = predict_report(d, model, g.m_values, g.level);
  if (want_json(g, false))
    emit(to_json(report));
  else
    std::cout << render_text(report);
  return 0;
}

int run_unseen(const GlobalOpts& g, int retain_top_r, std::vector<int> forbid_levels,
               int forbid_count) {
  int selectors = (retain_top_r > 0 ? 1 : 0) + (forbid_levels.empty() ? 0 : 1) +
                  (forbid_count > 0 ? 1 : 0);
  if (selectors != 1)
    throw ValidationError(
        "unseen needs exactly one of --retain-top-r, --forbid-levels, --forbid-count");
  Dataset d = need_data(g);
  GibbsModel model = need_model(g);
  const SampleSummary& sample = d.sample;

  nlohmann::json query;
  // The selector fixes which observed clusters may reappear; the reported
  // probability is that every other cluster stays absent from the next m draws.
  auto probability = [&](int m) -> double {
    if (retain_top_r > 0) {
      query = {{"retain_top_r", retain_top_r}};
      return avoid_top_expressed(model, sample, m, retain_top_r);
    }
    std::vector<int> retained;
    if (!forbid_levels.empty()) {
      query = {{"forbid_levels", forbid_levels}};
      for (int level : forbid_levels)
        if (!sample.multiplicities.count(level))
          throw ValidationError("forbid-levels: no cluster has frequency " +
                                std::to_string(level));
      for (int i = 0; i < sample.j; ++i) {
        bool forbidden = false;
        for (int level : forbid_levels) forbidden = forbidden || sample.frequencies[i] == level;
        if (!forbidden) retained.push_back(i);
      }
    } else {
      query = {{"forbid_count", forbid_count}};
      if (forbid_count >= sample.j)
        throw ValidationError("forbid-count: must forbid fewer than j clusters");
      std::vector<int> order(sample.j);
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return sample.frequencies[a] < sample.frequencies[b];
      });
      retained.assign(order.begin() + forbid_count, order.end());
    }
    return avoidance_probability(model, sample, m, make_retained(sample, retained));
  };

  nlohmann::json rows = nlohmann::json::array();
  std::vector<std::vector<std::string>> cells{{"m", "probability"}};
  for (int m : g.m_values) {
    double p = probability(m);
    rows.push_back({{"m", m}, {"probability", p}});
    cells.push_back({std::to_string(m), detail::fixed3(p)});
  }
  if (want_json(g, true)) {
    emit({{"dataset", d.name},
          {"model", format_model(model)},
          {"query", query},
          {"rows", rows}});
  } else if (!g.m_values.empty()) {
    std::cout << detail::render_table(cells);
  }
  return 0;
}

int run_odds(const GlobalOpts& g, const std::string& a_spec, const std::string& b_spec) {
  GibbsModel model = need_model(g);
  std::vector<int> a = parse_composition(a_spec);
  std::vector<int> b = parse_composition(b_spec);
  double odds = configuration_odds(sigma_of(model), a, b);
  if (want_json(g, true)) {
    emit({{"model", format_model(model)},
          {"numerator", a_spec},
          {"denominator", b_spec},
          {"odds", odds}});
  } else {
    std::cout << "odds(" << a_spec << " : " << b_spec << ") = " << odds << "\n";
  }
  return 0;
}

int run_simulate(const GlobalOpts& g, int n, int reps, const std::string& csv_path) {
  GibbsModel model = need_model(g);
  if (reps < 1) throw ValidationError("simulate needs --reps >= 1");
  if (!g.data_path.empty() && n > 0)
    throw ValidationError("simulate: give either --n (partition mode) or --data with --m "
                          "(future mode), not both");
  RngStream base(g.seed);
  std::ofstream csv;
  if (!csv_path.empty()) {
    csv.open(csv_path);
    if (!csv) throw ValidationError("cannot open CSV output file: " + csv_path);
  }

  if (!g.data_path.empty()) {
    // Future mode: condition on the dataset and draw the next m observations.
    Dataset d = need_data(g);
    int m = need_single_m(g, "simulate --data");
    if (csv) csv << "replicate,k,l\n";
    double sum_k = 0.0, sum_l = 0.0;
    for (int i = 0; i < reps; ++i) {
      RngStream rng = base.for_replicate(static_cast<std::uint64_t>(i));
      FutureDraw draw = sample_future(model, d.sample, m, rng);
      sum_k += draw.config.k;
      sum_l += draw.config.s;
      if (csv) csv << i << "," << draw.config.k << "," << draw.config.s << "\n";
    }
    emit({{"mode", "future"},
          {"model", format_model(model)},
          {"dataset", d.name},
          {"m", m},
          {"reps", reps},
          {"seed", g.seed},
          {"mean_k", sum_k / reps},
          {"mean_l", sum_l / reps},
          {"expected_k", expected_new_clusters(model, d.sample, m)},
          {"expected_l", expected_new_observations(model, d.sample, m)}});
    return 0;
  }

  if (n < 1) throw ValidationError("simulate needs --n >= 1 (or --data with --m)");
  if (csv) csv << "replicate,j,largest\n";
  double sum_j = 0.0;
  long long min_j = n + 1, max_j = 0;
  for (int i = 0; i < reps; ++i) {
    RngStream rng = base.for_replicate(static_cast<std::uint64_t>(i));
    PartitionState st = sample_partition(model, n, rng);
    int largest = *std::max_element(st.cluster_sizes.begin(), st.cluster_sizes.end());
    sum_j += st.j();
    min_j = std::min<long long>(min_j, st.j());
    max_j = std::max<long long>(max_j, st.j());
    if (csv) csv << i << "," << st.j() << "," << largest << "\n";
  }
  emit({{"mode", "partition"},
        {"model", format_model(model)},
        {"n", n},
        {"reps", reps},
        {"seed", g.seed},
        {"mean_j", sum_j / reps},
        {"min_j", min_j},
        {"max_j", max_j}});
  return 0;
}

int run_oracle_check(const GlobalOpts& g, double tol) {
  GibbsModel model = need_model(g);
  Dataset d = need_data(g);
  int m = need_single_m(g, "oracle-check");
  std::vector<ConditionalOutcome> rows = enumerate_conditional(model, d.sample, m);

  auto max_diff = [](const std::vector<double>& a, const std::vector<double>& b) {
    double worst = 0.0;
    for (size_t i = 0; i < a.size(); ++i)
      worst = std::max(worst, std::abs(std::exp(a[i]) - std::exp(b[i])));
    return worst;
  };
  DiscreteDistribution ok = oracle_k_marginal(rows, m);
  DiscreteDistribution ak = k_distribution(model, d.sample, m);
  DiscreteDistribution ol = oracle_l_marginal(rows, m);
  DiscreteDistribution al = l_distribution(model, d.sample, m);
  JointDistribution okl = oracle_kl_marginal(rows, m);
  JointDistribution akl = kl_joint_distribution(model, d.sample, m);
  if (ok.support != ak.support || ol.support != al.support || okl.support != akl.support)
    throw NumericRangeError("oracle-check: support mismatch between oracle and analytic paths");
  double diff_k = max_diff(ok.log_probs, ak.log_probs);
  double diff_l = max_diff(ol.log_probs, al.log_probs);
  double diff_kl = max_diff(okl.log_probs, akl.log_probs);
  double mass_err = std::abs(std::exp(oracle_total_log_mass(rows)) - 1.0);
  bool pass = diff_k < tol && diff_l < tol && diff_kl < tol && mass_err < tol;

  emit({{"model", format_model(model)},
        {"dataset", d.name},
        {"n", d.sample.n},
        {"j", d.sample.j},
        {"m", m},
        {"outcomes", rows.size()},
        {"max_abs_diff_k", diff_k},
        {"max_abs_diff_l", diff_l},
        {"max_abs_diff_kl", diff_kl},
        {"total_mass_error", mass_err},
        {"tolerance", tol},
        {"ok", pass}});
  return pass ? 0 : 1;
}

int run_crossval(const GlobalOpts& g, int size, int reps, const std::string& family_tag) {
  Dataset d = need_data(g);
  ModelFamily family = parse_family(family_tag);
  CrossvalReport report = crossval(d, size, reps, family, g.level, RngStream(g.seed));
  if (want_json(g, false))
    emit(to_json(report));
  else
    std::cout << render_text(report);
  return 0;
}

int run_dump_dist(const GlobalOpts& g, const std::string& which, const std::string& out_path) {
  GibbsModel model = need_model(g);
  Dataset d = need_data(g);
  int m = need_single_m(g, "dump-dist");
  DiscreteDistribution dist = which == "k" ? k_distribution(model, d.sample, m)
                                           : l_distribution(model, d.sample, m);
  if (out_path.empty()) {
    write_csv(std::cout, dist);
  } else {
    std::ofstream out(out_path);
    if (!out) throw ValidationError("cannot open output file: " + out_path);
    write_csv(out, dist);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Species-prediction workbench for Gibbs-type partition models\n"
      "(Dirichlet process, two-parameter Poisson-Dirichlet, generalized gamma).\n"
      "Global flags may be given before or after the subcommand.\n"
      "Exit codes: 0 ok, 1 check failed, 2 validation error, 3 numeric range, 4 no convergence.\n"
      "GIBBS_TABLE_CAP overrides the coefficient-table cap."};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--model", g.model_spec,
                 "Model spec: dp:theta=<v> | py:sigma=<v>,theta=<v> | gg:sigma=<v>,beta=<v>");
  app.add_option("--data", g.data_path, "Dataset JSON file");
  app.add_option("--m", g.m_values, "Additional-sample size (repeatable)");
  app.add_option("--level", g.level, "HPD credibility level")->capture_default_str();
  app.add_option("--seed", g.seed, "RNG seed")->capture_default_str();
  auto* json_flag = app.add_flag_callback(
      "--json", [&g] { g.mode = OutputMode::json; }, "Machine-readable JSON output");
  app.add_flag_callback("--table", [&g] { g.mode = OutputMode::table; },
                        "Aligned-text table output")
      ->excludes(json_flag);

  int rc = 0;

  auto* fit = app.add_subcommand("fit", "Empirical-Bayes fit of a model family to a dataset");
  auto fit_family = std::make_shared<std::string>();
  auto fit_step = std::make_shared<double>(0.01);
  fit->add_option("--family", *fit_family, "Model family: dp | py | gg")->required();
  fit->add_option("--grid-sigma-step", *fit_step, "Coarse-grid sigma spacing")
      ->capture_default_str();
  fit->callback([&, fit_family, fit_step] { rc = run_fit(g, *fit_family, *fit_step); });

  auto* predict =
      app.add_subcommand("predict", "Posterior K/L point estimates, HPD intervals, and "
                                    "average expression levels for each --m");
  predict->callback([&] { rc = run_predict(g); });

  auto* unseen = app.add_subcommand(
      "unseen", "Probability that selected observed clusters stay absent from the next m draws");
  auto retain_r = std::make_shared<int>(0);
  auto forbid_levels = std::make_shared<std::vector<int>>();
  auto forbid_count = std::make_shared<int>(0);
  unseen->add_option("--retain-top-r", *retain_r,
                     "Retain the r least-expressed clusters; the j-r most expressed must stay "
                     "absent");
  unseen->add_option("--forbid-levels", *forbid_levels,
                     "Forbid every cluster whose frequency is in this comma-separated list")
      ->delimiter(',');
  unseen->add_option("--forbid-count", *forbid_count,
                     "Forbid the c least-expressed clusters");
  unseen->callback(
      [&, retain_r, forbid_levels, forbid_count] {
        rc = run_unseen(g, *retain_r, *forbid_levels, *forbid_count);
      });

  auto* odds = app.add_subcommand(
      "odds", "Posterior odds of two new-cluster compositions (e.g. 32x1+1x8 vs 26x1+7x2)");
  auto odds_a = std::make_shared<std::string>();
  auto odds_b = std::make_shared<std::string>();
  odds->add_option("numerator", *odds_a, "Composition spec <count>x<size>[+...]")->required();
  odds->add_option("denominator", *odds_b, "Composition spec <count>x<size>[+...]")->required();
  odds->callback([&, odds_a, odds_b] { rc = run_odds(g, *odds_a, *odds_b); });

  auto* simulate = app.add_subcommand(
      "simulate", "Sample partitions of --n observations, or with --data and --m the "
                  "conditional future sample");
  auto sim_n = std::make_shared<int>(0);
  auto sim_reps = std::make_shared<int>(1);
  auto sim_csv = std::make_shared<std::string>();
  simulate->add_option("--n", *sim_n, "Partition size (partition mode)");
  simulate->add_option("--reps", *sim_reps, "Replicates")->capture_default_str();
  simulate->add_option("--csv", *sim_csv, "Write per-replicate rows to this CSV file");
  simulate->callback(
      [&, sim_n, sim_reps, sim_csv] { rc = run_simulate(g, *sim_n, *sim_reps, *sim_csv); });

  auto* oracle = app.add_subcommand(
      "oracle-check", "Compare analytic conditional distributions against exhaustive "
                      "enumeration (needs n + m small)");
  auto oracle_tol = std::make_shared<double>(1e-10);
  oracle->add_option("--tol", *oracle_tol, "Max absolute probability difference")
      ->capture_default_str();
  oracle->callback([&, oracle_tol] { rc = run_oracle_check(g, *oracle_tol); });

  auto* crossval_cmd = app.add_subcommand(
      "crossval", "Subsample, refit, and score holdout predictions against the truth");
  auto cv_size = std::make_shared<int>(0);
  auto cv_reps = std::make_shared<int>(10);
  auto cv_family = std::make_shared<std::string>("py");
  crossval_cmd->add_option("--size", *cv_size, "Sub-sample size")->required();
  crossval_cmd->add_option("--reps", *cv_reps, "Replicates")->capture_default_str();
  crossval_cmd->add_option("--family", *cv_family, "Model family: dp | py | gg")
      ->capture_default_str();
  crossval_cmd->callback(
      [&, cv_size, cv_reps, cv_family] { rc = run_crossval(g, *cv_size, *cv_reps, *cv_family); });

  auto* dump = app.add_subcommand("dump-dist", "Write a conditional distribution as CSV");
  auto dump_which = std::make_shared<std::string>();
  auto dump_out = std::make_shared<std::string>();
  dump->add_option("--dist", *dump_which, "Which distribution: k | l")
      ->required()
      ->check(CLI::IsMember({"k", "l"}));
  dump->add_option("--out", *dump_out, "Output file (default stdout)");
  dump->callback([&, dump_which, dump_out] { rc = run_dump_dist(g, *dump_which, *dump_out); });

  for (CLI::App* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericRangeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return rc;
}
