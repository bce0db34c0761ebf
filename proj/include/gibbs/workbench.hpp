#pragma once

#include <cmath>
#include <cstdio>
#include <future>
#include <sstream>
#include <string>
#include <vector>

#include "gibbs/dataset.hpp"
#include "gibbs/fitting.hpp"
#include "gibbs/prediction.hpp"

namespace gibbs {

// Second coordinate of a model: theta for dp/py, beta for gg.
inline double scale_of(const GibbsModel& m) {
  return std::visit([](const auto& f) -> double {
    using F = std::decay_t<decltype(f)>;
    if constexpr (std::is_same_v<F, GeneralizedGamma>)
      return f.beta;
    else
      return f.theta;
  }, m);
}

struct PredictRow {
  int m = 0;
  double k_hat = 0.0;
  double l_hat = 0.0;
  HPDInterval k_hpd;
  HPDInterval l_hpd;
  double a_m = 0.0;
  double a_total = 0.0;
};

struct PredictReport {
  std::string dataset;
  double level = 0.95;
  std::vector<PredictRow> rows;
};

inline PredictReport predict_report(const Dataset& dataset, const GibbsModel& model,
                                    const std::vector<int>& m_list, double level) {
  PredictReport out;
  out.dataset = dataset.name;
  out.level = level;
  for (int m : m_list) {
    PredictRow row;
    row.m = m;
    DiscreteDistribution kd = k_distribution(model, dataset.sample, m);
    DiscreteDistribution ld = l_distribution(model, dataset.sample, m);
    row.k_hat = kd.mean();
    row.l_hat = ld.mean();
    row.k_hpd = hpd_interval(kd, level);
    row.l_hpd = hpd_interval(ld, level);
    AverageExpression avg = average_expression(dataset.sample, m, row.k_hat, row.l_hat);
    row.a_m = avg.a_m;
    row.a_total = avg.a_total;
    out.rows.push_back(row);
  }
  return out;
}

struct CrossvalRow {
  int replicate = 0;
  int sub_j = 0;
  double sigma = 0.0;
  double scale = 0.0;
  bool converged = false;
  bool boundary = false;
  double k_hat = 0.0;
  double l_hat = 0.0;
  HPDInterval k_hpd;
  HPDInterval l_hpd;
  double a_m = 0.0;
  double a_total = 0.0;
  int k_true = 0;
  int l_true = 0;
  bool k_covered = false;
  bool l_covered = false;
};

struct CrossvalReport {
  std::string dataset;
  int subsample_size = 0;
  int m = 0;
  double level = 0.95;
  std::vector<CrossvalRow> rows;
  double mean_abs_err_k = 0.0;
  double mean_abs_err_l = 0.0;
  int k_coverage = 0;
  int l_coverage = 0;
};

// Each replicate draws its own sub-sample, refits, and predicts the holdout.
// Replicates run concurrently on streams derived from the seed alone, and rows
// are assembled by replicate index, so the report does not depend on scheduling.
inline CrossvalReport crossval(const Dataset& dataset, int subsample_size, int reps,
                               ModelFamily family, double level, const RngStream& rng) {
  if (reps < 1) throw ValidationError("crossval: reps must be >= 1");
  CrossvalReport report;
  report.dataset = dataset.name;
  report.subsample_size = subsample_size;
  report.m = dataset.sample.n - subsample_size;
  report.level = level;

  auto run_one = [&](int i) -> CrossvalRow {
    RngStream stream = rng.for_replicate(i);
    Subsample sub = subsample(dataset, subsample_size, stream);
    FitResult fit = fit_empirical_bayes(sub.sample, family);
    CrossvalRow row;
    row.replicate = i;
    row.sub_j = sub.sample.j;
    row.sigma = sigma_of(fit.model);
    row.scale = scale_of(fit.model);
    row.converged = fit.converged;
    row.boundary = fit.boundary;
    row.k_true = sub.k_true;
    row.l_true = sub.l_true;
    DiscreteDistribution kd = k_distribution(fit.model, sub.sample, report.m);
    DiscreteDistribution ld = l_distribution(fit.model, sub.sample, report.m);
    row.k_hat = kd.mean();
    row.l_hat = ld.mean();
    row.k_hpd = hpd_interval(kd, level);
    row.l_hpd = hpd_interval(ld, level);
    AverageExpression avg = average_expression(sub.sample, report.m, row.k_hat, row.l_hat);
    row.a_m = avg.a_m;
    row.a_total = avg.a_total;
    row.k_covered = row.k_hpd.lower <= row.k_true && row.k_true <= row.k_hpd.upper;
    row.l_covered = row.l_hpd.lower <= row.l_true && row.l_true <= row.l_hpd.upper;
    return row;
  };

  std::vector<std::future<CrossvalRow>> pending;
  pending.reserve(static_cast<size_t>(reps));
  for (int i = 0; i < reps; ++i) pending.push_back(std::async(std::launch::async, run_one, i));
  for (auto& f : pending) report.rows.push_back(f.get());

  for (const CrossvalRow& row : report.rows) {
    report.mean_abs_err_k += std::abs(row.k_hat - row.k_true);
    report.mean_abs_err_l += std::abs(row.l_hat - row.l_true);
    report.k_coverage += row.k_covered ? 1 : 0;
    report.l_coverage += row.l_covered ? 1 : 0;
  }
  report.mean_abs_err_k /= reps;
  report.mean_abs_err_l /= reps;
  return report;
}

inline nlohmann::json to_json(const HPDInterval& h) {
  return {{"lower", h.lower}, {"upper", h.upper}, {"attained_mass", h.attained_mass}};
}

// JSON carries the unrounded values; only the text tables round.
inline nlohmann::json to_json(const PredictReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const PredictRow& row : r.rows) {
    rows.push_back({{"m", row.m},
                    {"k_hat", row.k_hat},
                    {"k_hpd", to_json(row.k_hpd)},
                    {"l_hat", row.l_hat},
                    {"l_hpd", to_json(row.l_hpd)},
                    {"a_m", row.a_m},
                    {"a_total", row.a_total}});
  }
  return {{"dataset", r.dataset}, {"level", r.level}, {"rows", rows}};
}

inline nlohmann::json to_json(const CrossvalReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const CrossvalRow& row : r.rows) {
    rows.push_back({{"replicate", row.replicate},
                    {"sub_j", row.sub_j},
                    {"sigma", row.sigma},
                    {"scale", row.scale},
                    {"converged", row.converged},
                    {"boundary", row.boundary},
                    {"k_hat", row.k_hat},
                    {"k_hpd", to_json(row.k_hpd)},
                    {"l_hat", row.l_hat},
                    {"l_hpd", to_json(row.l_hpd)},
                    {"a_m", row.a_m},
                    {"a_total", row.a_total},
                    {"k_true", row.k_true},
                    {"l_true", row.l_true},
                    {"k_covered", row.k_covered},
                    {"l_covered", row.l_covered}});
  }
  return {{"dataset", r.dataset},
          {"subsample_size", r.subsample_size},
          {"m", r.m},
          {"level", r.level},
          {"rows", rows},
          {"mean_abs_err_k", r.mean_abs_err_k},
          {"mean_abs_err_l", r.mean_abs_err_l},
          {"k_coverage", r.k_coverage},
          {"l_coverage", r.l_coverage}};
}

namespace detail {

// Column-aligned plain text: every cell padded to its column's widest entry.
inline std::string render_table(const std::vector<std::vector<std::string>>& cells) {
  if (cells.empty()) return "";
  std::vector<size_t> width;
  for (const auto& row : cells) {
    if (width.size() < row.size()) width.resize(row.size(), 0);
    for (size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream os;
  for (const auto& row : cells) {
    for (size_t c = 0; c < row.size(); ++c) {
      if (c > 0) os << "  ";
      os << row[c];
      if (c + 1 < row.size())
        os << std::string(width[c] - row[c].size(), ' ');
    }
    os << "\n";
  }
  return os.str();
}

inline std::string fixed3(double x) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.3f", x);
  return buf;
}

inline std::string rounded(double x) { return std::to_string(std::llround(x)); }

inline std::string interval(const HPDInterval& h) {
  return "(" + std::to_string(h.lower) + ", " + std::to_string(h.upper) + ")";
}

}  // namespace detail

// Point estimates round to integers, averages and probabilities to 3 decimals.
inline std::string render_text(const PredictReport& r) {
  std::vector<std::vector<std::string>> cells;
  cells.push_back({"m", "K_hat", "K_hpd", "L_hat", "L_hpd", "A_m", "A_total"});
  for (const PredictRow& row : r.rows) {
    cells.push_back({std::to_string(row.m), detail::rounded(row.k_hat),
                     detail::interval(row.k_hpd), detail::rounded(row.l_hat),
                     detail::interval(row.l_hpd), detail::fixed3(row.a_m),
                     detail::fixed3(row.a_total)});
  }
  if (r.rows.empty()) return "";
  return detail::render_table(cells);
}

inline std::string render_text(const CrossvalReport& r) {
  std::vector<std::vector<std::string>> cells;
  cells.push_back({"rep", "j", "sigma", "scale", "K_hat", "K_hpd", "K_true", "K_cov", "L_hat",
                   "L_hpd", "L_true", "L_cov"});
  for (const CrossvalRow& row : r.rows) {
    cells.push_back({std::to_string(row.replicate), std::to_string(row.sub_j),
                     detail::fixed3(row.sigma), detail::fixed3(row.scale),
                     detail::rounded(row.k_hat), detail::interval(row.k_hpd),
                     std::to_string(row.k_true), row.k_covered ? "yes" : "no",
                     detail::rounded(row.l_hat), detail::interval(row.l_hpd),
                     std::to_string(row.l_true), row.l_covered ? "yes" : "no"});
  }
  std::ostringstream os;
  os << detail::render_table(cells);
  os << "mean |K_hat - K_true| = " << detail::fixed3(r.mean_abs_err_k) << "\n";
  os << "mean |L_hat - L_true| = " << detail::fixed3(r.mean_abs_err_l) << "\n";
  os << "K coverage " << r.k_coverage << "/" << r.rows.size() << ", L coverage "
     << r.l_coverage << "/" << r.rows.size() << "\n";
  return os.str();
}

}  // namespace gibbs
