#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "gibbs/prediction.hpp"

namespace gibbs {

enum class ModelFamily { dirichlet, poisson_dirichlet, generalized_gamma };

inline ModelFamily parse_family(const std::string& tag) {
  if (tag == "dp" || tag == "dirichlet") return ModelFamily::dirichlet;
  if (tag == "py" || tag == "poisson-dirichlet") return ModelFamily::poisson_dirichlet;
  if (tag == "gg" || tag == "generalized-gamma") return ModelFamily::generalized_gamma;
  throw ValidationError("unknown model family: " + tag);
}

inline std::string family_name(ModelFamily f) {
  switch (f) {
    case ModelFamily::dirichlet: return "dirichlet";
    case ModelFamily::poisson_dirichlet: return "poisson-dirichlet";
    default: return "generalized-gamma";
  }
}

inline GibbsModel make_model(ModelFamily f, double sigma, double scale) {
  switch (f) {
    case ModelFamily::dirichlet:
      if (sigma != 0.0) throw ValidationError("dirichlet family has sigma = 0");
      return GibbsModel(Dirichlet(scale));
    case ModelFamily::poisson_dirichlet:
      return GibbsModel(PoissonDirichlet(sigma, scale));
    default:
      return GibbsModel(GeneralizedGamma(sigma, scale));
  }
}

struct FitOptions {
  double sigma_step = 0.01;       // coarse grid spacing in sigma
  double relative_tol = 1e-12;    // refinement stop on relative log-likelihood spread;
                                  // tighter than the 1e-8 contract so optimum dominance
                                  // holds even when |ll| is in the thousands
  int max_refine_evals = 10000;   // refinement budget; exceeding it clears `converged`
};

struct FitResult {
  GibbsModel model{Dirichlet(1.0)};
  double log_likelihood = kNegInf;
  std::vector<std::pair<std::vector<double>, double>> trace;  // ((sigma, scale), ll)
  bool converged = false;
  bool boundary = false;
};

inline std::vector<double> default_sigma_grid(ModelFamily f, double step = 0.01) {
  if (f == ModelFamily::dirichlet) return {0.0};
  if (!(step > 0.0 && step < 1.0)) throw ValidationError("sigma grid step must be in (0,1)");
  std::vector<double> grid;
  for (double s = step; s < 1.0 - 1e-12; s += step) grid.push_back(s);
  return grid;
}

// Geometric scale grid 10^-2 .. 10^5, 8 points per decade.
inline std::vector<double> default_scale_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 7 * 8; ++i) grid.push_back(std::pow(10.0, -2.0 + i / 8.0));
  return grid;
}

inline std::vector<std::vector<double>> likelihood_surface(const SampleSummary& sample,
                                                           ModelFamily family,
                                                           const std::vector<double>& sigma_grid,
                                                           const std::vector<double>& scale_grid) {
  if (sigma_grid.empty() || scale_grid.empty())
    throw ValidationError("likelihood_surface: grids must be nonempty");
  std::vector<std::vector<double>> out(sigma_grid.size(),
                                       std::vector<double>(scale_grid.size()));
  for (std::size_t i = 0; i < sigma_grid.size(); ++i)
    for (std::size_t c = 0; c < scale_grid.size(); ++c) {
      GibbsModel m = make_model(family, sigma_grid[i], scale_grid[c]);
      out[i][c] = eppf_log(m, sample.frequencies);
    }
  return out;
}

namespace detail {

inline constexpr double kFitEps = 1e-6;

// Unconstrained coordinates: sigma through a logistic onto (0, 1-eps), the
// scale through log(theta + sigma + eps) so the theta > -sigma edge maps to
// y -> log(eps). Dirichlet keeps sigma pinned at zero and uses y = log(theta).
struct FitTransform {
  ModelFamily family;

  std::pair<double, double> params(const std::vector<double>& coords) const {
    if (family == ModelFamily::dirichlet) return {0.0, std::exp(coords[0])};
    double sigma = (1.0 - kFitEps) / (1.0 + std::exp(-coords[0]));
    double scale = std::exp(coords[1]);
    if (family == ModelFamily::poisson_dirichlet) scale -= sigma + kFitEps;
    return {sigma, scale};
  }

  std::vector<double> coords(double sigma, double scale) const {
    if (family == ModelFamily::dirichlet) return {std::log(scale)};
    double x = std::log(sigma / (1.0 - kFitEps - sigma));
    double y = family == ModelFamily::poisson_dirichlet ? std::log(scale + sigma + kFitEps)
                                                        : std::log(scale);
    return {x, y};
  }
};

}  // namespace detail

// Empirical-Bayes fit: maximizes the partition log-likelihood over the family,
// first on a coarse grid, then by Nelder-Mead refinement in transformed
// coordinates. Deterministic: ties in the grid reduction break toward smaller
// sigma, then smaller scale.
inline FitResult fit_empirical_bayes(const SampleSummary& sample, ModelFamily family,
                                     const FitOptions& options = {}) {
  detail::check_sample(sample);
  if (family == ModelFamily::generalized_gamma) {
    GeneralizedGamma probe(0.5, 1.0);
    if (sample.n > probe.cache->n_cap())
      throw NumericRangeError("generalized-gamma fits support n <= " +
                              std::to_string(probe.cache->n_cap()));
  }
  FitResult result;
  // Refinement may not chase sigma below half the coarse grid's floor: each
  // generalized-gamma evaluation costs O(n^2/sigma), so an unbounded ridge
  // walk toward sigma=0 would stall. A fit pinned at the floor is reported
  // through the boundary flag.
  double sigma_floor =
      family == ModelFamily::dirichlet ? 0.0 : std::max(1e-3, 0.5 * options.sigma_step);

  // Infeasible parameters and out-of-range numeric corners score -inf so the
  // search simply moves away from them.
  auto objective = [&](double sigma, double scale) -> double {
    double ll;
    try {
      if (family != ModelFamily::dirichlet && sigma < sigma_floor)
        throw ValidationError("below refinement floor");
      GibbsModel m = make_model(family, sigma, scale);
      ll = eppf_log(m, sample.frequencies);
    } catch (const ValidationError&) {
      ll = kNegInf;
    } catch (const NumericRangeError&) {
      ll = kNegInf;
    }
    result.trace.push_back({{sigma, scale}, ll});
    return ll;
  };

  auto sigma_grid = default_sigma_grid(family, options.sigma_step);
  auto scale_grid = default_scale_grid();
  double best_ll = kNegInf, best_sigma = sigma_grid[0], best_scale = scale_grid[0];
  for (double sigma : sigma_grid)
    for (double scale : scale_grid) {
      double ll = objective(sigma, scale);
      if (ll > best_ll || (ll == best_ll && (sigma < best_sigma ||
                                             (sigma == best_sigma && scale < best_scale)))) {
        best_ll = ll;
        best_sigma = sigma;
        best_scale = scale;
      }
    }

  detail::FitTransform transform{family};
  auto coord_objective = [&](const std::vector<double>& coords) {
    auto [sigma, scale] = transform.params(coords);
    return objective(sigma, scale);
  };

  // Nelder-Mead on the transformed coordinates, seeded at the best grid
  // point. A collapsed simplex can stop short of the optimum, so restart with
  // a fresh simplex until a pass no longer improves the best value.
  std::size_t dim = family == ModelFamily::dirichlet ? 1 : 2;
  int evals = 0;
  std::vector<double> best_coords = transform.coords(best_sigma, best_scale);
  double best_value = kNegInf;
  result.converged = false;

  auto simplex_pass = [&](double step) {
    std::vector<std::vector<double>> vertex{best_coords};
    for (std::size_t d = 0; d < dim; ++d) {
      auto v = vertex[0];
      v[d] += step;
      vertex.push_back(std::move(v));
    }
    std::vector<double> value(vertex.size());
    for (std::size_t i = 0; i < vertex.size(); ++i) {
      value[i] = coord_objective(vertex[i]);
      ++evals;
    }
    auto order = [&] {
      for (std::size_t a = 0; a < vertex.size(); ++a)
        for (std::size_t b = a + 1; b < vertex.size(); ++b)
          if (value[b] > value[a]) {
            std::swap(value[a], value[b]);
            std::swap(vertex[a], vertex[b]);
          }
    };
    order();
    bool hit_tol = false;
    while (evals < options.max_refine_evals) {
      double spread = value.front() - value.back();
      if (spread <= options.relative_tol * (std::abs(value.front()) + 1.0)) {
        hit_tol = true;
        break;
      }
      std::vector<double> centroid(dim, 0.0);
      for (std::size_t i = 0; i + 1 < vertex.size(); ++i)
        for (std::size_t d = 0; d < dim; ++d) centroid[d] += vertex[i][d];
      for (std::size_t d = 0; d < dim; ++d) centroid[d] /= static_cast<double>(dim);
      const auto& worst = vertex.back();
      auto blend = [&](double t) {
        std::vector<double> p(dim);
        for (std::size_t d = 0; d < dim; ++d) p[d] = centroid[d] + t * (centroid[d] - worst[d]);
        return p;
      };
      auto reflect = blend(1.0);
      double f_reflect = coord_objective(reflect);
      ++evals;
      if (f_reflect > value.front()) {
        auto expand = blend(2.0);
        double f_expand = coord_objective(expand);
        ++evals;
        if (f_expand > f_reflect) {
          vertex.back() = expand;
          value.back() = f_expand;
        } else {
          vertex.back() = reflect;
          value.back() = f_reflect;
        }
      } else if (f_reflect > value[vertex.size() - 2]) {
        vertex.back() = reflect;
        value.back() = f_reflect;
      } else {
        bool outside = f_reflect > value.back();
        auto contract = blend(outside ? 0.5 : -0.5);
        double f_contract = coord_objective(contract);
        ++evals;
        if (f_contract > (outside ? f_reflect : value.back())) {
          vertex.back() = contract;
          value.back() = f_contract;
        } else {
          for (std::size_t i = 1; i < vertex.size(); ++i) {
            for (std::size_t d = 0; d < dim; ++d)
              vertex[i][d] = vertex[0][d] + 0.5 * (vertex[i][d] - vertex[0][d]);
            value[i] = coord_objective(vertex[i]);
            ++evals;
          }
        }
      }
      order();
    }
    best_coords = vertex.front();
    best_value = value.front();
    return hit_tol;
  };

  double step = 0.1;
  for (int pass = 0; pass < 6; ++pass) {
    double before = best_value;
    bool hit_tol = simplex_pass(step);
    step *= 0.25;
    if (!hit_tol) break;  // out of budget
    if (pass > 0 &&
        best_value - before <= options.relative_tol * (std::abs(best_value) + 1.0)) {
      result.converged = true;
      break;
    }
  }

  auto [fit_sigma, fit_scale] = transform.params(best_coords);
  result.model = make_model(family, fit_sigma, fit_scale);
  result.log_likelihood = eppf_log(result.model, sample.frequencies);

  double sigma_lo = sigma_grid.front(), sigma_hi = sigma_grid.back();
  double scale_lo = scale_grid.front(), scale_hi = scale_grid.back();
  result.boundary = false;
  if (family != ModelFamily::dirichlet &&
      (fit_sigma <= sigma_lo || fit_sigma >= sigma_hi))
    result.boundary = true;
  if (fit_scale <= scale_lo || fit_scale >= scale_hi) result.boundary = true;
  return result;
}

}  // namespace gibbs
