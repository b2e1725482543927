// Copyright 2026 The cfx Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cfx/errors.hpp"
#include "cfx/gradient.hpp"
#include "cfx/metrics.hpp"
#include "cfx/model.hpp"
#include "cfx/numerics.hpp"
#include "cfx/random.hpp"

namespace cfx {

/// Per-dimension [lo, hi] bounds.
struct Box {
  std::vector<double> lo;
  std::vector<double> hi;

  static Box uniform(std::size_t n, double lo, double hi) {
    return Box{std::vector<double>(n, lo), std::vector<double>(n, hi)};
  }

  /// Column-wise [min, max] of a dataset.
  static Box from_dataset(const Dataset& data) {
    if (data.empty()) throw DataError("cannot derive a box from an empty dataset");
    Box b{data.row(0).raw(), data.row(0).raw()};
    for (const auto& r : data.rows()) {
      for (std::size_t j = 0; j < r.size(); ++j) {
        b.lo[j] = std::min(b.lo[j], r[j]);
        b.hi[j] = std::max(b.hi[j], r[j]);
      }
    }
    return b;
  }

  std::size_t size() const noexcept { return lo.size(); }

  void validate(std::size_t width) const {
    if (lo.size() != width || hi.size() != width) {
      throw ShapeError("box has " + std::to_string(lo.size()) + " bounds, expected " +
                       std::to_string(width));
    }
    for (std::size_t j = 0; j < width; ++j) {
      if (!std::isfinite(lo[j]) || !std::isfinite(hi[j]) || lo[j] > hi[j]) {
        throw ParameterError("invalid box bounds at dimension " + std::to_string(j));
      }
    }
  }

  bool contains(std::span<const double> x) const {
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (x[j] < lo[j] || x[j] > hi[j]) return false;
    }
    return true;
  }

  double clamp(std::size_t j, double v) const { return std::clamp(v, lo[j], hi[j]); }
};

struct LambdaSchedule {
  double initial = 0.1;
  double multiplier = 10.0;
  std::size_t max_rounds = 8;
};

struct InnerLoop {
  double step_size = 0.01;
  double momentum = 0.9;
  std::size_t max_iterations = 2000;
  std::size_t refine_iterations = 200;
};

/// Parameters of one counterfactual / adversarial search.
struct SearchConfig {
  std::size_t target_class = 1;
  // Penalty target p'. Defaults: 0.55 (binary), 0.5 + margin (multiclass).
  std::optional<double> target_probability;
  // Required p_target - max competitor. Defaults: 0 (binary), 0.05 (multiclass).
  std::optional<double> margin;
  MetricSpec metric = MetricSpec::l2();
  LambdaSchedule lambda;
  InnerLoop inner;
  Box box;
  std::uint64_t seed = 0;

  double effective_margin(const Network& net) const {
    return margin.value_or(net.is_binary() ? 0.0 : 0.05);
  }
  double effective_target_probability(const Network& net) const {
    return target_probability.value_or(net.is_binary() ? 0.55 : 0.5 + effective_margin(net));
  }
};

enum class SearchStatus { kConverged, kExhausted, kInfeasibleInput };

inline std::string_view to_string(SearchStatus s) {
  switch (s) {
    case SearchStatus::kConverged: return "converged";
    case SearchStatus::kExhausted: return "exhausted";
    case SearchStatus::kInfeasibleInput: return "infeasible-input";
  }
  return "exhausted";
}

inline SearchStatus parse_search_status(std::string_view s) {
  if (s == "converged") return SearchStatus::kConverged;
  if (s == "exhausted") return SearchStatus::kExhausted;
  if (s == "infeasible-input") return SearchStatus::kInfeasibleInput;
  throw ParseError("unknown search status '" + std::string(s) + "'");
}

struct SearchResult {
  SearchStatus status = SearchStatus::kExhausted;
  Vector counterfactual;
  std::size_t achieved_class = 0;
  double distance = 0.0;
  std::size_t l0_changed = 0;
  std::size_t outer_rounds = 0;
  std::size_t inner_iterations = 0;
  std::vector<double> objective_trace;
  std::vector<std::size_t> trace_rounds;  // outer round of each trace entry; not serialized
  std::uint64_t seed = 0;

  bool converged() const noexcept { return status == SearchStatus::kConverged; }
};

/// Decision target plus the required probability margin over the best
/// competing class.
struct TargetSpec {
  std::size_t target_class = 1;
  double margin = 0.0;
};

inline bool target_satisfied(bool binary, std::span<const double> probs, const TargetSpec& t) {
  if (detail::decide(binary, probs) != t.target_class) return false;
  double competitor = -1.0;
  for (std::size_t c = 0; c < probs.size(); ++c) {
    if (c != t.target_class) competitor = std::max(competitor, probs[c]);
  }
  return probs[t.target_class] - competitor >= t.margin;
}

inline bool target_satisfied(const Network& net, std::span<const double> x, const TargetSpec& t) {
  return target_satisfied(net.is_binary(), forward(net, x).probabilities, t);
}

/// Number of times generate_counterfactual has been entered in this process.
inline std::atomic<std::uint64_t>& generator_invocations() {
  static std::atomic<std::uint64_t> count{0};
  return count;
}

namespace detail {

inline void check_finite(std::span<const double> x, const char* what) {
  for (double v : x) {
    if (!std::isfinite(v)) throw DataError(std::string(what) + " contains a non-finite value");
  }
}

inline bool is_l1_type(const MetricSpec& m) {
  return m.kind() == MetricKind::kL1 || m.kind() == MetricKind::kMadL1;
}

inline SearchResult finish(const Network& net, std::span<const double> x, std::vector<double> xp,
                           SearchStatus status, const SearchConfig& cfg, SearchResult r) {
  r.status = status;
  r.achieved_class = predict_index(net, xp);
  r.distance = distance(cfg.metric, x, xp);
  const double tau = cfg.metric.kind() == MetricKind::kL0 ? cfg.metric.tolerance() : kDefaultL0Tolerance;
  r.l0_changed = count_changed(x, xp, tau);
  r.counterfactual = Vector(std::move(xp));
  r.seed = cfg.seed;
  return r;
}

/// For sparsity-inducing metrics: restores coordinates to their original
/// values, smallest weighted change first, whenever the target still holds.
inline void restore_coordinates(const Network& net, std::span<const double> x,
                                std::vector<double>& xp, const SearchConfig& cfg,
                                const TargetSpec& target) {
  std::vector<std::size_t> order;
  for (std::size_t j = 0; j < xp.size(); ++j) {
    if (xp[j] != x[j]) order.push_back(j);
  }
  auto cost = [&](std::size_t j) { return std::abs(xp[j] - x[j]) / cfg.metric.coordinate_scale(j); };
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return cost(a) < cost(b); });
  for (std::size_t j : order) {
    const double keep = xp[j];
    xp[j] = x[j];
    if (!target_satisfied(net, xp, target)) xp[j] = keep;
  }
}

/// Shrinks d(x, xp) while the target stays satisfied. Tries a straight
/// descent step on d, then the same step projected onto the tangent of the
/// target-probability level set; halves the step when both fail.
inline void refine(const Network& net, std::span<const double> x, std::vector<double>& xp,
                   const SearchConfig& cfg, const TargetSpec& target, std::size_t& iterations) {
  const bool l1 = is_l1_type(cfg.metric);
  if (l1 || cfg.metric.kind() == MetricKind::kL0) restore_coordinates(net, x, xp, cfg, target);
  double step = cfg.inner.step_size;
  double current = distance(cfg.metric, x, xp);
  std::vector<double> cand(xp.size());
  for (std::size_t it = 0; it < cfg.inner.refine_iterations && step >= 1e-12; ++it) {
    ++iterations;
    const auto gd = distance_gradient(cfg.metric, x, xp);
    auto try_direction = [&](const std::vector<double>& g) {
      for (std::size_t j = 0; j < xp.size(); ++j) {
        const double s = cfg.metric.coordinate_scale(j);
        double v = xp[j] - step * s * s * g[j];
        // L1-type steps never cross the anchor coordinate.
        if (l1 && (xp[j] - x[j]) * (v - x[j]) < 0.0) v = x[j];
        cand[j] = cfg.box.clamp(j, v);
      }
      const double d = distance(cfg.metric, x, cand);
      if (d < current && target_satisfied(net, cand, target)) {
        xp = cand;
        current = d;
        return true;
      }
      return false;
    };
    if (try_direction(gd)) continue;
    // tangent step: remove the component along grad p_target
    const auto t = forward(net, xp);
    auto n = class_probability_gradient(net, t, target.target_class);
    double nn = 0.0, gn = 0.0;
    for (std::size_t j = 0; j < n.size(); ++j) {
      const double s = cfg.metric.coordinate_scale(j);
      nn += n[j] * n[j] * s * s;
      gn += gd[j] * n[j] * s * s;
    }
    if (nn > 0.0) {
      std::vector<double> tangent(gd.size());
      for (std::size_t j = 0; j < gd.size(); ++j) tangent[j] = gd[j] - (gn / nn) * n[j];
      if (try_direction(tangent)) continue;
    }
    step /= 2.0;
  }
  if (l1 || cfg.metric.kind() == MetricKind::kL0) restore_coordinates(net, x, xp, cfg, target);
}

}  // namespace detail

/// Penalty-method search for the nearest input (under cfg.metric) that the
/// network assigns to cfg.target_class with the configured margin.
///
/// Each outer round fixes lambda and runs momentum descent on
/// lambda * (p_target - p')^2 + d(x, x'), clamping every step to the box.
/// Steps that raise the objective are rejected and the step size halved.
/// L1-type metrics take a proximal (soft-threshold) step on the distance
/// term so untouched features stay exactly at their original values. The
/// first satisfying iterate is refined and returned.
inline SearchResult generate_counterfactual(const Network& net, std::span<const double> x,
                                            const SearchConfig& cfg) {
  generator_invocations().fetch_add(1, std::memory_order_relaxed);
  detail::check_finite(x, "input");
  detail::check_input(net, x);
  cfg.box.validate(x.size());
  if (!cfg.box.contains(x)) throw PreconditionError("input lies outside the search box");
  if (cfg.target_class >= net.class_count()) {
    throw IndexError("target class " + std::to_string(cfg.target_class) + " out of range");
  }
  if (cfg.metric.kind() == MetricKind::kMadL1 && cfg.metric.weights().size() != x.size()) {
    throw ShapeError("MadL1 weight count does not match input width");
  }
  if (!(cfg.inner.step_size > 0.0)) throw ParameterError("step size must be positive");
  if (cfg.inner.momentum < 0.0 || cfg.inner.momentum >= 1.0) {
    throw ParameterError("momentum must be in [0,1)");
  }
  if (!(cfg.lambda.initial > 0.0) || !(cfg.lambda.multiplier > 1.0)) {
    throw ParameterError("lambda schedule needs initial > 0 and multiplier > 1");
  }
  const double margin = cfg.effective_margin(net);
  const double p_target = cfg.effective_target_probability(net);
  if (net.is_binary()) {
    if (!(p_target > 0.5 && p_target < 1.0)) throw ParameterError("target probability must be in (0.5, 1)");
    if (margin < 0.0 || margin >= 1.0) throw ParameterError("margin must be in [0, 1)");
  } else if (!(margin > 0.0 && margin < 0.5)) {
    throw ParameterError("multiclass margin must be in (0, 0.5)");
  }
  const TargetSpec target{cfg.target_class, margin};

  SearchResult r;
  std::vector<double> xp(x.begin(), x.end());
  if (target_satisfied(net, xp, target)) {
    return detail::finish(net, x, std::move(xp), SearchStatus::kConverged, cfg, std::move(r));
  }

  const bool l1 = detail::is_l1_type(cfg.metric);
  const Vector anchor(std::vector<double>(x.begin(), x.end()));
  const std::size_t n = x.size();
  double lambda = cfg.lambda.initial;
  std::vector<double> velocity(n), cand(n);

  // Objective at a point; `smooth_only` drops the distance term (used for
  // the proximal split).
  auto objective_value = [&](std::span<const double> p) {
    return evaluate_objective(net, p, objective::Penalty{cfg.target_class, p_target, lambda,
                                                          cfg.metric, anchor});
  };

  // One momentum step on the penalty objective at the current lambda.
  // Returns the candidate's objective; `moved` is the largest coordinate
  // change in metric units.
  auto propose = [&](double step, double& moved) {
    std::vector<double> g;
    if (l1) {
      const auto t = forward(net, xp);
      g = detail::class_probability_gradient(net, t, cfg.target_class);
      const double scale = 2.0 * lambda * (t.probabilities[cfg.target_class] - p_target);
      for (double& v : g) v *= scale;
    } else {
      g = grad_wrt_input(net, xp, objective::Penalty{cfg.target_class, p_target, lambda,
                                                     cfg.metric, anchor});
    }
    moved = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double s = cfg.metric.coordinate_scale(j);
      // descent in metric units: raw displacement scales with s^2
      double v = xp[j] + cfg.inner.momentum * velocity[j] - step * s * s * g[j];
      if (l1) {
        // soft-threshold around the anchor; the threshold is one step in metric units
        const double thresh = step * s;
        const double dev = v - x[j];
        v = x[j] + (dev > thresh ? dev - thresh : (dev < -thresh ? dev + thresh : 0.0));
      }
      cand[j] = cfg.box.clamp(j, v);
      moved = std::max(moved, std::abs(cand[j] - xp[j]) / s);
    }
    return objective_value(cand);
  };
  auto accept = [&](double value) {
    // momentum follows the realized displacement after prox and clamping
    for (std::size_t j = 0; j < n; ++j) velocity[j] = cand[j] - xp[j];
    xp = cand;
    return value;
  };

  for (std::size_t round = 0; round < cfg.lambda.max_rounds; ++round) {
    r.outer_rounds = round + 1;
    std::fill(velocity.begin(), velocity.end(), 0.0);
    double step = cfg.inner.step_size;
    double current = objective_value(xp);
    r.objective_trace.push_back(current);
    r.trace_rounds.push_back(round);
    std::optional<std::vector<double>> feasible;
    double feasible_d = std::numeric_limits<double>::infinity();
    for (std::size_t it = 0; it < cfg.inner.max_iterations; ++it) {
      ++r.inner_iterations;
      double moved = 0.0;
      const double next = propose(step, moved);
      if (next <= current) {
        current = accept(next);
        r.objective_trace.push_back(current);
        r.trace_rounds.push_back(round);
        if (target_satisfied(net, xp, target)) {
          const double d = distance(cfg.metric, x, xp);
          if (d < feasible_d) {
            feasible = xp;
            feasible_d = d;
          }
        }
        if (moved < 1e-13) break;  // stationary under this lambda
      } else {
        step /= 2.0;
        std::fill(velocity.begin(), velocity.end(), 0.0);
        if (step < 1e-12) break;
      }
    }
    // The round's end point approximates the penalized optimum; prefer it
    // when it meets the target, else the closest satisfying iterate.
    if (feasible) {
      if (!target_satisfied(net, xp, target)) xp = std::move(*feasible);
      detail::refine(net, x, xp, cfg, target, r.inner_iterations);
      return detail::finish(net, x, std::move(xp), SearchStatus::kConverged, cfg, std::move(r));
    }
    lambda *= cfg.lambda.multiplier;
  }
  return detail::finish(net, x, std::move(xp), SearchStatus::kExhausted, cfg, std::move(r));
}

inline SearchResult generate_counterfactual(const Network& net, const Vector& x,
                                            const SearchConfig& cfg) {
  return generate_counterfactual(net, x.values(), cfg);
}

// ---------------------------------------------------------------------------
// One-pixel attack

struct DifferentialEvolution {
  std::size_t population = 50;
  double weight = 0.5;     // F
  double crossover = 0.8;  // CR
  std::size_t generations = 100;
  std::uint64_t seed = 0;
};

/// Specific class, or any class other than the image's current one.
struct PixelTarget {
  std::optional<std::size_t> specific;

  static PixelTarget any_other() { return {}; }
  static PixelTarget cls(std::size_t c) { return {c}; }
};

namespace detail {

inline void apply_genes(std::span<const double> image, std::span<const double> genes,
                        std::vector<double>& out) {
  out.assign(image.begin(), image.end());
  const std::size_t n = image.size();
  for (std::size_t i = 0; i + 1 < genes.size(); i += 2) {
    auto idx = static_cast<std::size_t>(genes[i]);
    if (idx >= n) idx = n - 1;
    out[idx] = genes[i + 1];
  }
}

inline bool pixel_success(std::size_t predicted, std::size_t original, const PixelTarget& t) {
  return t.specific ? predicted == *t.specific : predicted != original;
}

inline double pixel_fitness(std::span<const double> probs, std::size_t original,
                            const PixelTarget& t) {
  if (t.specific) return probs[*t.specific];
  double best = 0.0;
  for (std::size_t c = 0; c < probs.size(); ++c) {
    if (c != original) best = std::max(best, probs[c]);
  }
  return best;
}

}  // namespace detail

/// Differential-evolution search over k (pixel index, value) substitutions.
/// Pixel values are in [0, 1]. Any reported success is re-verified with a
/// fresh forward pass.
inline SearchResult one_pixel_attack(const Network& net, std::span<const double> image,
                                     const PixelTarget& target, std::size_t k,
                                     const DifferentialEvolution& de = {},
                                     const MetricSpec& metric = MetricSpec::l0()) {
  if (k == 0) throw ParameterError("k must be at least 1");
  if (k > image.size()) throw ParameterError("k exceeds the number of pixels");
  detail::check_finite(image, "image");
  detail::check_input(net, image);
  for (double v : image) {
    if (v < 0.0 || v > 1.0) throw PreconditionError("image values must lie in [0, 1]");
  }
  if (target.specific && *target.specific >= net.class_count()) {
    throw IndexError("target class out of range");
  }
  if (de.population < 4) throw ParameterError("population must be at least 4");
  if (!(de.weight > 0.0) || de.crossover < 0.0 || de.crossover > 1.0) {
    throw ParameterError("invalid differential-evolution parameters");
  }

  SearchConfig report_cfg;
  report_cfg.metric = metric;
  report_cfg.seed = de.seed;
  SearchResult r;
  Evaluator eval(net);
  const std::size_t original = eval.predict(image);
  if (target.specific && original == *target.specific) {
    return detail::finish(net, image, std::vector<double>(image.begin(), image.end()),
                          SearchStatus::kConverged, report_cfg, std::move(r));
  }

  const std::size_t n = image.size();
  const std::size_t dims = 2 * k;
  auto lower = [](std::size_t) { return 0.0; };
  auto upper = [n](std::size_t d) {
    return d % 2 == 0 ? std::nextafter(static_cast<double>(n), 0.0) : 1.0;
  };

  Rng rng(de.seed);
  std::vector<std::vector<double>> pop(de.population, std::vector<double>(dims));
  std::vector<double> fit(de.population);
  std::vector<double> trial(dims), candidate;
  std::optional<std::vector<double>> found;
  double found_fit = -1.0;

  auto evaluate = [&](const std::vector<double>& genes) {
    detail::apply_genes(image, genes, candidate);
    const auto probs = eval.probabilities(candidate);
    ++r.inner_iterations;
    const double f = detail::pixel_fitness(probs, original, target);
    if (detail::pixel_success(detail::decide(net.is_binary(), probs), original, target) &&
        f > found_fit) {
      found = candidate;
      found_fit = f;
    }
    return f;
  };

  for (std::size_t i = 0; i < de.population; ++i) {
    for (std::size_t d = 0; d < dims; ++d) pop[i][d] = rng.uniform(lower(d), upper(d));
    fit[i] = evaluate(pop[i]);
  }
  r.objective_trace.push_back(*std::max_element(fit.begin(), fit.end()));
  r.trace_rounds.push_back(0);

  for (std::size_t gen = 0; gen < de.generations && !found; ++gen) {
    r.outer_rounds = gen + 1;
    for (std::size_t i = 0; i < de.population; ++i) {
      std::size_t a, b, c;
      do a = rng.index(de.population); while (a == i);
      do b = rng.index(de.population); while (b == i || b == a);
      do c = rng.index(de.population); while (c == i || c == a || c == b);
      const std::size_t forced = rng.index(dims);
      for (std::size_t d = 0; d < dims; ++d) {
        if (d == forced || rng.uniform() < de.crossover) {
          const double v = pop[a][d] + de.weight * (pop[b][d] - pop[c][d]);
          trial[d] = std::clamp(v, lower(d), upper(d));
        } else {
          trial[d] = pop[i][d];
        }
      }
      const double f = evaluate(trial);
      if (f >= fit[i]) {
        pop[i] = trial;
        fit[i] = f;
      }
    }
    r.objective_trace.push_back(*std::max_element(fit.begin(), fit.end()));
    r.trace_rounds.push_back(gen + 1);
  }

  if (found) {
    // recheck with an independent trace before reporting success
    const auto fresh = predict_index(net, *found);
    if (detail::pixel_success(fresh, original, target) && count_changed(image, *found) <= k) {
      return detail::finish(net, image, std::move(*found), SearchStatus::kConverged, report_cfg,
                            std::move(r));
    }
  }
  std::size_t best = static_cast<std::size_t>(std::max_element(fit.begin(), fit.end()) - fit.begin());
  detail::apply_genes(image, pop[best], candidate);
  return detail::finish(net, image, candidate, SearchStatus::kExhausted, report_cfg, std::move(r));
}

inline SearchResult one_pixel_attack(const Network& net, const Vector& image, const PixelTarget& target,
                                     std::size_t k, const DifferentialEvolution& de = {},
                                     const MetricSpec& metric = MetricSpec::l0()) {
  return one_pixel_attack(net, image.values(), target, k, de, metric);
}

// ---------------------------------------------------------------------------
// Brute-force oracles

struct GridSpec {
  double step = 1e-2;
  Box box;
  // Each level re-grids +-step around the incumbent at step / 10.
  std::size_t refine_levels = 0;
};

/// Exhaustive grid search over a 1-D or 2-D input. Returns the satisfying
/// grid point with the smallest distance (first in enumeration order on
/// ties), or nothing.
inline std::optional<Vector> brute_force_search(const Network& net, std::span<const double> x,
                                                const TargetSpec& target, const MetricSpec& metric,
                                                const GridSpec& grid) {
  detail::check_input(net, x);
  if (x.size() > 2) throw ParameterError("grid search supports at most 2 dimensions");
  if (!(grid.step > 0.0)) throw ParameterError("grid step must be positive");
  grid.box.validate(x.size());
  if (target.target_class >= net.class_count()) throw IndexError("target class out of range");

  Evaluator eval(net);
  std::optional<std::vector<double>> best;
  double best_d = std::numeric_limits<double>::infinity();
  std::vector<double> p(x.size());

  auto scan = [&](const std::vector<double>& lo, const std::vector<double>& hi, double step) {
    std::vector<std::size_t> counts(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
      counts[j] = static_cast<std::size_t>(std::floor((hi[j] - lo[j]) / step + 1e-9)) + 1;
    }
    const std::size_t n1 = x.size() == 2 ? counts[1] : 1;
    for (std::size_t i = 0; i < counts[0]; ++i) {
      p[0] = lo[0] + static_cast<double>(i) * step;
      for (std::size_t k = 0; k < n1; ++k) {
        if (x.size() == 2) p[1] = lo[1] + static_cast<double>(k) * step;
        const double d = distance(metric, x, p);
        if (d >= best_d) continue;
        if (target_satisfied(net.is_binary(), eval.probabilities(p), target)) {
          best = p;
          best_d = d;
        }
      }
    }
  };

  scan(grid.box.lo, grid.box.hi, grid.step);
  double step = grid.step;
  for (std::size_t level = 0; level < grid.refine_levels && best; ++level) {
    std::vector<double> lo(x.size()), hi(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
      lo[j] = std::max(grid.box.lo[j], (*best)[j] - step);
      hi[j] = std::min(grid.box.hi[j], (*best)[j] + step);
    }
    step /= 10.0;
    scan(lo, hi, step);
  }
  if (!best) return std::nullopt;
  return Vector(std::move(*best));
}

struct PixelSubstitution {
  std::size_t pixel = 0;
  double value = 0.0;
  friend bool operator==(const PixelSubstitution&, const PixelSubstitution&) = default;
};

/// Every single-pixel substitution from `values` that achieves the target.
inline std::vector<PixelSubstitution> one_pixel_flip_set(const Network& net,
                                                         std::span<const double> image,
                                                         const PixelTarget& target,
                                                         std::span<const double> values) {
  detail::check_input(net, image);
  Evaluator eval(net);
  const std::size_t original = eval.predict(image);
  std::vector<PixelSubstitution> flips;
  std::vector<double> p(image.begin(), image.end());
  for (std::size_t i = 0; i < image.size(); ++i) {
    for (double v : values) {
      p[i] = v;
      if (detail::pixel_success(eval.predict(p), original, target)) flips.push_back({i, v});
    }
    p[i] = image[i];
  }
  return flips;
}

/// Exhaustive enumeration of all substitutions of up to k pixels (k <= 2)
/// over a value grid. Returns the satisfying image minimizing `metric`.
inline std::optional<Vector> brute_force_pixels(const Network& net, std::span<const double> image,
                                                const PixelTarget& target, std::size_t k,
                                                std::span<const double> values,
                                                const MetricSpec& metric = MetricSpec::l2()) {
  detail::check_input(net, image);
  if (k == 0 || k > 2) throw ParameterError("pixel enumeration supports k in {1, 2}");
  if (values.empty()) throw ParameterError("value grid is empty");
  Evaluator eval(net);
  const std::size_t original = eval.predict(image);
  const std::size_t n = image.size();
  std::optional<std::vector<double>> best;
  double best_d = std::numeric_limits<double>::infinity();
  std::vector<double> p(image.begin(), image.end());
  auto consider = [&] {
    const double d = distance(metric, image, p);
    if (d < best_d && detail::pixel_success(eval.predict(p), original, target)) {
      best = p;
      best_d = d;
    }
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (double vi : values) {
      p[i] = vi;
      consider();
      if (k == 2) {
        for (std::size_t j = i + 1; j < n; ++j) {
          for (double vj : values) {
            p[j] = vj;
            consider();
          }
          p[j] = image[j];
        }
      }
    }
    p[i] = image[i];
  }
  if (!best) return std::nullopt;
  return Vector(std::move(*best));
}

// ---------------------------------------------------------------------------
// Hidden-layer search

struct UnitDelta {
  std::size_t unit = 0;
  double old_value = 0.0;
  double new_value = 0.0;
};

struct HiddenSearchResult {
  std::size_t layer = 0;
  Vector anchor;  // head(x)
  SearchResult search;
  std::vector<UnitDelta> deltas;
};

/// Search box in the activation space of `layer`: relu layers get
/// [0, 2 * observed max], others [-B, B] with B = 10 * observed max |a|.
/// Bounds always include `anchor`.
inline Box hidden_search_box(const Network& net, std::size_t layer, const Dataset& reference,
                             std::span<const double> anchor) {
  auto [head, tail] = split_at_layer(net, layer);
  const std::size_t width = head.output_width();
  std::vector<double> peak(width, 0.0);
  for (const auto& row : reference.rows()) {
    const auto a = head.apply(row);
    for (std::size_t j = 0; j < width; ++j) peak[j] = std::max(peak[j], std::abs(a[j]));
  }
  Box box = Box::uniform(width, 0.0, 0.0);
  const bool relu = net.layers()[layer].activation == Activation::kRelu;
  for (std::size_t j = 0; j < width; ++j) {
    if (relu) {
      box.lo[j] = 0.0;
      box.hi[j] = std::max(2.0 * peak[j], anchor[j]);
    } else {
      const double b = 10.0 * std::max(peak[j], std::abs(anchor[j]));
      box.lo[j] = -b;
      box.hi[j] = b;
    }
  }
  return box;
}

/// Counterfactual in the activation space after `layer`: the penalty search
/// runs on the tail network, anchored at head(x). cfg.box is replaced by
/// the activation-space box derived from `reference`.
inline HiddenSearchResult hidden_layer_counterfactual(const Network& net, std::size_t layer,
                                                      const Vector& x, SearchConfig cfg,
                                                      const Dataset& reference) {
  auto [head, tail] = split_at_layer(net, layer);
  HiddenSearchResult out;
  out.layer = layer;
  out.anchor = head.apply(x);
  cfg.box = hidden_search_box(net, layer, reference, out.anchor.values());
  if (cfg.metric.kind() == MetricKind::kMadL1 &&
      cfg.metric.weights().size() != out.anchor.size()) {
    throw ShapeError("MadL1 weights must match the activation width for hidden-layer search");
  }
  out.search = generate_counterfactual(tail, out.anchor, cfg);
  const double tau =
      cfg.metric.kind() == MetricKind::kL0 ? cfg.metric.tolerance() : kDefaultL0Tolerance;
  for (std::size_t j = 0; j < out.anchor.size(); ++j) {
    const double before = out.anchor[j];
    const double after = out.search.counterfactual[j];
    if (std::abs(after - before) > tau) out.deltas.push_back({j, before, after});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Batch evaluation

enum class Strategy { kGradient, kOnePixel };

inline std::string_view to_string(Strategy s) {
  return s == Strategy::kGradient ? "gradient" : "one-pixel";
}

struct BatchOptions {
  Strategy strategy = Strategy::kGradient;
  std::optional<std::size_t> target_class;  // none: flip to the runner-up class
  SearchConfig search;                      // target_class overwritten per row
  std::size_t pixels = 1;                   // k for one-pixel
  DifferentialEvolution de;
};

struct InstanceResult {
  std::size_t row = 0;
  Vector input;
  std::size_t original_class = 0;
  std::size_t target_class = 0;
  SearchResult result;
};

struct DistanceSummary {
  double mean = 0.0;
  double median = 0.0;
};

struct BatchStats {
  std::string strategy;
  std::size_t total = 0;
  std::size_t skipped = 0;  // already in the specific target class
  std::size_t attempted = 0;
  std::size_t converged = 0;
  double success_rate = 0.0;
  std::optional<double> median_l0;
  std::size_t width = 0;
  std::map<std::string, DistanceSummary> distances;  // converged instances only
  std::vector<InstanceResult> instances;
};

/// Most probable class other than the predicted one; lowest index on ties.
inline std::size_t runner_up_class(const Network& net, std::span<const double> x) {
  const auto t = forward(net, x);
  const std::size_t predicted = detail::decide(net.is_binary(), t.probabilities);
  std::size_t best = predicted == 0 ? 1 : 0;
  for (std::size_t c = 0; c < t.probabilities.size(); ++c) {
    if (c != predicted && t.probabilities[c] > t.probabilities[best]) best = c;
  }
  return best;
}

/// Recomputes the aggregate statistics from `instances`.
inline void summarize(BatchStats& stats, const MetricSpec& search_metric) {
  stats.attempted = stats.instances.size();
  stats.converged = 0;
  std::vector<double> l0;
  std::map<std::string, std::vector<double>> per_metric;
  std::vector<std::pair<std::string, MetricSpec>> metrics{
      {"l0", MetricSpec::l0()}, {"l1", MetricSpec::l1()}, {"l2", MetricSpec::l2()},
      {"linf", MetricSpec::linf()}};
  if (search_metric.kind() == MetricKind::kMadL1) metrics.emplace_back("madl1", search_metric);
  for (const auto& inst : stats.instances) {
    if (!inst.result.converged()) continue;
    ++stats.converged;
    l0.push_back(static_cast<double>(inst.result.l0_changed));
    for (const auto& [name, m] : metrics) {
      per_metric[name].push_back(
          distance(m, inst.input.values(), inst.result.counterfactual.values()));
    }
  }
  stats.success_rate = stats.attempted == 0 ? 0.0
                                            : static_cast<double>(stats.converged) /
                                                  static_cast<double>(stats.attempted);
  stats.median_l0.reset();
  stats.distances.clear();
  if (!l0.empty()) stats.median_l0 = median(l0);
  for (auto& [name, values] : per_metric) {
    double total = 0.0;
    for (double v : values) total += v;
    stats.distances[name] = {total / static_cast<double>(values.size()), median(values)};
  }
}

/// Runs one strategy on every row, in row order.
inline BatchStats evaluate_batch(const Network& net, const Dataset& data, const BatchOptions& opt) {
  if (data.empty()) throw DataError("cannot evaluate an empty dataset");
  BatchStats stats;
  stats.strategy = std::string(to_string(opt.strategy));
  stats.total = data.size();
  stats.width = data.width();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& x = data.row(i);
    const std::size_t original = predict_index(net, x.values());
    if (opt.target_class && *opt.target_class == original) {
      ++stats.skipped;
      continue;
    }
    InstanceResult inst;
    inst.row = i;
    inst.input = x;
    inst.original_class = original;
    inst.target_class = opt.target_class ? *opt.target_class : runner_up_class(net, x.values());
    if (opt.strategy == Strategy::kGradient) {
      SearchConfig cfg = opt.search;
      cfg.target_class = inst.target_class;
      if (!cfg.box.contains(x.values())) {
        inst.result = detail::finish(net, x.values(), x.raw(), SearchStatus::kInfeasibleInput,
                                     cfg, SearchResult{});
      } else {
        inst.result = generate_counterfactual(net, x, cfg);
      }
    } else {
      DifferentialEvolution de = opt.de;
      de.seed = opt.de.seed + i;
      inst.result = one_pixel_attack(net, x, PixelTarget{inst.target_class}, opt.pixels, de,
                                     opt.search.metric);
    }
    stats.instances.push_back(std::move(inst));
  }
  summarize(stats, opt.search.metric);
  return stats;
}

}  // namespace cfx
