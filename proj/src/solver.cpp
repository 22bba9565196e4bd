// Copyright (c) 2026 The slopemix Authors
// SPDX-License-Identifier: Apache-2.0

#include "slopemix/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "slopemix/errors.hpp"

namespace slopemix {

SolverGrid SolverGrid::standard() {
  SolverGrid g;
  constexpr int kLambdas = 15;
  for (int k = 0; k < kLambdas; ++k)
    g.lambdas.push_back(std::pow(10.0, std::log10(5000.0) * k / (kLambdas - 1)));
  g.lambdas.back() = 5000.0;
  g.epsilons = {0.0, 0.05, 0.1};
  return g;
}

void validate(const SolverGrid& grid) {
  if (grid.lambdas.empty() || grid.epsilons.empty()) throw ValidationError("/grid", "grid must be nonempty");
  for (std::size_t k = 0; k < grid.lambdas.size(); ++k) {
    if (!(grid.lambdas[k] > 0.0)) throw ValidationError("/grid/lambdas", "lambdas must be positive");
    if (k > 0 && !(grid.lambdas[k] > grid.lambdas[k - 1]))
      throw ValidationError("/grid/lambdas", "lambdas must be strictly ascending");
  }
  for (double e : grid.epsilons)
    if (!(e >= 0.0)) throw ValidationError("/grid/epsilons", "epsilons must be nonnegative");
}

MixtureProblem make_problem(AffinePrediction prediction, const Scenario& scenario,
                            const std::vector<double>& normalized_references, double horizon) {
  if (prediction.rows() != scenario.m_domains() || prediction.cols() != scenario.n_datasets())
    throw ValidationError("/prediction", "prediction shape does not match the scenario");
  if (normalized_references.size() != scenario.m_domains())
    throw ValidationError("/references", "references must be indexed by domain");
  MixtureProblem p;
  p.prediction = std::move(prediction);
  p.domain_ids = scenario.domain_ids();
  p.targets = scenario.target_domains();
  p.constrained = scenario.constrained_domains();
  for (std::size_t i : p.constrained) p.references.push_back(normalized_references[i]);
  p.horizon = horizon;
  return p;
}

namespace {

struct Evaluator {
  const MixtureProblem& p;
  double lambda;
  double epsilon;
  Eigen::MatrixXd change;      // unusable columns zeroed; they carry no weight
  Eigen::VectorXd target_row;  // sum of target rows / horizon

  Evaluator(const MixtureProblem& problem, double l, double e)
      : p(problem), lambda(l), epsilon(e), change(problem.prediction.change) {
    for (std::size_t j = 0; j < p.prediction.usable.size(); ++j)
      if (!p.prediction.usable[j]) change.col(static_cast<Eigen::Index>(j)).setZero();
    target_row = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.n_datasets()));
    for (std::size_t i : p.targets) target_row += change.row(static_cast<Eigen::Index>(i)).transpose();
    target_row /= p.horizon;
  }

  double value(const Eigen::VectorXd& w) const {
    double f = target_row.dot(w);
    for (std::size_t k = 0; k < p.constrained.size(); ++k) {
      const auto i = static_cast<Eigen::Index>(p.constrained[k]);
      const double h = p.prediction.base(i) + change.row(i).dot(w) - p.references[k] + epsilon;
      if (h > 0.0) f += lambda * h * h;
    }
    return f;
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& w) const {
    Eigen::VectorXd g = target_row;
    for (std::size_t k = 0; k < p.constrained.size(); ++k) {
      const auto i = static_cast<Eigen::Index>(p.constrained[k]);
      const double h = p.prediction.base(i) + change.row(i).dot(w) - p.references[k] + epsilon;
      if (h > 0.0) g += 2.0 * lambda * h * change.row(i).transpose();
    }
    return g;
  }
};

Eigen::VectorXd project(const Eigen::VectorXd& v, const std::vector<bool>& allowed) {
  const std::vector<double> out = project_to_face(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())), allowed);
  return Eigen::Map<const Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size()));
}

Eigen::VectorXd spg(const Evaluator& ev, Eigen::VectorXd w, const std::vector<bool>& allowed,
                    const SolverOptions& options) {
  double f = ev.value(w);
  Eigen::VectorXd g = ev.gradient(w);
  double alpha = 1.0 / std::max(g.lpNorm<Eigen::Infinity>(), 1e-12);
  for (int it = 0; it < options.max_iterations; ++it) {
    const Eigen::VectorXd d = project(w - alpha * g, allowed) - w;
    if (d.norm() <= options.tolerance) {
      // Confirm stationarity with a unit step before stopping.
      if ((project(w - g, allowed) - w).norm() <= options.tolerance) break;
      alpha = 1.0;
      continue;
    }
    // Armijo backtracking along the feasible direction.
    const double slope = g.dot(d);
    double t = 1.0;
    Eigen::VectorXd next = w + d;
    double f_next = ev.value(next);
    while (f_next > f + 1e-4 * t * slope && t > 1e-20) {
      t *= 0.5;
      next = w + t * d;
      f_next = ev.value(next);
    }
    if (!(f_next <= f)) break;
    const Eigen::VectorXd g_next = ev.gradient(next);
    const Eigen::VectorXd s = next - w;
    const Eigen::VectorXd y = g_next - g;
    const double sy = s.dot(y);
    alpha = sy > 0.0 ? std::clamp(s.squaredNorm() / sy, 1e-12, 1e12) : std::min(alpha * 4.0, 1e12);
    const bool stalled = std::abs(f - f_next) <= 1e-16 * std::max(1.0, std::abs(f)) && s.norm() <= 1e-15;
    w = next;
    f = f_next;
    g = g_next;
    if (stalled) break;
  }
  return w;
}

bool lex_less(std::span<const double> a, std::span<const double> b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

}  // namespace

double penalized_objective(const MixtureProblem& problem, std::span<const double> w, double lambda,
                           double epsilon) {
  const Evaluator ev(problem, lambda, epsilon);
  return ev.value(Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size())));
}

double target_objective(const MixtureProblem& problem, std::span<const double> w) {
  const Eigen::VectorXd pred = problem.prediction.evaluate(w);
  double f = 0.0;
  for (std::size_t i : problem.targets)
    f += pred(static_cast<Eigen::Index>(i)) - problem.prediction.base(static_cast<Eigen::Index>(i));
  return f / problem.horizon;
}

double max_violation(const MixtureProblem& problem, std::span<const double> w) {
  const Eigen::VectorXd pred = problem.prediction.evaluate(w);
  double v = 0.0;
  for (std::size_t k = 0; k < problem.constrained.size(); ++k)
    v = std::max(v, pred(static_cast<Eigen::Index>(problem.constrained[k])) - problem.references[k]);
  return v;
}

MixtureWeights solve_penalized(const MixtureProblem& problem, double lambda, double epsilon,
                               const SolverOptions& options) {
  const std::size_t n = problem.n_datasets();
  if (n == 0) throw ValidationError("/prediction", "no datasets");
  if (problem.references.size() != problem.constrained.size())
    throw ValidationError("/references", "one reference per constrained domain is required");
  for (std::size_t i = 0; i < problem.prediction.rows(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    bool finite = std::isfinite(problem.prediction.base(r));
    for (std::size_t j = 0; j < n; ++j)
      if (problem.prediction.usable.empty() || problem.prediction.usable[j])
        finite = finite && std::isfinite(problem.prediction.change(r, static_cast<Eigen::Index>(j)));
    if (!finite) {
      const std::string id = i < problem.domain_ids.size() ? problem.domain_ids[i] : std::to_string(i);
      throw Error("non-finite prediction for domain '" + id + "'");
    }
  }
  std::vector<bool> allowed = problem.prediction.usable;
  if (allowed.empty()) allowed.assign(n, true);
  if (std::none_of(allowed.begin(), allowed.end(), [](bool b) { return b; })) {
    const std::string id = problem.domain_ids.empty() ? "?" : problem.domain_ids.front();
    throw Error("every dataset has a non-finite prediction (first domain '" + id + "')");
  }

  const Evaluator ev(problem, lambda, epsilon);
  std::vector<Eigen::VectorXd> starts;
  starts.push_back(project(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), 1.0 / n), allowed));
  for (std::size_t j = 0; j < n; ++j) {
    if (!allowed[j]) continue;
    Eigen::VectorXd e = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    e(static_cast<Eigen::Index>(j)) = 1.0;
    starts.push_back(e);
  }

  Eigen::VectorXd best;
  double best_f = std::numeric_limits<double>::infinity();
  for (const auto& s : starts) {
    const Eigen::VectorXd w = spg(ev, s, allowed, options);
    const double f = ev.value(w);
    const std::span<const double> ws(w.data(), n);
    if (best.size() == 0 || f < best_f ||
        (f == best_f && lex_less(ws, std::span<const double>(best.data(), n)))) {
      best = w;
      best_f = f;
    }
  }
  return project_to_simplex(std::span<const double>(best.data(), n));
}

SolveOutcome classify(const MixtureProblem& problem, const MixtureWeights& weights, double lambda, double epsilon) {
  SolveOutcome o;
  o.weights = weights;
  o.lambda = lambda;
  o.epsilon = epsilon;
  const Eigen::VectorXd pred = problem.prediction.evaluate(weights.values());
  o.predicted.assign(pred.data(), pred.data() + pred.size());
  o.target_objective = target_objective(problem, weights.values());
  o.max_violation = max_violation(problem, weights.values());
  o.feasible = o.max_violation == 0.0;
  return o;
}

std::size_t select_index(const std::vector<SolveOutcome>& candidates) {
  if (candidates.empty()) throw ValidationError("/grid", "no candidates");
  const bool any_feasible =
      std::any_of(candidates.begin(), candidates.end(), [](const SolveOutcome& c) { return c.feasible; });
  auto score = [&](const SolveOutcome& c) { return any_feasible ? c.target_objective : c.max_violation; };
  std::size_t best = candidates.size();
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const auto& c = candidates[k];
    if (any_feasible && !c.feasible) continue;
    if (best == candidates.size()) {
      best = k;
      continue;
    }
    const auto& b = candidates[best];
    const double sc = score(c), sb = score(b);
    if (sc != sb) {
      if (sc < sb) best = k;
      continue;
    }
    if (c.lambda != b.lambda) {
      if (c.lambda > b.lambda) best = k;
      continue;
    }
    if (c.epsilon != b.epsilon) {
      if (c.epsilon > b.epsilon) best = k;
      continue;
    }
    if (lex_less(c.weights.values(), b.weights.values())) best = k;
  }
  return best;
}

Selection select_weights(const MixtureProblem& problem, const SolverGrid& grid, const SolverOptions& options) {
  validate(grid);
  Selection s;
  for (double lambda : grid.lambdas)
    for (double epsilon : grid.epsilons)
      s.candidates.push_back(classify(problem, solve_penalized(problem, lambda, epsilon, options), lambda, epsilon));
  s.chosen = s.candidates[select_index(s.candidates)];
  return s;
}

}  // namespace slopemix
