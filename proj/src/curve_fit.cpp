// Copyright (c) 2026 The slopemix Authors
// SPDX-License-Identifier: Apache-2.0

#include "slopemix/curve_fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Dense>

#include "slopemix/errors.hpp"
#include "slopemix/sim_trainer.hpp"

namespace slopemix {

std::string_view to_string(CurveFamily family) noexcept {
  switch (family) {
    case CurveFamily::power_offset: return "power_offset";
    case CurveFamily::exponential: return "exponential";
    case CurveFamily::power: return "power";
    case CurveFamily::linear_fallback: return "linear_fallback";
  }
  return "linear_fallback";
}

CurveFamily curve_family_from_string(std::string_view text) {
  for (CurveFamily f : {CurveFamily::power_offset, CurveFamily::exponential, CurveFamily::power,
                        CurveFamily::linear_fallback})
    if (to_string(f) == text) return f;
  throw ValidationError("/family", "unknown curve family '" + std::string(text) + "'");
}

int parameter_count(CurveFamily family) noexcept {
  return (family == CurveFamily::power || family == CurveFamily::linear_fallback) ? 2 : 3;
}

namespace {

// u^b with the convention 0^b = 0 for b > 0.
double upow(double u, double b) { return u == 0.0 ? 0.0 : std::pow(u, b); }
double ulogpow(double u, double b) { return u == 0.0 ? 0.0 : std::pow(u, b) * std::log(u); }

// Column of the model that multiplies the leading linear coefficient.
double basis(CurveFamily family, double rate, double u) {
  switch (family) {
    case CurveFamily::power_offset:
    case CurveFamily::power: return upow(u, rate);
    case CurveFamily::exponential: return std::exp(-rate * u);
    case CurveFamily::linear_fallback: return u;
  }
  return u;
}

bool has_offset(CurveFamily family) { return family != CurveFamily::power; }

struct Problem {
  CurveFamily family;
  std::span<const double> u;
  std::span<const double> y;
};

Eigen::VectorXd residuals(const Problem& p, const Eigen::VectorXd& x) {
  Eigen::VectorXd r(static_cast<Eigen::Index>(p.u.size()));
  for (std::size_t k = 0; k < p.u.size(); ++k)
    r(static_cast<Eigen::Index>(k)) =
        curve_value(p.family, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())), p.u[k]) - p.y[k];
  return r;
}

Eigen::MatrixXd jacobian(const Problem& p, const Eigen::VectorXd& x) {
  const auto n = static_cast<Eigen::Index>(p.u.size());
  Eigen::MatrixXd j(n, x.size());
  for (Eigen::Index k = 0; k < n; ++k) {
    const double u = p.u[static_cast<std::size_t>(k)];
    switch (p.family) {
      case CurveFamily::power_offset:
        j(k, 0) = upow(u, x(1));
        j(k, 1) = x(0) * ulogpow(u, x(1));
        j(k, 2) = 1.0;
        break;
      case CurveFamily::exponential: {
        const double e = std::exp(-x(1) * u);
        j(k, 0) = e;
        j(k, 1) = -x(0) * u * e;
        j(k, 2) = 1.0;
        break;
      }
      case CurveFamily::power:
        j(k, 0) = upow(u, x(1));
        j(k, 1) = x(0) * ulogpow(u, x(1));
        break;
      case CurveFamily::linear_fallback:
        j(k, 0) = 1.0;
        j(k, 1) = u;
        break;
    }
  }
  return j;
}

// Linear coefficients for a fixed rate: returns {coef, offset} and the RSS.
std::pair<Eigen::VectorXd, double> linear_given_rate(const Problem& p, double rate) {
  const auto n = static_cast<Eigen::Index>(p.u.size());
  const Eigen::Index cols = has_offset(p.family) ? 2 : 1;
  Eigen::MatrixXd a(n, cols);
  Eigen::VectorXd y(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    a(k, 0) = basis(p.family, rate, p.u[static_cast<std::size_t>(k)]);
    if (cols == 2) a(k, 1) = 1.0;
    y(k) = p.y[static_cast<std::size_t>(k)];
  }
  Eigen::VectorXd coef = a.colPivHouseholderQr().solve(y);
  const double rss = (a * coef - y).squaredNorm();
  return {coef, rss};
}

Eigen::VectorXd pack(CurveFamily family, const Eigen::VectorXd& coef, double rate) {
  if (family == CurveFamily::power) return Eigen::Vector2d(coef(0), rate);
  return Eigen::Vector3d(coef(0), rate, coef(1));
}

// Gradient components that would push a bound parameter outside are
// dropped; those parameters are held fixed for the step.
std::vector<bool> active_bounds(const Eigen::VectorXd& x, const Eigen::VectorXd& g) {
  std::vector<bool> active(static_cast<std::size_t>(x.size()), false);
  // Descent direction is -g: at the lower bound it leaves the box when g > 0.
  if (x(1) <= kRateMin && g(1) > 0.0) active[1] = true;
  if (x(1) >= kRateMax && g(1) < 0.0) active[1] = true;
  return active;
}

double projected_norm(const Eigen::VectorXd& g, const std::vector<bool>& active) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < g.size(); ++k)
    if (!active[static_cast<std::size_t>(k)]) s += g(k) * g(k);
  return std::sqrt(s);
}

struct LmResult {
  Eigen::VectorXd x;
  double rss = 0.0;
  bool converged = false;
  int iterations = 0;
};

LmResult levenberg_marquardt(const Problem& p, Eigen::VectorXd x, const FitOptions& options) {
  auto clamp = [](Eigen::VectorXd& v) { v(1) = std::clamp(v(1), kRateMin, kRateMax); };
  clamp(x);
  Eigen::VectorXd r = residuals(p, x);
  double rss = r.squaredNorm();
  double mu = 1e-3;
  LmResult out;
  int polish = 0;
  constexpr int kPolishIterations = 10;
  for (int it = 0; it < options.max_iterations + kPolishIterations; ++it) {
    const Eigen::MatrixXd j = jacobian(p, x);
    const Eigen::VectorXd g = j.transpose() * r;
    const std::vector<bool> active = active_bounds(x, g);
    if (!out.converged && projected_norm(g, active) <= options.gradient_tolerance) out.converged = true;
    if (out.converged && ++polish > kPolishIterations) break;
    if (!out.converged && it >= options.max_iterations) break;

    Eigen::MatrixXd h = j.transpose() * j;
    bool accepted = false;
    while (mu < 1e20) {
      Eigen::MatrixXd a = h;
      Eigen::VectorXd rhs = -g;
      for (Eigen::Index k = 0; k < a.rows(); ++k) {
        a(k, k) += mu * std::max(h(k, k), 1e-12);
        if (active[static_cast<std::size_t>(k)]) {
          a.row(k).setZero();
          a.col(k).setZero();
          a(k, k) = 1.0;
          rhs(k) = 0.0;
        }
      }
      const Eigen::VectorXd step = a.ldlt().solve(rhs);
      Eigen::VectorXd candidate = x + step;
      clamp(candidate);
      const Eigen::VectorXd rc = residuals(p, candidate);
      const double rss_c = rc.squaredNorm();
      if (std::isfinite(rss_c) && rss_c < rss) {
        x = candidate;
        r = rc;
        rss = rss_c;
        mu = std::max(mu * 0.3, 1e-12);
        accepted = true;
        break;
      }
      mu *= 4.0;
    }
    out.iterations = it + 1;
    if (!accepted) {
      // No descent possible at machine precision: stationary if the gradient says so.
      if (!out.converged && projected_norm(g, active) <= options.gradient_tolerance) out.converged = true;
      break;
    }
  }
  out.x = x;
  out.rss = rss;
  return out;
}

}  // namespace

double curve_value(CurveFamily family, std::span<const double> params, double u) {
  switch (family) {
    case CurveFamily::power_offset: return params[0] * upow(u, params[1]) + params[2];
    case CurveFamily::exponential: return params[0] * std::exp(-params[1] * u) + params[2];
    case CurveFamily::power: return params[0] * upow(u, params[1]);
    case CurveFamily::linear_fallback: return params[0] + params[1] * u;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

std::optional<double> aicc(double rss, int n, int k) {
  if (n - k - 1 <= 0) return std::nullopt;
  return n * std::log(rss / n) + 2.0 * k + 2.0 * k * (k + 1) / static_cast<double>(n - k - 1);
}

double rss_floor(std::span<const double> y) {
  double scale = 0.0;
  for (double v : y) scale = std::max(scale, std::abs(v));
  const double floor = static_cast<double>(y.size()) * std::pow(1e-10 * scale, 2);
  return floor > 0.0 ? floor : std::numeric_limits<double>::min();
}

FittedCurve fit_family(CurveFamily family, std::span<const double> u, std::span<const double> y,
                       const FitOptions& options) {
  if (u.size() != y.size()) throw ValidationError("/trajectory", "u and y lengths differ");
  FittedCurve out;
  out.family = family;
  out.n_points = static_cast<int>(u.size());
  const Problem p{family, u, y};

  if (family == CurveFamily::linear_fallback) {
    const auto [coef, rss] = linear_given_rate(p, 1.0);
    out.params = {coef.size() > 1 ? coef(1) : 0.0, coef(0)};
    out.rss = rss;
    out.converged = true;
    return out;
  }

  // Starts: the best rate on a log grid (variable projection), then seeded
  // log-uniform draws.
  std::vector<double> rates;
  {
    double best_rate = 1.0;
    double best_rss = std::numeric_limits<double>::infinity();
    constexpr int kGrid = 40;
    for (int k = 0; k < kGrid; ++k) {
      const double rate = kRateMin * std::pow(kRateMax / kRateMin, static_cast<double>(k) / (kGrid - 1));
      const double rss = linear_given_rate(p, rate).second;
      if (rss < best_rss) {
        best_rss = rss;
        best_rate = rate;
      }
    }
    rates.push_back(best_rate);
    std::mt19937_64 rng(detail::combine_seed(options.seed, static_cast<std::uint64_t>(family) + 1));
    while (static_cast<int>(rates.size()) < std::max(1, options.starts))
      rates.push_back(kRateMin * std::pow(kRateMax / kRateMin, detail::uniform01(rng)));
  }

  bool have = false;
  LmResult best;
  for (double rate : rates) {
    const auto coef = linear_given_rate(p, rate).first;
    LmResult r = levenberg_marquardt(p, pack(family, coef, rate), options);
    const bool better = !have || (r.converged && !best.converged) ||
                        (r.converged == best.converged && r.rss < best.rss);
    if (better) {
      best = std::move(r);
      have = true;
    }
  }
  out.params.assign(best.x.data(), best.x.data() + best.x.size());
  out.rss = best.rss;
  out.converged = best.converged;
  out.iterations = best.iterations;
  for (double v : out.params)
    if (!std::isfinite(v)) out.converged = false;
  return out;
}

CurveSelection select_curve_detailed(std::span<const double> u, std::span<const double> y,
                                     const FitOptions& options) {
  CurveSelection sel;
  const double floor = rss_floor(y);
  const int n = static_cast<int>(u.size());
  // Fewer parameters first, so equal scores keep the smaller model.
  for (CurveFamily f : {CurveFamily::power, CurveFamily::power_offset, CurveFamily::exponential}) {
    FittedCurve c = fit_family(f, u, y, options);
    c.aicc = aicc(std::max(c.rss, floor), n, parameter_count(f)).value_or(std::numeric_limits<double>::infinity());
    sel.candidates.push_back(std::move(c));
  }
  const FittedCurve* best = nullptr;
  for (const auto& c : sel.candidates) {
    if (!c.converged || !std::isfinite(c.aicc)) continue;
    if (best == nullptr || c.aicc < best->aicc) best = &c;
  }
  if (best != nullptr) {
    sel.chosen = *best;
  } else {
    sel.chosen = fit_family(CurveFamily::linear_fallback, u, y, options);
    sel.chosen.aicc = aicc(std::max(sel.chosen.rss, floor), n, 2).value_or(std::numeric_limits<double>::infinity());
  }
  return sel;
}

FittedCurve select_curve(std::span<const double> u, std::span<const double> y, const FitOptions& options) {
  return select_curve_detailed(u, y, options).chosen;
}

}  // namespace slopemix
