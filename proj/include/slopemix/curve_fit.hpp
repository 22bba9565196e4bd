// Copyright (c) 2026 The slopemix Authors
// SPDX-License-Identifier: Apache-2.0
//
// Small bounded nonlinear least-squares fits of probe loss trajectories and
// AICc model selection between curve families.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace slopemix {

enum class CurveFamily {
  power_offset,     // a * u^b + d
  exponential,      // a * exp(-b u) + d
  power,            // alpha * u^p
  linear_fallback,  // d + s * u
};

inline constexpr CurveFamily kFittedFamilies[] = {CurveFamily::power_offset, CurveFamily::exponential,
                                                  CurveFamily::power};

std::string_view to_string(CurveFamily family) noexcept;
CurveFamily curve_family_from_string(std::string_view text);

/// Number of free parameters.
int parameter_count(CurveFamily family) noexcept;

/// Bounds on the exponent / rate parameter of the nonlinear families.
inline constexpr double kRateMin = 0.05;
inline constexpr double kRateMax = 10.0;

/// Parameters are stored in the order of the formulas above:
/// power_offset {a, b, d}, exponential {a, b, d}, power {alpha, p},
/// linear_fallback {d, s}.
double curve_value(CurveFamily family, std::span<const double> params, double u);

struct FittedCurve {
  CurveFamily family = CurveFamily::linear_fallback;
  std::vector<double> params;
  double rss = 0.0;
  int n_points = 0;
  double aicc = 0.0;
  bool converged = false;
  int iterations = 0;

  double value(double u) const { return curve_value(family, params, u); }
  /// Change relative to the fitted value at u = 0.
  double delta(double u) const { return value(u) - value(0.0); }
};

struct FitOptions {
  int max_iterations = 200;
  double gradient_tolerance = 1e-8;
  int starts = 3;
  std::uint64_t seed = 0;
};

/// AICc = n ln(RSS/n) + 2k + 2k(k+1)/(n-k-1). Empty when n - k - 1 <= 0.
std::optional<double> aicc(double rss, int n_points, int n_params);

/// RSS floor used for model selection: n * (1e-10 * max|y|)^2. Exact fits
/// of different families then tie and the smaller model wins.
double rss_floor(std::span<const double> y);

/// Fits one family by bounded Levenberg-Marquardt from seeded starts.
/// `converged` reports whether the projected gradient reached tolerance.
FittedCurve fit_family(CurveFamily family, std::span<const double> u, std::span<const double> y,
                       const FitOptions& options = {});

/// Fits every family, picks the minimum-AICc converged eligible fit (ties:
/// fewer parameters, then family order), and falls back to a straight line.
FittedCurve select_curve(std::span<const double> u, std::span<const double> y, const FitOptions& options = {});

/// All candidate fits from the last call, for diagnostics.
struct CurveSelection {
  FittedCurve chosen;
  std::vector<FittedCurve> candidates;
};
CurveSelection select_curve_detailed(std::span<const double> u, std::span<const double> y,
                                     const FitOptions& options = {});

}  // namespace slopemix
