#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lorentz/geodesic.hpp"

namespace lorentz {

/// Annulus of a patch with one periodic axis, bounded by two closed lightlike leaves.
/// Both leaves are oriented along the increasing periodic coordinate; gamma1 is the
/// leaf with the smaller transverse coordinate.
struct LightlikeAnnulus {
  MetricPatch patch;
  LeafTrace gamma1, gamma2;
  int periodic_axis = 1;

  /// Traces the two boundary leaves through the seeds and validates them.
  static LightlikeAnnulus build(const MetricPatch& patch, const Vec2& seed1, const Vec2& seed2, int family,
                                const TraceOptions& opt = {});
};

struct GaussBonnetReport {
  double integral = 0;   // ∫_A K dv
  double log_ratio = 0;  // ln(λ₁/λ₂)
  double lambda1 = 1, lambda2 = 1;
  double residual() const { return std::abs(integral - log_ratio); }
};

struct AnnulusQuadrature {
  int periodic_nodes = 64;    // trapezoid nodes along the periodic axis
  int transverse_nodes = 24;  // Gauss–Legendre nodes per transverse interval
};

GaussBonnetReport annulus_gauss_bonnet(const LightlikeAnnulus& a, const AnnulusQuadrature& q = {});

/// Lightlike frame (X, X⁰) with h(X, X⁰) = 1 and the connection form ω(v) = h(∇_v X, X⁰),
/// sampled on a region grid. |X| = 1 in the Euclidean norm unless a scale ρ is given.
struct ConnectionFrame {
  GridSpec grid;
  GridArray Xx, Xy, X0x, X0y;
  GridArray omega_x, omega_y;  // ω(∂x), ω(∂y)
  GridArray K, vol;            // curvature and the oriented area density dv_h(∂x, ∂y)
  double frame_error = 0;      // max of |h(X,X)|, |h(X⁰,X⁰)|, |h(X,X⁰) − 1|

  /// dω(∂x, ∂y) by grid differentiation.
  GridArray d_omega() const;
  /// max |dω − K dv_h| over the grid, with dv_h oriented so that dv_h(X⁰, X) = 1 > 0.
  double curvature_residual() const;
};

ConnectionFrame connection_form(const MetricPatch& patch, const GridSpec& region, int family,
                                const std::optional<Expr>& rho = std::nullopt);

struct ConstancyOptions {
  int seeds = 32;
  double periods = 4;  // trace budget in domain extents
  TraceOptions trace;
};

struct ConstancyReport {
  double deviation = 0;                // max over leaves of (max σ − min σ)
  std::vector<double> per_leaf;        // oscillation per seed
  std::vector<TraceStop> stops;        // why each leaf trace ended
};

ConstancyReport constancy_deviation(const MetricPatch& patch, const std::function<double(const Vec2&)>& sigma,
                                    int family, const ConstancyOptions& opt = {});

struct NamedMetric {
  std::string id;
  MetricPatch patch;
};

struct FlatnessRow {
  std::string metric_id;
  double dev_family0 = 0, dev_family1 = 0;
  double max_abs_K = 0;
  double gb_residual = 0;  // |∫ K dv| over the torus
};

struct FlatnessReport {
  std::vector<FlatnessRow> rows;
  /// Smallest C with max|K| ≤ C·min(dev0, dev1) over rows with a measurable deviation.
  double constant = 0;
  /// Rows where deviation ≈ 0 but max|K| is not ≈ 0 (would contradict the torus dichotomy).
  std::vector<std::string> violations;
};

FlatnessReport flatness_experiment(const std::vector<NamedMetric>& metrics, const ConstancyOptions& opt = {});

}  // namespace lorentz
