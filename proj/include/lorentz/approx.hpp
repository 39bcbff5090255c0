#pragma once

#include <functional>
#include <vector>

#include "lorentz/diffeo.hpp"
#include "lorentz/metric.hpp"

namespace lorentz {

using MatX = Eigen::MatrixXd;

/// Spectral (operator 2-) norm.
double op_norm(const MatX& m);

/// Basis C with ᵗC H C = J (J = [[0,1],[1,0]] in 2D, J ⊕ 1 in 3D), pinned to the
/// eigenvectors of H with a fixed sign rule, so it depends on H alone.
MatX canonical_null_basis(const MatX& H);

/// P close to Id with ᵗP J P = G in the symmetric null gauge (equal diagonal entries).
MatX null_gauge_factor(const MatX& G);

struct Reduction {
  MatX M;
  double residual = 0;  // ‖ᵗM H M − H_n‖ (max entry)
  double constant = 0;  // ‖M − Id‖ / ‖H_n − H‖ (operator norms), 0 when H_n = H
};

/// M with ᵗM H M = H_n and M → Id as H_n → H; H of signature (m−1, 1), m ∈ {2, 3}.
Reduction reduce_to_base(const MatX& H, const MatX& Hn);

struct PolarDecomposition {
  Mat2 I, P;
  double reconstruction_error = 0;  // ‖I·P − M‖ / ‖M‖
  double isometry_error = 0;        // ‖ᵗI H I − H‖
};

/// M = I·P with I an H-isometry and P in the symmetric null gauge.
PolarDecomposition h_polar(const Mat2& H, const Mat2& M);

/// Direction of least stretch of M (unit, right singular vector), by power iteration on ᵗM M.
Vec2 minimal_stretch_direction(const Mat2& M, double* top_stretch = nullptr);

struct NullDirectionEstimate {
  Vec2 direction;                // unit vector
  double null_residual = 0;      // |H(v, v)|
  std::vector<double> norms;     // ‖M_n^{±1} v‖ along the range
};

constexpr double kUnboundedThreshold = 1e3;

/// The H-null direction v minimizing ‖M_n⁻¹ v‖ at the largest n.
NullDirectionEstimate shrinking_null_vector(const Mat2& H, const std::vector<Mat2>& Ms);
/// The minimal-stretch direction of M_n at the largest n (checked for H-nullity, not assumed).
NullDirectionEstimate linear_AS(const Mat2& H, const std::vector<Mat2>& Ms);

// ---- Anosov system ----------------------------------------------------------

IMat2 anosov_matrix();
/// λ₊ = (3 + √5)/2.
double anosov_lambda();
/// The A-invariant form (2/√5)[[1, −1/2], [−1/2, −1]] of determinant −1.
Mat2 anosov_form();
Vec2 anosov_expanding();    // unit eigenvector for λ₊
Vec2 anosov_contracting();  // unit eigenvector for λ₊⁻¹

enum class DerivativeMode { Exact, Spectral };

struct AnosovSystem {
  double epsilon = 0.1;
  Expr profile = Expr::parse("sin(2*pi*x)");
  int n_max = 8;
  int grid = 256;
  DerivativeMode mode = DerivativeMode::Exact;
};

/// h = g_A + ε·f·(Y♭ ⊗ Y♭) with Y the unit expanding eigenvector.
MetricPatch anosov_metric(const AnosovSystem& sys);

struct RateRow {
  int n = 0;
  double c0 = 0, c1 = 0, c2 = 0;
  double ratio0 = 0, ratio1 = 0;  // c(n)/c(n−1); 0 for the first row
};

/// Distances of A^{n*}h from g_A for n = 0..n_max.
std::vector<RateRow> anosov_experiment(const AnosovSystem& sys);

struct RateVerdict {
  bool c0 = false, c1 = false, c2 = false;
  double worst_c0 = 0, worst_c1 = 0;  // max relative deviation of ratios from λ₊⁻², λ₊⁻¹
  double c2_band = 0;                 // max c2 / min c2
  bool ok() const { return c0 && c1 && c2; }
};

/// Checks ratios within `tol` of λ₊⁻² and λ₊⁻¹ and a C² band below 2 for n in [n_lo, n_hi].
RateVerdict check_rates(const std::vector<RateRow>& rows, int n_lo = 3, int n_hi = 8, double tol = 0.05);

struct ASFieldReport {
  LineField field;
  int n_used = 0;
  double min_top_stretch = 0;   // smallest top singular value of Dφⁿ over the grid
  double null_residual = 0;     // max |g(v, v)| for the limit metric
  double geodesic_residual = 0; // max |curvature of the integral curves| for the limit metric
};

/// Minimal-stretch direction of Dφⁿ at every node of `grid`.
ASFieldReport as_field_estimate(const MetricPatch& limit, const TorusDiffeo& phi, int n_max, const GridSpec& grid);

struct InvariantLimitOptions {
  int seeds = 32;
  double curve_length = 1.0;
  double step = 1.0 / 256;
  int residual_samples = 64;
  double residual_tol = 1e-8;
};

using ScalarField = std::function<double(const Vec2&)>;

/// Oscillation of σ′_N (largest n) along integral curves of the AS field, after checking
/// σ′_n = σ_n ∘ φ_n on sample points.
double invariant_function_limit(const std::vector<ScalarField>& sigma, const std::vector<ScalarField>& sigma_prime,
                                const std::vector<TorusDiffeo>& phi, const LineField& as_field,
                                const InvariantLimitOptions& opt = {});

}  // namespace lorentz
