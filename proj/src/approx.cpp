#include "lorentz/approx.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace lorentz {

double op_norm(const MatX& m) {
  if (m.size() == 0) return 0;
  return Eigen::JacobiSVD<MatX>(m).singularValues()(0);
}

namespace {

void require_signature(const MatX& H, const char* what) {
  if (H.rows() != H.cols() || (H.rows() != 2 && H.rows() != 3))
    throw PreconditionError(std::string(what) + ": expected a 2x2 or 3x3 form");
  if ((H - H.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1 + H.cwiseAbs().maxCoeff()))
    throw PreconditionError(std::string(what) + ": form is not symmetric");
  const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<MatX>(H).eigenvalues();
  const double scale = ev.cwiseAbs().maxCoeff();
  int neg = 0, pos = 0;
  for (int i = 0; i < ev.size(); ++i) {
    if (ev[i] < -1e-14 * scale) ++neg;
    else if (ev[i] > 1e-14 * scale) ++pos;
  }
  if (neg != 1 || pos != H.rows() - 1) throw SignatureError(std::string(what) + ": form is not Lorentzian");
}

/// Largest-magnitude component made positive; ties go to the first index.
Eigen::VectorXd sign_fixed(Eigen::VectorXd v) {
  int best = 0;
  for (int i = 1; i < v.size(); ++i)
    if (std::abs(v[i]) > std::abs(v[best]) * (1 + 1e-12)) best = i;
  return v[best] < 0 ? Eigen::VectorXd(-v) : v;
}

Mat2 null_gauge_2(const Mat2& G, bool allow_flip) {
  const double a = G(0, 0), b = G(0, 1), c = G(1, 1);
  if (b < 0) {
    if (!allow_flip) throw PreconditionError("perturbation too large for the near-identity factorization branch");
    const Mat2 D = Eigen::Vector2d(1, -1).asDiagonal();
    return D * null_gauge_2(-G, false);
  }
  const double disc = b * b - a * c;
  if (disc < 0) throw SignatureError("form is not Lorentzian");
  const double p2 = 0.5 * (b + std::sqrt(disc));
  if (!(p2 > 0)) throw PreconditionError("degenerate null-gauge factorization");
  const double p = std::sqrt(p2);
  Mat2 F;
  F << p, c / (2 * p), a / (2 * p), p;
  return F;
}

MatX null_gauge(const MatX& G, bool allow_flip) {
  if (G.rows() == 2) return null_gauge_2(G, allow_flip);
  // J₂ ⊕ 1: split off the spacelike direction first
  const double gamma = G(2, 2);
  if (!(gamma > 0)) throw PreconditionError("perturbation too large for the near-identity factorization branch");
  const double t = std::sqrt(gamma);
  const Eigen::Vector2d g = G.block<2, 1>(0, 2);
  const Mat2 schur = G.topLeftCorner<2, 2>() - g * g.transpose() / gamma;
  MatX P = MatX::Zero(3, 3);
  P.topLeftCorner<2, 2>() = null_gauge_2(schur, allow_flip);
  P.block<1, 2>(2, 0) = (g / t).transpose();
  P(2, 2) = t;
  return P;
}

}  // namespace

MatX canonical_null_basis(const MatX& H) {
  require_signature(H, "canonical_null_basis");
  Eigen::SelfAdjointEigenSolver<MatX> es(H);
  const Eigen::VectorXd ev = es.eigenvalues();  // ascending: one negative first
  const int m = static_cast<int>(H.rows());
  const Eigen::VectorXd b = sign_fixed(es.eigenvectors().col(0)) / std::sqrt(-ev[0]);
  const Eigen::VectorXd a = sign_fixed(es.eigenvectors().col(m - 1)) / std::sqrt(ev[m - 1]);
  MatX C(m, m);
  C.col(0) = (a + b) / std::sqrt(2.0);
  C.col(1) = (a - b) / std::sqrt(2.0);
  if (m == 3) C.col(2) = sign_fixed(es.eigenvectors().col(1)) / std::sqrt(ev[1]);
  return C;
}

MatX null_gauge_factor(const MatX& G) { return null_gauge(G, true); }

Reduction reduce_to_base(const MatX& H, const MatX& Hn) {
  if (H.rows() != Hn.rows() || H.cols() != Hn.cols()) throw PreconditionError("reduce_to_base: size mismatch");
  require_signature(H, "reduce_to_base");
  require_signature(Hn, "reduce_to_base");
  const MatX C = canonical_null_basis(H);
  const MatX G = C.transpose() * Hn * C;
  const MatX F = null_gauge(G, false);
  Reduction r;
  r.M = C * F * C.inverse();
  r.residual = (r.M.transpose() * H * r.M - Hn).cwiseAbs().maxCoeff();
  const double dh = op_norm(Hn - H);
  r.constant = dh > 0 ? op_norm(r.M - MatX::Identity(H.rows(), H.cols())) / dh : 0.0;
  return r;
}

PolarDecomposition h_polar(const Mat2& H, const Mat2& M) {
  if (std::abs(M.determinant()) < 1e-300 || !M.allFinite()) throw PreconditionError("h_polar: singular matrix");
  const Mat2 C = canonical_null_basis(H);
  const Mat2 Ci = C.inverse();
  const Mat2 Mt = Ci * M * C;
  Mat2 J;
  J << 0, 1, 1, 0;
  Mat2 It = Mt * null_gauge_2(Mt.transpose() * J * Mt, true).inverse();
  // snap to the exact J-isometry shape (diagonal or anti-diagonal with reciprocal entries)
  if (std::abs(It(0, 0) * It(1, 1)) >= std::abs(It(0, 1) * It(1, 0))) {
    It << It(0, 0), 0, 0, 1 / It(0, 0);
  } else {
    It << 0, It(0, 1), 1 / It(0, 1), 0;
  }
  const Mat2 Pt = It.inverse() * Mt;
  PolarDecomposition d;
  d.I = C * It * Ci;
  d.P = C * Pt * Ci;
  d.reconstruction_error = (d.I * d.P - M).norm() / M.norm();
  d.isometry_error = (d.I.transpose() * H * d.I - H).cwiseAbs().maxCoeff();
  return d;
}

Vec2 minimal_stretch_direction(const Mat2& M, double* top_stretch) {
  const Mat2 S = M.transpose() * M;
  // start from the dominant column so the start vector is never orthogonal to the top eigenvector
  Vec2 v = S.col(0).norm() >= S.col(1).norm() ? S.col(0) : S.col(1);
  if (v.norm() == 0) throw PreconditionError("minimal_stretch_direction: zero matrix");
  v.normalize();
  double r = v.dot(S * v);
  for (int it = 0; it < 500; ++it) {
    v = (S * v).normalized();
    const double rn = v.dot(S * v);
    const bool done = std::abs(rn - r) <= 1e-10 * std::abs(rn);
    r = rn;
    if (done) break;
  }
  if (top_stretch) *top_stretch = std::sqrt(r);
  Vec2 w(-v.y(), v.x());
  if (w.y() < 0 || (w.y() == 0 && w.x() < 0)) w = -w;
  return w;
}

namespace {

void require_unbounded(const std::vector<Mat2>& Ms) {
  if (Ms.empty()) throw PreconditionError("empty matrix sequence");
  double top = 0;
  for (const Mat2& m : Ms) top = std::max(top, op_norm(m));
  if (top < kUnboundedThreshold) throw PreconditionError("sequence is bounded: no distinguished direction");
}

void require_convergent_forms(const Mat2& H, const std::vector<Mat2>& Ms) {
  if (Ms.size() < 2) return;
  const Mat2 a = Ms[Ms.size() - 1].transpose() * H * Ms[Ms.size() - 1];
  const Mat2 b = Ms[Ms.size() - 2].transpose() * H * Ms[Ms.size() - 2];
  if ((a - b).norm() > 1e-3 * a.norm()) throw PreconditionError("forms ᵗM_n H M_n are not convergent");
}

}  // namespace

NullDirectionEstimate shrinking_null_vector(const Mat2& H, const std::vector<Mat2>& Ms) {
  require_unbounded(Ms);
  require_convergent_forms(H, Ms);
  const LightlikePair lp = lightlike_directions(H);
  const Mat2 inv = Ms.back().inverse();
  const int pick = (inv * lp.direction(0)).norm() <= (inv * lp.direction(1)).norm() ? 0 : 1;
  NullDirectionEstimate e;
  e.direction = lp.direction(pick);
  e.null_residual = std::abs(e.direction.dot(H * e.direction));
  for (const Mat2& m : Ms) e.norms.push_back((m.inverse() * e.direction).norm());
  return e;
}

NullDirectionEstimate linear_AS(const Mat2& H, const std::vector<Mat2>& Ms) {
  require_unbounded(Ms);
  NullDirectionEstimate e;
  e.direction = minimal_stretch_direction(Ms.back());
  e.null_residual = std::abs(e.direction.dot(H * e.direction));
  for (const Mat2& m : Ms) e.norms.push_back((m * e.direction).norm());
  return e;
}

// ---- Anosov system ----------------------------------------------------------

IMat2 anosov_matrix() {
  IMat2 A;
  A << 2, 1, 1, 1;
  return A;
}

double anosov_lambda() { return 0.5 * (3 + std::sqrt(5.0)); }

Mat2 anosov_form() {
  const double s = 2 / std::sqrt(5.0);
  Mat2 g;
  g << s, -0.5 * s, -0.5 * s, -s;
  return g;
}

Vec2 anosov_expanding() { return Vec2(1, 0.5 * (std::sqrt(5.0) - 1)).normalized(); }
Vec2 anosov_contracting() { return Vec2(1, -0.5 * (std::sqrt(5.0) + 1)).normalized(); }

MetricPatch anosov_metric(const AnosovSystem& sys) {
  const Mat2 g = anosov_form();
  const Vec2 Yf = g * anosov_expanding();
  const Expr f = Expr(sys.epsilon) * sys.profile;
  return MetricPatch::from_expressions(Domain::unit_torus(),
                                       {Expr(g(0, 0)) + f * Expr(Yf[0] * Yf[0]), Expr(g(0, 1)) + f * Expr(Yf[0] * Yf[1]),
                                        Expr(g(1, 1)) + f * Expr(Yf[1] * Yf[1])},
                                       sys.grid, sys.grid);
}

std::vector<RateRow> anosov_experiment(const AnosovSystem& sys) {
  if (sys.n_max < 0 || sys.n_max > 12) throw PreconditionError("anosov_experiment needs 0 <= n_max <= 12");
  const Mat2 g = anosov_form();
  const MetricPatch base =
      MetricPatch::from_expressions(Domain::unit_torus(), {Expr(g(0, 0)), Expr(g(0, 1)), Expr(g(1, 1))}, sys.grid, sys.grid);
  const MetricPatch h = anosov_metric(sys);
  const GridSpec grid = base.grid();
  const MetricPatch base_s = base.sampled(grid);
  const MetricPatch h_s = sys.mode == DerivativeMode::Spectral ? h.sampled(grid) : h;
  const IMat2 A = anosov_matrix();
  std::vector<RateRow> rows;
  IMat2 An = IMat2::Identity();
  for (int n = 0; n <= sys.n_max; ++n, An = A * An) {
    RateRow r;
    r.n = n;
    std::array<double, 3> o;
    if (sys.mode == DerivativeMode::Spectral) {
      // f∘Aⁿ must be resolved by the grid, otherwise aliasing fakes convergence
      if (op_norm(An.cast<double>()) * grid.spacing(0) >= 0.25)
        throw PreconditionError("grid too coarse to resolve f∘A^n (n = " + std::to_string(n) + ")");
      o = ck_distance_orders(pullback(h_s, TorusDiffeo::linear(An)), base_s, 2);
    } else {
      o = ck_distance_orders(pullback(h, TorusDiffeo::linear(An)), base, 2);
    }
    r.c0 = o[0];
    r.c1 = std::max(o[0], o[1]);
    r.c2 = std::max({o[0], o[1], o[2]});
    if (!rows.empty()) {
      r.ratio0 = rows.back().c0 > 0 ? r.c0 / rows.back().c0 : 0;
      r.ratio1 = rows.back().c1 > 0 ? r.c1 / rows.back().c1 : 0;
    }
    rows.push_back(r);
  }
  return rows;
}

RateVerdict check_rates(const std::vector<RateRow>& rows, int n_lo, int n_hi, double tol) {
  const double l = anosov_lambda();
  RateVerdict v;
  double c2_min = 1e300, c2_max = 0;
  int count = 0;
  for (const RateRow& r : rows) {
    if (r.n < std::max(n_lo, 1) || r.n > n_hi) continue;
    ++count;
    v.worst_c0 = std::max(v.worst_c0, std::abs(r.ratio0 * l * l - 1));
    v.worst_c1 = std::max(v.worst_c1, std::abs(r.ratio1 * l - 1));
    c2_min = std::min(c2_min, r.c2);
    c2_max = std::max(c2_max, r.c2);
  }
  if (count == 0) return v;
  v.c2_band = c2_min > 0 ? c2_max / c2_min : INFINITY;
  v.c0 = v.worst_c0 <= tol;
  v.c1 = v.worst_c1 <= tol;
  v.c2 = c2_min > 0 && v.c2_band < 2;
  return v;
}

ASFieldReport as_field_estimate(const MetricPatch& limit, const TorusDiffeo& phi, int n_max, const GridSpec& grid) {
  if (n_max < 1) throw PreconditionError("as_field_estimate needs n_max >= 1");
  constexpr double kFeasible = 1e12;  // beyond this the least-stretch direction is lost to rounding
  ASFieldReport rep;
  rep.n_used = n_max;
  rep.min_top_stretch = INFINITY;
  GridArray ang(grid.nx, grid.ny);
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      Vec2 q = grid.point(i, j);
      Mat2 D = Mat2::Identity();
      double top = 0;
      Vec2 dir = Vec2::UnitX();
      for (int n = 1; n <= n_max; ++n) {
        const DiffeoJet jet = phi.evaluate(q);
        D = jet.jacobian * D;
        q = jet.value;
        dir = minimal_stretch_direction(D, &top);
        if (top >= kFeasible) {
          rep.n_used = std::min(rep.n_used, n);
          break;
        }
      }
      rep.min_top_stretch = std::min(rep.min_top_stretch, top);
      ang(i, j) = std::atan2(dir.y(), dir.x());
    }
  if (rep.min_top_stretch < kUnboundedThreshold)
    throw PreconditionError("iterates look equicontinuous: top stretch below threshold");
  rep.field = LineField::from_angles(grid, ang);

  // post-checks against the limit metric
  const GridArray cx = differentiate(grid, rep.field.cos2, 0, 1), cy = differentiate(grid, rep.field.cos2, 1, 1);
  const GridArray sx = differentiate(grid, rep.field.sin2, 0, 1), sy = differentiate(grid, rep.field.sin2, 1, 1);
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      const Vec2 p = grid.point(i, j);
      const MetricJet jet = limit.jet(p);
      const Vec2 V = rep.field.direction(i, j);
      rep.null_residual = std::max(rep.null_residual, std::abs(V.dot(jet.g * V)));
      const double c = rep.field.cos2(i, j), s = rep.field.sin2(i, j);
      const Vec2 grad_theta(0.5 * (c * sx(i, j) - s * cx(i, j)), 0.5 * (c * sy(i, j) - s * cy(i, j)));
      const Vec2 acc = christoffel(jet).contract(V, V);
      const double kappa = V.dot(grad_theta) + (V.x() * acc.y() - V.y() * acc.x());
      rep.geodesic_residual = std::max(rep.geodesic_residual, std::abs(kappa));
    }
  return rep;
}

double invariant_function_limit(const std::vector<ScalarField>& sigma, const std::vector<ScalarField>& sigma_prime,
                                const std::vector<TorusDiffeo>& phi, const LineField& as_field,
                                const InvariantLimitOptions& opt) {
  if (sigma.empty() || sigma.size() != sigma_prime.size() || sigma.size() != phi.size())
    throw PreconditionError("invariant_function_limit: sequences must be non-empty and of equal length");
  const Domain& d = as_field.grid.domain;
  std::mt19937 rng(12345);
  std::uniform_real_distribution<double> U(0, 1);
  for (int s = 0; s < opt.residual_samples; ++s) {
    const Vec2 p(d.x0 + d.length(0) * U(rng), d.y0 + d.length(1) * U(rng));
    for (std::size_t n = 0; n < sigma.size(); ++n) {
      const double lhs = sigma_prime[n](p), rhs = sigma[n](phi[n](p));
      if (std::abs(lhs - rhs) > opt.residual_tol * (1 + std::abs(lhs)))
        throw PreconditionError("sequences violate sigma'_n = sigma_n o phi_n");
    }
  }
  const ScalarField& f = sigma_prime.back();
  const int steps = std::max(1, static_cast<int>(std::ceil(opt.curve_length / opt.step)));
  const double h = opt.curve_length / steps;
  double dev = 0;
  for (int k = 0; k < opt.seeds; ++k) {
    Vec2 p(d.x0 + d.length(0) * (k + 0.5) / opt.seeds,
           d.y0 + d.length(1) * std::fmod(k * 0.6180339887498949, 1.0));
    Vec2 dir = as_field.direction_at(p);
    double lo = f(p), hi = lo;
    for (int s = 0; s < steps; ++s) {
      const Vec2 k1 = as_field.direction_at(p, dir);
      const Vec2 k2 = as_field.direction_at(p + 0.5 * h * k1, k1);
      const Vec2 k3 = as_field.direction_at(p + 0.5 * h * k2, k2);
      const Vec2 k4 = as_field.direction_at(p + h * k3, k3);
      p += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
      dir = k4;
      const double v = f(p);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    dev = std::max(dev, hi - lo);
  }
  return dev;
}

}  // namespace lorentz
