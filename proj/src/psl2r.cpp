#include "lorentz/psl2r.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "lorentz/errors.hpp"

namespace lorentz {

std::string to_string(IsometryVerdict v) {
  switch (v) {
    case IsometryVerdict::FullTimesZ2: return "FullTimesZ2";
    case IsometryVerdict::LeftOnly: return "LeftOnly";
    case IsometryVerdict::Biinvariant: return "Biinvariant";
    case IsometryVerdict::Unclassified: return "Unclassified";
  }
  return "Unclassified";
}

Mat3 killing_matrix() {
  Mat3 K;
  K << 0, 1, 0, 1, 0, 0, 0, 0, 1;
  return K;
}

namespace {

using Mat3L = Eigen::Matrix<long double, 3, 3>;

IsometryVerdict verdict_from(int clusters, const std::vector<int>& alg, const std::vector<int>& geo) {
  if (clusters == 3) return IsometryVerdict::FullTimesZ2;
  for (std::size_t k = 0; k < alg.size(); ++k) {
    if (alg[k] == 1) continue;
    if (geo[k] == 1) return IsometryVerdict::LeftOnly;
    if (alg[k] == 3 && geo[k] == 3) return IsometryVerdict::Biinvariant;
  }
  return IsometryVerdict::Unclassified;
}

void require_lorentzian3(const Mat3& H) {
  if (!H.allFinite() || (H - H.transpose()).cwiseAbs().maxCoeff() > 1e-12 * H.cwiseAbs().maxCoeff())
    throw PreconditionError("metric matrix must be finite and symmetric");
  const Vec3 ev = Eigen::SelfAdjointEigenSolver<Mat3>(H).eigenvalues();
  const double z = 1e-12 * ev.cwiseAbs().maxCoeff();
  int pos = 0, neg = 0;
  for (int i = 0; i < 3; ++i) pos += ev[i] > z, neg += ev[i] < -z;
  if (pos != 2 || neg != 1) throw SignatureError("metric is not of signature (2,1)");
}

}  // namespace

StructureOperator structure_operator(const Mat3& H, const ClassifyTolerances& tol) {
  const double hn = H.cwiseAbs().maxCoeff();
  if (!H.allFinite() || hn == 0 || std::abs(H.determinant()) <= 1e-12 * hn * hn * hn)
    throw PreconditionError("structure_operator: degenerate metric");
  const Mat3 K = killing_matrix();
  StructureOperator op;
  op.N = H * K;  // K⁻¹ = K
  op.self_adjoint_error = (K * op.N.transpose() * K - op.N).cwiseAbs().maxCoeff();

  const Mat3L NL = op.N.cast<long double>();
  Eigen::EigenSolver<Mat3L> es(NL, false);
  std::vector<std::complex<long double>> ev(3);
  for (int i = 0; i < 3; ++i) ev[i] = es.eigenvalues()[i];
  std::sort(ev.begin(), ev.end(), [](auto a, auto b) { return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag(); });
  long double scale = 0;
  for (auto& e : ev) scale = std::max(scale, std::abs(e));
  const long double norm = NL.cwiseAbs().rowwise().sum().maxCoeff();
  // a Jordan block of size 3 splits its eigenvalue by ~ε^{1/3}; merge inside that radius
  const long double jordan = 10 * std::cbrt(std::numeric_limits<long double>::epsilon()) * norm;
  const long double radius = std::max(static_cast<long double>(tol.gap) * scale, jordan);

  // inside the Jordan radius, merge only when N − λ̄ is numerically singular at the pair mean λ̄:
  // a split Jordan block passes, two genuinely close eigenvalues do not
  auto singular_at = [&](std::complex<long double> mean) {
    if (std::abs(mean.imag()) > radius) return false;
    const auto sv = Eigen::JacobiSVD<Mat3L>(NL - mean.real() * Mat3L::Identity()).singularValues();
    return sv[2] <= static_cast<long double>(tol.rank) * norm;
  };
  std::vector<int> label{0, 1, 2};
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j)
      if (std::abs(ev[i] - ev[j]) <= static_cast<long double>(tol.gap) * scale ||
          (std::abs(ev[i] - ev[j]) <= jordan && singular_at((ev[i] + ev[j]) / 2.0L))) {
        const int from = label[j], to = label[i];
        for (int& l : label)
          if (l == from) l = to;
      }
  for (int i = 0; i < 3; ++i) op.eigenvalues.emplace_back(double(ev[i].real()), double(ev[i].imag()));
  std::vector<int> alg, geo;
  for (int l = 0; l < 3; ++l) {
    std::complex<long double> sum = 0;
    int count = 0;
    for (int i = 0; i < 3; ++i)
      if (label[i] == l) sum += ev[i], ++count;
    if (count == 0) continue;
    EigenCluster c;
    const std::complex<long double> mean = sum / static_cast<long double>(count);
    c.value = {double(mean.real()), double(mean.imag())};
    c.algebraic = count;
    c.geometric = 1;
    if (count > 1) {
      // repeated eigenvalues of a real 3×3 matrix are real
      const Mat3L shifted = NL - mean.real() * Mat3L::Identity();
      const auto sv = Eigen::JacobiSVD<Mat3L>(shifted).singularValues();
      int null = 0;
      for (int i = 0; i < 3; ++i) null += sv[i] <= static_cast<long double>(tol.rank) * norm;
      c.geometric = std::max(1, null);
    }
    if (c.geometric < c.algebraic) op.diagonalizable = false;
    alg.push_back(c.algebraic);
    geo.push_back(c.geometric);
    op.clusters.push_back(c);
  }
  return op;
}

Classification classify(const Mat3& H, const ClassifyTolerances& tol) {
  require_lorentzian3(H);
  Classification c;
  c.tolerances = tol;
  c.op = structure_operator(H, tol);
  std::vector<int> alg, geo;
  for (const EigenCluster& e : c.op.clusters) alg.push_back(e.algebraic), geo.push_back(e.geometric);
  c.verdict = verdict_from(static_cast<int>(c.op.clusters.size()), alg, geo);
  return c;
}

// ---- exact lane --------------------------------------------------------------

namespace {

using boost::multiprecision::cpp_int;

bool is_zero(const BigRational& r) { return r.numerator().is_zero(); }
int sign(const BigRational& r) { return r.numerator().sign(); }

QMat3 mul(const QMat3& a, const QMat3& b) {
  QMat3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      BigRational s(0);
      for (int k = 0; k < 3; ++k) s += a[i][k] * b[k][j];
      r[i][j] = s;
    }
  return r;
}

QMat3 exact_killing() {
  QMat3 K;
  for (auto& row : K) row.fill(BigRational(0));
  K[0][1] = K[1][0] = K[2][2] = BigRational(1);
  return K;
}

/// Monic characteristic polynomial t³ + c2 t² + c1 t + c0.
std::array<BigRational, 4> charpoly(const QMat3& m) {
  const BigRational tr = m[0][0] + m[1][1] + m[2][2];
  const BigRational minors = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) + (m[0][0] * m[2][2] - m[0][2] * m[2][0]) +
                             (m[1][1] * m[2][2] - m[1][2] * m[2][1]);
  const BigRational det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                          m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                          m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  return {-det, minors, -tr, BigRational(1)};
}

int exact_rank(QMat3 m) {
  int rank = 0;
  for (int col = 0; col < 3 && rank < 3; ++col) {
    int piv = -1;
    for (int r = rank; r < 3; ++r)
      if (!is_zero(m[r][col])) {
        piv = r;
        break;
      }
    if (piv < 0) continue;
    std::swap(m[piv], m[rank]);
    for (int r = 0; r < 3; ++r) {
      if (r == rank || is_zero(m[r][col])) continue;
      const BigRational f = m[r][col] / m[rank][col];
      for (int c = 0; c < 3; ++c) m[r][c] -= f * m[rank][c];
    }
    ++rank;
  }
  return rank;
}

int sign_changes(const std::vector<BigRational>& coeffs) {
  int changes = 0, last = 0;
  for (const BigRational& c : coeffs) {
    const int s = sign(c);
    if (s == 0) continue;
    if (last != 0 && s != last) ++changes;
    last = s;
  }
  return changes;
}

}  // namespace

std::array<int, 3> exact_inertia(const QMat3& H) {
  // H is symmetric, so its characteristic polynomial is real-rooted and Descartes' count is exact
  const auto p = charpoly(H);
  int zeros = 0;
  while (zeros < 3 && is_zero(p[zeros])) ++zeros;
  std::vector<BigRational> pos, neg;
  for (int k = 3; k >= zeros; --k) {
    pos.push_back(p[k]);
    neg.push_back((k % 2) ? BigRational(-p[k]) : p[k]);
  }
  return {sign_changes(pos), sign_changes(neg), zeros};
}

ExactClassification classify_exact(const QMat3& H) {
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < i; ++j)
      if (H[i][j] != H[j][i]) throw PreconditionError("metric matrix must be symmetric");
  const auto inertia = exact_inertia(H);
  if (inertia[0] != 2 || inertia[1] != 1) throw SignatureError("metric is not of signature (2,1)");
  const QMat3 N = mul(H, exact_killing());
  ExactClassification out;
  out.charpoly = charpoly(N);
  const BigRational &b = out.charpoly[2], &c = out.charpoly[1], &d = out.charpoly[0];
  const BigRational disc = 18 * b * c * d - 4 * b * b * b * d + b * b * c * c - 4 * c * c * c - 27 * d * d;
  if (!is_zero(disc)) {
    out.distinct = 3;
    out.verdict = IsometryVerdict::FullTimesZ2;
    return out;
  }
  auto geometric_at = [&](const BigRational& root) {
    QMat3 m = N;
    for (int i = 0; i < 3; ++i) m[i][i] -= root;
    return 3 - exact_rank(m);
  };
  const BigRational shape = b * b - 3 * c;
  if (is_zero(shape)) {
    out.distinct = 1;
    const int g = geometric_at(-b / 3);
    out.geometric = {g};
    out.verdict = verdict_from(1, {3}, {g});
  } else {
    out.distinct = 2;
    const int g = geometric_at((9 * d - b * c) / (2 * shape));
    out.geometric = {g};
    out.verdict = verdict_from(2, {2, 1}, {g, 1});
  }
  return out;
}

// ---- degenerate plane ------------------------------------------------------

CommonPlane common_lightlike_plane(const Mat3& H, const ClassifyTolerances& tol) {
  const Classification c = classify(H, tol);
  if (c.verdict != IsometryVerdict::LeftOnly)
    throw PreconditionError("common_lightlike_plane requires a LeftOnly metric (got " + to_string(c.verdict) + ")");
  const Mat3 K = killing_matrix();
  const auto defect = std::find_if(c.op.clusters.begin(), c.op.clusters.end(),
                                   [](const EigenCluster& e) { return e.geometric < e.algebraic; });
  // eigenvector of K⁻¹H = ᵗN: the K-null direction the plane is K-orthogonal to
  const Mat3 A = K * H - defect->value.real() * Mat3::Identity();
  Eigen::JacobiSVD<Mat3> svd(A, Eigen::ComputeFullV);
  const Vec3 v = svd.matrixV().col(2);
  CommonPlane plane;
  plane.normal = (K * v).normalized();
  Eigen::JacobiSVD<Eigen::Matrix<double, 1, 3>> ns(plane.normal.transpose(), Eigen::ComputeFullV);
  plane.basis = ns.matrixV().rightCols<2>();
  plane.det_H = (plane.basis.transpose() * H * plane.basis).determinant();
  plane.det_K = (plane.basis.transpose() * K * plane.basis).determinant();
  return plane;
}

// ---- the sequence h_n → h_∞ --------------------------------------------------

Mat3 h_sequence(double alpha, double gamma, double delta, long n) {
  const double e = n == 0 ? 0.0 : 1.0 / static_cast<double>(n);
  Mat3 H;
  H << 0, alpha, e, alpha, 0, gamma, e, gamma, delta;
  return H;
}

QMat3 h_sequence_exact(long alpha, long gamma, long delta, long n) {
  const BigRational e = n == 0 ? BigRational(0) : BigRational(1, n);
  return {{{BigRational(0), BigRational(alpha), e},
           {BigRational(alpha), BigRational(0), BigRational(gamma)},
           {e, BigRational(gamma), BigRational(delta)}}};
}

std::vector<SequenceRow> sequence_experiment(double alpha, double gamma, double delta, const std::vector<long>& ns) {
  if (!(alpha > 0 && gamma > 0 && delta > 0)) throw PreconditionError("sequence_experiment needs alpha, gamma, delta > 0");
  auto integral = [](double v) { return v == std::round(v) && std::abs(v) < 1e9; };
  const bool exact = integral(alpha) && integral(gamma) && integral(delta);
  std::vector<long> all = ns;
  all.push_back(0);
  std::vector<SequenceRow> rows;
  for (long n : all) {
    if (n < 0) throw PreconditionError("sequence index must be positive");
    SequenceRow r;
    r.n = n;
    const Mat3 H = h_sequence(alpha, gamma, delta, n);
    r.distance = (H - h_sequence(alpha, gamma, delta, 0)).cwiseAbs().sum();
    try {
      const Classification c = classify(H);
      r.eigenvalues = c.op.eigenvalues;
      r.verdict = c.verdict;
    } catch (const PreconditionError&) {
      // det H_n = −α²δ + 2αγ/n vanishes or flips sign for small n: not a Lorentzian metric
      r.lorentzian = false;
      r.verdict = IsometryVerdict::Unclassified;
      const auto ev = Eigen::EigenSolver<Mat3>(H * killing_matrix(), false).eigenvalues();
      for (int i = 0; i < 3; ++i) r.eigenvalues.push_back(ev[i]);
    }
    r.eigengap = INFINITY;
    for (int i = 0; i < 3; ++i)
      for (int j = i + 1; j < 3; ++j) r.eigengap = std::min(r.eigengap, std::abs(r.eigenvalues[i] - r.eigenvalues[j]));
    if (exact && r.lorentzian) {
      r.exact_available = true;
      r.exact_verdict = classify_exact(h_sequence_exact(long(alpha), long(gamma), long(delta), n)).verdict;
    }
    rows.push_back(r);
  }
  return rows;
}

}  // namespace lorentz
