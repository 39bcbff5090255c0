#include "lorentz/grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

#include "lorentz/errors.hpp"

namespace lorentz {

Vec2 Domain::wrap(const Vec2& p) const {
  Vec2 q = p;
  for (int a = 0; a < 2; ++a) {
    if (!periodic(a)) continue;
    const double L = length(a);
    double t = std::fmod(q[a] - lo(a), L);
    if (t < 0) t += L;
    if (t >= L) t -= L;
    q[a] = lo(a) + t;
  }
  return q;
}

bool Domain::contains(const Vec2& p, double slack) const {
  for (int a = 0; a < 2; ++a) {
    if (periodic(a)) continue;
    if (!(p[a] >= lo(a) - slack && p[a] <= hi(a) + slack)) return false;
  }
  return true;
}

double GridSpec::spacing(int axis) const {
  const int N = n(axis);
  const double L = domain.length(axis);
  return domain.periodic(axis) ? L / N : L / (N - 1);
}

double GridSpec::node(int axis, int i) const { return domain.lo(axis) + i * spacing(axis); }

std::vector<std::vector<double>> fornberg_weights(double x0, const std::vector<double>& xs, int m) {
  const int n = static_cast<int>(xs.size());
  std::vector<std::vector<double>> c(m + 1, std::vector<double>(n, 0.0));
  double c1 = 1.0, c4 = xs[0] - x0;
  c[0][0] = 1.0;
  for (int i = 1; i < n; ++i) {
    const int mn = std::min(i, m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = xs[i] - x0;
    for (int j = 0; j < i; ++j) {
      const double c3 = xs[i] - xs[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) c[k][i] = c1 * (k * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
        c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
      }
      for (int k = mn; k >= 1; --k) c[k][j] = (c4 * c[k][j] - k * c[k - 1][j]) / c3;
      c[0][j] = c4 * c[0][j] / c3;
    }
    c1 = c2;
  }
  return c;
}

namespace {

void spectral_line(std::vector<double>& line, double L, int order) {
  const int N = static_cast<int>(line.size());
  std::vector<std::complex<double>> hat(N / 2 + 1);
  fftw_plan fwd = fftw_plan_dft_r2c_1d(N, line.data(), reinterpret_cast<fftw_complex*>(hat.data()), FFTW_ESTIMATE);
  fftw_execute(fwd);
  fftw_destroy_plan(fwd);
  const double w = 2 * std::numbers::pi / L;
  for (int k = 0; k <= N / 2; ++k) {
    std::complex<double> ik(0.0, w * k);
    if (N % 2 == 0 && k == N / 2 && order % 2 == 1) {
      hat[k] = 0;
      continue;
    }
    std::complex<double> f = 1.0;
    for (int o = 0; o < order; ++o) f *= ik;
    hat[k] *= f / static_cast<double>(N);
  }
  fftw_plan bwd = fftw_plan_dft_c2r_1d(N, reinterpret_cast<fftw_complex*>(hat.data()), line.data(), FFTW_ESTIMATE);
  fftw_execute(bwd);
  fftw_destroy_plan(bwd);
}

// Finite-difference stencils for a non-periodic axis of N nodes with unit spacing.
struct FdStencils {
  std::vector<int> start;
  std::vector<std::vector<double>> w;  // per node, weights for the requested order
};

FdStencils fd_stencils(int N, int order) {
  if (N < 8) throw PreconditionError("finite differences need at least 8 nodes per non-periodic axis");
  FdStencils s;
  s.start.resize(N);
  s.w.resize(N);
  for (int i = 0; i < N; ++i) {
    int lo, width;
    if (i >= 3 && i <= N - 4) {
      lo = i - 3;
      width = 7;
    } else {
      lo = i < 3 ? 0 : N - 8;
      width = 8;
    }
    std::vector<double> xs(width);
    for (int k = 0; k < width; ++k) xs[k] = lo + k;
    s.start[i] = lo;
    s.w[i] = fornberg_weights(static_cast<double>(i), xs, order)[order];
  }
  return s;
}

void fd_line(std::vector<double>& line, double h, int order, const FdStencils& st) {
  const int N = static_cast<int>(line.size());
  std::vector<double> out(N);
  const double scale = std::pow(h, -order);
  for (int i = 0; i < N; ++i) {
    double acc = 0;
    const auto& w = st.w[i];
    for (std::size_t k = 0; k < w.size(); ++k) acc += w[k] * line[st.start[i] + k];
    out[i] = acc * scale;
  }
  line.swap(out);
}

}  // namespace

GridArray differentiate(const GridSpec& g, const GridArray& f, int axis, int order) {
  if (order == 0) return f;
  if (order < 0 || order > 2) throw PreconditionError("derivative order must be 0, 1 or 2");
  const int N = g.n(axis);
  const bool periodic = g.domain.periodic(axis);
  FdStencils st;
  if (!periodic) st = fd_stencils(N, order);
  GridArray out(f.rows(), f.cols());
  std::vector<double> line(N);
  const int lines = axis == 0 ? g.ny : g.nx;
  for (int l = 0; l < lines; ++l) {
    for (int i = 0; i < N; ++i) line[i] = axis == 0 ? f(i, l) : f(l, i);
    if (periodic) spectral_line(line, g.domain.length(axis), order);
    else fd_line(line, g.spacing(axis), order, st);
    for (int i = 0; i < N; ++i) (axis == 0 ? out(i, l) : out(l, i)) = line[i];
  }
  return out;
}

double integrate(const GridSpec& g, const GridArray& f) {
  auto weights = [&](int axis) {
    const int N = g.n(axis);
    Eigen::ArrayXd w = Eigen::ArrayXd::Constant(N, g.spacing(axis));
    if (!g.domain.periodic(axis)) {
      w[0] *= 0.5;
      w[N - 1] *= 0.5;
    }
    return w;
  };
  const Eigen::ArrayXd wx = weights(0), wy = weights(1);
  return (wx.matrix().transpose() * f.matrix() * wy.matrix())(0, 0);
}

GridInterpolator::GridInterpolator(const GridSpec& g, const Vec2& p) {
  for (int axis = 0; axis < 2; ++axis) {
    const int N = g.n(axis);
    const double h = g.spacing(axis);
    const bool periodic = g.domain.periodic(axis);
    const double s = (p[axis] - g.domain.lo(axis)) / h;  // fractional index
    int lo = static_cast<int>(std::floor(s)) - kWidth / 2 + 1;
    if (!periodic) lo = std::clamp(lo, 0, N - kWidth);
    auto& idx = axis == 0 ? ix_ : iy_;
    auto& w = axis == 0 ? wx_ : wy_;
    for (int k = 0; k < kWidth; ++k) {
      const int node = lo + k;
      idx[k] = periodic ? ((node % N) + N) % N : node;
      double lk = 1.0;
      for (int m = 0; m < kWidth; ++m) {
        if (m == k) continue;
        lk *= (s - (lo + m)) / static_cast<double>(k - m);
      }
      w[k] = lk;
    }
  }
}

double GridInterpolator::operator()(const GridArray& f) const {
  double acc = 0;
  for (int b = 0; b < kWidth; ++b) {
    double row = 0;
    for (int a = 0; a < kWidth; ++a) row += wx_[a] * f(ix_[a], iy_[b]);
    acc += wy_[b] * row;
  }
  return acc;
}

}  // namespace lorentz
