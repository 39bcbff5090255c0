#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "lorentz/diffeo.hpp"
#include "lorentz/qsqrt5.hpp"

namespace lorentz {

/// Flat Lorentzian form on ℝ² (signature (1,1)).
struct QuadraticForm2 {
  Mat2 Q = Mat2::Identity();

  /// Rescale to det Q = −1 (the volume-1 representative).
  QuadraticForm2 normalized() const;
  /// Form whose null vectors are (τ₁, 1) and (τ₂, 1); τ may be ±∞ (null vector (1, 0)).
  static QuadraticForm2 from_endpoints(double tau1, double tau2);
};

/// Continued-fraction expansion of a slope; `rational` when a convergent with denominator
/// ≤ cap matches to 1e−14 (relative; distinct such rationals are ≥ 1e−12 apart).
struct RationalityCertificate {
  bool rational = false;
  std::vector<long long> terms;
  long long p = 0, q = 0;  // last convergent examined
};

RationalityCertificate rationality(double x, long long denominator_cap = 1000000);

/// Null slopes dy/dx of the form, ordered by the angle of their direction in [0, π).
struct SlopePair {
  double slope[2];
  RationalityCertificate certificate[2];
};

SlopePair slopes(const QuadraticForm2& q);

/// ᵗM Q M for M integral with |det M| = 1.
QuadraticForm2 act(const IMat2& M, const QuadraticForm2& q);

/// Möbius action τ ↦ (aτ + b)/(cτ + d), with ∞ handled.
double mobius(const Mat2& M, double tau);

/// Geodesic of the upper half plane with ideal endpoints τ₁, τ₂ (null vectors (τ, 1)).
struct ModularGeodesic {
  double end[2];
  bool vertical() const;
};

ModularGeodesic to_modular_geodesic(const QuadraticForm2& q);

/// Reduced words over {S, T, T⁻¹} (letters 'S', 'T', 't'): no SS, no Tt or tT.
struct Word {
  std::string letters;
  IMat2 matrix = IMat2::Identity();
};

IMat2 generator_S();
IMat2 generator_T();
std::vector<Word> reduced_words(int max_length);

struct OrbitProbe {
  std::vector<std::pair<int, double>> table;  // (L, min displacement up to length L)
  Word best;                                  // minimizer at the largest L
};

/// min over reduced words ≠ ±Id of length ≤ L of max |ᵗMQM − Q|.
OrbitProbe orbit_probe(const QuadraticForm2& q, int max_length);

/// The invariant form of the Anosov matrix in exact arithmetic: (2/√5)[[1, −½], [−½, −1]].
QMat2 anosov_form_exact();
QMat2 to_exact(const IMat2& M);
/// ᵗMQM − Q computed exactly.
QMat2 exact_displacement(const IMat2& M, const QMat2& Q);

struct ErgodicityOptions {
  long budget = 100000;
  int bins = 8;
  std::uint64_t seed = 1;
  double horizon = 30;  // geodesic time window [−T, T]
};

struct ErgodicityReport {
  int bins = 8;
  long samples = 0;
  std::vector<long> counts;      // bins × bins, row = x bin, column = s = 1/y bin
  std::vector<double> expected;  // hyperbolic-area share of each cell ∩ F
  int cells_in_domain = 0;
  int covered = 0;
  double coverage = 0;  // covered / cells_in_domain
  double chi_square = 0;
};

/// Samples points along the modular geodesic of q, reduces them to the standard fundamental
/// domain F = {|x| ≤ ½, |z| ≥ 1}, and bins them in (x, 1/y) — coordinates in which the
/// hyperbolic area is Lebesgue.
ErgodicityReport ergodicity_statistics(const QuadraticForm2& q, const ErgodicityOptions& opt = {});

}  // namespace lorentz
