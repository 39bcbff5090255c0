#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <string>
#include <vector>

#include "lorentz/qsqrt5.hpp"

namespace lorentz {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;

enum class IsometryVerdict { FullTimesZ2, LeftOnly, Biinvariant, Unclassified };

std::string to_string(IsometryVerdict v);

/// Killing form of sl(2,ℝ) in the fixed basis: [[0,1,0],[1,0,0],[0,0,1]].
Mat3 killing_matrix();

struct EigenCluster {
  std::complex<double> value;  // mean of the merged eigenvalues
  int algebraic = 1;
  int geometric = 1;
};

/// N = H K⁻¹ together with its eigen/Jordan data.
struct StructureOperator {
  Mat3 N = Mat3::Zero();
  std::vector<std::complex<double>> eigenvalues;
  std::vector<EigenCluster> clusters;
  bool diagonalizable = true;
  double self_adjoint_error = 0;  // max |K⁻¹ ᵗN K − N|
};

struct ClassifyTolerances {
  double gap = 1e-8;   // relative eigengap (times max |λ|)
  double rank = 1e-8;  // singular-value threshold (times ‖N‖)
};

StructureOperator structure_operator(const Mat3& H, const ClassifyTolerances& tol = {});

struct Classification {
  IsometryVerdict verdict = IsometryVerdict::Unclassified;
  StructureOperator op;
  ClassifyTolerances tolerances;
};

/// Float lane. Requires H of signature (2,1).
Classification classify(const Mat3& H, const ClassifyTolerances& tol = {});

// ---- exact lane --------------------------------------------------------------

using QMat3 = std::array<std::array<BigRational, 3>, 3>;

struct ExactClassification {
  IsometryVerdict verdict = IsometryVerdict::Unclassified;
  std::array<BigRational, 4> charpoly;  // monic t³ + c[2] t² + c[1] t + c[0]; c[3] = 1
  int distinct = 0;                     // number of distinct complex roots
  std::vector<int> geometric;           // per repeated root
};

/// Inertia (positive, negative, zero) of a rational symmetric matrix.
std::array<int, 3> exact_inertia(const QMat3& H);
ExactClassification classify_exact(const QMat3& H);

// ---- degenerate plane ------------------------------------------------------

struct CommonPlane {
  Vec3 normal;                       // covector annihilating the plane
  Eigen::Matrix<double, 3, 2> basis; // orthonormal basis of the plane
  double det_H = 0, det_K = 0;       // Gram determinants of H and K restricted to the plane
};

/// The plane lightlike for both H and K (LeftOnly metrics only).
CommonPlane common_lightlike_plane(const Mat3& H, const ClassifyTolerances& tol = {});

// ---- the sequence h_n → h_∞ --------------------------------------------------

Mat3 h_sequence(double alpha, double gamma, double delta, long n);  // n = 0 gives h_∞
QMat3 h_sequence_exact(long alpha, long gamma, long delta, long n);

struct SequenceRow {
  long n = 0;  // 0 for the limit
  bool lorentzian = true;  // false when H_n is not a metric of signature (2,1); no verdict then
  std::vector<std::complex<double>> eigenvalues;
  IsometryVerdict verdict = IsometryVerdict::Unclassified;
  bool exact_available = false;  // integer parameters only
  IsometryVerdict exact_verdict = IsometryVerdict::Unclassified;
  double distance = 0;  // entrywise ℓ¹ distance to h_∞ (each symmetric entry counted once per position)
  double eigengap = 0;  // min pairwise |λᵢ − λⱼ|
};

/// Rows for n in ns followed by the limit (n = 0). Integer parameters also run the exact lane.
std::vector<SequenceRow> sequence_experiment(double alpha, double gamma, double delta, const std::vector<long>& ns);

}  // namespace lorentz
