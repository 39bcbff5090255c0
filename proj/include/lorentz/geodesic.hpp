#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lorentz/metric.hpp"

namespace lorentz {

struct GeodesicState {
  Vec2 p = Vec2::Zero();  // position
  Vec2 v = Vec2::Zero();  // velocity
};

struct GeodesicOptions {
  double abs_tol = 1e-12;
  double rel_tol = 1e-12;
  /// Longest Euclidean chord between recorded nodes, as a fraction of the domain extent.
  double node_spacing = 1.0 / 256;
  /// Step-size collapse threshold (relative to 1 + |t|) signalling blow-up.
  double min_step = 1e-11;
  /// Speed growth factor (relative to the initial speed) treated as blow-up.
  double speed_cap = 1e10;
};

/// A geodesic that blows up before the requested time.
class IncompleteGeodesic : public Error {
 public:
  IncompleteGeodesic(double escape_time)
      : Error("geodesic blows up at t = " + std::to_string(escape_time)), escape_time_(escape_time) {}
  double escape_time() const { return escape_time_; }

 private:
  double escape_time_;
};

/// Solves x″ᵏ + Γᵏᵢⱼ x′ⁱ x′ʲ = 0 for time t (negative t integrates backwards).
GeodesicState exp_map(const MetricPatch& patch, const GeodesicState& s, double t, const GeodesicOptions& opt = {});

/// Node of a polyline with Hermite data.
struct PathNode {
  double t = 0;
  Vec2 p = Vec2::Zero();
  Vec2 v = Vec2::Zero();
};

enum class TraceStop { Closed, BudgetExhausted, LeftDomain, Incomplete };

struct ReturnData {
  double period = 0;                  // affine parameter at first return
  Vec2 shift = Vec2::Zero();          // lattice translation between start and return point
  double velocity_ratio = 1;          // γ′(T) = velocity_ratio · γ′(0)
  double return_derivative = 1;       // derivative of the first-return map on the transversal
  double closing_error = 0;           // |γ(T) − (p + shift)|
};

struct LeafTrace {
  int family = 0;
  std::vector<PathNode> nodes;  // unwrapped coordinates, γ′(0) of unit Euclidean length
  TraceStop stop = TraceStop::BudgetExhausted;
  double euclidean_length = 0;
  std::optional<ReturnData> ret;
  std::optional<double> escape_time;

  bool closed() const { return stop == TraceStop::Closed; }
  /// Hermite interpolation of the position at parameter t.
  Vec2 position(double t) const;
  /// Rows t,x,y,u,v with 17 significant digits.
  std::string to_csv() const;
};

struct TraceOptions {
  GeodesicOptions ode;
  double close_tol = 1e-6;   // positional closing tolerance
  double angle_tol = 1e-6;   // directional closing tolerance (radians)
  bool return_derivative = true;
  double transverse_step = 1e-5;  // offset used for the return-map derivative
  bool reverse = false;            // start along −direction
  /// When set, the family is the null direction closest to this vector (oriented along it);
  /// used to follow a family by continuity instead of by root order.
  std::optional<Vec2> direction_hint;
};

/// Lightlike leaf through p of the given family (0 or 1, by angle order at p),
/// integrated as an affinely parametrized geodesic until closure or until the
/// Euclidean length reaches `budget`.
LeafTrace trace_leaf(const MetricPatch& patch, const Vec2& p, int family, double budget,
                     const TraceOptions& opt = {});

/// Solves ∇_{c′} Z = 0 along the cubic Hermite path through the nodes.
Vec2 parallel_transport(const MetricPatch& patch, std::span<const PathNode> path, const Vec2& w,
                        const GeodesicOptions& opt = {});
/// Piecewise-linear path, unit parameter per segment.
Vec2 parallel_transport(const MetricPatch& patch, const std::vector<Vec2>& polyline, const Vec2& w,
                        const GeodesicOptions& opt = {});
/// Same path traversed backwards.
std::vector<PathNode> reversed(std::span<const PathNode> path);

/// Factor λ with Z(T) = λ Z(0) for a parallel tangent field along one period of a closed leaf.
double leaf_holonomy(const MetricPatch& patch, const LeafTrace& leaf, const GeodesicOptions& opt = {});

}  // namespace lorentz
