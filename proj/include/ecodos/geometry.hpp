#pragma once

// Node layouts as homogeneous Poisson point processes on a square torus.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "ecodos/random.hpp"

namespace ecodos {

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

/// Square observation window whose opposite edges are identified.
class Region {
 public:
  explicit Region(double side_length) : side_(side_length) {
    if (!(side_length > 0.0) || !std::isfinite(side_length)) {
      throw std::domain_error("region side length must be positive");
    }
  }

  double side() const noexcept { return side_; }
  double area() const noexcept { return side_ * side_; }

  /// Maps an arbitrary coordinate pair into [0, side)^2.
  Point wrap(Point p) const noexcept { return {wrap_axis(p.x), wrap_axis(p.y)}; }

  bool contains(Point p) const noexcept {
    return p.x >= 0.0 && p.x < side_ && p.y >= 0.0 && p.y < side_;
  }

 private:
  double wrap_axis(double v) const noexcept {
    double w = std::fmod(v, side_);
    if (w < 0.0) w += side_;
    if (w >= side_) w = 0.0;  // -tiny + side rounds up to side
    return w;
  }

  double side_;
};

enum class NodeClass { PrimaryTransmitter, PrimaryReceiver, SecondaryUser, SecondaryReceiver, Malicious };

constexpr std::string_view to_string(NodeClass c) noexcept {
  switch (c) {
    case NodeClass::PrimaryTransmitter: return "PT";
    case NodeClass::PrimaryReceiver: return "PR";
    case NodeClass::SecondaryUser: return "SU";
    case NodeClass::SecondaryReceiver: return "SU-RX";
    case NodeClass::Malicious: return "MU";
  }
  return "?";
}

struct NodeSet {
  NodeClass kind = NodeClass::SecondaryUser;
  std::vector<Point> positions;

  std::size_t size() const noexcept { return positions.size(); }
  bool empty() const noexcept { return positions.empty(); }
};

/// Squared minimum-image distance.
inline double toroidal_distance_sq(Point p, Point q, const Region& region) noexcept {
  const double side = region.side();
  double dx = std::fabs(p.x - q.x);
  double dy = std::fabs(p.y - q.y);
  if (dx > 0.5 * side) dx = side - dx;
  if (dy > 0.5 * side) dy = side - dy;
  return dx * dx + dy * dy;
}

inline double toroidal_distance(Point p, Point q, const Region& region) noexcept {
  return std::sqrt(toroidal_distance_sq(p, q, region));
}

/// Poisson(density * area) points, i.i.d. uniform on the region.
inline NodeSet sample_ppp(double density, const Region& region, Rng& rng,
                          NodeClass kind = NodeClass::SecondaryUser) {
  if (!(density >= 0.0) || !std::isfinite(density)) {
    throw std::domain_error("sample_ppp: density must be finite and >= 0");
  }
  NodeSet out{kind, {}};
  const auto count = poisson(rng, density * region.area());
  out.positions.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const double x = uniform01(rng) * region.side();
    const double y = uniform01(rng) * region.side();
    out.positions.push_back(region.wrap({x, y}));
  }
  return out;
}

/// One receiver per transmitter at toroidal distance `link_distance`, uniform bearing.
inline NodeSet attach_receivers(const NodeSet& transmitters, double link_distance, const Region& region,
                                Rng& rng, NodeClass kind = NodeClass::SecondaryReceiver) {
  if (!(link_distance > 0.0) || !(link_distance < 0.5 * region.side())) {
    throw std::domain_error("attach_receivers: link distance must lie in (0, side/2)");
  }
  NodeSet out{kind, {}};
  out.positions.reserve(transmitters.size());
  for (const Point& tx : transmitters.positions) {
    const double bearing = 2.0 * std::numbers::pi * uniform01(rng);
    out.positions.push_back(
        region.wrap({tx.x + link_distance * std::cos(bearing), tx.y + link_distance * std::sin(bearing)}));
  }
  return out;
}

struct NodeDensities {
  double pt = 1e-5;
  double su = 1e-3;
  double mu = 1e-7;

  friend bool operator==(const NodeDensities&, const NodeDensities&) = default;
};

struct World {
  Region region{1.0};
  NodeSet pts{NodeClass::PrimaryTransmitter, {}};
  NodeSet prs{NodeClass::PrimaryReceiver, {}};
  NodeSet sus{NodeClass::SecondaryUser, {}};
  NodeSet su_receivers{NodeClass::SecondaryReceiver, {}};
  NodeSet mus{NodeClass::Malicious, {}};
  std::uint64_t seed = 0;
};

/// Samples every node class from a single stream seeded with `seed`.
inline World sample_world(const Region& region, const NodeDensities& densities, double pr_link,
                          double su_link, std::uint64_t seed) {
  Rng rng(seed);
  World w;
  w.region = region;
  w.seed = seed;
  w.pts = sample_ppp(densities.pt, region, rng, NodeClass::PrimaryTransmitter);
  w.prs = attach_receivers(w.pts, pr_link, region, rng, NodeClass::PrimaryReceiver);
  w.sus = sample_ppp(densities.su, region, rng, NodeClass::SecondaryUser);
  w.su_receivers = attach_receivers(w.sus, su_link, region, rng, NodeClass::SecondaryReceiver);
  w.mus = sample_ppp(densities.mu, region, rng, NodeClass::Malicious);
  return w;
}

}  // namespace ecodos
