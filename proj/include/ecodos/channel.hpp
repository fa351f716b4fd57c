#pragma once

// Path loss, Rayleigh fading, per-realization SINR and the Poisson-field
// closed forms built on the interference Laplace functional.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "ecodos/geometry.hpp"
#include "ecodos/random.hpp"

namespace ecodos {

/// One link class: transmit power, link distance, SINR threshold and outage constraint.
struct LinkParams {
  double power = 0.1;
  double distance = 10.0;
  double sinr_threshold = 3.0;
  double outage = 0.1;

  friend bool operator==(const LinkParams&, const LinkParams&) = default;
};

struct ChannelParams {
  double alpha = 4.0;
  double noise = 1e-9;
  LinkParams primary{0.3, 15.0, 3.0, 0.05};
  LinkParams secondary{0.1, 10.0, 3.0, 0.1};
  double mu_power = 0.1;
  /// Interferers closer than this are evaluated at this distance.
  double d_min = 1.0;
  bool pt_interference_at_pr = false;
  bool pt_interference_at_su = true;

  friend bool operator==(const ChannelParams&, const ChannelParams&) = default;

  void validate() const {
    if (!(alpha > 2.0)) throw std::domain_error("alpha must exceed 2");
    if (!(noise > 0.0)) throw std::domain_error("noise must be positive");
    auto check_link = [](const LinkParams& l, const char* name) {
      const std::string n(name);
      if (!(l.power > 0.0)) throw std::domain_error(n + " power must be positive");
      if (!(l.distance > 0.0)) throw std::domain_error(n + " link distance must be positive");
      if (!(l.sinr_threshold > 0.0)) throw std::domain_error(n + " sinr threshold must be positive");
      if (!(l.outage > 0.0 && l.outage < 1.0)) throw std::domain_error(n + " outage constraint must lie in (0,1)");
    };
    check_link(primary, "primary");
    check_link(secondary, "secondary");
    if (!(mu_power > 0.0)) throw std::domain_error("mu power must be positive");
    if (!(d_min > 0.0)) throw std::domain_error("d_min must be positive");
  }
};

/// Mean-field stand-in for the active subset of one node class.
struct InterfererField {
  double density = 0.0;
  double power = 0.1;
};

inline double path_loss(double d, double alpha) {
  if (!(d > 0.0)) throw std::domain_error("path_loss: distance must be positive");
  return std::pow(d, -alpha);
}

inline double sample_fading(Rng& rng) { return exponential(rng); }

/// C(alpha) = (2 pi / alpha) / sin(2 pi / alpha); pi/2 at alpha = 4.
inline double shape_constant(double alpha) {
  if (!(alpha > 2.0)) throw std::domain_error("alpha must exceed 2");
  if (alpha == 4.0) return std::numbers::pi / 2.0;
  const double t = 2.0 * std::numbers::pi / alpha;
  return t / std::sin(t);
}

struct Transmitter {
  Point position;
  double power = 0.0;
};

namespace detail {

inline double clamped_gain(double dist_sq, double alpha, double d_min) {
  const double d2 = std::max(dist_sq, d_min * d_min);
  if (alpha == 4.0) return 1.0 / (d2 * d2);
  return std::pow(d2, -0.5 * alpha);
}

}  // namespace detail

/// Per-realization SINR with a fresh fading gain drawn from `fading()` for every link.
template <class Fading>
double sinr(Point receiver, Point desired_tx, double desired_power, std::span<const Transmitter> interferers,
            const ChannelParams& params, const Region& region, Fading&& fading) {
  const double d0_sq = toroidal_distance_sq(receiver, desired_tx, region);
  if (!(d0_sq > 0.0)) throw std::domain_error("sinr: receiver coincides with desired transmitter");
  const double signal = desired_power * fading() * detail::clamped_gain(d0_sq, params.alpha, 0.0);
  double interference = 0.0;
  for (const Transmitter& t : interferers) {
    const double d2 = toroidal_distance_sq(receiver, t.position, region);
    interference += t.power * fading() * detail::clamped_gain(d2, params.alpha, params.d_min);
  }
  return signal / (params.noise + interference);
}

inline double sinr(Point receiver, Point desired_tx, double desired_power, std::span<const Transmitter> interferers,
                   const ChannelParams& params, const Region& region, Rng& rng) {
  return sinr(receiver, desired_tx, desired_power, interferers, params, region,
              [&rng] { return sample_fading(rng); });
}

/// Exponent contributed by one field to -ln P[success].
inline double field_exponent(double link_distance, double link_power, double eta, const InterfererField& f,
                             double alpha) {
  return f.density * std::numbers::pi * link_distance * link_distance *
         std::pow(eta * f.power / link_power, 2.0 / alpha) * shape_constant(alpha);
}

/// P[SINR >= eta] for a Rayleigh link amid independent PPP interferer fields.
inline double success_prob(double link_distance, double link_power, double eta,
                           std::span<const InterfererField> fields, const ChannelParams& params) {
  if (!(params.alpha > 2.0)) throw std::domain_error("alpha must exceed 2");
  double exponent = eta * params.noise * std::pow(link_distance, params.alpha) / link_power;
  for (const auto& f : fields) {
    if (!(f.density >= 0.0)) throw std::domain_error("success_prob: negative field density");
    exponent += field_exponent(link_distance, link_power, eta, f, params.alpha);
  }
  return std::exp(-exponent);
}

/// Largest SU density (power P_SU) that keeps the PR outage constraint.
/// `background` holds fields that are always present at the PR, e.g. the PT field.
inline double max_allowable_su_density(const ChannelParams& params,
                                       std::span<const InterfererField> background = {}) {
  const auto& pr = params.primary;
  double budget = -std::log1p(-pr.outage) -
                  pr.sinr_threshold * params.noise * std::pow(pr.distance, params.alpha) / pr.power;
  for (const auto& f : background) {
    budget -= field_exponent(pr.distance, pr.power, pr.sinr_threshold, f, params.alpha);
  }
  if (!(budget > 0.0)) throw std::domain_error("noise-limited: no SU density admissible");
  const InterfererField unit{1.0, params.secondary.power};
  return budget / field_exponent(pr.distance, pr.power, pr.sinr_threshold, unit, params.alpha);
}

/// SINR level met with probability 1/2, by bisection on log eta over [1e-6, 1e9].
inline double median_sinr(double link_distance, double link_power, std::span<const InterfererField> fields,
                          const ChannelParams& params) {
  auto excess = [&](double log_eta) {
    return success_prob(link_distance, link_power, std::exp(log_eta), fields, params) - 0.5;
  };
  double lo = std::log(1e-6);
  double hi = std::log(1e9);
  if (excess(lo) < 0.0 || excess(hi) > 0.0) throw std::domain_error("median_sinr: root not bracketed");
  for (int i = 0; i < 200 && hi - lo > 1e-13; ++i) {
    const double mid = 0.5 * (lo + hi);
    (excess(mid) >= 0.0 ? lo : hi) = mid;
  }
  return std::exp(0.5 * (lo + hi));
}

namespace detail {

// Integral over the plane of 1 - 1/(1 + c * max(|y|, d_min)^-alpha).
inline double clamped_field_integral(double c, double alpha, double d_min) {
  const double g_min = c * std::pow(d_min, -alpha);
  const double inner = std::numbers::pi * d_min * d_min * g_min / (1.0 + g_min);
  double outer = 0.0;
  if (alpha == 4.0) {
    const double sc = std::sqrt(c);
    outer = std::numbers::pi * sc * (std::numbers::pi / 2.0 - std::atan(d_min * d_min / sc));
  } else {
    boost::math::quadrature::exp_sinh<double> integrator;
    auto f = [&](double u) {
      const double r = d_min + u;
      return r * c / (std::pow(r, alpha) + c);
    };
    outer = 2.0 * std::numbers::pi * integrator.integrate(f);
  }
  return inner + outer;
}

}  // namespace detail

/// E[SINR] with unit-mean fading and the d_min clamp on interferers.
inline double mean_sinr(double link_distance, double link_power, std::span<const InterfererField> fields,
                        const ChannelParams& params) {
  const double signal = link_power * std::pow(link_distance, -params.alpha);
  bool any_field = false;
  double s_scale = 1.0 / params.noise;
  for (const auto& f : fields) {
    if (f.density <= 0.0) continue;
    any_field = true;
    const double s_field =
        std::pow(1.0 / (f.density * std::numbers::pi * shape_constant(params.alpha)), params.alpha / 2.0) / f.power;
    s_scale = std::min(s_scale, s_field);
  }
  if (!any_field) return signal / params.noise;
  // E[1/(N+I)] = int_0^inf exp(-sN) L_I(s) ds, integrated in units of s_scale
  auto integrand = [&](double u) {
    const double s = u * s_scale;
    double log_l = -s * params.noise;
    for (const auto& f : fields) {
      if (f.density <= 0.0) continue;
      log_l -= f.density * detail::clamped_field_integral(s * f.power, params.alpha, params.d_min);
    }
    return std::exp(log_l);
  };
  boost::math::quadrature::exp_sinh<double> integrator;
  const double inv_mean = s_scale * integrator.integrate(integrand);
  return signal * inv_mean;
}

inline double to_db(double ratio) { return 10.0 * std::log10(ratio); }

}  // namespace ecodos
