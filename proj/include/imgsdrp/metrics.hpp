#pragma once

// Closed-form routing metrics: LTE link lifetime, speed variation, Nakagami
// reception and expected range, link expiration, and the contention weights
// used by gateway election and relay selection. Everything here is a pure
// function of its arguments.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "imgsdrp/errors.hpp"

namespace imgsdrp {

// Sentinel lifetime for degenerate cases (stationary vehicle, zero relative
// motion). Compares greater than every finite lifetime the metrics produce.
inline constexpr double kLifetimeCap = 3600.0;

// Below this speed a vehicle is treated as parked.
inline constexpr double kStationarySpeed = 0.1;

inline double normalize_heading(double heading) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double h = std::fmod(heading, two_pi);
  if (h < 0.0) h += two_pi;
  if (h >= two_pi) h = 0.0;
  return h;
}

struct Kinematics {
  double x = 0.0;        // m
  double y = 0.0;        // m
  double speed = 0.0;    // m/s, >= 0
  double heading = 0.0;  // rad, [0, 2pi)

  static Kinematics make(double x, double y, double speed, double heading) {
    if (!std::isfinite(speed) || speed < 0.0)
      throw ContractViolation("kinematics: speed must be finite and non-negative");
    return {x, y, speed, normalize_heading(heading)};
  }

  double vx() const { return speed * std::cos(heading); }
  double vy() const { return speed * std::sin(heading); }
};

inline double distance(const Kinematics& a, const Kinematics& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

// Sliding window of the most recent speed samples, oldest evicted first.
class SpeedWindow {
 public:
  explicit SpeedWindow(std::size_t capacity = 10, double sample_interval = 1.0)
      : capacity_(capacity), sample_interval_(sample_interval) {
    if (capacity_ == 0) throw ContractViolation("speed window: capacity must be positive");
    samples_.reserve(capacity_);
  }

  void push(double speed) {
    if (!(speed >= 0.0)) throw ContractViolation("speed window: negative sample");
    if (samples_.size() == capacity_) samples_.erase(samples_.begin());
    samples_.push_back(speed);
  }

  void clear() { samples_.clear(); }

  std::span<const double> samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  std::size_t capacity() const { return capacity_; }
  double sample_interval() const { return sample_interval_; }

 private:
  std::size_t capacity_;
  double sample_interval_;
  std::vector<double> samples_;
};

// Channel description for one link. Only the maximum range and the fading
// shape are evaluated at runtime; transmit power, threshold power, antenna
// gains, wavelength and path-loss factor cancel out of the reception and
// expected-range expressions (Friis with exponent 2), so they are not stored.
struct ChannelParams {
  double max_range = 250.0;  // m
  double shape = 1.0;        // Nakagami m in {1, 1.5, 3}
  double degradation = 0.0;  // epsilon, fraction of max_range lost to fading

  double expected_range() const { return max_range * (1.0 - degradation); }
};

struct ContentionWeights {
  double mu = 0.5;             // LLT share of the gateway weight
  double alpha = 0.5;          // relay: stability
  double beta = 0.3;           // relay: distance progress
  double gamma = 0.2;          // relay: buffer
  double stability_scale = 10.0;   // A, seconds
  double gateway_window = 0.1;     // T_max, seconds
  double relay_window = 0.02;      // T, seconds

  void validate() const {
    auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!unit(mu) || !unit(alpha) || !unit(beta) || !unit(gamma))
      throw ContractViolation("contention weights must lie in [0, 1]");
    if (std::abs(alpha + beta + gamma - 1.0) > 1e-9)
      throw ContractViolation("alpha + beta + gamma must equal 1");
    if (!(stability_scale > 0.0) || !(gateway_window > 0.0) || !(relay_window > 0.0))
      throw ContractViolation("contention durations must be positive");
  }
};

// Remaining time inside LTE coverage for a vehicle `dist` from the base
// station, capped at kLifetimeCap for a stationary vehicle.
inline double lte_link_lifetime(double r4g, double dist, double speed) {
  if (dist < 0.0 || dist > r4g)
    throw ContractViolation("lte_link_lifetime: distance outside LTE coverage");
  if (speed < 0.0) throw ContractViolation("lte_link_lifetime: negative speed");
  if (speed < kStationarySpeed) return kLifetimeCap;
  return std::min((r4g - dist) / speed, kLifetimeCap);
}

// Relative standard deviation of the sampled speeds (population sigma over
// mean). nullopt when fewer than two samples are available.
inline std::optional<double> speed_rsd(std::span<const double> samples) {
  if (samples.size() < 2) return std::nullopt;
  const double n = static_cast<double>(samples.size());
  double mean = 0.0;
  for (double v : samples) mean += v;
  mean /= n;
  if (mean < kStationarySpeed) return 0.0;
  const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
  if (*lo == *hi) return 0.0;
  double ss = 0.0;
  for (double v : samples) ss += (v - mean) * (v - mean);
  const double sigma = std::sqrt(ss / n);
  return std::clamp(sigma / mean, 0.0, 1.0);
}

inline std::optional<double> speed_rsd(const SpeedWindow& window) {
  return speed_rsd(window.samples());
}

struct ContentionResult {
  double weight = 0.0;
  double defer = 0.0;  // seconds
};

inline ContentionResult gateway_contention(double llt, double llt_max, double rsd,
                                           const ContentionWeights& w) {
  if (!(llt_max > 0.0)) throw ContractViolation("gateway_contention: llt_max must be positive");
  const double llt_term = std::clamp(llt / llt_max, 0.0, 1.0);
  const double rsd_term = 1.0 - std::clamp(rsd, 0.0, 1.0);
  const double weight = std::clamp(w.mu * llt_term + (1.0 - w.mu) * rsd_term, 0.0, 1.0);
  return {weight, w.gateway_window * (1.0 - weight)};
}

// Fading intensity as a function of inter-vehicle distance.
inline double nakagami_shape(double d) {
  if (d < 50.0) return 3.0;
  if (d < 150.0) return 1.5;
  return 1.0;
}

inline bool is_supported_shape(double m) { return m == 1.0 || m == 1.5 || m == 3.0; }

// Probability that a frame sent over distance d is received, for a given
// shape. The m = 1.5 branch is the mean of the m = 1 and m = 2 closed forms.
inline double reception_probability(double d, double max_range, double shape) {
  if (d < 0.0 || !(max_range > 0.0))
    throw ContractViolation("reception_probability: need d >= 0 and R > 0");
  const double u = (d / max_range) * (d / max_range);
  if (shape == 1.0) return std::exp(-u);
  if (shape == 1.5) return 0.5 * (std::exp(-2.0 * u) * (1.0 + 2.0 * u) + std::exp(-u));
  if (shape == 3.0) return std::exp(-3.0 * u) * (1.0 + 3.0 * u + 4.5 * u * u);
  throw UnsupportedShape(shape);
}

inline double reception_probability(double d, double max_range) {
  return reception_probability(d, max_range, nakagami_shape(d));
}

inline double range_degradation(double shape) {
  const double sqrt_pi = std::sqrt(std::numbers::pi);
  if (shape == 1.0) return 1.0 - sqrt_pi / 2.0;
  if (shape == 1.5) return 1.0 - sqrt_pi / 16.0 * (3.0 * std::numbers::sqrt2 + 4.0);
  if (shape == 3.0) return 1.0 - 5.0 * std::numbers::sqrt3 * sqrt_pi / 16.0;
  throw UnsupportedShape(shape);
}

inline double expected_range(double max_range, double shape) {
  if (!(max_range > 0.0)) throw ContractViolation("expected_range: R must be positive");
  return max_range * (1.0 - range_degradation(shape));
}

inline ChannelParams make_channel(double max_range, double shape) {
  return {max_range, shape, range_degradation(shape)};
}

// Predicted time until the separation of a and b first exceeds `range`,
// assuming both keep their current velocity. kLifetimeCap for zero relative
// motion inside range, 0 when the link never (again) lies inside range.
inline double link_expiration(const Kinematics& i, const Kinematics& j, double range) {
  if (!(range > 0.0)) throw ContractViolation("link_expiration: range must be positive");
  const double a = i.vx() - j.vx();
  const double b = i.x - j.x;
  const double c = i.vy() - j.vy();
  const double d = i.y - j.y;
  const double rel2 = a * a + c * c;
  if (rel2 < 1e-12) return std::hypot(b, d) <= range ? kLifetimeCap : 0.0;
  const double disc = rel2 * range * range - (a * d - b * c) * (a * d - b * c);
  if (disc < 0.0) return 0.0;
  const double t = (std::sqrt(disc) - (a * b + c * d)) / rel2;
  return std::clamp(t, 0.0, kLifetimeCap);
}

inline double route_stability(std::span<const double> els_values) {
  if (els_values.empty()) throw ContractViolation("route_stability: empty link list");
  return *std::min_element(els_values.begin(), els_values.end());
}

inline double effective_distance_rate(double d, double range) {
  if (d < 0.0 || !(range > 0.0))
    throw ContractViolation("effective_distance_rate: need d >= 0 and range > 0");
  return std::min(d, range) / range;
}

inline double available_buffer(std::size_t occupancy, std::size_t capacity) {
  if (capacity == 0 || occupancy > capacity)
    throw ContractViolation("available_buffer: need 0 <= occupancy <= capacity, capacity > 0");
  return 1.0 - static_cast<double>(occupancy) / static_cast<double>(capacity);
}

struct RelayContention {
  double stability = 0.0;  // S_e
  double weight = 0.0;
  double defer = 0.0;      // seconds, jitter included
};

// `jitter_draw` is a uniform draw in [0, 1) scaled to [0, T/100] to separate
// candidates whose weights tie exactly.
inline RelayContention relay_contention(double els, double edr, double abq,
                                        const ContentionWeights& w, double jitter_draw = 0.0) {
  if (els < 0.0) throw ContractViolation("relay_contention: negative ELS");
  const double se = 1.0 - std::exp(-els / w.stability_scale);
  const double weight = std::clamp(w.alpha * se + w.beta * std::clamp(edr, 0.0, 1.0) +
                                       w.gamma * std::clamp(abq, 0.0, 1.0),
                                   0.0, 1.0);
  const double defer = w.relay_window * (1.0 - weight) + jitter_draw * w.relay_window / 100.0;
  return {se, weight, defer};
}

// Time left before handover should start. nullopt for the infinite-stability
// sentinel, meaning no handover timer is needed.
inline std::optional<double> critical_time(double ers, double delta) {
  if (ers < 0.0 || delta < 0.0) throw ContractViolation("critical_time: negative input");
  if (ers >= kLifetimeCap) return std::nullopt;
  return std::max(ers - delta, 0.0);
}

}  // namespace imgsdrp
