#pragma once

// Hand-placed constant-velocity vehicles for protocol scenarios.

#include <cmath>
#include <vector>

#include "imgsdrp/mobility.hpp"
#include "imgsdrp/protocol.hpp"

namespace scripted {

struct Car {
  int id;
  bool dual;
  double x, y, speed, heading;
  double enter = 0.0;
  double leave = -1.0;  // < 0: present until the end
};

inline imgsdrp::Trace make_trace(const std::vector<Car>& cars, double duration, double tick = 0.1) {
  std::vector<imgsdrp::VehicleTrack> tracks;
  for (const Car& c : cars) {
    imgsdrp::VehicleTrack tr;
    tr.spec.id = c.id;
    tr.spec.dual_interface = c.dual;
    tr.spec.entry_time = c.enter;
    tr.spec.desired_speed = c.speed;
    const double end = c.leave < 0 ? duration : c.leave;
    const auto steps = static_cast<long>(std::llround((end - c.enter) / tick));
    for (long k = 0; k <= steps; ++k) {
      const double t = c.enter + k * tick;
      const double dt = t;
      tr.times.push_back(t);
      tr.samples.push_back(imgsdrp::Kinematics::make(c.x + c.speed * std::cos(c.heading) * dt,
                                                     c.y + c.speed * std::sin(c.heading) * dt, c.speed,
                                                     c.heading));
    }
    tr.end_time = end;
    tracks.push_back(std::move(tr));
  }
  return imgsdrp::Trace(duration, tick, std::move(tracks));
}

// Lossless disk channel and no traffic unless asked for.
inline imgsdrp::ScenarioConfig quiet_config(double duration) {
  imgsdrp::ScenarioConfig c;
  c.duration = duration;
  c.channel = imgsdrp::ChannelModel::Disk;
  c.sources = 0;
  return c;
}

}  // namespace scripted
