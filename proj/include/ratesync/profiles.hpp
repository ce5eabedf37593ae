#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "ratesync/qoe.hpp"

namespace ratesync {

// Bundled per-video quality models (duck/crew/ice, high/medium/low rate).
// The rates are in kbits/s; requested_rate_kbps is the top rate used when
// the model was fitted and doubles as the default request in simulations.
struct VideoProfile {
  std::string_view name;
  QoEModel model;
  double min_rate_kbps;
  double max_rate_kbps;
  double requested_rate_kbps;
  Normalization fit_normalization;
};

inline const VideoProfile& video_profile(std::string_view name) {
  static const VideoProfile kProfiles[] = {
      {"duck", {0.634, 1554.8, 1.0}, 76.8, 8108.5, 8108.5, Normalization::kFittingWindow},
      {"crew", {0.802, 419.6, 1.0}, 48.2, 2428.8, 2428.8, Normalization::kMaxRate},
      {"ice", {0.765, 297.3, 1.0}, 28.7, 1133.3, 1133.3, Normalization::kFittingWindow},
  };
  for (const VideoProfile& p : kProfiles) {
    if (p.name == name) return p;
  }
  throw std::invalid_argument("unknown video profile: " + std::string(name));
}

inline bool is_video_profile(std::string_view name) {
  return name == "duck" || name == "crew" || name == "ice";
}

// Segment size in bits when the full requested rate plays for one segment.
inline double requested_bits(const VideoProfile& profile, double segment_duration_s) {
  return profile.requested_rate_kbps * 1000.0 * segment_duration_s;
}

}  // namespace ratesync
