#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "mmplan/errors.hpp"

namespace mmplan {

// Off-chip bandwidth, bytes/second per stream. The three streams are
// time-multiplexed on the same memory channel, so bw_l+bw_r+bw_o may exceed
// bw_total; each individual component may not.
struct BandwidthProfile {
  double bw_l = 0.0;
  double bw_r = 0.0;
  double bw_o = 0.0;
  double bw_total = 0.0;

  friend bool operator==(const BandwidthProfile&, const BandwidthProfile&) = default;
};

inline void validate(const BandwidthProfile& bw) {
  if (!(bw.bw_total > 0)) throw ValidationError("bw_total must be > 0");
  if (!(bw.bw_l > 0)) throw ValidationError("bw_l must be > 0");
  if (!(bw.bw_r > 0)) throw ValidationError("bw_r must be > 0");
  if (!(bw.bw_o > 0)) throw ValidationError("bw_o must be > 0");
  if (bw.bw_l > bw.bw_total) throw ValidationError("bw_l exceeds bw_total");
  if (bw.bw_r > bw.bw_total) throw ValidationError("bw_r exceeds bw_total");
  if (bw.bw_o > bw.bw_total) throw ValidationError("bw_o exceeds bw_total");
}

// Hardware budget of the target device.
struct PlatformSpec {
  std::string name;
  int aie_total = 1;         // compute tiles
  int plio_in = 1;           // input stream ports
  int plio_out = 1;          // output stream ports
  std::int64_t ram_bytes = 1;  // on-chip buffer capacity
  double aie_freq_hz = 1e9;
  int mac_per_cycle = 1;     // peak MACs per tile per cycle
  double eff = 1.0;          // pipeline efficiency, in (0,1]
  BandwidthProfile bw;

  PlatformSpec with_bandwidth(const BandwidthProfile& profile) const {
    PlatformSpec p = *this;
    p.bw = profile;
    return p;
  }

  friend bool operator==(const PlatformSpec&, const PlatformSpec&) = default;
};

inline void validate(const PlatformSpec& p) {
  if (p.aie_total < 1) throw ValidationError(p.name + ": aie_total must be >= 1");
  if (p.plio_in < 1) throw ValidationError(p.name + ": plio_in must be >= 1");
  if (p.plio_out < 1) throw ValidationError(p.name + ": plio_out must be >= 1");
  if (p.ram_bytes <= 0) throw ValidationError(p.name + ": ram_bytes must be > 0");
  if (!(p.aie_freq_hz > 0)) throw ValidationError(p.name + ": aie_freq_hz must be > 0");
  if (p.mac_per_cycle < 1) throw ValidationError(p.name + ": mac_per_cycle must be >= 1");
  if (!(p.eff > 0.0) || p.eff > 1.0) throw ValidationError(p.name + ": eff must be in (0,1]");
  validate(p.bw);
}

namespace detail {

inline int scale_count(int value, double scale) {
  return std::max(1, static_cast<int>(std::floor(static_cast<double>(value) * scale)));
}

inline std::int64_t scale_bytes(std::int64_t value, double scale) {
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(static_cast<double>(value) * scale)));
}

inline std::string scale_tag(const char* key, double scale) {
  if (scale == 1.0) return {};
  char buf[48];
  std::snprintf(buf, sizeof buf, "[%sx%g]", key, scale);
  return buf;
}

}  // namespace detail

// Returns a copy with compute, memory, and bandwidth scaled. Counts round
// down but never below one; the name records the applied scales.
inline PlatformSpec scale_platform(const PlatformSpec& spec, double aie_scale, double ram_scale,
                                   double bw_scale) {
  if (!(aie_scale > 0) || !(ram_scale > 0) || !(bw_scale > 0))
    throw ValidationError("scale_platform: scales must be > 0");
  PlatformSpec p = spec;
  p.aie_total = detail::scale_count(spec.aie_total, aie_scale);
  p.ram_bytes = detail::scale_bytes(spec.ram_bytes, ram_scale);
  p.bw.bw_l = spec.bw.bw_l * bw_scale;
  p.bw.bw_r = spec.bw.bw_r * bw_scale;
  p.bw.bw_o = spec.bw.bw_o * bw_scale;
  p.bw.bw_total = spec.bw.bw_total * bw_scale;
  p.name = spec.name + detail::scale_tag("aie", aie_scale) + detail::scale_tag("ram", ram_scale) +
           detail::scale_tag("bw", bw_scale);
  validate(p);
  return p;
}

// VCK190-class device. RAM capacity is backed out of published utilization
// fractions (384 URAM at 82.94% => 463 URAM x 32 KiB; 764 BRAM at 79.01% =>
// 967 BRAM x 4.5 KiB). Port counts per direction are assumed at 128 and can
// be overridden through a platform file. Until calibrated, each stream gets
// a quarter of the peak DDR bandwidth.
inline PlatformSpec vck190() {
  PlatformSpec p;
  p.name = "vck190";
  p.aie_total = 400;
  p.plio_in = 128;
  p.plio_out = 128;
  p.ram_bytes = std::int64_t{463} * 32 * 1024 + std::int64_t{967} * 4608;  // 19627520
  p.aie_freq_hz = 1e9;
  p.mac_per_cycle = 8;
  p.eff = 0.8;
  p.bw.bw_total = 25.6e9;
  p.bw.bw_l = p.bw.bw_r = p.bw.bw_o = p.bw.bw_total / 4;
  validate(p);
  return p;
}

}  // namespace mmplan
