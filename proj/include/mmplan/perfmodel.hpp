#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "mmplan/errors.hpp"
#include "mmplan/platform.hpp"
#include "mmplan/workload.hpp"

namespace mmplan {

// Analytical model of one MM accelerator built from a tile array behind
// on-chip stream buffers.
//
// An accelerator executes a four-level tiled loop nest:
//   off-chip loop (tx,ty,tz) over native tiles
//     on-chip reuse loop (x,y,z) feeding the array from LHS/RHS buffers
//       spatial unroll (a,b,c) across the tile array
//         per-tile kernel (ti,tk,tj)
// The native tile is (a*ti*x) x (b*tk*y) x (c*tj*z); smaller problems are
// padded up to it. LHS and RHS transfers double-buffer against compute, so a
// native-tile iteration costs max(load_l, load_r, compute). Output tiles
// accumulate on chip across the ty loop and drain once per (tx,tz) pair,
// non-overlapped; one extra load charge models the pipeline prologue.

// Per-tile kernel: dimensions, compute-to-communication ratio, element width.
struct KernelSpec {
  int ti = 32;
  int tk = 32;
  int tj = 32;
  int ctc = 4;  // cycles of compute per cycle of input transfer on one port
  int bpd = 4;  // bytes per data element

  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

inline void validate(const KernelSpec& k) {
  if (k.ti < 1 || k.tk < 1 || k.tj < 1) throw ValidationError("kernel: ti,tk,tj must be >= 1");
  if (k.ctc < 1) throw ValidationError("kernel: ctc must be >= 1");
  if (k.bpd != 1 && k.bpd != 2 && k.bpd != 4 && k.bpd != 8)
    throw ValidationError("kernel: bpd must be one of 1,2,4,8");
}

// One accelerator design point.
struct AccConfig {
  int a = 1, b = 1, c = 1;  // spatial unroll over the tile array
  int x = 1, y = 1, z = 1;  // on-chip buffer reuse factors
  KernelSpec kernel;

  std::int64_t tiles() const { return std::int64_t{a} * b * c; }
  std::int64_t native_m() const { return std::int64_t{a} * kernel.ti * x; }
  std::int64_t native_k() const { return std::int64_t{b} * kernel.tk * y; }
  std::int64_t native_n() const { return std::int64_t{c} * kernel.tj * z; }

  friend bool operator==(const AccConfig&, const AccConfig&) = default;
};

inline void validate(const AccConfig& cfg) {
  if (cfg.a < 1 || cfg.b < 1 || cfg.c < 1 || cfg.x < 1 || cfg.y < 1 || cfg.z < 1)
    throw ValidationError("config: all factors must be >= 1");
  validate(cfg.kernel);
}

struct TileCounts {
  std::int64_t tx = 1, ty = 1, tz = 1;
  std::int64_t padded_m = 0, padded_k = 0, padded_n = 0;

  friend bool operator==(const TileCounts&, const TileCounts&) = default;
};

struct PortCount {
  int ports_in = 1;
  int ports_out = 1;

  friend bool operator==(const PortCount&, const PortCount&) = default;
};

struct BufferFootprint {
  std::int64_t buff_l = 0;  // bytes, one LHS buffer
  std::int64_t buff_r = 0;
  std::int64_t buff_o = 0;
  std::int64_t total = 0;   // all three, double buffered

  friend bool operator==(const BufferFootprint&, const BufferFootprint&) = default;
};

struct PerfEstimate {
  double time_l = 0.0;     // seconds per native-tile iteration
  double time_r = 0.0;
  double time_o = 0.0;
  double time_comp = 0.0;
  double total_time = 0.0;  // seconds for the whole layer
  double gflops = 0.0;
};

inline std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

// Off-chip loop bounds; each dimension pads up to a whole native tile.
inline TileCounts tile_counts(const LayerShape& layer, const AccConfig& cfg) {
  TileCounts t;
  t.tx = ceil_div(layer.m, cfg.native_m());
  t.ty = ceil_div(layer.k, cfg.native_k());
  t.tz = ceil_div(layer.n, cfg.native_n());
  t.padded_m = t.tx * cfg.native_m();
  t.padded_k = t.ty * cfg.native_k();
  t.padded_n = t.tz * cfg.native_n();
  return t;
}

// Stream ports feeding the array. Broadcast plus packet switching lets one
// port serve `ctc` tiles, hence the ceiling divisions.
inline PortCount port_count(const AccConfig& cfg) {
  const std::int64_t ctc = cfg.kernel.ctc;
  PortCount p;
  p.ports_in = static_cast<int>(ceil_div(std::int64_t{cfg.a} * cfg.b, ctc) +
                                ceil_div(std::int64_t{cfg.c} * cfg.b, ctc));
  p.ports_out = static_cast<int>(ceil_div(std::int64_t{cfg.a} * cfg.c, ctc));
  return p;
}

// On-chip buffer bytes; total includes the double-buffering factor 2.
inline BufferFootprint buffer_bytes(const AccConfig& cfg) {
  const auto& k = cfg.kernel;
  BufferFootprint f;
  f.buff_l = (std::int64_t{cfg.x} * cfg.a * k.ti) * (std::int64_t{cfg.y} * cfg.b * k.tk) * k.bpd;
  f.buff_r = std::int64_t{cfg.y} * cfg.z * cfg.b * cfg.c * k.tk * k.tj * k.bpd;
  f.buff_o = std::int64_t{cfg.x} * cfg.z * cfg.a * cfg.c * k.ti * k.tj * k.bpd;
  f.total = 2 * (f.buff_l + f.buff_r + f.buff_o);
  return f;
}

// MAC count of one on-chip pass (exact integer).
inline std::int64_t onchip_macs(const AccConfig& cfg) {
  const auto& k = cfg.kernel;
  return std::int64_t{cfg.x} * cfg.y * cfg.z * k.ti * k.tk * k.tj;
}

inline double compute_cycles(const AccConfig& cfg, const PlatformSpec& plat) {
  return static_cast<double>(onchip_macs(cfg)) / static_cast<double>(plat.mac_per_cycle) / plat.eff;
}

// Seconds the array needs for one native-tile iteration.
inline double compute_time(const AccConfig& cfg, const PlatformSpec& plat) {
  return compute_cycles(cfg, plat) / plat.aie_freq_hz;
}

// Time model for one layer on one accelerator. Loads overlap compute via
// double buffering; output drains are charged separately (once per (tx,tz)
// because the ty loop accumulates on chip), plus one pipeline-fill load.
inline PerfEstimate layer_time(const LayerShape& layer, const AccConfig& cfg,
                               const PlatformSpec& plat) {
  const TileCounts t = tile_counts(layer, cfg);
  const BufferFootprint buf = buffer_bytes(cfg);
  PerfEstimate e;
  e.time_l = static_cast<double>(buf.buff_l) / plat.bw.bw_l;
  e.time_r = static_cast<double>(buf.buff_r) / plat.bw.bw_r;
  e.time_o = static_cast<double>(buf.buff_o) / plat.bw.bw_o;
  e.time_comp = compute_time(cfg, plat);
  const double iter = std::max(std::max(e.time_l, e.time_r), e.time_comp);
  const double iters = static_cast<double>(t.tx * t.ty * t.tz);
  const double drains = static_cast<double>(t.tx * t.tz);
  const double prologue = std::max(e.time_l, e.time_r);
  const double per_instance = iter * iters + e.time_o * drains + prologue;
  e.total_time = static_cast<double>(layer.batch * layer.count) * per_instance;
  e.gflops = layer_ops(layer) / e.total_time / 1e9;
  return e;
}

// Aggregate throughput of a layer set finished in `total_time_s`.
inline double throughput_gflops(const std::vector<LayerShape>& layers, double total_time_s) {
  if (!(total_time_s > 0)) throw ValidationError("throughput: total_time must be > 0");
  double ops = 0.0;
  for (const auto& l : layers) ops += layer_ops(l);
  return ops / total_time_s / 1e9;
}

// Peak sustained rate of one design (its tiles at full efficiency).
inline double compute_roof_gflops(const AccConfig& cfg, const PlatformSpec& plat) {
  return static_cast<double>(cfg.tiles()) * plat.mac_per_cycle * 2.0 * plat.aie_freq_hz * plat.eff / 1e9;
}

// Peak sustained rate of the whole device.
inline double platform_roof_gflops(const PlatformSpec& plat) {
  return static_cast<double>(plat.aie_total) * plat.mac_per_cycle * 2.0 * plat.aie_freq_hz * plat.eff / 1e9;
}

// The reconstructed tile-array decomposition of the 384-tile reference design
// (native tile 1536 x 128 x 1024). Search must confirm it stays in the
// feasible set; see the dse tests.
inline AccConfig reference_monolithic_config() {
  AccConfig cfg;
  cfg.a = 12;
  cfg.b = 4;
  cfg.c = 8;
  cfg.x = 4;
  cfg.y = 1;
  cfg.z = 4;
  cfg.kernel = KernelSpec{};
  return cfg;
}

}  // namespace mmplan
