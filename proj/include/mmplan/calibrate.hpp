#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "mmplan/errors.hpp"
#include "mmplan/perfmodel.hpp"
#include "mmplan/platform.hpp"
#include "mmplan/workload.hpp"

namespace mmplan {

// One bandwidth-profiling data point: a square MM run on a known design.
struct BandwidthObservation {
  std::int64_t square_size = 0;
  AccConfig cfg;
  double measured_gflops = 0.0;
};

struct CalibrationResult {
  BandwidthProfile profile;
  double rms_rel_error = 0.0;            // over the fitted observations
  std::vector<double> modeled_gflops;    // per observation, at the fitted profile
};

namespace detail {

inline double modeled_gflops_at(const BandwidthObservation& obs, const BandwidthProfile& bw,
                                const PlatformSpec& base) {
  LayerShape layer{0, obs.square_size, obs.square_size, obs.square_size, 1, 1};
  return layer_time(layer, obs.cfg, base.with_bandwidth(bw)).gflops;
}

// Throughput with all transfer terms at zero: the compute-bound limit.
inline double compute_bound_gflops(const BandwidthObservation& obs, const PlatformSpec& base) {
  LayerShape layer{0, obs.square_size, obs.square_size, obs.square_size, 1, 1};
  const TileCounts t = tile_counts(layer, obs.cfg);
  const double total = compute_time(obs.cfg, base) * static_cast<double>(t.tx * t.ty * t.tz);
  return layer_ops(layer) / total / 1e9;
}

}  // namespace detail

// Fits per-stream bandwidths to measured throughputs by exhaustive grid
// search, minimizing the sum of squared relative errors. Each component
// ranges over bw_total * j/grid_points, j = 1..grid_points, so doubling
// grid_points refines a superset of the previous grid and the best residual
// can only improve. Ties prefer larger bw_o, then bw_l, then bw_r.
//
// Requires at least three observations, at least one of which must be
// bandwidth-bound (measured below 90% of its compute-bound limit), otherwise
// the stream split is unidentifiable. If max_rms_error is finite and the best
// residual exceeds it, throws with the best residual in the message.
inline CalibrationResult calibrate_bandwidth(
    const PlatformSpec& spec, const std::vector<BandwidthObservation>& observations,
    int grid_points = 64, double max_rms_error = std::numeric_limits<double>::infinity()) {
  if (observations.size() < 3)
    throw ValidationError("calibrate_bandwidth: need at least 3 observations");
  if (grid_points < 1) throw ValidationError("calibrate_bandwidth: grid_points must be >= 1");
  bool any_bw_bound = false;
  for (const auto& obs : observations) {
    if (!(obs.measured_gflops > 0))
      throw ValidationError("calibrate_bandwidth: measured_gflops must be > 0");
    if (obs.measured_gflops < 0.9 * detail::compute_bound_gflops(obs, spec)) any_bw_bound = true;
  }
  if (!any_bw_bound)
    throw ValidationError(
        "calibrate_bandwidth: all observations are compute-bound; bandwidth unidentifiable");

  // Per-observation transfer-time coefficients depend on the profile only
  // through buff/bw, so precompute buffers and tile counts once.
  struct Row {
    double buff_l, buff_r, buff_o, tcomp, iters, drains, target;
    double ops;
  };
  std::vector<Row> rows;
  rows.reserve(observations.size());
  for (const auto& obs : observations) {
    LayerShape layer{0, obs.square_size, obs.square_size, obs.square_size, 1, 1};
    const TileCounts t = tile_counts(layer, obs.cfg);
    const BufferFootprint buf = buffer_bytes(obs.cfg);
    rows.push_back({static_cast<double>(buf.buff_l), static_cast<double>(buf.buff_r),
                    static_cast<double>(buf.buff_o), compute_time(obs.cfg, spec),
                    static_cast<double>(t.tx * t.ty * t.tz), static_cast<double>(t.tx * t.tz),
                    obs.measured_gflops, layer_ops(layer)});
  }

  const double step = spec.bw.bw_total / grid_points;
  double best_sse = std::numeric_limits<double>::infinity();
  BandwidthProfile best;
  // Descending loops make the first candidate seen among residual ties the
  // one with the largest bw_o, then bw_l, then bw_r.
  for (int jo = grid_points; jo >= 1; --jo) {
    const double bw_o = step * jo;
    for (int jl = grid_points; jl >= 1; --jl) {
      const double bw_l = step * jl;
      for (int jr = grid_points; jr >= 1; --jr) {
        const double bw_r = step * jr;
        double sse = 0.0;
        for (const auto& r : rows) {
          const double tl = r.buff_l / bw_l;
          const double tr = r.buff_r / bw_r;
          const double to = r.buff_o / bw_o;
          const double iter = std::max(std::max(tl, tr), r.tcomp);
          const double total = iter * r.iters + to * r.drains + std::max(tl, tr);
          const double g = r.ops / total / 1e9;
          const double rel = g / r.target - 1.0;
          sse += rel * rel;
        }
        if (sse < best_sse) {
          best_sse = sse;
          best = {bw_l, bw_r, bw_o, spec.bw.bw_total};
        }
      }
    }
  }

  CalibrationResult result;
  result.profile = best;
  result.rms_rel_error = std::sqrt(best_sse / static_cast<double>(observations.size()));
  for (const auto& obs : observations)
    result.modeled_gflops.push_back(detail::modeled_gflops_at(obs, best, spec));
  if (result.rms_rel_error > max_rms_error)
    throw InfeasibleError("calibrate_bandwidth: no profile within grid bounds fits; best residual " +
                          std::to_string(result.rms_rel_error));
  validate(result.profile);
  return result;
}

// Profile fitted against the published square-MM throughput estimates for the
// 384-tile reference design (sizes 64, 1024, 6144). Regenerating the fit and
// comparing against these constants is covered by the calibration tests.
inline PlatformSpec vck190_calibrated() {
  PlatformSpec p = vck190();
  p.name = "vck190-calibrated";
  p.bw.bw_l = 25.6e9;
  p.bw.bw_r = 5.6e9;
  p.bw.bw_o = 5.6e9;
  return p;
}

}  // namespace mmplan
