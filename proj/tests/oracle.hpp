#pragma once

// Independent reference arithmetic for the test suite. Everything here is
// coded straight from the closed-form definitions, separately from the
// library implementation, so the two can be cross-checked.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "mmplan/composer.hpp"
#include "mmplan/dse.hpp"
#include "mmplan/perfmodel.hpp"
#include "mmplan/scheduler.hpp"

namespace oracle {

using mmplan::AccConfig;
using mmplan::LayerShape;
using mmplan::PlatformSpec;
using mmplan::ResourceBudget;

// Ceiling of an integer ratio via floating point; exact for the magnitudes
// exercised here and deliberately a different route than the library's
// integer ceil-div.
inline std::int64_t fceil(double num, double den) {
  return static_cast<std::int64_t>(std::ceil(num / den));
}

inline std::int64_t ports_in(const AccConfig& c) {
  return fceil(static_cast<double>(c.a) * c.b, c.kernel.ctc) +
         fceil(static_cast<double>(c.c) * c.b, c.kernel.ctc);
}

inline std::int64_t ports_out(const AccConfig& c) {
  return fceil(static_cast<double>(c.a) * c.c, c.kernel.ctc);
}

inline std::int64_t buff_l(const AccConfig& c) {
  return std::int64_t{c.x} * c.a * c.kernel.ti * c.y * c.b * c.kernel.tk * c.kernel.bpd;
}
inline std::int64_t buff_r(const AccConfig& c) {
  return std::int64_t{c.y} * c.z * c.b * c.c * c.kernel.tk * c.kernel.tj * c.kernel.bpd;
}
inline std::int64_t buff_o(const AccConfig& c) {
  return std::int64_t{c.x} * c.z * c.a * c.c * c.kernel.ti * c.kernel.tj * c.kernel.bpd;
}
inline std::int64_t buff_total(const AccConfig& c) { return 2 * (buff_l(c) + buff_r(c) + buff_o(c)); }

inline double compute_seconds(const AccConfig& c, const PlatformSpec& p) {
  const std::int64_t macs =
      std::int64_t{c.x} * c.y * c.z * c.kernel.ti * c.kernel.tk * c.kernel.tj;
  return static_cast<double>(macs) / static_cast<double>(p.mac_per_cycle) / p.eff / p.aie_freq_hz;
}

// Core iteration model: the slowest of {LHS load, RHS load, compute} per
// native tile, times the off-chip trip count. Used to invert measured
// throughputs into an implied bandwidth before any fitting.
inline double core_iteration_seconds(std::int64_t mm_size, const AccConfig& c,
                                     const PlatformSpec& p) {
  const std::int64_t tx = fceil(static_cast<double>(mm_size), static_cast<double>(c.native_m()));
  const std::int64_t ty = fceil(static_cast<double>(mm_size), static_cast<double>(c.native_k()));
  const std::int64_t tz = fceil(static_cast<double>(mm_size), static_cast<double>(c.native_n()));
  const double tl = static_cast<double>(buff_l(c)) / p.bw.bw_l;
  const double tr = static_cast<double>(buff_r(c)) / p.bw.bw_r;
  return std::max({tl, tr, compute_seconds(c, p)}) * static_cast<double>(tx * ty * tz);
}

// Walks every tuple with product(a,b,c) <= aie_max and x,y,z < box; each
// surviving tuple is handed to fn. The x/y/z loops stop once the footprint
// (recomputed here from the closed form, which grows in each factor) leaves
// the RAM budget. A feasible tuple touching the box edge throws, so the scan
// provably covers the feasible set or refuses to stand in for it.
template <class Fn>
inline void scan_feasible(const ResourceBudget& budget, const mmplan::KernelSpec& kernel, int box,
                          Fn&& fn) {
  AccConfig c;
  c.kernel = kernel;
  for (c.a = 1; c.a <= budget.aie_max; ++c.a)
    for (c.b = 1; std::int64_t{c.a} * c.b <= budget.aie_max; ++c.b)
      for (c.c = 1; std::int64_t{c.a} * c.b * c.c <= budget.aie_max; ++c.c) {
        if (ports_in(c) > budget.plio_in_max) continue;
        if (ports_out(c) > budget.plio_out_max) continue;
        for (c.x = 1; c.x <= box; ++c.x) {
          c.y = c.z = 1;
          if (buff_total(c) > budget.ram_max) break;
          for (c.y = 1; c.y <= box; ++c.y) {
            c.z = 1;
            if (buff_total(c) > budget.ram_max) break;
            for (c.z = 1; c.z <= box; ++c.z) {
              if (buff_total(c) > budget.ram_max) break;
              if (c.x == box || c.y == box || c.z == box)
                throw std::runtime_error("oracle box too small for this budget");
              fn(static_cast<const AccConfig&>(c));
            }
          }
        }
      }
}

// Exhaustive feasibility count; no enumeration shortcuts beyond the product
// bound that defines the spatial constraint itself.
inline std::uint64_t count_feasible_configs(const ResourceBudget& budget,
                                            const mmplan::KernelSpec& kernel, int factor_limit) {
  std::uint64_t count = 0;
  scan_feasible(budget, kernel, factor_limit, [&count](const AccConfig&) { ++count; });
  return count;
}

// Best total time over a full enumeration, ranked with the library comparator.
inline mmplan::RankedDesign brute_force_best(const std::vector<LayerShape>& layers,
                                             const ResourceBudget& budget, const PlatformSpec& plat,
                                             const mmplan::KernelSpec& kernel, int factor_limit) {
  const PlatformSpec eval = plat.with_bandwidth(budget.bw);
  bool found = false;
  mmplan::RankedDesign best;
  scan_feasible(budget, kernel, factor_limit, [&](const AccConfig& c) {
    mmplan::RankedDesign d;
    d.cfg = c;
    d.total_time = 0.0;
    for (const auto& l : layers) d.total_time += mmplan::layer_time(l, c, eval).total_time;
    d.ports = mmplan::port_count(c);
    d.buffers = mmplan::buffer_bytes(c);
    if (!found || mmplan::design_less(d, best)) {
      best = d;
      found = true;
    }
  });
  return best;
}

// Min-max composition time by brute force: every contiguous split of the
// sorted layers, the same proportional budgets, and the best design per group.
inline double brute_force_minmax(const std::vector<LayerShape>& sorted_layers,
                                 const PlatformSpec& plat, const mmplan::ComposerParams& params,
                                 int factor_limit) {
  const int n = static_cast<int>(sorted_layers.size());
  double best = std::numeric_limits<double>::infinity();
  // Separator bitmask over the n-1 gap positions with num-1 bits set.
  for (std::uint32_t mask = 0; mask < (1u << (n - 1)); ++mask) {
    if (__builtin_popcount(mask) != params.num - 1) continue;
    mmplan::Partition part;
    int begin = 0;
    for (int gap = 0; gap < n - 1; ++gap)
      if (mask & (1u << gap)) {
        part.groups.emplace_back(begin, gap + 1);
        begin = gap + 1;
      }
    part.groups.emplace_back(begin, n);
    double makespan = 0.0;
    bool feasible = true;
    try {
      const auto budgets = mmplan::proportional_resources(part, sorted_layers, plat, params);
      for (std::size_t g = 0; g < part.groups.size(); ++g) {
        std::vector<LayerShape> group(sorted_layers.begin() + part.groups[g].first,
                                      sorted_layers.begin() + part.groups[g].second);
        const auto d = brute_force_best(group, budgets[g], plat, params.kernel, factor_limit);
        if (d.total_time == 0.0) feasible = false;
        makespan = std::max(makespan, d.total_time);
      }
    } catch (const mmplan::InfeasibleError&) {
      feasible = false;
    }
    if (feasible) best = std::min(best, makespan);
  }
  return best;
}

// Longest dependency chain, weighting each kernel with its time on its acc.
inline double critical_path(const mmplan::TaskPool& pool, const std::vector<int>& kernel_to_acc,
                            const mmplan::KernelTimes& times) {
  const int nk = pool.num_kernels;
  std::vector<double> finish(static_cast<std::size_t>(nk), -1.0);
  double best = 0.0;
  // Kernel ids are topologically consistent only by luck, so fixpoint-iterate.
  bool changed = true;
  while (changed) {
    changed = false;
    for (int k = 0; k < nk; ++k) {
      double start = 0.0;
      bool ready = true;
      for (int p : pool.preds[static_cast<std::size_t>(k)]) {
        if (finish[static_cast<std::size_t>(p)] < 0.0) ready = false;
        start = std::max(start, finish[static_cast<std::size_t>(p)]);
      }
      if (!ready) continue;
      const double f =
          start + times[static_cast<std::size_t>(k)][static_cast<std::size_t>(
                      kernel_to_acc[static_cast<std::size_t>(k)])];
      if (finish[static_cast<std::size_t>(k)] != f) {
        finish[static_cast<std::size_t>(k)] = f;
        changed = true;
      }
      best = std::max(best, f);
    }
  }
  return best;
}

// Optimal makespan for one task by exhaustive sequencing (fixed assignment,
// no deliberate idling). Small instances only.
inline double optimal_makespan(const mmplan::TaskPool& pool, const std::vector<int>& kernel_to_acc,
                               const mmplan::KernelTimes& times, int num_accs) {
  const int nk = pool.num_kernels;
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> finish(static_cast<std::size_t>(nk), -1.0);
  std::vector<double> acc_free(static_cast<std::size_t>(num_accs), 0.0);

  auto dfs = [&](auto&& self, int scheduled) -> void {
    if (scheduled == nk) {
      best = std::min(best, *std::max_element(acc_free.begin(), acc_free.end()));
      return;
    }
    for (int k = 0; k < nk; ++k) {
      if (finish[static_cast<std::size_t>(k)] >= 0.0) continue;
      double ready = 0.0;
      bool ok = true;
      for (int p : pool.preds[static_cast<std::size_t>(k)]) {
        if (finish[static_cast<std::size_t>(p)] < 0.0) ok = false;
        ready = std::max(ready, finish[static_cast<std::size_t>(p)]);
      }
      if (!ok) continue;
      const int acc = kernel_to_acc[static_cast<std::size_t>(k)];
      const double start = std::max(ready, acc_free[static_cast<std::size_t>(acc)]);
      const double end =
          start + times[static_cast<std::size_t>(k)][static_cast<std::size_t>(acc)];
      const double saved_free = acc_free[static_cast<std::size_t>(acc)];
      finish[static_cast<std::size_t>(k)] = end;
      acc_free[static_cast<std::size_t>(acc)] = end;
      self(self, scheduled + 1);
      finish[static_cast<std::size_t>(k)] = -1.0;
      acc_free[static_cast<std::size_t>(acc)] = saved_free;
    }
  };
  dfs(dfs, 0);
  return best;
}

}  // namespace oracle
