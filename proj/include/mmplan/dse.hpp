#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "mmplan/errors.hpp"
#include "mmplan/perfmodel.hpp"
#include "mmplan/platform.hpp"
#include "mmplan/workload.hpp"

namespace mmplan {

// Resource ceiling one accelerator must fit under.
struct ResourceBudget {
  int aie_max = 1;
  int plio_in_max = 1;
  int plio_out_max = 1;
  std::int64_t ram_max = 1;
  BandwidthProfile bw;

  friend bool operator==(const ResourceBudget&, const ResourceBudget&) = default;
};

inline ResourceBudget full_budget(const PlatformSpec& plat) {
  return {plat.aie_total, plat.plio_in, plat.plio_out, plat.ram_bytes, plat.bw};
}

// Upper bounds on the six factors. Zero means "derive from the budget":
// a,b,c default to aie_max, and x,y,z run until the double-buffered footprint
// leaves the RAM budget (the footprint grows monotonically in each factor).
struct FactorBounds {
  int a = 0, b = 0, c = 0;
  int x = 0, y = 0, z = 0;
};

inline bool satisfies_budget(const AccConfig& cfg, const ResourceBudget& budget) {
  if (cfg.tiles() > budget.aie_max) return false;
  const PortCount p = port_count(cfg);
  if (p.ports_in > budget.plio_in_max || p.ports_out > budget.plio_out_max) return false;
  return buffer_bytes(cfg).total <= budget.ram_max;
}

// Visits every feasible (a,b,c,x,y,z) in lexicographic order.
template <class Visitor>
inline void for_each_config(const ResourceBudget& budget, const KernelSpec& kernel,
                            const FactorBounds& bounds, Visitor&& visit) {
  const int a_max = bounds.a > 0 ? std::min(bounds.a, budget.aie_max) : budget.aie_max;
  const int b_max = bounds.b > 0 ? std::min(bounds.b, budget.aie_max) : budget.aie_max;
  const int c_max = bounds.c > 0 ? std::min(bounds.c, budget.aie_max) : budget.aie_max;
  const int x_cap = bounds.x > 0 ? bounds.x : std::numeric_limits<int>::max();
  const int y_cap = bounds.y > 0 ? bounds.y : std::numeric_limits<int>::max();
  const int z_cap = bounds.z > 0 ? bounds.z : std::numeric_limits<int>::max();

  AccConfig cfg;
  cfg.kernel = kernel;
  for (cfg.a = 1; cfg.a <= a_max; ++cfg.a) {
    for (cfg.b = 1; cfg.b <= b_max && std::int64_t{cfg.a} * cfg.b <= budget.aie_max; ++cfg.b) {
      for (cfg.c = 1; cfg.c <= c_max && cfg.tiles() <= budget.aie_max; ++cfg.c) {
        const PortCount ports = port_count(cfg);
        if (ports.ports_in > budget.plio_in_max || ports.ports_out > budget.plio_out_max) continue;
        for (cfg.x = 1; cfg.x <= x_cap; ++cfg.x) {
          cfg.y = 1;
          cfg.z = 1;
          if (buffer_bytes(cfg).total > budget.ram_max) break;
          for (cfg.y = 1; cfg.y <= y_cap; ++cfg.y) {
            cfg.z = 1;
            if (buffer_bytes(cfg).total > budget.ram_max) break;
            for (cfg.z = 1; cfg.z <= z_cap; ++cfg.z) {
              if (buffer_bytes(cfg).total > budget.ram_max) break;
              visit(static_cast<const AccConfig&>(cfg));
            }
          }
        }
      }
    }
  }
}

// Materialized enumeration; intended for small budgets and tests.
inline std::vector<AccConfig> enumerate_configs(const ResourceBudget& budget,
                                                const KernelSpec& kernel,
                                                const FactorBounds& bounds = {}) {
  std::vector<AccConfig> out;
  for_each_config(budget, kernel, bounds, [&out](const AccConfig& cfg) { out.push_back(cfg); });
  return out;
}

// A search result: the design plus everything needed to rank and re-check it.
struct RankedDesign {
  AccConfig cfg;
  double total_time = 0.0;  // seconds over the assigned layers
  double gflops = 0.0;
  PortCount ports;
  BufferFootprint buffers;
};

// Ranking order: faster first, then fewer tiles, smaller footprint, and
// finally lexicographic factors. Total, so results never depend on
// evaluation order.
inline bool design_less(const RankedDesign& lhs, const RankedDesign& rhs) {
  if (lhs.total_time != rhs.total_time) return lhs.total_time < rhs.total_time;
  if (lhs.cfg.tiles() != rhs.cfg.tiles()) return lhs.cfg.tiles() < rhs.cfg.tiles();
  if (lhs.buffers.total != rhs.buffers.total) return lhs.buffers.total < rhs.buffers.total;
  const auto key = [](const AccConfig& c) {
    return std::array<int, 6>{c.a, c.b, c.c, c.x, c.y, c.z};
  };
  return key(lhs.cfg) < key(rhs.cfg);
}

struct SearchResult {
  std::vector<RankedDesign> designs;   // ascending by design_less, at most top_k
  std::uint64_t candidates = 0;        // configurations evaluated
};

inline int search_threads_from_env() {
  if (const char* env = std::getenv("MMPLAN_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return 1;
}

namespace detail {

// Precomputed per-layer constants for the inner evaluation loop.
struct LayerDims {
  std::int64_t m, k, n;
  double weight;  // batch * count
};

struct TopK {
  explicit TopK(std::size_t k) : limit(k) {}
  std::size_t limit;
  std::vector<RankedDesign> items;  // kept sorted ascending

  void offer(const RankedDesign& d) {
    if (items.size() == limit && !design_less(d, items.back())) return;
    auto pos = std::upper_bound(items.begin(), items.end(), d, design_less);
    items.insert(pos, d);
    if (items.size() > limit) items.pop_back();
  }
};

// Time over the layer set for one candidate; identical arithmetic to
// summing layer_time() results in layer order.
inline double group_time(const AccConfig& cfg, const std::vector<LayerDims>& dims,
                         const BufferFootprint& buf, const ResourceBudget& budget,
                         double tcomp) {
  const double tl = static_cast<double>(buf.buff_l) / budget.bw.bw_l;
  const double tr = static_cast<double>(buf.buff_r) / budget.bw.bw_r;
  const double to = static_cast<double>(buf.buff_o) / budget.bw.bw_o;
  const double iter = std::max(std::max(tl, tr), tcomp);
  const double prologue = std::max(tl, tr);
  const std::int64_t nm = cfg.native_m();
  const std::int64_t nk = cfg.native_k();
  const std::int64_t nn = cfg.native_n();
  double total = 0.0;
  for (const auto& d : dims) {
    const std::int64_t tx = ceil_div(d.m, nm);
    const std::int64_t ty = ceil_div(d.k, nk);
    const std::int64_t tz = ceil_div(d.n, nn);
    const double per = iter * static_cast<double>(tx * ty * tz) +
                       to * static_cast<double>(tx * tz) + prologue;
    total += d.weight * per;
  }
  return total;
}

}  // namespace detail

// Exhaustive single-accelerator search: evaluates every feasible design point
// against the summed layer times and returns the top_k designs.
//
// On top of the RAM-driven factor bounds, x, y and z are capped at the first
// value that already covers the largest assigned dimension; larger factors
// only enlarge buffers and padding, so no optimum is lost.
inline SearchResult cdse_search(const std::vector<LayerShape>& layers, const ResourceBudget& budget,
                                const PlatformSpec& plat, int top_k = 1,
                                const KernelSpec& kernel = {}, int num_threads = 0) {
  if (layers.empty()) throw ValidationError("cdse_search: layer list is empty");
  if (top_k < 1) throw ValidationError("cdse_search: top_k must be >= 1");
  validate(budget.bw);
  if (num_threads <= 0) num_threads = search_threads_from_env();

  std::vector<detail::LayerDims> dims;
  std::int64_t max_m = 1, max_k = 1, max_n = 1;
  for (const auto& l : layers) {
    dims.push_back({l.m, l.k, l.n, static_cast<double>(l.batch * l.count)});
    max_m = std::max(max_m, l.m);
    max_k = std::max(max_k, l.k);
    max_n = std::max(max_n, l.n);
  }

  // Enumerate feasible (a,b,c) triples first so work can be split evenly.
  struct Spatial {
    int a, b, c;
  };
  std::vector<Spatial> spatial;
  {
    AccConfig probe;
    probe.kernel = kernel;
    for (probe.a = 1; probe.a <= budget.aie_max; ++probe.a)
      for (probe.b = 1; std::int64_t{probe.a} * probe.b <= budget.aie_max; ++probe.b)
        for (probe.c = 1; probe.tiles() <= budget.aie_max; ++probe.c) {
          const PortCount p = port_count(probe);
          if (p.ports_in <= budget.plio_in_max && p.ports_out <= budget.plio_out_max)
            spatial.push_back({probe.a, probe.b, probe.c});
        }
  }

  const PlatformSpec eval_plat = plat.with_bandwidth(budget.bw);
  auto scan_range = [&](std::size_t begin, std::size_t end, detail::TopK& top,
                        std::uint64_t& count) {
    AccConfig cfg;
    cfg.kernel = kernel;
    for (std::size_t i = begin; i < end; ++i) {
      cfg.a = spatial[i].a;
      cfg.b = spatial[i].b;
      cfg.c = spatial[i].c;
      const int x_cap = static_cast<int>(ceil_div(max_m, std::int64_t{cfg.a} * kernel.ti));
      const int y_cap = static_cast<int>(ceil_div(max_k, std::int64_t{cfg.b} * kernel.tk));
      const int z_cap = static_cast<int>(ceil_div(max_n, std::int64_t{cfg.c} * kernel.tj));
      const PortCount ports = port_count(cfg);
      for (cfg.x = 1; cfg.x <= x_cap; ++cfg.x) {
        cfg.y = 1;
        cfg.z = 1;
        if (buffer_bytes(cfg).total > budget.ram_max) break;
        for (cfg.y = 1; cfg.y <= y_cap; ++cfg.y) {
          cfg.z = 1;
          if (buffer_bytes(cfg).total > budget.ram_max) break;
          for (cfg.z = 1; cfg.z <= z_cap; ++cfg.z) {
            const BufferFootprint buf = buffer_bytes(cfg);
            if (buf.total > budget.ram_max) break;
            ++count;
            const double tcomp = compute_time(cfg, eval_plat);
            const double total = detail::group_time(cfg, dims, buf, budget, tcomp);
            RankedDesign d;
            d.cfg = cfg;
            d.total_time = total;
            d.ports = ports;
            d.buffers = buf;
            top.offer(d);
          }
        }
      }
    }
  };

  SearchResult result;
  const std::size_t k = static_cast<std::size_t>(top_k);
  if (num_threads <= 1 || spatial.size() < 2) {
    detail::TopK top(k);
    scan_range(0, spatial.size(), top, result.candidates);
    result.designs = std::move(top.items);
  } else {
    const std::size_t nt = std::min<std::size_t>(static_cast<std::size_t>(num_threads), spatial.size());
    std::vector<detail::TopK> tops(nt, detail::TopK(k));
    std::vector<std::uint64_t> counts(nt, 0);
    std::vector<std::thread> workers;
    const std::size_t chunk = (spatial.size() + nt - 1) / nt;
    for (std::size_t t = 0; t < nt; ++t) {
      const std::size_t begin = t * chunk;
      const std::size_t end = std::min(spatial.size(), begin + chunk);
      workers.emplace_back([&, t, begin, end] { scan_range(begin, end, tops[t], counts[t]); });
    }
    for (auto& w : workers) w.join();
    detail::TopK merged(k);
    for (const auto& top : tops)
      for (const auto& d : top.items) merged.offer(d);
    for (std::uint64_t c : counts) result.candidates += c;
    result.designs = std::move(merged.items);
  }

  if (result.designs.empty())
    throw InfeasibleError("cdse_search: no feasible design under budget (aie_max=" +
                          std::to_string(budget.aie_max) +
                          ", ram_max=" + std::to_string(budget.ram_max) + ")");
  double ops = 0.0;
  for (const auto& l : layers) ops += layer_ops(l);
  for (auto& d : result.designs) d.gflops = ops / d.total_time / 1e9;
  return result;
}

}  // namespace mmplan
