#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "mmplan/dse.hpp"
#include "mmplan/errors.hpp"
#include "mmplan/perfmodel.hpp"
#include "mmplan/platform.hpp"
#include "mmplan/workload.hpp"

namespace mmplan {

// Composes several differently-shaped accelerators for one application:
// sorts the layers by work, splits the sorted list into contiguous groups,
// gives each group resources proportional to its share of the operations,
// searches a design per group, and fine-tunes the memory split.

struct ComposerParams {
  int num = 1;                    // number of accelerators
  int ubound = 16;                // memory-tuning rounds
  double mem_quantum = 1.0 / 16;  // fraction of the even RAM share moved per round
  int top_k = 1;
  KernelSpec kernel;
};

inline void validate(const ComposerParams& p) {
  if (p.num < 1) throw ValidationError("composer: num must be >= 1");
  if (p.ubound < 0) throw ValidationError("composer: ubound must be >= 0");
  if (!(p.mem_quantum > 0.0) || !(p.mem_quantum < 1.0))
    throw ValidationError("composer: mem_quantum must be in (0,1)");
}

// Contiguous index ranges [begin,end) over the ops-sorted layer list.
struct Partition {
  std::vector<std::pair<int, int>> groups;
};

// Layers sorted by descending operation count; ties fall back to descending
// (m,k,n,batch) and finally ascending id so the order is total.
inline std::vector<LayerShape> sort_layers(std::vector<LayerShape> layers) {
  std::stable_sort(layers.begin(), layers.end(), [](const LayerShape& a, const LayerShape& b) {
    const double oa = layer_ops(a);
    const double ob = layer_ops(b);
    if (oa != ob) return oa > ob;
    const auto key = [](const LayerShape& l) { return std::make_tuple(l.m, l.k, l.n, l.batch); };
    if (key(a) != key(b)) return key(a) > key(b);
    return a.id < b.id;
  });
  return layers;
}

inline std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  return r;
}

// Number of ways to split n sorted layers into num contiguous groups.
inline std::uint64_t partition_count(int n, int num) { return binomial(n - 1, num - 1); }

// Visits all C(n-1, num-1) separator placements in lexicographic order.
template <class Visitor>
inline void for_each_partition(int n, int num, Visitor&& visit) {
  if (num < 1 || num > n) throw ValidationError("partitions: need 1 <= num <= layer count");
  std::vector<int> sep(static_cast<std::size_t>(num - 1));
  for (int i = 0; i < num - 1; ++i) sep[static_cast<std::size_t>(i)] = i + 1;
  while (true) {
    Partition part;
    int begin = 0;
    for (int s : sep) {
      part.groups.emplace_back(begin, s);
      begin = s;
    }
    part.groups.emplace_back(begin, n);
    visit(static_cast<const Partition&>(part));
    // Next combination of separators out of {1..n-1}.
    int i = num - 2;
    while (i >= 0 && sep[static_cast<std::size_t>(i)] == n - (num - 1) + i) --i;
    if (i < 0) break;
    ++sep[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < num - 1; ++j)
      sep[static_cast<std::size_t>(j)] = sep[static_cast<std::size_t>(j - 1)] + 1;
  }
}

inline std::vector<Partition> enumerate_partitions(int n, int num) {
  std::vector<Partition> out;
  for_each_partition(n, num, [&out](const Partition& p) { out.push_back(p); });
  return out;
}

namespace detail {

// Smallest RAM any accelerator must keep: one double-buffered minimal tile set.
inline std::int64_t min_buffer_bytes(const KernelSpec& kernel) {
  AccConfig minimal;
  minimal.kernel = kernel;
  return buffer_bytes(minimal).total;
}

inline std::vector<double> group_ops(const Partition& part, const std::vector<LayerShape>& sorted) {
  std::vector<double> ops;
  for (auto [b, e] : part.groups) {
    double g = 0.0;
    for (int i = b; i < e; ++i) g += layer_ops(sorted[static_cast<std::size_t>(i)]);
    ops.push_back(g);
  }
  return ops;
}

// Largest-ops group index; first on ties.
inline std::size_t argmax(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

// Proportional integer split with per-group minimums. The rounding remainder
// goes to the group with the most work; if lifting small groups to their
// minimum overshoots the total, the largest allocations above their minimum
// are walked back one unit at a time (lowest index first on ties).
inline std::vector<int> proportional_split(int total, const std::vector<double>& ops, int minimum,
                                           const char* what) {
  const std::size_t n = ops.size();
  if (total < minimum * static_cast<int>(n))
    throw InfeasibleError(std::string("proportional_resources: platform too small to give every "
                                      "accelerator its minimum ") +
                          what);
  double sum = 0.0;
  for (double o : ops) sum += o;
  std::vector<int> alloc(n);
  std::int64_t used = 0;
  for (std::size_t i = 0; i < n; ++i) {
    alloc[i] = std::max(minimum, static_cast<int>(static_cast<double>(total) * (ops[i] / sum)));
    used += alloc[i];
  }
  while (used > total) {
    std::size_t victim = n;
    for (std::size_t i = 0; i < n; ++i)
      if (alloc[i] > minimum && (victim == n || alloc[i] > alloc[victim])) victim = i;
    if (victim == n)
      throw InfeasibleError(std::string("proportional_resources: platform too small to give every "
                                        "accelerator its minimum ") +
                            what);
    --alloc[victim];
    --used;
  }
  alloc[argmax(ops)] += static_cast<int>(total - used);
  return alloc;
}

}  // namespace detail

// Per-group budgets: tiles and ports proportional to the group's operation
// share (floored, remainder to the largest group, floors of one tile and
// 3-in/1-out ports), RAM split evenly, bandwidth split evenly per stream.
inline std::vector<ResourceBudget> proportional_resources(const Partition& part,
                                                          const std::vector<LayerShape>& sorted,
                                                          const PlatformSpec& plat,
                                                          const ComposerParams& params) {
  const std::vector<double> ops = detail::group_ops(part, sorted);
  const std::size_t num = ops.size();
  const std::vector<int> aie = detail::proportional_split(plat.aie_total, ops, 1, "tile");
  const std::vector<int> pin = detail::proportional_split(plat.plio_in, ops, 3, "input port");
  const std::vector<int> pout = detail::proportional_split(plat.plio_out, ops, 1, "output port");
  const std::int64_t ram_even = plat.ram_bytes / static_cast<std::int64_t>(num);
  if (ram_even < detail::min_buffer_bytes(params.kernel))
    throw InfeasibleError("proportional_resources: RAM share below one minimal buffer set");

  BandwidthProfile share = plat.bw;
  share.bw_l /= static_cast<double>(num);
  share.bw_r /= static_cast<double>(num);
  share.bw_o /= static_cast<double>(num);
  share.bw_total /= static_cast<double>(num);

  std::vector<ResourceBudget> budgets(num);
  for (std::size_t i = 0; i < num; ++i) {
    budgets[i] = {aie[i], pin[i], pout[i], ram_even, share};
  }
  // Even split may leave a few bytes unassigned; they go with the remainder rule.
  budgets[detail::argmax(ops)].ram_max += plat.ram_bytes - ram_even * static_cast<std::int64_t>(num);
  return budgets;
}

struct CompositionResult {
  std::vector<int> assignment;          // layer id -> accelerator index
  std::vector<RankedDesign> accs;       // one design per accelerator
  std::vector<ResourceBudget> budgets;
  std::vector<double> acc_time_s;       // modeled busy time per accelerator
  double makespan_s = 0.0;              // max over acc_time_s
  double throughput_gflops = 0.0;       // model ops / makespan
  std::vector<int> runtime_config;      // kernel id -> accelerator index
  std::uint64_t candidates = 0;         // design points evaluated
  std::uint64_t partitions_processed = 0;
  int partition_index = -1;
  int num = 1;
};

namespace detail {

struct GroupLayers {
  std::vector<std::vector<LayerShape>> groups;
};

inline GroupLayers split_groups(const Partition& part, const std::vector<LayerShape>& sorted) {
  GroupLayers g;
  for (auto [b, e] : part.groups) {
    g.groups.emplace_back(sorted.begin() + b, sorted.begin() + e);
  }
  return g;
}

// CDSE results keyed by (group, RAM budget); tiles/ports/bandwidth stay fixed
// while memory tuning runs, so this avoids re-searching unchanged accs.
// Shrinking RAM only removes candidates, so a cached optimum from a larger
// budget that still fits under the smaller one carries over as-is.
struct GroupSearchCache {
  const PlatformSpec* plat;
  const ComposerParams* params;
  std::map<std::pair<std::size_t, std::int64_t>, RankedDesign> hits;
  std::uint64_t candidates = 0;

  const RankedDesign& search(std::size_t group_idx, const std::vector<LayerShape>& layers,
                             const ResourceBudget& budget) {
    const auto key = std::make_pair(group_idx, budget.ram_max);
    auto it = hits.find(key);
    if (it != hits.end()) return it->second;
    auto larger = hits.upper_bound(key);
    if (larger != hits.end() && larger->first.first == group_idx &&
        larger->second.buffers.total <= budget.ram_max) {
      return hits.emplace(key, larger->second).first->second;
    }
    SearchResult r = cdse_search(layers, budget, *plat, 1, params->kernel);
    candidates += r.candidates;
    return hits.emplace(key, r.designs.front()).first->second;
  }
};

}  // namespace detail

struct TuneResult {
  std::vector<ResourceBudget> budgets;
  std::vector<RankedDesign> designs;
  std::vector<double> times;
  double makespan = 0.0;
  std::uint64_t candidates = 0;
};

// Memory fine-tuning: for up to ubound rounds, shift one RAM quantum from the
// fastest accelerator to the slowest and re-search both; the best (min-max
// time) state seen is kept. The donor never drops below one minimal buffer
// set.
inline TuneResult memory_tune(std::vector<ResourceBudget> budgets, const Partition& part,
                              const std::vector<LayerShape>& sorted, const PlatformSpec& plat,
                              const ComposerParams& params) {
  validate(params);
  const detail::GroupLayers gl = detail::split_groups(part, sorted);
  const std::size_t num = gl.groups.size();
  detail::GroupSearchCache cache{&plat, &params, {}, 0};

  auto evaluate = [&](const std::vector<ResourceBudget>& b) {
    std::pair<std::vector<RankedDesign>, std::vector<double>> out;
    for (std::size_t i = 0; i < num; ++i) {
      const RankedDesign& d = cache.search(i, gl.groups[i], b[i]);
      out.first.push_back(d);
      out.second.push_back(d.total_time);
    }
    return out;
  };

  auto [designs, times] = evaluate(budgets);
  TuneResult best;
  best.budgets = budgets;
  best.designs = designs;
  best.times = times;
  best.makespan = *std::max_element(times.begin(), times.end());

  const std::int64_t quantum = static_cast<std::int64_t>(
      params.mem_quantum * (static_cast<double>(plat.ram_bytes) / static_cast<double>(num)));
  const std::int64_t floor_bytes = detail::min_buffer_bytes(params.kernel);

  for (int round = 0; round < params.ubound && num > 1 && quantum > 0; ++round) {
    std::size_t slow = 0, fast = 0;
    for (std::size_t i = 1; i < num; ++i) {
      if (times[i] > times[slow]) slow = i;
      if (times[i] < times[fast]) fast = i;
    }
    if (slow == fast) break;
    if (budgets[fast].ram_max - quantum < floor_bytes) break;
    budgets[fast].ram_max -= quantum;
    budgets[slow].ram_max += quantum;
    std::tie(designs, times) = evaluate(budgets);
    const double makespan = *std::max_element(times.begin(), times.end());
    if (makespan < best.makespan) {
      best.budgets = budgets;
      best.designs = designs;
      best.times = times;
      best.makespan = makespan;
    }
  }
  best.candidates = cache.candidates;
  return best;
}

namespace detail {

inline std::int64_t total_tiles(const std::vector<RankedDesign>& designs) {
  std::int64_t t = 0;
  for (const auto& d : designs) t += d.cfg.tiles();
  return t;
}

}  // namespace detail

// Full composition: iterates every contiguous partition of the ops-sorted
// layers, applies proportional resources and memory tuning, and keeps the
// partition minimizing the slowest accelerator's time (ties: fewer total
// tiles, then earlier partition).
inline CompositionResult compose(const ModelSpec& model, const PlatformSpec& plat,
                                 const ComposerParams& params) {
  validate(params);
  const int n = static_cast<int>(model.layers.size());
  if (params.num > n)
    throw InfeasibleError("compose: num=" + std::to_string(params.num) + " exceeds " +
                          std::to_string(n) + " layer shapes");
  const std::vector<LayerShape> sorted = sort_layers(model.layers);

  CompositionResult best;
  bool found = false;
  std::uint64_t candidates = 0;
  int partition_index = 0;
  std::string last_error;

  for_each_partition(n, params.num, [&](const Partition& part) {
    const int index = partition_index++;
    TuneResult tuned;
    try {
      std::vector<ResourceBudget> budgets = proportional_resources(part, sorted, plat, params);
      tuned = memory_tune(std::move(budgets), part, sorted, plat, params);
    } catch (const InfeasibleError& e) {
      last_error = e.what();
      return;
    }
    candidates += tuned.candidates;
    const std::int64_t tiles = detail::total_tiles(tuned.designs);
    const bool better =
        !found || tuned.makespan < best.makespan_s ||
        (tuned.makespan == best.makespan_s && tiles < detail::total_tiles(best.accs));
    if (better) {
      found = true;
      best.accs = tuned.designs;
      best.budgets = tuned.budgets;
      best.acc_time_s = tuned.times;
      best.makespan_s = tuned.makespan;
      best.partition_index = index;
      best.assignment.assign(static_cast<std::size_t>(n), -1);
      for (std::size_t g = 0; g < part.groups.size(); ++g)
        for (int i = part.groups[g].first; i < part.groups[g].second; ++i)
          best.assignment[static_cast<std::size_t>(sorted[static_cast<std::size_t>(i)].id)] =
              static_cast<int>(g);
    }
  });

  if (!found)
    throw InfeasibleError("compose: no feasible composition for num=" + std::to_string(params.num) +
                          (last_error.empty() ? "" : " (" + last_error + ")"));

  best.num = params.num;
  best.candidates = candidates;
  best.partitions_processed = static_cast<std::uint64_t>(partition_index);
  best.throughput_gflops = total_ops(model) / best.makespan_s / 1e9;
  best.runtime_config.resize(static_cast<std::size_t>(model.kernel_count()));
  for (int kid = 0; kid < model.kernel_count(); ++kid)
    best.runtime_config[static_cast<std::size_t>(kid)] =
        best.assignment[static_cast<std::size_t>(model.kernel_layer(kid))];
  return best;
}

// Duplicate-accelerator estimate: num identical accelerators, each running
// whole tasks on a 1/num slice of the platform. Steady-state throughput is
// num times a single slice's rate.
struct DuplicateResult {
  RankedDesign acc;
  int num = 1;
  double per_task_time_s = 0.0;
  double throughput_gflops = 0.0;
  std::uint64_t candidates = 0;
};

inline DuplicateResult duplicate_composition(const ModelSpec& model, const PlatformSpec& plat,
                                             int num, const KernelSpec& kernel = {}) {
  if (num < 1) throw ValidationError("duplicate_composition: num must be >= 1");
  PlatformSpec slice = scale_platform(plat, 1.0 / num, 1.0 / num, 1.0 / num);
  slice.plio_in = std::max(1, plat.plio_in / num);
  slice.plio_out = std::max(1, plat.plio_out / num);
  SearchResult r = cdse_search(model.layers, full_budget(slice), slice, 1, kernel);
  DuplicateResult d;
  d.acc = r.designs.front();
  d.num = num;
  d.per_task_time_s = d.acc.total_time;
  d.throughput_gflops = static_cast<double>(num) * total_ops(model) / d.per_task_time_s / 1e9;
  d.candidates = r.candidates;
  return d;
}

}  // namespace mmplan
