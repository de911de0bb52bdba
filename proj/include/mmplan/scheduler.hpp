#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "mmplan/composer.hpp"
#include "mmplan/errors.hpp"
#include "mmplan/perfmodel.hpp"
#include "mmplan/workload.hpp"

namespace mmplan {

// Deterministic discrete-event simulation of the runtime scheduler. Every
// kernel is pinned to one accelerator by the runtime config; whenever an
// accelerator goes idle it takes the first ready kernel in (task index,
// kernel id) order. Dependencies hold within a task; tasks are independent
// inference instances of the same model.

enum class KernelStatus : std::uint8_t { pending, ready, running, done };

struct TaskPool {
  int num_tasks = 0;
  int num_kernels = 0;  // per task
  std::vector<KernelStatus> status;            // task-major [task*num_kernels + kernel]
  std::vector<std::vector<int>> preds;         // kernel id -> predecessor kernel ids
  std::vector<std::vector<int>> succs;

  KernelStatus& at(int task, int kernel) {
    return status[static_cast<std::size_t>(task) * static_cast<std::size_t>(num_kernels) +
                  static_cast<std::size_t>(kernel)];
  }
  KernelStatus at(int task, int kernel) const {
    return status[static_cast<std::size_t>(task) * static_cast<std::size_t>(num_kernels) +
                  static_cast<std::size_t>(kernel)];
  }
};

// num_tasks independent copies of the model's kernels; kernels without
// predecessors start ready.
inline TaskPool build_task_pool(const ModelSpec& model, int num_tasks) {
  if (num_tasks < 1) throw ValidationError("build_task_pool: num_tasks must be >= 1");
  model.validate();
  TaskPool pool;
  pool.num_tasks = num_tasks;
  pool.num_kernels = model.kernel_count();
  pool.preds.resize(static_cast<std::size_t>(pool.num_kernels));
  pool.succs.resize(static_cast<std::size_t>(pool.num_kernels));
  for (const auto& [p, s] : model.deps.edges) {
    pool.preds[static_cast<std::size_t>(s)].push_back(p);
    pool.succs[static_cast<std::size_t>(p)].push_back(s);
  }
  pool.status.assign(static_cast<std::size_t>(num_tasks) * static_cast<std::size_t>(pool.num_kernels),
                     KernelStatus::pending);
  for (int t = 0; t < num_tasks; ++t)
    for (int k = 0; k < pool.num_kernels; ++k)
      if (pool.preds[static_cast<std::size_t>(k)].empty()) pool.at(t, k) = KernelStatus::ready;
  return pool;
}

struct ScheduleEvent {
  int acc = 0;
  int task = 0;
  int kernel = 0;
  double start_s = 0.0;
  double end_s = 0.0;
};

struct Timeline {
  std::vector<ScheduleEvent> events;
  std::vector<double> task_latency;  // excluding fixed kernels
  double makespan = 0.0;
  std::vector<double> per_acc_busy;
};

// kernel_times[kernel][acc]: seconds for one instance of that kernel on that
// accelerator. Only the designated accelerator's entry is consulted.
using KernelTimes = std::vector<std::vector<double>>;

inline KernelTimes default_kernel_times(const CompositionResult& comp, const ModelSpec& model,
                                        const PlatformSpec& plat) {
  const int num_accs = static_cast<int>(comp.accs.size());
  KernelTimes times(static_cast<std::size_t>(model.kernel_count()),
                    std::vector<double>(static_cast<std::size_t>(num_accs),
                                        std::numeric_limits<double>::quiet_NaN()));
  for (int kid = 0; kid < model.kernel_count(); ++kid) {
    const int acc = comp.runtime_config[static_cast<std::size_t>(kid)];
    const PlatformSpec acc_plat = plat.with_bandwidth(comp.budgets[static_cast<std::size_t>(acc)].bw);
    times[static_cast<std::size_t>(kid)][static_cast<std::size_t>(acc)] =
        layer_time(model.kernel_shape(kid), comp.accs[static_cast<std::size_t>(acc)].cfg, acc_plat)
            .total_time;
  }
  return times;
}

// Event loop: on every completion, successors of the finished kernel become
// ready, then idle accelerators scan (task, kernel) in FIFO order for the
// first ready kernel pinned to them. Identical inputs give identical
// timelines.
inline Timeline simulate(const std::vector<int>& kernel_to_acc, int num_accs, TaskPool pool,
                         const KernelTimes& kernel_times) {
  if (num_accs < 1) throw ValidationError("simulate: need at least one accelerator");
  if (static_cast<int>(kernel_to_acc.size()) != pool.num_kernels)
    throw ValidationError("simulate: kernel_to_acc size mismatch");
  for (int k = 0; k < pool.num_kernels; ++k) {
    const int acc = kernel_to_acc[static_cast<std::size_t>(k)];
    if (acc < 0 || acc >= num_accs)
      throw ValidationError("simulate: kernel " + std::to_string(k) + " mapped to missing acc");
    const double t = kernel_times[static_cast<std::size_t>(k)][static_cast<std::size_t>(acc)];
    if (!(t > 0.0) || !std::isfinite(t))
      throw ValidationError("simulate: kernel " + std::to_string(k) +
                            " has no finite time on its acc");
  }

  struct Running {
    bool busy = false;
    int task = -1;
    int kernel = -1;
    double end = 0.0;
  };
  std::vector<Running> accs(static_cast<std::size_t>(num_accs));

  Timeline tl;
  tl.per_acc_busy.assign(static_cast<std::size_t>(num_accs), 0.0);
  tl.task_latency.assign(static_cast<std::size_t>(pool.num_tasks), 0.0);

  int remaining = 0;
  for (KernelStatus s : pool.status)
    if (s != KernelStatus::done) ++remaining;

  double now = 0.0;
  while (remaining > 0) {
    // Assign every idle accelerator the first valid kernel, FIFO order.
    for (int a = 0; a < num_accs; ++a) {
      auto& slot = accs[static_cast<std::size_t>(a)];
      if (slot.busy) continue;
      for (int t = 0; t < pool.num_tasks && !slot.busy; ++t) {
        for (int k = 0; k < pool.num_kernels; ++k) {
          if (pool.at(t, k) != KernelStatus::ready) continue;
          if (kernel_to_acc[static_cast<std::size_t>(k)] != a) continue;
          const double dur = kernel_times[static_cast<std::size_t>(k)][static_cast<std::size_t>(a)];
          pool.at(t, k) = KernelStatus::running;
          slot = {true, t, k, now + dur};
          tl.events.push_back({a, t, k, now, now + dur});
          break;
        }
      }
    }

    // Advance to the earliest completion.
    double next = std::numeric_limits<double>::infinity();
    for (const auto& slot : accs)
      if (slot.busy) next = std::min(next, slot.end);
    if (!std::isfinite(next))
      throw ValidationError("simulate: deadlock; pending kernels but no accelerator is busy");
    now = next;

    // Retire everything finishing now and promote successors.
    for (auto& slot : accs) {
      if (!slot.busy || slot.end != now) continue;
      pool.at(slot.task, slot.kernel) = KernelStatus::done;
      --remaining;
      for (int s : pool.succs[static_cast<std::size_t>(slot.kernel)]) {
        bool all_done = true;
        for (int p : pool.preds[static_cast<std::size_t>(s)])
          if (pool.at(slot.task, p) != KernelStatus::done) all_done = false;
        if (all_done && pool.at(slot.task, s) == KernelStatus::pending)
          pool.at(slot.task, s) = KernelStatus::ready;
      }
      slot.busy = false;
    }
  }

  for (const auto& e : tl.events) {
    tl.makespan = std::max(tl.makespan, e.end_s);
    tl.per_acc_busy[static_cast<std::size_t>(e.acc)] += e.end_s - e.start_s;
    tl.task_latency[static_cast<std::size_t>(e.task)] =
        std::max(tl.task_latency[static_cast<std::size_t>(e.task)], e.end_s);
  }
  return tl;
}

inline Timeline simulate(const CompositionResult& comp, TaskPool pool,
                         const KernelTimes& kernel_times) {
  return simulate(comp.runtime_config, static_cast<int>(comp.accs.size()), std::move(pool),
                  kernel_times);
}

struct ScheduleMetrics {
  std::vector<double> task_latency_s;  // MM span plus sequential fixed-kernel time
  double makespan_s = 0.0;
  double throughput_gflops = 0.0;      // MM ops of all tasks over the MM makespan
  std::vector<double> utilization;     // per-acc busy / makespan
};

// Fixed (non-MM) kernels run sequentially outside the MM timeline and are
// charged per task; they contribute to latency but not to the MM makespan.
inline ScheduleMetrics metrics(const Timeline& tl, const ModelSpec& model, int num_tasks) {
  ScheduleMetrics m;
  m.makespan_s = tl.makespan;
  const double fixed = model.fixed_time_s();
  for (double lat : tl.task_latency) m.task_latency_s.push_back(lat + fixed);
  if (tl.makespan > 0.0)
    m.throughput_gflops = static_cast<double>(num_tasks) * total_ops(model) / tl.makespan / 1e9;
  for (double busy : tl.per_acc_busy)
    m.utilization.push_back(tl.makespan > 0.0 ? busy / tl.makespan : 0.0);
  return m;
}

// Gantt-friendly CSV, rows ordered by (start, acc, task, kernel).
inline std::string timeline_csv(const Timeline& tl) {
  std::vector<ScheduleEvent> events = tl.events;
  std::sort(events.begin(), events.end(), [](const ScheduleEvent& a, const ScheduleEvent& b) {
    return std::make_tuple(a.start_s, a.acc, a.task, a.kernel) <
           std::make_tuple(b.start_s, b.acc, b.task, b.kernel);
  });
  std::ostringstream out;
  out << "acc,task,kernel,start_s,end_s\n";
  out.precision(17);
  for (const auto& e : events)
    out << e.acc << ',' << e.task << ',' << e.kernel << ',' << e.start_s << ',' << e.end_s << '\n';
  return out.str();
}

}  // namespace mmplan
