// mmplan: design-space exploration and schedule simulation for composed
// matrix-multiply accelerators.
//
//   mmplan dse       search single-accelerator designs for a model or square sizes
//   mmplan compose   partition a model across several diverse accelerators
//   mmplan simulate  run the dependency-aware schedule simulation
//   mmplan sweep     rerun compose across platform scale factors
//
// All outputs land under --out; files are deterministic for fixed inputs.
// MMPLAN_THREADS controls search parallelism (default 1).

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mmplan/mmplan.hpp"

namespace fs = std::filesystem;
using namespace mmplan;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitInfeasible = 2;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// "64,128,256", "1..8" (doubling, end appended if missed), or a single value.
std::vector<std::int64_t> parse_int_list(const std::string& text) {
  std::vector<std::int64_t> out;
  if (auto dots = text.find(".."); dots != std::string::npos) {
    const std::int64_t lo = std::stoll(text.substr(0, dots));
    const std::int64_t hi = std::stoll(text.substr(dots + 2));
    for (std::int64_t v = lo; v <= hi; v *= 2) out.push_back(v);
    if (out.empty() || out.back() != hi) out.push_back(hi);
    return out;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stoll(item));
  return out;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

void ensure_dir(const fs::path& dir) { fs::create_directories(dir); }

void report_header(const std::string& command, const std::string& platform_doc,
                   const std::string& model_doc) {
  std::cout << "command: " << command << "\n";
  if (!platform_doc.empty()) std::cout << "platform digest: " << digest(platform_doc) << "\n";
  if (!model_doc.empty()) std::cout << "model digest: " << digest(model_doc) << "\n";
}

ModelSpec resolve_model(const std::string& arg) {
  if (arg == "bert" || arg == "vit" || arg == "ncf" || arg == "mlp") return builtin_model(arg);
  return load_model_file(arg);
}

std::string model_doc_for(const std::string& arg) {
  if (arg == "bert" || arg == "vit" || arg == "ncf" || arg == "mlp")
    return save_model(builtin_model(arg));
  return detail::read_file(arg);
}

// ---- dse --------------------------------------------------------------------

int cmd_dse(const std::string& platform_path, const std::string& model_arg,
            const std::string& square_list, int top_k, const std::string& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string platform_doc = detail::read_file(platform_path);
  const PlatformSpec plat = load_platform(platform_doc);
  ensure_dir(out_dir);
  ensure_dir(fs::path(out_dir) / "designs");

  std::ostringstream report;
  std::uint64_t candidates_total = 0;

  if (!square_list.empty()) {
    // The size list forms one workload: the search picks the best single
    // design for the whole set, and the table reports that design's modeled
    // throughput per size (the classic one-design-across-sizes curve).
    report_header("dse --square " + square_list, platform_doc, "");
    const std::vector<std::int64_t> sizes = parse_int_list(square_list);
    std::vector<LayerShape> layers;
    for (std::int64_t size : sizes)
      layers.push_back({static_cast<int>(layers.size()), size, size, size, 1, 1});
    SearchResult r = cdse_search(layers, full_budget(plat), plat, top_k);
    candidates_total = r.candidates;
    const RankedDesign& best = r.designs.front();
    report << "size,gflops,time_s,a,b,c,x,y,z\n";
    for (const LayerShape& layer : layers) {
      const PerfEstimate e = layer_time(layer, best.cfg, plat);
      report << layer.m << ',' << e.gflops << ',' << e.total_time << ',' << best.cfg.a << ','
             << best.cfg.b << ',' << best.cfg.c << ',' << best.cfg.x << ',' << best.cfg.y << ','
             << best.cfg.z << "\n";
    }
    std::vector<int> all_layers;
    for (const auto& l : layers) all_layers.push_back(l.id);
    for (std::size_t i = 0; i < r.designs.size(); ++i) {
      const fs::path file =
          fs::path(out_dir) / "designs" / ("square_set_rank" + std::to_string(i) + ".json");
      detail::write_file(file.string(), save_design(r.designs[i], 0, all_layers));
    }
  } else {
    const std::string model_doc = model_doc_for(model_arg);
    const ModelSpec model = resolve_model(model_arg);
    report_header("dse " + model.name, platform_doc, model_doc);
    SearchResult r = cdse_search(model.layers, full_budget(plat), plat, top_k);
    candidates_total = r.candidates;
    report << "rank,gflops,time_s,a,b,c,x,y,z\n";
    std::vector<int> all_layers;
    for (const auto& l : model.layers) all_layers.push_back(l.id);
    for (std::size_t i = 0; i < r.designs.size(); ++i) {
      const RankedDesign& d = r.designs[i];
      report << i << ',' << d.gflops << ',' << d.total_time << ',' << d.cfg.a << ',' << d.cfg.b << ','
             << d.cfg.c << ',' << d.cfg.x << ',' << d.cfg.y << ',' << d.cfg.z << "\n";
      const fs::path file =
          fs::path(out_dir) / "designs" / (model.name + "_rank" + std::to_string(i) + ".json");
      detail::write_file(file.string(), save_design(d, 0, all_layers));
    }
  }

  detail::write_file((fs::path(out_dir) / "report.csv").string(), report.str());
  std::cout << "candidates: " << candidates_total << "\n";
  std::cout << "wall_clock_s: " << seconds_since(t0) << "\n";
  std::cout << "wrote " << out_dir << "/report.csv\n";
  return 0;
}

// ---- compose ------------------------------------------------------------------

void write_composition(const fs::path& dir, const CompositionResult& comp, const ModelSpec& model,
                       const PlatformSpec& plat) {
  ensure_dir(dir);
  detail::write_file((dir / "composition.json").string(), save_composition(comp, model, plat));
  detail::json rc;
  rc["kernel_to_acc"] = comp.runtime_config;
  detail::write_file((dir / "runtime_config.json").string(), rc.dump(2) + "\n");
  for (std::size_t i = 0; i < comp.accs.size(); ++i) {
    std::vector<int> assigned;
    for (std::size_t l = 0; l < comp.assignment.size(); ++l)
      if (comp.assignment[l] == static_cast<int>(i)) assigned.push_back(static_cast<int>(l));
    detail::write_file((dir / ("acc" + std::to_string(i) + ".json")).string(),
                       save_design(comp.accs[i], static_cast<int>(i), assigned));
  }
}

int cmd_compose(const std::string& platform_path, const std::string& model_arg,
                const std::string& num_list, int ubound, double mem_quantum,
                const std::string& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string platform_doc = detail::read_file(platform_path);
  const PlatformSpec plat = load_platform(platform_doc);
  const std::string model_doc = model_doc_for(model_arg);
  const ModelSpec model = resolve_model(model_arg);
  report_header("compose " + model.name + " --num " + num_list, platform_doc, model_doc);
  ensure_dir(out_dir);

  std::ostringstream report;
  report << "num,throughput_gflops,makespan_s,partition_index,candidates,tiles\n";
  std::optional<CompositionResult> best;
  std::uint64_t candidates_total = 0;
  int wrote = 0;
  for (std::int64_t num : parse_int_list(num_list)) {
    ComposerParams params;
    params.num = static_cast<int>(num);
    params.ubound = ubound;
    params.mem_quantum = mem_quantum;
    try {
      CompositionResult comp = compose(model, plat, params);
      candidates_total += comp.candidates;
      std::int64_t tiles = 0;
      for (const auto& a : comp.accs) tiles += a.cfg.tiles();
      report << num << ',' << comp.throughput_gflops << ',' << comp.makespan_s << ','
             << comp.partition_index << ',' << comp.candidates << ',' << tiles << "\n";
      write_composition(fs::path(out_dir) / ("num" + std::to_string(num)), comp, model, plat);
      ++wrote;
      if (!best || comp.throughput_gflops > best->throughput_gflops) best = comp;
    } catch (const InfeasibleError& e) {
      report << num << ",infeasible,,,,\n";
      std::cout << "num=" << num << ": " << e.what() << "\n";
    }
  }
  detail::write_file((fs::path(out_dir) / "report.csv").string(), report.str());
  if (!best) {
    std::cout << "no feasible composition\n";
    return kExitInfeasible;
  }
  std::cout << "best num: " << best->num << " (" << best->throughput_gflops << " GFLOPS modeled)\n";
  for (std::size_t i = 0; i < best->accs.size(); ++i) {
    const auto& d = best->accs[i];
    std::cout << "  acc" << i << ": tiles=" << d.cfg.tiles() << " (a=" << d.cfg.a << ",b=" << d.cfg.b
              << ",c=" << d.cfg.c << ",x=" << d.cfg.x << ",y=" << d.cfg.y << ",z=" << d.cfg.z
              << ") time=" << best->acc_time_s[i] << "s ram=" << best->budgets[i].ram_max << "\n";
  }
  std::cout << "candidates: " << candidates_total << "\n";
  std::cout << "wall_clock_s: " << seconds_since(t0) << "\n";
  std::cout << "wrote " << wrote << " compositions under " << out_dir << "\n";
  return 0;
}

// ---- simulate -----------------------------------------------------------------

int cmd_simulate(const std::string& composition_path, int tasks, const std::string& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string doc = detail::read_file(composition_path);
  const CompositionFile file = load_composition(doc);
  report_header("simulate --tasks " + std::to_string(tasks), "", doc);
  ensure_dir(out_dir);

  PlatformSpec plat;
  plat.name = file.platform_name;
  plat.aie_freq_hz = file.aie_freq_hz;
  plat.mac_per_cycle = file.mac_per_cycle;
  plat.eff = file.eff;
  plat.aie_total = 1;  // only the timing parameters matter here
  plat.bw = file.comp.budgets.front().bw;

  const KernelTimes times = default_kernel_times(file.comp, file.model, plat);
  const Timeline tl = simulate(file.comp, build_task_pool(file.model, tasks), times);
  const ScheduleMetrics m = metrics(tl, file.model, tasks);

  detail::write_file((fs::path(out_dir) / "timeline.csv").string(), timeline_csv(tl));
  std::ostringstream summary;
  summary << "task,latency_s\n";
  for (std::size_t t = 0; t < m.task_latency_s.size(); ++t)
    summary << t << ',' << m.task_latency_s[t] << "\n";
  summary << "makespan_s," << m.makespan_s << "\n";
  summary << "throughput_gflops," << m.throughput_gflops << "\n";
  for (std::size_t a = 0; a < m.utilization.size(); ++a)
    summary << "acc" << a << "_utilization," << m.utilization[a] << "\n";
  detail::write_file((fs::path(out_dir) / "summary.csv").string(), summary.str());

  std::cout << "makespan_s: " << m.makespan_s << "\n";
  std::cout << "throughput_gflops: " << m.throughput_gflops << "\n";
  std::cout << "wall_clock_s: " << seconds_since(t0) << "\n";
  std::cout << "wrote " << out_dir << "/timeline.csv\n";
  return 0;
}

// ---- sweep --------------------------------------------------------------------

int cmd_sweep(const std::string& platform_path, const std::string& model_arg,
              const std::string& bw_scales, const std::string& aie_scales,
              const std::string& ram_scales, const std::string& num_list, int ubound,
              const std::string& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string platform_doc = detail::read_file(platform_path);
  const PlatformSpec base = load_platform(platform_doc);
  const std::string model_doc = model_doc_for(model_arg);
  const ModelSpec model = resolve_model(model_arg);
  report_header("sweep " + model.name, platform_doc, model_doc);
  ensure_dir(out_dir);

  std::ostringstream report;
  report << "bw_scale,aie_scale,ram_scale,num,mode,throughput_gflops,makespan_s,roof_gflops\n";
  std::uint64_t candidates_total = 0;
  for (double bs : parse_double_list(bw_scales)) {
    for (double as : parse_double_list(aie_scales)) {
      for (double rs : parse_double_list(ram_scales)) {
        const PlatformSpec plat = scale_platform(base, as, rs, bs);
        const double roof = platform_roof_gflops(plat);
        for (std::int64_t num : parse_int_list(num_list)) {
          ComposerParams params;
          params.num = static_cast<int>(num);
          params.ubound = ubound;
          try {
            CompositionResult comp = compose(model, plat, params);
            candidates_total += comp.candidates;
            report << bs << ',' << as << ',' << rs << ',' << num << ",diverse,"
                   << comp.throughput_gflops << ',' << comp.makespan_s << ',' << roof << "\n";
          } catch (const InfeasibleError&) {
            report << bs << ',' << as << ',' << rs << ',' << num << ",diverse,infeasible,," << roof
                   << "\n";
          }
          if (num > 1) {
            try {
              DuplicateResult dup = duplicate_composition(model, plat, static_cast<int>(num));
              candidates_total += dup.candidates;
              report << bs << ',' << as << ',' << rs << ',' << num << ",duplicate,"
                     << dup.throughput_gflops << ',' << dup.per_task_time_s << ',' << roof << "\n";
            } catch (const InfeasibleError&) {
              report << bs << ',' << as << ',' << rs << ',' << num << ",duplicate,infeasible,,"
                     << roof << "\n";
            }
          }
        }
      }
    }
  }
  detail::write_file((fs::path(out_dir) / "report.csv").string(), report.str());
  std::cout << "candidates: " << candidates_total << "\n";
  std::cout << "wall_clock_s: " << seconds_since(t0) << "\n";
  std::cout << "wrote " << out_dir << "/report.csv\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"design-space exploration and schedule simulation for composed MM accelerators"};
  app.require_subcommand(1);

  std::string platform_path, model_arg, square_list, num_list = "1..8", composition_path;
  std::string bw_scales = "1", aie_scales = "1", ram_scales = "1";
  std::string out_dir = "out";
  int top_k = 5, ubound = 16, tasks = 1;
  double mem_quantum = 1.0 / 16;

  CLI::App* dse = app.add_subcommand("dse", "single-accelerator design search");
  dse->add_option("--platform", platform_path, "platform JSON file")->required();
  dse->add_option("--model", model_arg, "model JSON file or builtin name (bert|vit|ncf|mlp)");
  dse->add_option("--square", square_list, "square MM sizes, e.g. 64,512,4096 or 64..4096");
  dse->add_option("--top", top_k, "designs to keep");
  dse->add_option("--out", out_dir, "output directory");

  CLI::App* compose_cmd = app.add_subcommand("compose", "multi-accelerator composition");
  compose_cmd->add_option("--platform", platform_path, "platform JSON file")->required();
  compose_cmd->add_option("--model", model_arg, "model JSON file or builtin name")->required();
  compose_cmd->add_option("--num", num_list, "accelerator counts, e.g. 2 or 1..8");
  compose_cmd->add_option("--ubound", ubound, "memory tuning rounds");
  compose_cmd->add_option("--mem-quantum", mem_quantum, "RAM fraction moved per tuning round");
  compose_cmd->add_option("--out", out_dir, "output directory");

  CLI::App* simulate_cmd = app.add_subcommand("simulate", "schedule simulation");
  simulate_cmd->add_option("--composition", composition_path, "composition JSON file")->required();
  simulate_cmd->add_option("--tasks", tasks, "concurrent tasks")->required();
  simulate_cmd->add_option("--out", out_dir, "output directory");

  CLI::App* sweep_cmd = app.add_subcommand("sweep", "platform scaling sweep");
  sweep_cmd->add_option("--platform", platform_path, "platform JSON file")->required();
  sweep_cmd->add_option("--model", model_arg, "model JSON file or builtin name")->required();
  sweep_cmd->add_option("--bw-scale", bw_scales, "bandwidth scale list, e.g. 1,4,16");
  sweep_cmd->add_option("--aie-scale", aie_scales, "tile count scale list");
  sweep_cmd->add_option("--ram-scale", ram_scales, "RAM scale list");
  sweep_cmd->add_option("--num", num_list, "accelerator counts");
  sweep_cmd->add_option("--ubound", ubound, "memory tuning rounds");
  sweep_cmd->add_option("--out", out_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (dse->parsed()) {
      if (model_arg.empty() == square_list.empty()) {
        std::cerr << "dse: pass exactly one of --model or --square\n";
        return kExitUsage;
      }
      return cmd_dse(platform_path, model_arg, square_list, top_k, out_dir);
    }
    if (compose_cmd->parsed())
      return cmd_compose(platform_path, model_arg, num_list, ubound, mem_quantum, out_dir);
    if (simulate_cmd->parsed()) return cmd_simulate(composition_path, tasks, out_dir);
    if (sweep_cmd->parsed())
      return cmd_sweep(platform_path, model_arg, bw_scales, aie_scales, ram_scales, num_list, ubound,
                       out_dir);
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
