#pragma once

#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mmplan/composer.hpp"
#include "mmplan/dse.hpp"
#include "mmplan/errors.hpp"
#include "mmplan/platform.hpp"
#include "mmplan/workload.hpp"

namespace mmplan {

// JSON file formats. Bandwidths are bytes/second, frequencies Hz, buffer
// sizes bytes, times seconds. Unknown keys are rejected so typos fail loudly;
// every object accepts an optional free-form "notes" string.

namespace detail {

using json = nlohmann::json;

inline void check_keys(const json& j, const std::set<std::string>& allowed, const char* where) {
  if (!j.is_object()) throw ParseError(std::string(where) + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (key != "notes" && !allowed.count(key))
      throw ParseError(std::string(where) + ": unknown field '" + key + "'");
  }
}

template <class T>
inline T require(const json& j, const char* key, const char* where) {
  if (!j.contains(key))
    throw ParseError(std::string(where) + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(std::string(where) + ": field '" + key + "': " + e.what());
  }
}

template <class T>
inline T optional(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

inline json parse_document(const std::string& text, const char* where) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string(where) + ": " + e.what());
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path);
  out << text;
}

}  // namespace detail

// ---- platform files --------------------------------------------------------

inline PlatformSpec load_platform(const std::string& document) {
  using detail::json;
  const json j = detail::parse_document(document, "platform");
  detail::check_keys(j,
                     {"name", "aie_total", "plio_in", "plio_out", "ram_bytes", "aie_freq_hz",
                      "mac_per_cycle", "eff", "bw"},
                     "platform");
  PlatformSpec p;
  p.name = detail::require<std::string>(j, "name", "platform");
  p.aie_total = detail::require<int>(j, "aie_total", "platform");
  p.plio_in = detail::optional<int>(j, "plio_in", 128);
  p.plio_out = detail::optional<int>(j, "plio_out", 128);
  p.ram_bytes = detail::require<std::int64_t>(j, "ram_bytes", "platform");
  p.aie_freq_hz = detail::require<double>(j, "aie_freq_hz", "platform");
  p.mac_per_cycle = detail::require<int>(j, "mac_per_cycle", "platform");
  p.eff = detail::require<double>(j, "eff", "platform");
  const json bw = detail::require<json>(j, "bw", "platform");
  detail::check_keys(bw, {"bw_l", "bw_r", "bw_o", "bw_total"}, "platform.bw");
  p.bw.bw_total = detail::require<double>(bw, "bw_total", "platform.bw");
  p.bw.bw_l = detail::optional<double>(bw, "bw_l", p.bw.bw_total / 4);
  p.bw.bw_r = detail::optional<double>(bw, "bw_r", p.bw.bw_total / 4);
  p.bw.bw_o = detail::optional<double>(bw, "bw_o", p.bw.bw_total / 4);
  validate(p);
  return p;
}

inline PlatformSpec load_platform_file(const std::string& path) {
  return load_platform(detail::read_file(path));
}

inline std::string save_platform(const PlatformSpec& p, const std::string& notes = {}) {
  detail::json j;
  j["name"] = p.name;
  j["aie_total"] = p.aie_total;
  j["plio_in"] = p.plio_in;
  j["plio_out"] = p.plio_out;
  j["ram_bytes"] = p.ram_bytes;
  j["aie_freq_hz"] = p.aie_freq_hz;
  j["mac_per_cycle"] = p.mac_per_cycle;
  j["eff"] = p.eff;
  j["bw"] = {{"bw_l", p.bw.bw_l}, {"bw_r", p.bw.bw_r}, {"bw_o", p.bw.bw_o}, {"bw_total", p.bw.bw_total}};
  if (!notes.empty()) j["notes"] = notes;
  return j.dump(2) + "\n";
}

// ---- model files -----------------------------------------------------------

inline ModelSpec load_model(const std::string& document) {
  using detail::json;
  const json j = detail::parse_document(document, "model");
  detail::check_keys(j, {"name", "layers", "deps", "fixed_kernels"}, "model");
  ModelSpec m;
  m.name = detail::require<std::string>(j, "name", "model");
  const json layers = detail::require<json>(j, "layers", "model");
  if (!layers.is_array() || layers.empty()) throw ParseError("model: layers must be a non-empty array");
  for (const auto& lj : layers) {
    detail::check_keys(lj, {"id", "m", "k", "n", "batch", "count"}, "model.layers");
    LayerShape l;
    l.id = detail::optional<int>(lj, "id", static_cast<int>(m.layers.size()));
    l.m = detail::require<std::int64_t>(lj, "m", "model.layers");
    l.k = detail::require<std::int64_t>(lj, "k", "model.layers");
    l.n = detail::require<std::int64_t>(lj, "n", "model.layers");
    l.batch = detail::optional<std::int64_t>(lj, "batch", 1);
    l.count = detail::optional<std::int64_t>(lj, "count", 1);
    m.layers.push_back(l);
  }
  for (const auto& ej : detail::optional<json>(j, "deps", json::array())) {
    if (!ej.is_array() || ej.size() != 2) throw ParseError("model.deps: edges must be [pred, succ] pairs");
    m.deps.edges.emplace_back(ej.at(0).get<int>(), ej.at(1).get<int>());
  }
  for (const auto& fj : detail::optional<json>(j, "fixed_kernels", json::array())) {
    detail::check_keys(fj, {"name", "time_s"}, "model.fixed_kernels");
    m.fixed_kernels.push_back(
        {detail::require<std::string>(fj, "name", "model.fixed_kernels"),
         detail::require<double>(fj, "time_s", "model.fixed_kernels")});
  }
  m.validate();
  return m;
}

inline ModelSpec load_model_file(const std::string& path) {
  return load_model(detail::read_file(path));
}

inline std::string save_model(const ModelSpec& m, const std::string& notes = {}) {
  detail::json j;
  j["name"] = m.name;
  j["layers"] = detail::json::array();
  for (const auto& l : m.layers)
    j["layers"].push_back(
        {{"id", l.id}, {"m", l.m}, {"k", l.k}, {"n", l.n}, {"batch", l.batch}, {"count", l.count}});
  j["deps"] = detail::json::array();
  for (const auto& [p, s] : m.deps.edges) j["deps"].push_back({p, s});
  j["fixed_kernels"] = detail::json::array();
  for (const auto& f : m.fixed_kernels)
    j["fixed_kernels"].push_back({{"name", f.name}, {"time_s", f.time_s}});
  if (!notes.empty()) j["notes"] = notes;
  return j.dump(2) + "\n";
}

// ---- design descriptors ----------------------------------------------------

// Everything an external code generator needs to instantiate one accelerator.
inline std::string save_design(const RankedDesign& d, int acc_index,
                               const std::vector<int>& assigned_layers) {
  detail::json j;
  j["acc"] = acc_index;
  j["a"] = d.cfg.a;
  j["b"] = d.cfg.b;
  j["c"] = d.cfg.c;
  j["x"] = d.cfg.x;
  j["y"] = d.cfg.y;
  j["z"] = d.cfg.z;
  j["ti"] = d.cfg.kernel.ti;
  j["tk"] = d.cfg.kernel.tk;
  j["tj"] = d.cfg.kernel.tj;
  j["ctc"] = d.cfg.kernel.ctc;
  j["bpd"] = d.cfg.kernel.bpd;
  j["tiles"] = d.cfg.tiles();
  j["native_m"] = d.cfg.native_m();
  j["native_k"] = d.cfg.native_k();
  j["native_n"] = d.cfg.native_n();
  j["ports_in"] = d.ports.ports_in;
  j["ports_out"] = d.ports.ports_out;
  j["buff_l"] = d.buffers.buff_l;
  j["buff_r"] = d.buffers.buff_r;
  j["buff_o"] = d.buffers.buff_o;
  j["buff_total"] = d.buffers.total;
  j["modeled_time_s"] = d.total_time;
  j["modeled_gflops"] = d.gflops;
  j["assigned_layers"] = assigned_layers;
  return j.dump(2) + "\n";
}

struct DesignFile {
  RankedDesign design;
  int acc = 0;
  std::vector<int> assigned_layers;
};

inline DesignFile load_design(const std::string& document) {
  using detail::json;
  const json j = detail::parse_document(document, "design");
  DesignFile f;
  f.acc = detail::require<int>(j, "acc", "design");
  f.design.cfg.a = detail::require<int>(j, "a", "design");
  f.design.cfg.b = detail::require<int>(j, "b", "design");
  f.design.cfg.c = detail::require<int>(j, "c", "design");
  f.design.cfg.x = detail::require<int>(j, "x", "design");
  f.design.cfg.y = detail::require<int>(j, "y", "design");
  f.design.cfg.z = detail::require<int>(j, "z", "design");
  f.design.cfg.kernel.ti = detail::require<int>(j, "ti", "design");
  f.design.cfg.kernel.tk = detail::require<int>(j, "tk", "design");
  f.design.cfg.kernel.tj = detail::require<int>(j, "tj", "design");
  f.design.cfg.kernel.ctc = detail::require<int>(j, "ctc", "design");
  f.design.cfg.kernel.bpd = detail::require<int>(j, "bpd", "design");
  f.design.total_time = detail::require<double>(j, "modeled_time_s", "design");
  f.design.gflops = detail::require<double>(j, "modeled_gflops", "design");
  f.design.ports = port_count(f.design.cfg);
  f.design.buffers = buffer_bytes(f.design.cfg);
  f.assigned_layers = detail::require<std::vector<int>>(j, "assigned_layers", "design");
  return f;
}

// ---- composition files -----------------------------------------------------

namespace detail {

inline json budget_to_json(const ResourceBudget& b) {
  return {{"aie_max", b.aie_max},
          {"plio_in_max", b.plio_in_max},
          {"plio_out_max", b.plio_out_max},
          {"ram_max", b.ram_max},
          {"bw",
           {{"bw_l", b.bw.bw_l}, {"bw_r", b.bw.bw_r}, {"bw_o", b.bw.bw_o}, {"bw_total", b.bw.bw_total}}}};
}

inline ResourceBudget budget_from_json(const json& j) {
  ResourceBudget b;
  b.aie_max = require<int>(j, "aie_max", "budget");
  b.plio_in_max = require<int>(j, "plio_in_max", "budget");
  b.plio_out_max = require<int>(j, "plio_out_max", "budget");
  b.ram_max = require<std::int64_t>(j, "ram_max", "budget");
  const json bw = require<json>(j, "bw", "budget");
  b.bw = {require<double>(bw, "bw_l", "budget.bw"), require<double>(bw, "bw_r", "budget.bw"),
          require<double>(bw, "bw_o", "budget.bw"), require<double>(bw, "bw_total", "budget.bw")};
  return b;
}

inline json design_to_json(const RankedDesign& d) {
  return {{"a", d.cfg.a},
          {"b", d.cfg.b},
          {"c", d.cfg.c},
          {"x", d.cfg.x},
          {"y", d.cfg.y},
          {"z", d.cfg.z},
          {"ti", d.cfg.kernel.ti},
          {"tk", d.cfg.kernel.tk},
          {"tj", d.cfg.kernel.tj},
          {"ctc", d.cfg.kernel.ctc},
          {"bpd", d.cfg.kernel.bpd},
          {"total_time_s", d.total_time},
          {"gflops", d.gflops}};
}

inline RankedDesign design_from_json(const json& j) {
  RankedDesign d;
  d.cfg.a = require<int>(j, "a", "design");
  d.cfg.b = require<int>(j, "b", "design");
  d.cfg.c = require<int>(j, "c", "design");
  d.cfg.x = require<int>(j, "x", "design");
  d.cfg.y = require<int>(j, "y", "design");
  d.cfg.z = require<int>(j, "z", "design");
  d.cfg.kernel.ti = require<int>(j, "ti", "design");
  d.cfg.kernel.tk = require<int>(j, "tk", "design");
  d.cfg.kernel.tj = require<int>(j, "tj", "design");
  d.cfg.kernel.ctc = require<int>(j, "ctc", "design");
  d.cfg.kernel.bpd = require<int>(j, "bpd", "design");
  d.total_time = require<double>(j, "total_time_s", "design");
  d.gflops = require<double>(j, "gflops", "design");
  d.ports = port_count(d.cfg);
  d.buffers = buffer_bytes(d.cfg);
  return d;
}

}  // namespace detail

// Self-contained composition: embeds the model so a simulation run needs no
// other inputs.
inline std::string save_composition(const CompositionResult& comp, const ModelSpec& model,
                                    const PlatformSpec& plat) {
  detail::json j;
  j["model"] = detail::json::parse(save_model(model));
  j["platform_name"] = plat.name;
  j["aie_freq_hz"] = plat.aie_freq_hz;
  j["mac_per_cycle"] = plat.mac_per_cycle;
  j["eff"] = plat.eff;
  j["num"] = comp.num;
  j["assignment"] = comp.assignment;
  j["runtime_config"] = comp.runtime_config;
  j["acc_time_s"] = comp.acc_time_s;
  j["makespan_s"] = comp.makespan_s;
  j["throughput_gflops"] = comp.throughput_gflops;
  j["candidates"] = comp.candidates;
  j["partition_index"] = comp.partition_index;
  j["accs"] = detail::json::array();
  for (const auto& d : comp.accs) j["accs"].push_back(detail::design_to_json(d));
  j["budgets"] = detail::json::array();
  for (const auto& b : comp.budgets) j["budgets"].push_back(detail::budget_to_json(b));
  return j.dump(2) + "\n";
}

struct CompositionFile {
  CompositionResult comp;
  ModelSpec model;
  double aie_freq_hz = 1e9;
  int mac_per_cycle = 1;
  double eff = 1.0;
  std::string platform_name;
};

inline CompositionFile load_composition(const std::string& document) {
  using detail::json;
  const json j = detail::parse_document(document, "composition");
  CompositionFile f;
  f.model = load_model(detail::require<json>(j, "model", "composition").dump());
  f.platform_name = detail::optional<std::string>(j, "platform_name", "");
  f.aie_freq_hz = detail::require<double>(j, "aie_freq_hz", "composition");
  f.mac_per_cycle = detail::require<int>(j, "mac_per_cycle", "composition");
  f.eff = detail::require<double>(j, "eff", "composition");
  f.comp.num = detail::require<int>(j, "num", "composition");
  f.comp.assignment = detail::require<std::vector<int>>(j, "assignment", "composition");
  f.comp.runtime_config = detail::require<std::vector<int>>(j, "runtime_config", "composition");
  f.comp.acc_time_s = detail::require<std::vector<double>>(j, "acc_time_s", "composition");
  f.comp.makespan_s = detail::require<double>(j, "makespan_s", "composition");
  f.comp.throughput_gflops = detail::require<double>(j, "throughput_gflops", "composition");
  f.comp.candidates = detail::optional<std::uint64_t>(j, "candidates", 0);
  f.comp.partition_index = detail::optional<int>(j, "partition_index", -1);
  for (const auto& dj : detail::require<json>(j, "accs", "composition"))
    f.comp.accs.push_back(detail::design_from_json(dj));
  for (const auto& bj : detail::require<json>(j, "budgets", "composition"))
    f.comp.budgets.push_back(detail::budget_from_json(bj));
  return f;
}

inline CompositionFile load_composition_file(const std::string& path) {
  return load_composition(detail::read_file(path));
}

// Stable 64-bit digest of a document (FNV-1a), for report provenance lines.
inline std::string digest(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace mmplan
