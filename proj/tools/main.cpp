#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "tileplan/assign.hpp"
#include "tileplan/cost.hpp"
#include "tileplan/error.hpp"
#include "tileplan/execgraph.hpp"
#include "tileplan/graph.hpp"
#include "tileplan/kcuts.hpp"
#include "tileplan/onecut.hpp"
#include "tileplan/oracle.hpp"
#include "tileplan/placement.hpp"
#include "tileplan/simulator.hpp"

namespace {

using namespace tileplan;
using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) fail("cannot write " + path);
  out << text;
}

int parse_devices(int devices) {
  if (devices < 1) fail("device count must be positive");
  int k = 0;
  while ((1 << k) < devices) ++k;
  if ((1 << k) != devices) fail("device count must be a power of two");
  return k;
}

Shape parse_dims(const std::string& text, char sep) {
  Shape s;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, sep)) {
    if (tok.empty()) continue;
    s.push_back(std::stoll(tok));
  }
  if (s.empty()) fail("empty dimension list '" + text + "'");
  return s;
}

json assignment_to_json(const TilingAssignment& a) {
  json j;
  j["k"] = a.k;
  json t = json::object();
  for (const auto& [id, tiling] : a.tilings) t[id] = tiling.str();
  j["tilings"] = t;
  return j;
}

TilingAssignment assignment_from_json(const json& j) {
  TilingAssignment a;
  a.k = j.at("k").get<int>();
  for (const auto& [id, t] : j.at("tilings").items()) {
    a.tilings[id] = Tiling::parse(t.get<std::string>());
    if (a.tilings[id].k() != a.k)
      fail("tiling for " + id + " does not have " + std::to_string(a.k) + " cuts");
  }
  return a;
}

TilingAssignment load_assignment(const DataflowGraph& g, const std::string& file,
                                 const std::string& preset, int devices) {
  if (!file.empty()) {
    json j = json::parse(read_file(file));
    return assignment_from_json(j);
  }
  if (preset.empty()) fail("need --assignment or --preset");
  return preset_assignment(g, preset_from_string(preset), parse_devices(devices));
}

json cost_report_json(const CostReport& r) {
  json j;
  json rows = json::array();
  for (const auto& p : r.per_op)
    rows.push_back({{"op", p.op_id},
                    {"elements", p.elements},
                    {"bytes", p.bytes},
                    {"form", p.chosen_form}});
  j["per_op"] = rows;
  j["total_elements"] = r.total_elements;
  j["total_bytes"] = r.total_bytes;
  return j;
}

int run(int argc, char** argv) {
  CLI::App app{"tensor tiling planner and communication simulator"};
  app.require_subcommand(1);

  // ---- gen ----
  auto* gen = app.add_subcommand("gen", "generate a dataflow graph");
  std::string gen_model = "mlp", gen_dims, gen_image, gen_filter, gen_channels, gen_out;
  int gen_batch = 16;
  bool gen_backward = false, gen_update = false;
  double gen_lr = 0.01;
  gen->add_option("--model", gen_model, "mlp or cnn")->check(CLI::IsMember({"mlp", "cnn"}));
  gen->add_option("--batch", gen_batch, "batch size");
  gen->add_option("--dims", gen_dims, "mlp layer widths d0,d1,...,dL");
  gen->add_option("--image", gen_image, "cnn input HxW");
  gen->add_option("--channels", gen_channels, "cnn channels c0,c1,...,cL");
  gen->add_option("--filter", gen_filter, "cnn filter HxW");
  gen->add_flag("--backward", gen_backward, "emit gradient ops");
  gen->add_flag("--update", gen_update, "emit weight update ops (mlp)");
  gen->add_option("--lr", gen_lr, "update step size");
  gen->add_option("-o,--out", gen_out, "output file (default stdout)");

  // ---- optimize ----
  auto* opt = app.add_subcommand("optimize", "search a k-cut tiling assignment");
  std::string opt_graph, opt_out;
  int opt_devices = 2;
  opt->add_option("--graph", opt_graph, "graph file")->required();
  opt->add_option("--devices", opt_devices, "device count (power of two)")->required();
  opt->add_option("-o,--out", opt_out, "output file (default stdout)");

  // ---- cost ----
  auto* cost = app.add_subcommand("cost", "price an assignment on a graph");
  std::string cost_graph, cost_assignment, cost_preset, cost_out;
  int cost_devices = 0;
  cost->add_option("--graph", cost_graph, "graph file")->required();
  cost->add_option("--assignment", cost_assignment, "assignment file");
  cost->add_option("--preset", cost_preset, "data, model, or hybrid");
  cost->add_option("--devices", cost_devices, "device count for --preset");
  cost->add_option("-o,--out", cost_out, "output file (default stdout)");

  // ---- compare ----
  auto* cmp = app.add_subcommand("compare", "preset strategies vs the optimizer");
  std::string cmp_graph, cmp_out;
  int cmp_devices = 2;
  cmp->add_option("--graph", cmp_graph, "graph file")->required();
  cmp->add_option("--devices", cmp_devices, "device count (power of two)")->required();
  cmp->add_option("-o,--out", cmp_out, "output file (default stdout)");

  // ---- refcost ----
  auto* ref = app.add_subcommand("refcost", "closed-form strategy transfer volumes");
  int ref_layers = 1, ref_width = 0, ref_batch = 0, ref_devices = 0, ref_groups = 4,
      ref_dtype = 4;
  std::string ref_strategy = "data", ref_out;
  ref->add_option("--layers", ref_layers)->required();
  ref->add_option("--width", ref_width)->required();
  ref->add_option("--batch", ref_batch)->required();
  ref->add_option("--devices", ref_devices)->required();
  ref->add_option("--strategy", ref_strategy, "data, model, or hybrid")
      ->check(CLI::IsMember({"data", "model", "hybrid"}));
  ref->add_option("--groups", ref_groups, "hybrid group count");
  ref->add_option("--dtype-bytes", ref_dtype);
  ref->add_option("-o,--out", ref_out, "output file (default stdout)");

  // ---- plan ----
  auto* plan = app.add_subcommand("plan", "rewrite a graph into per-device steps");
  std::string plan_graph, plan_assignment, plan_preset, plan_hierarchy, plan_out, plan_dot;
  int plan_devices = 0;
  plan->add_option("--graph", plan_graph, "graph file")->required();
  plan->add_option("--assignment", plan_assignment, "assignment file");
  plan->add_option("--preset", plan_preset, "data, model, or hybrid");
  plan->add_option("--devices", plan_devices, "device count for --preset");
  plan->add_option("--hierarchy", plan_hierarchy, "hierarchy file")->required();
  plan->add_option("-o,--out", plan_out, "plan file (default stdout)");
  plan->add_option("--dot", plan_dot, "also write a graphviz rendering");

  // ---- simulate ----
  auto* sim = app.add_subcommand("simulate", "traffic and timing of a plan");
  std::string sim_plan, sim_hierarchy, sim_out;
  bool sim_check = false;
  std::uint64_t sim_seed = 1;
  sim->add_option("--plan", sim_plan, "plan file")->required();
  sim->add_option("--hierarchy", sim_hierarchy, "hierarchy file")->required();
  sim->add_flag("--check-numerics", sim_check, "execute the plan and compare to a dense run");
  sim->add_option("--seed", sim_seed, "input seed for --check-numerics");
  sim->add_option("-o,--out", sim_out, "output file (default stdout)");

  // ---- oracle ----
  auto* oracle = app.add_subcommand("oracle", "independent reference computations");
  auto* oconv = oracle->add_subcommand("conv-cost", "conversion cost by element enumeration");
  std::string oc_src, oc_dst, oc_shape, oc_out;
  oconv->add_option("--src", oc_src, "source tiling or state (e.g. 'R', 'red', 'R red')")
      ->required();
  oconv->add_option("--dst", oc_dst, "destination tiling")->required();
  oconv->add_option("--shape", oc_shape, "tensor shape, e.g. 4x4")->required();
  oconv->add_option("-o,--out", oc_out, "output file (default stdout)");
  auto* osearch = oracle->add_subcommand("search", "exhaustive assignment search");
  std::string os_graph, os_out;
  int os_devices = 2;
  osearch->add_option("--graph", os_graph, "graph file")->required();
  osearch->add_option("--devices", os_devices, "device count (power of two)")->required();
  osearch->add_option("-o,--out", os_out, "output file (default stdout)");
  oracle->require_subcommand(1);

  CLI11_PARSE(app, argc, argv);

  if (gen->parsed()) {
    DataflowGraph g;
    if (gen_model == "mlp") {
      if (gen_dims.empty()) fail("mlp generation needs --dims");
      MlpConfig c;
      c.batch = gen_batch;
      c.dims = parse_dims(gen_dims, ',');
      c.with_backward = gen_backward || gen_update;
      c.with_update = gen_update;
      c.learning_rate = gen_lr;
      g = gen_mlp(c);
    } else {
      if (gen_image.empty() || gen_channels.empty() || gen_filter.empty())
        fail("cnn generation needs --image, --channels, and --filter");
      Shape img = parse_dims(gen_image, 'x');
      Shape flt = parse_dims(gen_filter, 'x');
      Shape ch = parse_dims(gen_channels, ',');
      if (img.size() != 2 || flt.size() != 2) fail("--image and --filter must be HxW");
      g = gen_cnn(gen_batch, {img[0], img[1]}, ch, {flt[0], flt[1]}, gen_backward);
    }
    validate_and_infer(g);
    write_output(gen_out, serialize_graph(g));
    return 0;
  }

  if (opt->parsed()) {
    DataflowGraph g = parse_graph(read_file(opt_graph));
    validate_and_infer(g);
    int k = parse_devices(opt_devices);
    KCutResult r = kcuts(g, k);
    TheoremCheck tc = verify_theorems(r);
    CostReport flat = graph_cost(g, r.assignment);
    json j = assignment_to_json(r.assignment);
    j["per_cut_costs"] = r.per_cut;
    j["recursion_total_elements"] = r.total;
    j["flat_total_elements"] = flat.total_elements;
    j["flat_total_bytes"] = flat.total_bytes;
    j["identity_ok"] = tc.total_ok;
    j["greedy_ok"] = tc.greedy_ok;
    if (!tc.detail.empty()) j["theorem_detail"] = tc.detail;
    write_output(opt_out, j.dump(2) + "\n");
    return 0;
  }

  if (cost->parsed()) {
    DataflowGraph g = parse_graph(read_file(cost_graph));
    validate_and_infer(g);
    TilingAssignment a = load_assignment(g, cost_assignment, cost_preset, cost_devices);
    CostReport r = graph_cost(g, a);
    json j = cost_report_json(r);
    j["k"] = a.k;
    write_output(cost_out, j.dump(2) + "\n");
    return 0;
  }

  if (cmp->parsed()) {
    DataflowGraph g = parse_graph(read_file(cmp_graph));
    validate_and_infer(g);
    int k = parse_devices(cmp_devices);
    json rows = json::array();
    std::int64_t data_bytes = -1;
    auto add_row = [&](const std::string& name, const TilingAssignment& a) {
      CostReport r = graph_cost(g, a);
      json row{{"strategy", name},
               {"total_elements", r.total_elements},
               {"total_bytes", r.total_bytes}};
      if (name == "data") data_bytes = r.total_bytes;
      if (data_bytes > 0)
        row["savings_vs_data_pct"] =
            100.0 * (double)(data_bytes - r.total_bytes) / (double)data_bytes;
      rows.push_back(row);
    };
    add_row("data", preset_assignment(g, PresetKind::data, k));
    add_row("model", preset_assignment(g, PresetKind::model, k));
    if (k >= 2) add_row("hybrid", preset_assignment(g, PresetKind::hybrid, k));
    KCutResult r = kcuts(g, k);
    add_row("optimized", r.assignment);
    json j;
    j["devices"] = cmp_devices;
    j["k"] = k;
    j["rows"] = rows;
    write_output(cmp_out, j.dump(2) + "\n");
    return 0;
  }

  if (ref->parsed()) {
    RefStrategy s = ref_strategy == "data"    ? RefStrategy::data
                    : ref_strategy == "model" ? RefStrategy::model
                                              : RefStrategy::hybrid;
    RefCost r = reference_strategy_cost(ref_layers, ref_width, ref_batch, ref_devices,
                                        ref_dtype, s, ref_groups);
    json j{{"strategy", ref_strategy}, {"layers", ref_layers},   {"width", ref_width},
           {"batch", ref_batch},       {"devices", ref_devices}, {"dtype_bytes", ref_dtype},
           {"total_bytes", r.total_bytes}, {"megabytes", r.megabytes}};
    if (ref_strategy == "hybrid") j["groups"] = ref_groups;
    if (s != RefStrategy::data) {
      RefCost base = reference_strategy_cost(ref_layers, ref_width, ref_batch, ref_devices,
                                             ref_dtype, RefStrategy::data, ref_groups);
      j["savings_vs_data_pct"] =
          100.0 * (double)(base.total_bytes - r.total_bytes) / (double)base.total_bytes;
    }
    if (s == RefStrategy::hybrid) {
      RefCost m = reference_strategy_cost(ref_layers, ref_width, ref_batch, ref_devices,
                                          ref_dtype, RefStrategy::model, ref_groups);
      j["savings_vs_model_pct"] =
          100.0 * (double)(m.total_bytes - r.total_bytes) / (double)m.total_bytes;
    }
    write_output(ref_out, j.dump(2) + "\n");
    return 0;
  }

  if (plan->parsed()) {
    DataflowGraph g = parse_graph(read_file(plan_graph));
    validate_and_infer(g);
    TilingAssignment a = load_assignment(g, plan_assignment, plan_preset, plan_devices);
    DeviceHierarchy h = parse_hierarchy(read_file(plan_hierarchy));
    PlacementMap pm = place_k(a.k, h);
    for (const auto& w : pm.warnings) std::cerr << "warning: " << w << "\n";
    ExecutionPlan p = build_execution_graph(g, a, pm);
    write_output(plan_out, export_plan(p));
    if (!plan_dot.empty()) write_output(plan_dot, export_dot(p));
    return 0;
  }

  if (sim->parsed()) {
    ExecutionPlan p = parse_plan(read_file(sim_plan));
    DeviceHierarchy h = parse_hierarchy(read_file(sim_hierarchy));
    TrafficReport t = simulate_traffic(p, h);
    json j;
    j["total_bytes"] = t.total_bytes;
    j["est_seconds"] = t.est_seconds;
    json levels = json::array();
    for (std::size_t l = 0; l < h.levels.size(); ++l)
      levels.push_back({{"label", h.levels[l].label}, {"bytes", t.level_bytes[l]}});
    j["per_level"] = levels;
    json devs = json::array();
    for (std::size_t d = 0; d < t.device_in.size(); ++d)
      devs.push_back({{"device", d}, {"in", t.device_in[d]}, {"out", t.device_out[d]}});
    j["per_device"] = devs;
    json phases = json::array();
    for (const auto& ph : t.phases)
      if (ph.bytes > 0)
        phases.push_back({{"phase", ph.phase}, {"bytes", ph.bytes}, {"seconds", ph.seconds}});
    j["phases"] = phases;
    if (sim_check) {
      NumericCheck nc = execute_numeric(p, sim_seed);
      j["numeric"] = {{"seed", nc.seed},
                      {"values", nc.values},
                      {"max_abs", nc.max_abs},
                      {"max_rel", nc.max_rel},
                      {"pass", nc.max_rel <= 1e-12}};
    }
    write_output(sim_out, j.dump(2) + "\n");
    return 0;
  }

  if (oconv->parsed()) {
    Shape shape = parse_dims(oc_shape, 'x');
    TilingState src = TilingState::parse(oc_src);
    Tiling dst = Tiling::parse(oc_dst);
    if (dst.k() != src.k()) fail("--src and --dst must have the same cut count");
    std::int64_t got = element_conversion_cost(src, dst, shape, src.k());
    std::int64_t closed = state_conversion_cost(src, dst, shape, src.k());
    json j{{"src", src.str()},  {"dst", dst.str()},           {"k", src.k()},
           {"elements", got},   {"closed_form", closed},      {"agree", got == closed}};
    write_output(oc_out, j.dump(2) + "\n");
    return 0;
  }

  if (osearch->parsed()) {
    DataflowGraph g = parse_graph(read_file(os_graph));
    validate_and_infer(g);
    int k = parse_devices(os_devices);
    BruteForceResult r = brute_force_tiling(g, k);
    json j = assignment_to_json(r.witness);
    j["total_elements"] = r.cost;
    j["evaluated"] = r.evaluated;
    write_output(os_out, j.dump(2) + "\n");
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
