#include "metachem/cli.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "metachem/dot.hpp"
#include "metachem/engine.hpp"
#include "metachem/errors.hpp"
#include "metachem/ja.hpp"
#include "metachem/nested.hpp"
#include "metachem/snapshot.hpp"
#include "metachem/stringcat.hpp"
#include "metachem/swarm.hpp"

namespace metachem::cli {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Config, "cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Config, "cannot write " + path);
  out << text;
}

const std::map<std::string, GraphDef (*)()>& builders() {
  static const std::map<std::string, GraphDef (*)()> map = {
      {"stringcat-macro-open", +[] { return stringcat::build_macro(true); }},
      {"stringcat-macro-terminating", +[] { return stringcat::build_macro(false); }},
      {"stringcat-micro-process", +[] { return stringcat::build_micro_process(); }},
      {"stringcat-runnable-open", +[] { return stringcat::build_runnable(true); }},
      {"stringcat-runnable-terminating", +[] { return stringcat::build_runnable(false); }},
      {"ja-macro", +[] { return ja::build_macro(); }},
      {"ja-runnable", +[] { return ja::build_runnable(); }},
      {"swarm-macro", +[] { return swarm::build_macro(true); }},
      {"swarm-macro-no-collisions", +[] { return swarm::build_macro(false); }},
      {"swarm-flock-micro", +[] { return swarm::build_flock_micro(); }},
      {"nested-macro", +[] { return nested::build_macro(); }},
      {"nested-variant-I", +[] { return nested::build_variant(nested::Variant::I); }},
      {"nested-variant-II", +[] { return nested::build_variant(nested::Variant::II); }},
      {"nested-variant-III", +[] { return nested::build_variant(nested::Variant::III); }},
      {"nested-variant-IV", +[] { return nested::build_variant(nested::Variant::IV); }},
      {"nested-variant-V", +[] { return nested::build_variant(nested::Variant::V); }},
      {"nested-variant-VI", +[] { return nested::build_variant(nested::Variant::VI); }},
      {"nested-variant-VII", +[] { return nested::build_variant(nested::Variant::VII); }},
      {"nested-variant-VIII", +[] { return nested::build_variant(nested::Variant::VIII); }},
  };
  return map;
}

struct Prepared {
  GraphDef graph;
  BehaviorSet behaviors;
  SystemState state;
  bool frames = false;
  NodeId frame_load;   // first frame right after this node loads the flock
  NodeId frame_move;   // later frames after each synchronous move
  NodeId frame_env;
  std::string frame_var;
  std::string label;    // summary-line name
  std::string mapping;  // composition runs record the parameter map
};

Prepared prepare(const RunOptions& opt, const ConfigDoc& doc) {
  Prepared p;
  p.label = opt.chemistry;
  if (opt.chemistry == "stringcat") {
    stringcat::Config cfg = stringcat::Config::from(doc);
    if (opt.steps >= 0) cfg.time_bound = opt.steps;
    p.graph = stringcat::build_runnable(opt.open_ended);
    p.behaviors = stringcat::behaviors(cfg, opt.open_ended);
    p.state = stringcat::initial_state(p.graph, cfg);
    return p;
  }
  if (opt.chemistry == "ja") {
    ja::Config cfg = ja::Config::from(doc);
    if (opt.steps >= 0) cfg.time_bound = opt.steps;
    cfg.check();
    p.graph = ja::build_runnable();
    p.behaviors = ja::behaviors(cfg);
    p.state = ja::initial_state(p.graph, cfg, opt.seed);
    return p;
  }
  if (opt.chemistry == "swarm") {
    swarm::Config cfg = swarm::Config::from(doc);
    if (opt.steps >= 0) cfg.steps = opt.steps;
    cfg.check();
    if (opt.recipe_path.empty())
      throw Error(ErrorCode::Config, "swarm needs --recipe <file>");
    auto recipe = swarm::parse_recipe(read_file(opt.recipe_path));
    p.graph = swarm::build_macro(cfg.collisions);
    p.behaviors = swarm::behaviors(cfg);
    p.state = swarm::initial_state(p.graph, cfg, recipe, opt.seed);
    p.frames = true;
    p.frame_load = NodeId{NodeKind::Sampler, "load"};
    p.frame_move = NodeId{NodeKind::Action, "move"};
    p.frame_env = swarm::kTimeEnv;
    p.frame_var = "generation";
    return p;
  }
  if (opt.chemistry == "nested") {
    nested::Variant var = nested::variant_from(opt.variant);
    p.label = "nested variant " + nested::to_string(var);
    nested::Config ncfg;
    ncfg.ja_cfg = ja::Config::from(doc);
    ncfg.swarm_cfg = swarm::Config::from(doc);
    if (opt.steps >= 0) {
      ncfg.swarm_cfg.steps = opt.steps;
      ncfg.ja_cfg.time_bound = opt.steps;
    }
    std::vector<std::pair<std::int64_t, swarm::Params>> recipe;
    if (var <= nested::Variant::IV) {
      if (opt.recipe_path.empty())
        throw Error(ErrorCode::Config,
                    "nested variant " + nested::to_string(var) + " needs --recipe <file>");
      recipe = swarm::parse_recipe(read_file(opt.recipe_path));
    }
    if ((var == nested::Variant::I || var == nested::Variant::II) && !doc.has("ja", "tanks")) {
      std::int64_t population = 0;
      for (const auto& [count, params] : recipe) population += count;
      ncfg.ja_cfg.tanks = population;  // tank i pairs with boid i
    }
    ncfg.mapping =
        nested::Mapping::from(doc, static_cast<double>(ncfg.ja_cfg.atoms_per_tank));
    nested::Config eff = nested::effective(var, ncfg);
    eff.ja_cfg.check();
    eff.swarm_cfg.check();
    p.graph = nested::build_variant(var);
    p.behaviors = nested::behaviors(var, ncfg);
    p.state = nested::initial_state(var, p.graph, ncfg, recipe, opt.seed);
    if (var <= nested::Variant::IV) {
      p.frames = true;
      p.frame_move = NodeId{NodeKind::Action, "move"};
      if (var <= nested::Variant::II) {
        p.frame_load = NodeId{NodeKind::Sampler, "load_swarm"};
        p.frame_env = nested::kTime;
        p.frame_var = "time";
      } else {
        p.frame_load = NodeId{NodeKind::Sampler, "load"};
        p.frame_env = swarm::kTimeEnv;
        p.frame_var = "generation";
      }
    }
    if (var <= nested::Variant::II) p.mapping = ncfg.mapping.describe();
    return p;
  }
  throw Error(ErrorCode::Config, "unknown chemistry: " + opt.chemistry +
                                     " (expected stringcat, ja, swarm or nested)");
}

}  // namespace

int cmd_validate(const std::string& graph_file, std::ostream& out, std::ostream& err) {
  std::string text;
  try {
    text = read_file(graph_file);
  } catch (const Error& e) {
    err << e.what() << "\n";
    return 2;
  }
  GraphDef g;
  try {
    g = parse_graph(text);
  } catch (const ParseError& e) {
    err << graph_file << ": " << e.what() << "\n";
    return 2;
  }
  auto violations = validate(g);
  int hard = 0, warnings = 0;
  for (const auto& v : violations) {
    out << v.str() << "\n";
    (v.severity == Severity::Hard ? hard : warnings)++;
  }
  out << graph_file << ": " << g.controls().size() << " controls, " << g.containers().size()
      << " containers, " << hard << " hard violations, " << warnings << " warnings\n";
  return hard > 0 ? 1 : 0;
}

int cmd_run(const RunOptions& opt, std::ostream& out, std::ostream& err) {
  try {
    ConfigDoc doc;
    if (!opt.config_path.empty()) doc = ConfigDoc::load_file(opt.config_path);
    Prepared p = prepare(opt, doc);
    p.behaviors.check_bindings(p.graph);
    Engine engine(p.graph, p.behaviors, opt.seed);

    std::string log_path = opt.log_out.empty() ? opt.chemistry + "_log.jsonl" : opt.log_out;
    std::string snap_path =
        opt.snapshot_out.empty() ? opt.chemistry + "_snapshot.json" : opt.snapshot_out;
    std::string frames_path =
        opt.frames_out.empty() ? opt.chemistry + "_frames.csv" : opt.frames_out;

    std::ofstream log(log_path, std::ios::binary);
    if (!log) throw Error(ErrorCode::Config, "cannot write " + log_path);
    log << "{\"meta\":{\"chemistry\":\"" << opt.chemistry << "\"";
    if (opt.chemistry == "nested")
      log << ",\"variant\":\"" << nested::to_string(nested::variant_from(opt.variant)) << "\"";
    log << ",\"seed\":" << opt.seed;
    if (!p.mapping.empty()) log << ",\"mapping\":\"" << p.mapping << "\"";
    log << "}}\n";

    std::string frames;
    if (p.frames) frames = swarm::frames_csv_header();
    SystemState& st = p.state;
    auto t0 = std::chrono::steady_clock::now();
    RunResult rr = engine.run(st, opt.max_transitions, [&](const TransitionEvent& e) {
      log << e.jsonl() << '\n';
      if (!p.frames) return;
      if (e.node == p.frame_load) {
        swarm::append_frames_csv(frames, 0, st.read_particles(swarm::kN));
      } else if (e.node == p.frame_move) {
        EnvStore env = st.read_env(p.frame_env);
        auto it = env.find(p.frame_var);
        std::int64_t step = it == env.end() ? 0 : static_cast<std::int64_t>(it->second.number());
        if (opt.frames_every > 0 && step % opt.frames_every == 0)
          swarm::append_frames_csv(frames, step, st.read_particles(swarm::kN));
      }
    });
    std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - t0;

    write_file(snap_path, snapshot_json(st));
    if (p.frames) write_file(frames_path, frames);

    out << p.label << ": transitions=" << rr.transitions
        << " halted=" << (rr.halted ? "yes" : "no") << " particles=" << st.total_particles()
        << " seed=" << opt.seed << " elapsed=" << std::fixed << std::setprecision(3)
        << elapsed.count() << "s\n";
    out << "wrote " << log_path << ", " << snap_path;
    if (p.frames) out << ", " << frames_path;
    out << "\n";
    if (!p.mapping.empty()) out << "mapping: " << p.mapping << "\n";
    return 0;
  } catch (const ParseError& e) {
    err << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << e.what() << "\n";
    return 1;
  }
}

int cmd_enumerate_atoms(const std::string& csv_out, std::ostream& out, std::ostream& err) {
  try {
    auto t0 = std::chrono::steady_clock::now();
    std::vector<ja::Mat3> atoms = ja::enumerate_atoms();
    ja::Census c = ja::census(atoms);
    std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - t0;
    out << "candidate matrices: " << c.candidates << " (3 diagonal slots x 3 values, 3 upper"
        << " slots x 9 values = 19683)\n";
    std::int64_t delta = c.atoms - 14574;
    out << "atoms (nonzero trace): " << c.atoms << ", reference count 14574, delta "
        << (delta >= 0 ? "+" : "") << delta << "\n";
    out << "eigenvalue classes: " << c.classes << " (reference 66)\n";
    out << "elapsed: " << std::fixed << std::setprecision(3) << elapsed.count() << "s\n";
    if (!csv_out.empty()) {
      write_file(csv_out, ja::census_csv(c));
      out << "class table: " << csv_out << "\n";
    }
    return c.classes == 66 ? 0 : 1;
  } catch (const Error& e) {
    err << e.what() << "\n";
    return 1;
  }
}

int cmd_export_dot(const std::string& graph_file, const std::string& out_path,
                   std::ostream& out, std::ostream& err) {
  try {
    GraphDef g = parse_graph(read_file(graph_file));
    std::string name = graph_file;
    if (auto slash = name.find_last_of('/'); slash != std::string::npos)
      name = name.substr(slash + 1);
    if (auto dot = name.find('.'); dot != std::string::npos) name = name.substr(0, dot);
    std::string rendered = to_dot(g, name.empty() ? "metachem" : name);
    if (out_path.empty())
      out << rendered;
    else {
      write_file(out_path, rendered);
      out << "wrote " << out_path << "\n";
    }
    return 0;
  } catch (const ParseError& e) {
    err << graph_file << ": " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << e.what() << "\n";
    return 1;
  }
}

int cmd_emit_graph(const std::string& name, const std::string& out_path, std::ostream& out,
                   std::ostream& err) {
  auto it = builders().find(name);
  if (it == builders().end()) {
    err << (name.empty() ? "missing graph name" : "unknown graph: " + name) << "\navailable:\n";
    for (const auto& [key, fn] : builders()) err << "  " << key << "\n";
    return 2;
  }
  try {
    std::string text = serialize_graph(it->second());
    if (out_path.empty())
      out << text;
    else {
      write_file(out_path, text);
      out << "wrote " << out_path << "\n";
    }
    return 0;
  } catch (const Error& e) {
    err << e.what() << "\n";
    return 1;
  }
}

int main_entry(int argc, const char* const* argv) {
  CLI::App app{"static-graph artificial chemistry runtime"};
  app.require_subcommand(1);

  auto* val = app.add_subcommand("validate", "check a graph file against the static rules");
  std::string val_file;
  val->add_option("graph", val_file, "graph file")->required();

  RunOptions opt;
  auto* run = app.add_subcommand("run", "run a chemistry and write log, snapshot and frames");
  run->add_option("chemistry", opt.chemistry, "stringcat | ja | swarm | nested")->required();
  run->add_option("--seed", opt.seed, "root random seed");
  run->add_option("--max-transitions", opt.max_transitions, "stop after this many (0 = no cap)");
  run->add_option("--steps", opt.steps, "override the run's time bound");
  run->add_option("--variant", opt.variant, "nested variant I..VIII");
  run->add_option("--recipe", opt.recipe_path, "boid recipe file");
  run->add_option("--frames-every", opt.frames_every, "frame sampling stride");
  run->add_option("--frames-out", opt.frames_out, "frames CSV path");
  run->add_option("--log-out", opt.log_out, "event log path (jsonl)");
  run->add_option("--snapshot-out", opt.snapshot_out, "final state path (json)");
  run->add_option("--config", opt.config_path, "config file");
  run->add_flag("--open-ended", opt.open_ended, "stringcat: run the non-halting loop");

  auto* enumerate = app.add_subcommand("enumerate-atoms", "enumerate the matrix atom set");
  std::string csv_out;
  enumerate->add_option("--csv-out", csv_out, "write the eigenvalue class table as CSV");

  auto* dotc = app.add_subcommand("export-dot", "render a graph file as Graphviz");
  std::string dot_file, dot_out;
  dotc->add_option("graph", dot_file, "graph file")->required();
  dotc->add_option("--out", dot_out, "output path (default stdout)");

  auto* emit = app.add_subcommand("emit-graph", "serialize a built-in graph");
  std::string emit_name, emit_out;
  emit->add_option("name", emit_name, "built-in graph name (run without one to list)");
  emit->add_option("--out", emit_out, "output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (val->parsed()) return cmd_validate(val_file, std::cout, std::cerr);
  if (run->parsed()) return cmd_run(opt, std::cout, std::cerr);
  if (enumerate->parsed()) return cmd_enumerate_atoms(csv_out, std::cout, std::cerr);
  if (dotc->parsed()) return cmd_export_dot(dot_file, dot_out, std::cout, std::cerr);
  if (emit->parsed()) return cmd_emit_graph(emit_name, emit_out, std::cout, std::cerr);
  return 2;
}

}  // namespace metachem::cli
