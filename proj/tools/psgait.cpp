// psgait: run closed-loop walking scenarios and parameter sweeps.

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "psgait/scenario_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace psgait;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SourceOptions {
  std::string scenario_path;
  std::string preset_name;
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha;
  std::optional<int> horizon;
  std::optional<std::string> pslip;
  std::vector<std::string> pushes;
  std::vector<std::string> overrides;
};

void add_source_options(CLI::App* cmd, SourceOptions& o) {
  auto* scen = cmd->add_option("--scenario", o.scenario_path, "Scenario JSON file");
  auto* pre = cmd->add_option("--preset", o.preset_name, "Built-in scenario (see `presets`)");
  scen->excludes(pre);
  cmd->add_option("--seed", o.seed, "Terrain random seed");
  cmd->add_option("--alpha", o.alpha, "CAM blending factor in [0, 1]");
  cmd->add_option("--horizon", o.horizon, "MPC horizon in steps");
  cmd->add_option("--pslip", o.pslip, "Slope-transition compensation")->check(CLI::IsMember({"on", "off"}));
  cmd->add_option("--push", o.pushes, "Extra push, e.g. t=6,fx=-50,dur=0.3 (repeatable)");
  cmd->add_option("--override", o.overrides, "Set a config key, e.g. sim.max_steps=20 (repeatable)");
}

// Base document with the command-line adjustments applied, not yet validated.
json base_document(const SourceOptions& o) {
  ScenarioFile file;
  if (!o.scenario_path.empty()) {
    file = load_scenario(o.scenario_path);
  } else if (!o.preset_name.empty()) {
    file = preset(o.preset_name);
  } else {
    throw ConfigError("one of --scenario or --preset is required");
  }
  json doc = to_json(file);
  if (o.seed) doc["scenario"]["seed"] = *o.seed;
  if (o.alpha) doc["scenario"]["alpha"] = *o.alpha;
  if (o.horizon) doc["planner"]["horizon"] = *o.horizon;
  if (o.pslip) doc["scenario"]["pslip_enabled"] = (*o.pslip == "on");
  for (const auto& text : o.pushes) {
    const Push p = parse_push(text);
    doc["scenario"]["pushes"].push_back(
        {{"t", p.t_start}, {"force", {p.force.x(), p.force.y(), p.force.z()}}, {"duration", p.duration}});
  }
  for (const auto& ov : o.overrides) apply_override(doc, ov);
  return doc;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory '" + dir.string() + "'");
}

SimTrace execute(const ScenarioFile& file, const fs::path& out_dir) {
  SimTrace trace = run_closed_loop(file.scenario, file.sim, file.params, file.planner);
  ensure_dir(out_dir);
  std::ostringstream tr, ev;
  write_trace_csv(tr, trace);
  write_events_csv(ev, trace);
  write_file(out_dir / "trace.csv", tr.str());
  write_file(out_dir / "events.csv", ev.str());
  write_file(out_dir / "summary.json", summary_json(trace, file).dump(2) + "\n");
  return trace;
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* what) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::istringstream is(item);
    T v{};
    if (!(is >> v) || !is.eof()) throw ConfigError(std::string("bad value in ") + what + ": '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError(std::string("empty list for ") + what);
  return out;
}

// "1..10" or "1,4,9"
std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  const auto dots = text.find("..");
  if (dots == std::string::npos) return parse_list<std::uint64_t>(text, "--seeds");
  const auto lo = parse_list<std::uint64_t>(text.substr(0, dots), "--seeds");
  const auto hi = parse_list<std::uint64_t>(text.substr(dots + 2), "--seeds");
  if (lo.size() != 1 || hi.size() != 1 || hi[0] < lo[0]) throw ConfigError("bad seed range '" + text + "'");
  std::vector<std::uint64_t> out;
  for (auto s = lo[0]; s <= hi[0]; ++s) out.push_back(s);
  return out;
}

struct SweepPoint {
  std::string label;
  double alpha;
  bool pslip;
  std::uint64_t seed;
  std::optional<double> zdist;
  ScenarioFile file;
};

struct SweepResult {
  Metrics metrics;
  std::string error;
};

int cmd_run(const SourceOptions& o, const std::string& out) {
  const ScenarioFile file = scenario_from_json(base_document(o));
  const SimTrace trace = execute(file, out);
  const Metrics& m = trace.metrics;
  std::printf("%s: steps=%d fell=%s e_avg=%.4f m e_max=%.4f m solves=%d mean_solve=%.1f us\n",
              file.scenario.name.c_str(), m.steps_completed, m.fell ? "true" : "false", m.e_avg,
              m.e_max, m.solves, m.solve_mean_us);
  for (const auto& w : trace.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  return 0;
}

int cmd_compare(const SourceOptions& o, const std::string& out, const std::string& alphas_text,
                const std::string& pslip_text, const std::string& seeds_text,
                const std::string& zdist_text, int jobs) {
  const json base = base_document(o);
  const ScenarioFile base_file = scenario_from_json(base);

  const std::vector<double> alphas =
      alphas_text.empty() ? std::vector<double>{base_file.scenario.alpha} : parse_list<double>(alphas_text, "--alphas");
  std::vector<bool> pslips;
  if (pslip_text.empty()) {
    pslips.push_back(base_file.scenario.pslip_enabled);
  } else {
    std::stringstream ss(pslip_text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item != "on" && item != "off") throw ConfigError("--pslip-sweep expects on/off, got '" + item + "'");
      pslips.push_back(item == "on");
    }
  }
  const std::vector<std::uint64_t> seeds =
      seeds_text.empty() ? std::vector<std::uint64_t>{base_file.scenario.seed} : parse_seeds(seeds_text);
  std::vector<std::optional<double>> zdists{std::nullopt};
  if (!zdist_text.empty()) {
    zdists.clear();
    for (double h : parse_list<double>(zdist_text, "--zdist")) zdists.emplace_back(h);
  }

  std::vector<SweepPoint> points;
  for (const auto& h : zdists)
    for (bool ps : pslips)
      for (double a : alphas)
        for (auto seed : seeds) {
          json doc = base;
          doc["scenario"]["alpha"] = a;
          doc["scenario"]["pslip_enabled"] = ps;
          doc["scenario"]["seed"] = seed;
          if (h) {
            doc["scenario"]["elevation"]["pattern"] = "random";
            doc["scenario"]["elevation"]["amplitude"] = *h;
          }
          char label[96];
          std::snprintf(label, sizeof label, "run_%03zu", points.size());
          points.push_back({label, a, ps, seed, h, scenario_from_json(doc)});
        }

  ensure_dir(out);
  std::vector<SweepResult> results(points.size());
  std::atomic<std::size_t> next{0};
  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(points.size())));
  auto worker = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++) {
      try {
        results[i].metrics = execute(points[i].file, fs::path(out) / points[i].label).metrics;
      } catch (const std::exception& ex) {
        results[i].error = ex.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  std::ostringstream csv;
  csv << "run,alpha,pslip,seed,zdist,e_avg,e_max,steps_completed,fell,dcm_prediction_error\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    if (!results[i].error.empty()) throw IoError(p.label + ": " + results[i].error);
    const Metrics& m = results[i].metrics;
    csv << p.label << ',' << format_number(p.alpha) << ',' << (p.pslip ? "on" : "off") << ','
        << p.seed << ',' << (p.zdist ? format_number(*p.zdist) : "") << ',' << format_number(m.e_avg)
        << ',' << format_number(m.e_max) << ',' << m.steps_completed << ','
        << (m.fell ? "true" : "false") << ',' << format_number(m.dcm_prediction_error) << '\n';
  }
  write_file(fs::path(out) / "comparison.csv", csv.str());
  std::cout << csv.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stepping-stone walking with slope-aware DCM planning"};
  app.require_subcommand(1);

  SourceOptions run_opts;
  std::string run_out = "out";
  auto* run = app.add_subcommand("run", "Run one closed-loop scenario");
  add_source_options(run, run_opts);
  run->add_option("--out", run_out, "Output directory");

  SourceOptions cmp_opts;
  std::string cmp_out = "out";
  std::string alphas, pslip_sweep, seeds, zdist;
  int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  auto* cmp = app.add_subcommand("compare", "Run a sweep and tabulate the results");
  add_source_options(cmp, cmp_opts);
  cmp->add_option("--out", cmp_out, "Output directory");
  cmp->add_option("--alphas", alphas, "Comma-separated alpha values");
  cmp->add_option("--pslip-sweep", pslip_sweep, "Comma-separated on/off values");
  cmp->add_option("--seeds", seeds, "Seed list (1,2,3) or range (1..10)");
  cmp->add_option("--zdist", zdist, "Random stone-height ranges h for U[-h, h], m");
  cmp->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

  auto* pre = app.add_subcommand("presets", "List built-in scenarios");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) return cmd_run(run_opts, run_out);
    if (*cmp) return cmd_compare(cmp_opts, cmp_out, alphas, pslip_sweep, seeds, zdist, jobs);
    if (*pre) {
      std::cout << describe_presets();
      return 0;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const IoError& e) {
    std::fprintf(stderr, "I/O error: %s\n", e.what());
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  }
  return 0;
}
