// crashloc: command-line driver for crash-stack fault localization.
//
//   crashloc expand     --graph G --stacks S [--depth D] [-o traces.jsonl] [--depth-maps M]
//   crashloc localize   --graph G --stacks S --passing P [options] [-o report.tsv]
//   crashloc evaluate   --truth T (--report [FAULT=]R ... | --reports-dir DIR) [--curve|--avg-cost|--prf]
//   crashloc tune-depth --graph G --stacks S --passing P --truth T [--depths 0..10] [--dmax N]
//   crashloc simulate   --out DIR [generator options] [--seed N]
//
// Exit status: 0 success, 1 empty or degenerate result, 2 input error.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "crashloc/crashloc.hpp"

namespace fs = std::filesystem;
using namespace crashloc;

namespace {

constexpr int kOk = 0;
constexpr int kEmpty = 1;
constexpr int kBadInput = 2;

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(path, 0, "cannot open for reading");
  return in;
}

// Output is buffered and written at once so a failed run leaves no partial file.
void emit(const std::string& path, const std::string& data) {
  if (path == "-") {
    std::cout << data << std::flush;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError(path, 0, "cannot open for writing");
  out << data;
  if (!out.flush()) throw InputError(path, 0, "write failure");
}

struct Inputs {
  EntityTable table;
  CallGraph graph;
  std::vector<StackTrace> stacks;
  std::vector<ExecutionTrace> passing;
};

void load_graph(Inputs& in, const std::string& path) {
  auto f = open_input(path);
  in.graph = read_call_graph(f, in.table, path);
}

void load_stacks(Inputs& in, const std::string& path) {
  auto f = open_input(path);
  in.stacks = read_stacks(f, path);
}

void load_passing(Inputs& in, const std::string& path) {
  auto f = open_input(path);
  in.passing = ingest_passing_traces(f, in.table, path);
}

GroundTruth load_truth(const std::string& path) {
  auto f = open_input(path);
  return read_ground_truth(f, path);
}

bool on_off(const std::string& v) { return v == "on"; }

// "3", "0..10" or "1,3,5".
std::vector<std::uint32_t> parse_depths(const std::string& text) {
  std::vector<std::uint32_t> out;
  auto number = [&](std::string_view s) {
    s = detail::trim(s);
    if (s.empty() || s.find_first_not_of("0123456789") != std::string_view::npos)
      throw InputError("bad depth list '" + text + "'");
    return static_cast<std::uint32_t>(std::stoul(std::string(s)));
  };
  if (const auto dots = text.find(".."); dots != std::string::npos) {
    const auto lo = number(std::string_view(text).substr(0, dots));
    const auto hi = number(std::string_view(text).substr(dots + 2));
    if (lo > hi) throw InputError("empty depth range '" + text + "'");
    for (auto d = lo; d <= hi; ++d) out.push_back(d);
  } else {
    for (auto part : detail::split(text, ',')) out.push_back(number(part));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void check_fault_filename(const std::string& id) {
  if (id.empty() || id == "." || id == ".." || id.find('/') != std::string::npos ||
      id.find('\\') != std::string::npos)
    throw InputError("fault id '" + id + "' cannot be used as a file name");
}

struct Common {
  std::uint32_t depth = 3;
  std::string metric = "ochiai";
  std::string h1 = "on";
  std::string h2 = "on";
  std::string beta_mode = "offset";
  bool strip_params = false;
  bool dedupe = false;
  unsigned threads = 1;

  LocalizeOptions options() const {
    LocalizeOptions o;
    o.depth = depth;
    o.metric = *parse_metric(metric);
    o.use_h1 = on_off(h1);
    o.use_h2 = on_off(h2);
    o.beta_mode = *parse_beta_mode(beta_mode);
    o.match.strip_params = strip_params;
    o.dedupe_stacks = dedupe;
    o.threads = threads == 0 ? 1 : threads;
    return o;
  }
};

void add_depth(CLI::App* cmd, Common& c) {
  cmd->add_option("--depth,-d", c.depth, "Call depth for stack expansion")
      ->envname("CRASHLOC_DEPTH")
      ->capture_default_str();
}

void add_matching(CLI::App* cmd, Common& c) {
  cmd->add_flag("--strip-params", c.strip_params,
                "Match frames by name with any parameter list removed")
      ->envname("CRASHLOC_STRIP_PARAMS");
  cmd->add_flag("--dedupe-stacks", c.dedupe, "Drop stacks repeating an earlier frame sequence")
      ->envname("CRASHLOC_DEDUPE_STACKS");
  cmd->add_option("--threads", c.threads, "Worker threads (output does not depend on it)")
      ->envname("CRASHLOC_THREADS")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

void add_scoring(CLI::App* cmd, Common& c) {
  const CLI::IsMember on_off_values({"on", "off"});
  cmd->add_option("--metric,-m", c.metric, "ochiai, tarantula or jaccard")
      ->envname("CRASHLOC_METRIC")
      ->check(CLI::IsMember({"ochiai", "tarantula", "jaccard"}))
      ->capture_default_str();
  cmd->add_option("--h1", c.h1, "Distance weighting (on/off)")
      ->envname("CRASHLOC_H1")
      ->check(on_off_values)
      ->capture_default_str();
  cmd->add_option("--h2", c.h2, "Passing-coverage adjustment (on/off)")
      ->envname("CRASHLOC_H2")
      ->check(on_off_values)
      ->capture_default_str();
  cmd->add_option("--beta-mode", c.beta_mode, "offset: n/sum(d+1); raw: n/sum(d)")
      ->envname("CRASHLOC_BETA_MODE")
      ->check(CLI::IsMember({"offset", "raw"}))
      ->capture_default_str();
}

void warn_expansion(const ExpansionResult& r) {
  for (const auto& f : r.failures) std::cerr << "warning: stack '" << f.stack_id << "': " << f.message << '\n';
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
}

// ---------------------------------------------------------------- expand

struct ExpandArgs {
  std::string graph, stacks, output = "-", depth_maps;
};

int run_expand(const ExpandArgs& a, const Common& c) {
  Inputs in;
  load_graph(in, a.graph);
  load_stacks(in, a.stacks);
  const auto o = c.options();
  auto stacks = o.dedupe_stacks ? dedupe_stacks(in.stacks) : in.stacks;
  const auto r = expand_all(in.graph, in.table, stacks, o.depth, {o.match, o.threads});
  warn_expansion(r);
  if (r.traces.empty()) {
    std::cerr << "error: no stack trace could be expanded\n";
    return kEmpty;
  }
  std::ostringstream traces;
  write_traces(traces, r.traces, in.table);
  emit(a.output, traces.str());
  if (!a.depth_maps.empty()) {
    std::ostringstream maps;
    write_depth_maps(maps, r.depth_maps, in.table);
    emit(a.depth_maps, maps.str());
  }
  return kOk;
}

// ---------------------------------------------------------------- localize

struct LocalizeArgs {
  std::string graph, stacks, passing, traces, depth_maps, truth, by_fault, output = "-";
};

std::string render(const SuspiciousnessReport& report) {
  std::ostringstream out;
  write_report(out, report);
  if (report.coverage_warning)
    std::cerr << "warning: no passing coverage to average; coverage adjustment left scores unchanged\n";
  return out.str();
}

// Scores failing traces that were expanded earlier by `expand`.
int localize_traces(const LocalizeArgs& a, const Common& c) {
  Inputs in;
  if (!a.graph.empty()) load_graph(in, a.graph);
  std::vector<ExecutionTrace> failing;
  {
    auto f = open_input(a.traces);
    for (auto& t : read_traces(f, in.table, a.traces, TraceLabel::fail)) {
      if (t.label != TraceLabel::fail)
        throw InputError(a.traces, 0, "trace '" + t.trace_id + "' is not a failing trace");
      failing.push_back(std::move(t));
    }
  }
  std::vector<DepthMap> maps;
  if (!a.depth_maps.empty()) {
    auto f = open_input(a.depth_maps);
    maps = read_depth_maps(f, in.table, a.depth_maps);
  }
  load_passing(in, a.passing);
  auto spectra = build_spectra(std::move(failing), std::move(in.passing));
  auto scoring = c.options().scoring();
  if (maps.empty()) scoring.depth.reset();
  emit(a.output, render(score_all(spectra, in.table, scoring, maps)));
  return kOk;
}

int run_localize(const LocalizeArgs& a, const Common& c) {
  if (!a.traces.empty()) return localize_traces(a, c);
  if (a.graph.empty() || a.stacks.empty())
    throw InputError("localize needs --graph and --stacks (or --traces)");
  Inputs in;
  load_graph(in, a.graph);
  load_stacks(in, a.stacks);
  load_passing(in, a.passing);
  const auto o = c.options();

  if (a.by_fault.empty()) {
    const auto loc = localize(in.graph, in.table, in.stacks, in.passing, o);
    warn_expansion(loc.expansion);
    emit(a.output, render(loc.report));
    return kOk;
  }

  if (a.truth.empty()) throw InputError("--by-fault needs --truth to name the faults");
  const auto faults = group_by_fault(in.stacks, load_truth(a.truth));
  fs::create_directories(a.by_fault);
  std::size_t written = 0;
  for (const auto& f : faults) {
    check_fault_filename(f.fault_id);
    if (f.stacks.empty()) {
      std::cerr << "warning: fault '" << f.fault_id << "' has no stacks\n";
      continue;
    }
    try {
      const auto loc = localize(in.graph, in.table, f.stacks, in.passing, o);
      warn_expansion(loc.expansion);
      emit((fs::path(a.by_fault) / (f.fault_id + ".tsv")).string(), render(loc.report));
      ++written;
    } catch (const InputError&) {
      throw;
    } catch (const Error& e) {
      std::cerr << "warning: fault '" << f.fault_id << "': " << e.what() << '\n';
    }
  }
  if (written == 0) {
    std::cerr << "error: no fault produced a report\n";
    return kEmpty;
  }
  return kOk;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string truth, reports_dir, output = "-";
  std::vector<std::string> reports;
  bool curve = false, avg_cost = false, prf = false, normalize = false;
  std::optional<std::uint32_t> depth, d_max;
};

SuspiciousnessReport load_report(const std::string& path) {
  auto f = open_input(path);
  return read_report(f, path);
}

std::vector<FaultOutcome> collect_outcomes(const EvaluateArgs& a, const GroundTruth& truth) {
  std::map<std::string, std::string> paths;  // fault id -> report
  auto bind = [&](const std::string& id, const std::string& path) {
    if (!truth.contains(id)) throw InputError("report for unknown fault '" + id + "'");
    if (!paths.emplace(id, path).second) throw InputError("two reports for fault '" + id + "'");
  };
  for (const auto& r : a.reports) {
    if (const auto eq = r.find('='); eq != std::string::npos) {
      bind(r.substr(0, eq), r.substr(eq + 1));
      continue;
    }
    const auto stem = fs::path(r).stem().string();
    if (truth.contains(stem))
      bind(stem, r);
    else if (truth.size() == 1)
      bind(truth.begin()->first, r);
    else
      throw InputError("cannot tell which fault '" + r + "' belongs to; use FAULT=PATH");
  }
  if (!a.reports_dir.empty()) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(a.reports_dir))
      if (entry.is_regular_file() && entry.path().extension() == ".tsv") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& p : files) bind(p.stem().string(), p.string());
  }
  if (paths.empty()) throw InputError("no reports given");

  std::vector<FaultOutcome> outcomes;
  for (const auto& [id, fixes] : truth) {
    const auto it = paths.find(id);
    if (it == paths.end()) {
      outcomes.push_back({id, std::nullopt, 0});
      continue;
    }
    outcomes.push_back(evaluate_fault(load_report(it->second), id, fixes));
  }
  return outcomes;
}

int run_evaluate(const EvaluateArgs& a) {
  const auto truth = load_truth(a.truth);
  const auto outcomes = collect_outcomes(a, truth);
  std::ostringstream out;

  if (a.prf) {
    if (!a.depth || !a.d_max) throw InputError("--prf needs --depth and --dmax");
    if (*a.depth > *a.d_max) throw InputError("--depth exceeds --dmax");
    if (*a.d_max == 0) throw InputError("--dmax must be positive");
    double p = precision(outcomes, *a.depth, *a.d_max);
    if (a.normalize) p /= static_cast<double>(outcomes.size());
    const double r = recall(outcomes);
    out << "depth\td_max\tprecision\trecall\tf_measure\n"
        << *a.depth << '\t' << *a.d_max << '\t' << detail::fixed6(p) << '\t' << detail::fixed6(r)
        << '\t' << detail::fixed6(f_measure(p, r)) << '\n';
  } else if (a.avg_cost) {
    AverageCost cost;
    try {
      cost = average_cost(outcomes);
    } catch (const Error& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kEmpty;
    }
    out << "average_cost\tcounted\texcluded\n" << detail::fixed6(cost.value) << '\t' << cost.counted << '\t';
    for (std::size_t i = 0; i < cost.excluded.size(); ++i) out << (i ? "," : "") << cost.excluded[i];
    if (cost.excluded.empty()) out << '-';
    out << '\n';
  } else if (a.curve) {
    write_curve(out, curve(outcomes));
  } else {
    out << "percent_examined\tpercent_located\n";
    for (double t : kSummaryThresholds)
      out << t << '\t' << detail::fixed6(percent_located(outcomes, t)) << '\n';
  }
  emit(a.output, out.str());
  return kOk;
}

// ---------------------------------------------------------------- tune-depth

struct TuneArgs {
  std::string graph, stacks, passing, truth, depths = "0..10", output = "-";
  std::optional<std::uint32_t> d_max;
  bool normalize = false;
};

int run_tune(const TuneArgs& a, const Common& c) {
  Inputs in;
  load_graph(in, a.graph);
  load_stacks(in, a.stacks);
  load_passing(in, a.passing);
  const auto faults = group_by_fault(in.stacks, load_truth(a.truth));
  const auto depths = parse_depths(a.depths);
  const auto o = c.options();

  std::uint32_t d_max = a.d_max.value_or(0);
  if (!a.d_max) {
    d_max = dataset_fixpoint(in.graph, in.table, in.stacks, o.match);
    if (d_max == 0) {
      std::cerr << "error: expansion fixpoint is 0, so every depth weight vanishes; pass --dmax\n";
      return kEmpty;
    }
  }
  if (d_max == 0) throw InputError("--dmax must be positive");
  for (auto d : depths)
    if (d > d_max) std::cerr << "note: depth " << d << " exceeds d_max " << d_max << " and is skipped\n";

  const auto t = tune_depth(in.graph, in.table, faults, in.passing, depths, d_max, o, a.normalize);
  std::ostringstream out;
  out << "depth\tprecision\trecall\tf_measure\n";
  for (const auto& s : t.scores)
    out << s.depth << '\t' << detail::fixed6(s.precision) << '\t' << detail::fixed6(s.recall) << '\t'
        << detail::fixed6(s.f) << '\n';
  out << "# d_max\t" << t.d_max << '\n' << "# optimal_depth\t" << t.optimal << '\n';
  emit(a.output, out.str());
  return kOk;
}

// ---------------------------------------------------------------- simulate

int run_simulate(const SynthConfig& cfg, const std::string& dir) {
  const auto b = generate(cfg);
  write_benchmark(b, dir);
  std::cerr << "wrote " << b.stacks.size() << " stacks, " << b.passing.size()
            << " passing traces, " << b.truth.size() << " faults to " << dir
            << " (passing coverage " << detail::fixed6(passing_coverage(b)) << ")\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fault localization from crash stack traces"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "crashloc 1.0");

  Common common;

  ExpandArgs ex;
  auto* expand = app.add_subcommand("expand", "Expand crash stacks into failing execution traces");
  expand->add_option("--graph,-g", ex.graph, "Call graph TSV")->required();
  expand->add_option("--stacks,-s", ex.stacks, "Stack traces (JSON Lines)")->required();
  expand->add_option("--output,-o", ex.output, "Expanded traces ('-' = stdout)")->capture_default_str();
  expand->add_option("--depth-maps", ex.depth_maps, "Also write per-stack call depths here");
  add_depth(expand, common);
  add_matching(expand, common);

  LocalizeArgs lo;
  auto* loc = app.add_subcommand("localize", "Rank entities by suspiciousness");
  loc->add_option("--graph,-g", lo.graph, "Call graph TSV");
  auto* lo_stacks = loc->add_option("--stacks,-s", lo.stacks, "Stack traces (JSON Lines)");
  auto* lo_traces = loc->add_option("--traces", lo.traces, "Failing traces written by expand");
  lo_stacks->excludes(lo_traces);
  loc->add_option("--depth-maps", lo.depth_maps, "Depth sidecar written by expand")->needs(lo_traces);
  loc->add_option("--passing,-p", lo.passing, "Passing traces (JSON Lines)")->required();
  loc->add_option("--truth", lo.truth, "Ground truth JSON (with --by-fault)");
  loc->add_option("--by-fault", lo.by_fault, "Write one report per fault into this directory")
      ->excludes(lo_traces);
  loc->add_option("--output,-o", lo.output, "Report TSV ('-' = stdout)")->capture_default_str();
  add_depth(loc, common);
  add_scoring(loc, common);
  add_matching(loc, common);

  EvaluateArgs ev;
  auto* eval = app.add_subcommand("evaluate", "Score reports against the ground truth");
  eval->add_option("--truth,-t", ev.truth, "Ground truth JSON")->required();
  eval->add_option("--report,-r", ev.reports, "Report TSV, optionally as FAULT=PATH (repeatable)");
  eval->add_option("--reports-dir", ev.reports_dir, "Directory of <fault>.tsv reports");
  auto* f_curve = eval->add_flag("--curve", ev.curve, "Located percentage at every 1% examined");
  auto* f_cost = eval->add_flag("--avg-cost", ev.avg_cost, "Mean rank over list size");
  auto* f_prf = eval->add_flag("--prf", ev.prf, "Precision, recall and F-measure");
  f_curve->excludes(f_cost)->excludes(f_prf);
  f_cost->excludes(f_prf);
  eval->add_option("--depth,-d", ev.depth, "Depth the reports were produced at (with --prf)");
  eval->add_option("--dmax", ev.d_max, "Expansion fixpoint depth (with --prf)");
  eval->add_flag("--normalize-precision", ev.normalize,
                 "Extension: divide summed precision by the fault count");
  eval->add_option("--output,-o", ev.output, "Output TSV ('-' = stdout)")->capture_default_str();

  TuneArgs tu;
  auto* tune = app.add_subcommand("tune-depth", "Pick the call depth with the best F-measure");
  tune->add_option("--graph,-g", tu.graph, "Call graph TSV")->required();
  tune->add_option("--stacks,-s", tu.stacks, "Stack traces tagged with fault ids")->required();
  tune->add_option("--passing,-p", tu.passing, "Passing traces (JSON Lines)")->required();
  tune->add_option("--truth,-t", tu.truth, "Ground truth JSON")->required();
  tune->add_option("--depths", tu.depths, "Candidate depths: 'a..b' or 'a,b,c'")->capture_default_str();
  tune->add_option("--dmax", tu.d_max, "Override the dataset expansion fixpoint")->envname("CRASHLOC_DMAX");
  tune->add_flag("--normalize-precision", tu.normalize,
                 "Extension: divide summed precision by the fault count");
  tune->add_option("--output,-o", tu.output, "Output TSV ('-' = stdout)")->capture_default_str();
  add_scoring(tune, common);
  add_matching(tune, common);

  SynthConfig sc;
  std::string sim_dir;
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic benchmark");
  sim->add_option("--out,-o", sim_dir, "Output directory")->required();
  sim->add_option("--entities", sc.n_entities, "Entities in the call graph")->capture_default_str();
  sim->add_option("--edge-density", sc.edge_density, "Mean out-degree")->capture_default_str();
  sim->add_option("--faults", sc.n_faults, "Seeded faults")->capture_default_str();
  sim->add_option("--fix-points", sc.fix_points_per_fault, "Fix entities per fault")->capture_default_str();
  sim->add_option("--stacks-per-fault", sc.n_stacks_per_fault, "Crash stacks per fault")
      ->capture_default_str();
  sim->add_option("--truncation", sc.stack_truncation, "Frames popped before the crash")
      ->capture_default_str();
  sim->add_option("--passing-traces", sc.n_passing_traces, "Passing traces")->capture_default_str();
  sim->add_option("--coverage", sc.target_coverage_rate, "Target passing coverage rate")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();

  // Accepted everywhere so scripts can pass one flag set to every subcommand.
  std::uint64_t seed = 0;
  for (auto* cmd : {expand, loc, eval, tune, sim})
    cmd->add_option("--seed", seed, "Random seed")->envname("CRASHLOC_SEED")->capture_default_str();
  unsigned serial_threads = 1;
  for (auto* cmd : {eval, sim})
    cmd->add_option("--threads", serial_threads, "Accepted for uniformity; this subcommand runs serially")
        ->envname("CRASHLOC_THREADS")
        ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kBadInput;
  }

  try {
    if (*expand) return run_expand(ex, common);
    if (*loc) return run_localize(lo, common);
    if (*eval) return run_evaluate(ev);
    if (*tune) {
      common.depth = 0;
      return run_tune(tu, common);
    }
    sc.seed = seed;
    return run_simulate(sc, sim_dir);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadInput;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kEmpty;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadInput;
  }
}
