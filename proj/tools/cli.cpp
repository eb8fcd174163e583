#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "modecert/baselines.hpp"
#include "modecert/certifier.hpp"
#include "modecert/config.hpp"
#include "modecert/ingest.hpp"
#include "modecert/simharness.hpp"
#include "modecert/weighted.hpp"

#ifndef MODECERT_VERSION
#define MODECERT_VERSION "unknown"
#endif

namespace modecert::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kOutDirEnv = "MODECERT_OUT_DIR";

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

json optional_number(std::optional<double> x) {
  if (!x || std::isnan(*x)) return nullptr;
  return *x;
}

std::string exact(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

template <class T>
std::string join(const std::vector<T>& items) {
  std::ostringstream ss;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) ss << ',';
    if constexpr (std::is_same_v<T, Method>) {
      ss << to_string(items[i]);
    } else {
      ss << items[i];
    }
  }
  return ss.str();
}

std::string utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

fs::path resolve_out_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
  return ".";
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

struct Manifest {
  std::string command;
  std::vector<std::string> args;
  json config;
  std::uint64_t seed = 0;
  std::vector<fs::path> outputs;
};

void write_manifest(const fs::path& dir, const Manifest& m, double seconds) {
  json outputs = json::array();
  for (const auto& p : m.outputs) outputs.push_back(p.string());
  const json doc = {
      {"command", m.command},
      {"args", m.args},
      {"config", m.config},
      {"seed", m.seed},
      {"version", MODECERT_VERSION},
      {"outputs", outputs},
      {"started_at", utc_now()},
      {"wall_clock_seconds", seconds},
  };
  write_text(dir / "manifest.json", doc.dump(2) + "\n");
}

std::vector<Method> parse_methods(const std::vector<std::string>& names) {
  std::vector<Method> out;
  for (const auto& n : names) out.push_back(parse_method(n));
  return out;
}

std::vector<std::uint64_t> sorted_budgets(std::vector<std::uint64_t> budgets) {
  std::sort(budgets.begin(), budgets.end());
  budgets.erase(std::unique(budgets.begin(), budgets.end()), budgets.end());
  return budgets;
}

// ---------------------------------------------------------------- certify

struct CertifyOptions {
  std::string target;
  std::vector<std::string> targets;
  std::optional<double> epsilon;
  std::string mode = "cite";
  std::optional<double> delta0;
  std::string input = "-";
  std::string trace;
  std::string config;
};

struct Observation {
  std::string label;
  double weight = 1.0;
};

/// Reads "label" or "label<TAB>weight" lines, skipping blank ones.
class ObservationReader {
 public:
  explicit ObservationReader(std::istream& in) : in_(in) {}

  bool next(Observation& obs) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      const auto tab = line.find('\t');
      obs.label = line.substr(0, tab);
      obs.weight = 1.0;
      if (obs.label.empty()) malformed("empty label");
      if (tab != std::string::npos) {
        const std::string text = line.substr(tab + 1);
        if (text.find('\t') != std::string::npos) malformed("too many fields");
        const char* begin = text.data();
        const char* end = begin + text.size();
        const auto [ptr, ec] = std::from_chars(begin, end, obs.weight);
        if (ec != std::errc() || ptr != end) malformed("weight is not a number");
        if (!(obs.weight >= 0.0 && obs.weight <= 1.0)) malformed("weight outside [0,1]");
      }
      return true;
    }
    return false;
  }

 private:
  [[noreturn]] void malformed(const std::string& what) const {
    throw UsageError("input line " + std::to_string(line_no_) + ": " + what);
  }

  std::istream& in_;
  std::size_t line_no_ = 0;
};

class TraceSink {
 public:
  explicit TraceSink(const std::string& path) {
    if (path.empty()) return;
    file_.open(path, std::ios::binary);
    if (!file_) throw UsageError("cannot open trace file " + path);
  }
  bool enabled() const { return file_.is_open(); }
  void write(const json& row) {
    if (enabled()) file_ << row.dump() << '\n';
  }

 private:
  std::ofstream file_;
};

json step_json(const StepRecord& rec, const LabelTable& labels) {
  return {
      {"t", rec.t},
      {"label", labels.name(rec.label)},
      {"pw_log_e", optional_number(rec.pw_log_e)},
      {"pw_vacuous", rec.pw_vacuous},
      {"L", optional_number(rec.lcb)},
      {"U", rec.unseen},
      {"verdict", rec.certified ? "certify" : "continue"},
  };
}

int run_certify(const CertifyOptions& o, std::istream& stdin_stream, std::ostream& out) {
  LabelTable labels;
  CertifierConfig config;
  if (o.mode == "topk") {
    if (o.targets.empty()) throw UsageError("--mode topk needs --targets");
    if (!o.target.empty()) throw UsageError("--mode topk takes --targets, not --target");
    std::vector<Label> set;
    for (const auto& t : o.targets) set.push_back(labels.intern(t));
    config = CertifierConfig::top_k(set);
  } else if (o.mode == "cite" || o.mode == "wcite" || o.mode == "mmc") {
    if (!o.targets.empty()) throw UsageError("--targets is only valid with --mode topk");
    if (o.target.empty() && o.mode != "mmc") throw UsageError("--target is required");
    config = CertifierConfig::unique_mode(o.target.empty() ? Label() : labels.intern(o.target));
  } else {
    throw UsageError("unknown mode '" + o.mode + "'");
  }
  config.evaluation = Evaluation::full;
  try {
    if (!o.config.empty()) apply_settings(load_settings(o.config), config);
    if (o.epsilon) config.budget = BudgetSplit(*o.epsilon);
    if (o.delta0) config.pairwise_grid = geometric_pairwise_grid(*o.delta0);
    config.validate();
  } catch (const InvalidParameter& e) {
    throw UsageError(e.what());
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }

  std::ifstream file;
  if (o.input != "-") {
    file.open(o.input);
    if (!file) throw UsageError("cannot open input " + o.input);
  }
  ObservationReader reader(o.input == "-" ? stdin_stream : file);
  TraceSink trace(o.trace);
  Observation obs;

  json record;
  bool certified = false;
  if (o.mode == "mmc") {
    MmcCertifier mmc(config.budget.epsilon());
    while (!mmc.certified() && reader.next(obs)) {
      const auto& rec = mmc.step(labels.intern(obs.label));
      if (trace.enabled()) {
        json row = {{"t", rec.t}, {"label", obs.label}, {"tuple", nullptr},
                    {"verdict", rec.certified ? "certify" : "continue"}};
        if (rec.tuple) {
          const auto& tuple = mmc.tuples()[*rec.tuple];
          row["tuple"] = *rec.tuple;
          row["leader"] = labels.name(tuple.leader);
          row["runner_up"] = labels.name(tuple.runner_up);
          row["log_pairwise"] = tuple.log_pairwise;
          row["log_residual"] = tuple.log_residual;
        }
        trace.write(row);
      }
    }
    const auto leader = mmc.certified_leader();
    certified = mmc.certified() && (o.target.empty() || labels.name(*leader) == o.target);
    record = {{"certified", certified},
              {"tau", mmc.tau() ? json(*mmc.tau()) : json(nullptr)},
              {"t_seen", mmc.table().t()},
              {"leader", leader ? json(labels.name(*leader)) : json(nullptr)},
              {"mode", o.mode}};
    if (!o.target.empty()) record["target"] = o.target;
  } else {
    std::optional<StepRecord> last;
    std::optional<std::uint64_t> tau;
    std::uint64_t t_seen = 0;
    if (o.mode == "wcite") {
      WCiteCertifier cert(config);
      while (!cert.certified() && reader.next(obs)) {
        const auto& rec = cert.step({labels.intern(obs.label), obs.weight});
        if (trace.enabled()) {
          json row = step_json(rec, labels);
          row["weight"] = obs.weight;
          trace.write(row);
        }
        last = rec;
      }
      tau = cert.tau();
      t_seen = cert.table().t();
    } else {
      CiteCertifier cert(config);
      while (!cert.certified() && reader.next(obs)) {
        const auto& rec = cert.step(labels.intern(obs.label));
        trace.write(step_json(rec, labels));
        last = rec;
      }
      tau = cert.tau();
      t_seen = cert.table().t();
    }
    certified = tau.has_value();
    record = {{"certified", certified},
              {"tau", tau ? json(*tau) : json(nullptr)},
              {"t_seen", t_seen},
              {"L", last ? optional_number(last->lcb) : json(nullptr)},
              {"U", last ? json(last->unseen) : json(nullptr)},
              {"pw_log_e", last ? optional_number(last->pw_log_e) : json(nullptr)},
              {"mode", o.mode}};
    if (o.mode == "topk") {
      record["targets"] = o.targets;
    } else {
      record["target"] = o.target;
    }
  }
  out << record.dump() << '\n';
  return certified ? kCertified : kNotCertified;
}

// --------------------------------------------------------------- simulate

struct HarnessFlags {
  std::vector<std::string> methods{"cite"};
  std::string trial_case = "A";
  std::vector<std::uint64_t> budgets{64, 128, 256, 512, 1024, 2048};
  std::uint64_t reps = 500;
  std::uint64_t seed = 1;
  std::string out;
  double epsilon = 0.05;
  double delta0 = kDefaultDelta0;
  double gamma = 0.0;
  unsigned threads = 1;
};

void add_harness_flags(CLI::App& cmd, HarnessFlags& f) {
  cmd.add_option("--methods", f.methods, "cite, wcite, bonferroni, mmc")->delimiter(',');
  cmd.add_option("--case", f.trial_case, "A (target = mode) or B (target = runner-up)");
  cmd.add_option("--budgets", f.budgets, "Sample budgets N")->delimiter(',');
  cmd.add_option("--reps", f.reps, "Replicates per budget");
  cmd.add_option("--seed", f.seed, "Base seed");
  cmd.add_option("--out", f.out, std::string("Output directory (default $") + kOutDirEnv + " or .)");
  cmd.add_option("--epsilon", f.epsilon, "Error level");
  cmd.add_option("--grid-delta0", f.delta0, "Smallest anticipated gap for the pairwise grid");
  cmd.add_option("--gamma", f.gamma, "Rank weight decay for wcite");
  cmd.add_option("--threads", f.threads, "Worker threads");
}

TrialOptions trial_options(const HarnessFlags& f) {
  if (!(f.epsilon > 0.0 && f.epsilon < 1.0)) throw UsageError("--epsilon must lie in (0,1)");
  if (f.reps == 0) throw UsageError("--reps must be at least 1");
  return {f.epsilon, f.delta0, f.gamma, f.threads};
}

std::vector<std::string> harness_args(const HarnessFlags& f, const fs::path& out_dir) {
  std::vector<std::string> methods = f.methods;
  return {"--methods", join(methods), "--case", f.trial_case, "--budgets",
          join(sorted_budgets(f.budgets)), "--reps", std::to_string(f.reps), "--seed",
          std::to_string(f.seed), "--epsilon", exact(f.epsilon), "--grid-delta0",
          exact(f.delta0), "--gamma", exact(f.gamma), "--threads", std::to_string(f.threads),
          "--out", out_dir.string()};
}

json harness_config(const HarnessFlags& f) {
  return {{"methods", f.methods},   {"case", f.trial_case}, {"budgets", sorted_budgets(f.budgets)},
          {"reps", f.reps},         {"epsilon", f.epsilon}, {"pairwise_delta0", f.delta0},
          {"gamma", f.gamma},       {"threads", f.threads}};
}

int run_simulate(int setting, const HarnessFlags& f, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const TrialOptions options = trial_options(f);
  const auto methods = parse_methods(f.methods);
  const Case trial_case = parse_case(f.trial_case);
  const auto spec = setting_preset(setting);
  const auto budgets = sorted_budgets(f.budgets);

  std::vector<TrialReport> reports;
  for (Method m : methods) {
    auto rows = run_trials(spec, m, trial_case, budgets, f.reps, f.seed, options);
    reports.insert(reports.end(), rows.begin(), rows.end());
  }

  const fs::path dir = resolve_out_dir(f.out);
  fs::create_directories(dir);
  std::ostringstream csv;
  write_reports_csv(csv, reports, false);
  write_text(dir / "report.csv", csv.str());
  write_text(dir / "report.json", json{{"rows", reports_to_json(reports, false)}}.dump(2) + "\n");
  out << csv.str();

  Manifest m;
  m.command = "simulate";
  m.args = {"simulate", "--setting", std::to_string(setting)};
  const auto rest = harness_args(f, dir);
  m.args.insert(m.args.end(), rest.begin(), rest.end());
  m.config = harness_config(f);
  m.config["setting"] = setting;
  m.seed = f.seed;
  m.outputs = {dir / "report.csv", dir / "report.json"};
  write_manifest(dir, m, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  return 0;
}

// ----------------------------------------------------------------- ingest

int run_ingest(const std::string& pool_path, const std::string& problem, const HarnessFlags& f,
               std::ostream& out, std::ostream& err) {
  const auto start = std::chrono::steady_clock::now();
  const TrialOptions options = trial_options(f);
  const auto methods = parse_methods(f.methods);
  const Case trial_case = parse_case(f.trial_case);
  const auto budgets = sorted_budgets(f.budgets);

  auto pools = load_pools(pool_path);
  if (!problem.empty()) {
    std::erase_if(pools, [&](const AnswerPool& p) { return p.problem_id != problem; });
    if (pools.empty()) throw UsageError("problem '" + problem + "' not found in " + pool_path);
  }

  std::vector<TrialReport> reports;
  json pool_info = json::array();
  for (const auto& pool : pools) {
    const auto report = pool_report(pool, methods, budgets, f.reps, trial_case, f.seed, options);
    if (report.mode_tie) {
      err << "warning: pool '" << pool.problem_id << "' has a tied mode; using first-seen answer '"
          << pool.labels.name(report.target) << "'\n";
    }
    pool_info.push_back({{"problem_id", pool.problem_id},
                         {"records", pool.size()},
                         {"target", pool.labels.name(report.target)},
                         {"mode_tie", report.mode_tie}});
    reports.insert(reports.end(), report.rows.begin(), report.rows.end());
  }

  const fs::path dir = resolve_out_dir(f.out);
  fs::create_directories(dir);
  std::ostringstream csv;
  write_reports_csv(csv, reports, true);
  write_text(dir / "report.csv", csv.str());
  write_text(dir / "report.json",
             json{{"rows", reports_to_json(reports, true)}, {"pools", pool_info}}.dump(2) + "\n");
  out << csv.str();

  Manifest m;
  m.command = "ingest";
  m.args = {"ingest", "--pool", fs::absolute(pool_path).string()};
  if (!problem.empty()) {
    m.args.push_back("--problem");
    m.args.push_back(problem);
  }
  const auto rest = harness_args(f, dir);
  m.args.insert(m.args.end(), rest.begin(), rest.end());
  m.config = harness_config(f);
  m.config["pool"] = fs::absolute(pool_path).string();
  m.seed = f.seed;
  m.outputs = {dir / "report.csv", dir / "report.json"};
  write_manifest(dir, m, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  return 0;
}

// ------------------------------------------------------------- bottleneck

struct SweepFlags {
  std::string vary = "p_r";
  std::vector<double> values;
  std::optional<double> fixed;
  std::uint64_t reps = 500;
  std::uint64_t seed = 1;
  std::uint64_t horizon = 20000;
  std::string out;
  double epsilon = 0.05;
  double delta0 = kDefaultDelta0;
};

int run_bottleneck(const SweepFlags& f, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  if (f.vary != "p_r" && f.vary != "delta") throw UsageError("--vary must be p_r or delta");
  if (f.values.empty()) throw UsageError("--values is required");
  if (!(f.epsilon > 0.0 && f.epsilon < 1.0)) throw UsageError("--epsilon must lie in (0,1)");
  const bool by_pr = f.vary == "p_r";
  const double fixed = f.fixed.value_or(by_pr ? 0.05 : 0.24);
  std::vector<SweepPoint> points;
  for (double v : f.values) points.push_back(by_pr ? SweepPoint{v, fixed} : SweepPoint{fixed, v});

  TrialOptions options;
  options.epsilon = f.epsilon;
  options.pairwise_delta0 = f.delta0;
  const auto rows = bottleneck_sweep(points, f.reps, f.seed, f.horizon, options);

  const fs::path dir = resolve_out_dir(f.out);
  fs::create_directories(dir);
  std::ostringstream csv;
  write_sweep_csv(csv, rows);
  write_text(dir / "bottleneck.csv", csv.str());
  write_text(dir / "bottleneck.json", json{{"rows", sweep_to_json(rows)}}.dump(2) + "\n");
  out << csv.str();

  std::vector<std::string> values;
  for (double v : f.values) values.push_back(exact(v));
  Manifest m;
  m.command = "bottleneck";
  m.args = {"bottleneck", "--vary", f.vary, "--values", join(values), "--fixed", exact(fixed),
            "--reps", std::to_string(f.reps), "--seed", std::to_string(f.seed), "--horizon",
            std::to_string(f.horizon), "--epsilon", exact(f.epsilon), "--grid-delta0",
            exact(f.delta0), "--out", dir.string()};
  m.config = {{"vary", f.vary},       {"values", f.values},   {"fixed", fixed},
              {"reps", f.reps},       {"horizon", f.horizon}, {"epsilon", f.epsilon},
              {"pairwise_delta0", f.delta0}};
  m.seed = f.seed;
  m.outputs = {dir / "bottleneck.csv", dir / "bottleneck.json"};
  write_manifest(dir, m, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  return 0;
}

// ------------------------------------------------------------------ rerun

std::vector<std::string> rerun_args(const std::string& manifest_path, const std::string& out_override) {
  std::ifstream in(manifest_path);
  if (!in) throw UsageError("cannot open manifest " + manifest_path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError("malformed manifest: " + std::string(e.what()));
  }
  if (!doc.contains("args") || !doc["args"].is_array() || doc["args"].empty()) {
    throw UsageError("manifest has no args");
  }
  auto args = doc["args"].get<std::vector<std::string>>();
  if (args.front() == "rerun") throw UsageError("manifest cannot point at rerun");
  if (!out_override.empty()) {
    auto it = std::find(args.begin(), args.end(), "--out");
    if (it != args.end() && std::next(it) != args.end()) *std::next(it) = out_override;
  }
  return args;
}

}  // namespace

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Anytime-valid certification of a categorical mode", "modecert"};
  app.require_subcommand(1);
  app.set_version_flag("--version", MODECERT_VERSION);

  CertifyOptions certify;
  auto* c = app.add_subcommand("certify", "Stream labels through a certifier");
  c->add_option("--target", certify.target, "Label to certify as the unique mode");
  c->add_option("--targets", certify.targets, "Comma-separated target set for topk")->delimiter(',');
  c->add_option("--epsilon", certify.epsilon, "Error level (default 0.05)");
  c->add_option("--mode", certify.mode, "cite, wcite, topk or mmc");
  c->add_option("--grid-delta0", certify.delta0, "Smallest anticipated gap for the pairwise grid");
  c->add_option("--input", certify.input, "Input file, - for standard input");
  c->add_option("--trace", certify.trace, "Write a JSONL step trace here");
  c->add_option("--config", certify.config, "key = value settings file");

  int setting = 0;
  HarnessFlags sim_flags;
  auto* s = app.add_subcommand("simulate", "Monte-Carlo trials on a synthetic setting");
  s->add_option("--setting", setting, "Setting id 1..5")->required();
  add_harness_flags(*s, sim_flags);

  std::string pool_path;
  std::string problem;
  HarnessFlags ingest_flags;
  auto* g = app.add_subcommand("ingest", "Bootstrap trials on answer pools");
  g->add_option("--pool", pool_path, "JSONL answer pool file")->required();
  g->add_option("--problem", problem, "Only this problem_id");
  add_harness_flags(*g, ingest_flags);

  SweepFlags sweep;
  auto* b = app.add_subcommand("bottleneck", "First-crossing diagnostics over a p_r or delta sweep");
  b->add_option("--vary", sweep.vary, "p_r or delta");
  b->add_option("--values", sweep.values, "Comma-separated sweep values")->delimiter(',');
  b->add_option("--fixed", sweep.fixed, "Value of the other parameter (delta 0.05 or p_r 0.24)");
  b->add_option("--reps", sweep.reps, "Replicates per point");
  b->add_option("--seed", sweep.seed, "Base seed");
  b->add_option("--horizon", sweep.horizon, "Maximum stream length");
  b->add_option("--out", sweep.out, std::string("Output directory (default $") + kOutDirEnv + " or .)");
  b->add_option("--epsilon", sweep.epsilon, "Error level");
  b->add_option("--grid-delta0", sweep.delta0, "Smallest anticipated gap for the pairwise grid");

  std::string manifest;
  std::string rerun_out;
  auto* r = app.add_subcommand("rerun", "Repeat a run recorded in a manifest");
  r->add_option("--manifest", manifest, "manifest.json from an earlier run")->required();
  r->add_option("--out", rerun_out, "Write outputs here instead of the recorded directory");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (c->parsed()) return run_certify(certify, in, out);
    if (s->parsed()) return run_simulate(setting, sim_flags, out);
    if (g->parsed()) return run_ingest(pool_path, problem, ingest_flags, out, err);
    if (b->parsed()) return run_bottleneck(sweep, out);
    if (r->parsed()) return run(rerun_args(manifest, rerun_out), in, out, err);
  } catch (const std::exception& e) {
    // Usage mistakes, malformed input and unreadable files all map to 2.
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }
  return kUsageError;
}

}  // namespace modecert::cli
