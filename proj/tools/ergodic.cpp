// Command-line front end: simulate | diagnose | derive | rank | calibrate | ce | discount-fit.

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "ergodic/config.hpp"
#include "ergodic/errors.hpp"
#include "ergodic/rng.hpp"
#include "json_out.hpp"

#ifndef ERGODIC_VERSION
#define ERGODIC_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using namespace ergodic;
using out::json;

namespace {

enum ExitCode { kOk = 0, kConfig = 2, kRefusal = 3, kNumeric = 4 };

const std::vector<std::string> kProcessKeys = {"kind", "drift", "diffusion", "domain", "x0",
                                               "mode", "outcomes", "probabilities", "rate"};

const std::map<std::string, std::vector<std::string>> kAllowed = {
    {"dynamics", kProcessKeys},
    {"left", kProcessKeys},
    {"right", kProcessKeys},
    {"high", kProcessKeys},
    {"low", kProcessKeys},
    {"query", kProcessKeys},
    {"transform", {"form", "scale", "offset", "gamma", "lambda", "x_ref"}},
    {"budget", {"n_paths", "dt", "t_max", "seed", "record_interval", "workers"}},
    {"ce",
     {"mode", "n_images", "images_per_game", "passive_repetitions", "n_trials", "settlement_draws",
      "effects", "endowment", "update_per_trial", "agents"}},
    {"calibrate", {"iterations"}},
    {"discount", {"file"}},
};

struct Options {
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::string budget;
  std::string input;
};

struct Run {
  std::string subcommand;
  Options opt;
  Config cfg;
  fs::path out;
  std::vector<fs::path> inputs;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
};

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError("cannot read input file " + p.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Run prepare(const std::string& name, const Options& opt, bool needs_config) {
  Run run;
  run.subcommand = name;
  run.opt = opt;
  if (!opt.config_path.empty()) {
    run.cfg = Config::load(opt.config_path);
    run.inputs.push_back(opt.config_path);
  } else if (needs_config) {
    throw ConfigError(name + ": --config is required");
  }
  run.cfg.restrict_to(kAllowed);
  if (opt.seed) run.cfg.set("budget", "seed", std::to_string(*opt.seed));
  if (!opt.budget.empty()) {
    std::vector<std::string> parts;
    std::istringstream in(opt.budget);
    std::string item;
    while (std::getline(in, item, ',')) parts.push_back(item);
    if (parts.size() != 3) throw ConfigError("--budget: expected N,dt,t_max, got '" + opt.budget + "'");
    run.cfg.set("budget", "n_paths", parts[0]);
    run.cfg.set("budget", "dt", parts[1]);
    run.cfg.set("budget", "t_max", parts[2]);
  }
  run.out = opt.out_dir;
  fs::create_directories(run.out);
  return run;
}

std::uint64_t seed_of(const Config& cfg) {
  const auto s = cfg.integer_or("budget", "seed", 1);
  if (s < 0) throw ConfigError(cfg.where("budget", "seed") + "must be nonnegative");
  return static_cast<std::uint64_t>(s);
}

void write_manifest(const Run& run) {
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - run.start).count();
  json fps = json::object();
  for (const auto& p : run.inputs) fps[p.string()] = hex(fnv1a(file_bytes(p)));
  const std::time_t now = std::time(nullptr);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  json m = {{"subcommand", run.subcommand},
            {"config", run.opt.config_path.empty() ? json(nullptr) : json(run.opt.config_path)},
            {"seed", seed_of(run.cfg)},
            {"out", run.out.string()},
            {"version", ERGODIC_VERSION},
            {"finished_at", stamp},
            {"wall_clock_seconds", wall},
            {"input_fingerprints", fps}};
  std::ofstream(run.out / "manifest.json") << m.dump(2) << '\n';
}

void write_json(const fs::path& p, const json& j) { std::ofstream(p) << j.dump(2) << '\n'; }

SimulationBudget read_budget(const Config& cfg) {
  SimulationBudget b;
  b.n_paths = cfg.integer_or("budget", "n_paths", 2000);
  b.dt = cfg.number_or("budget", "dt", 1e-2);
  b.t_max = cfg.number_or("budget", "t_max", 100.0);
  b.seed = seed_of(cfg);
  b.record_interval = cfg.number_or("budget", "record_interval", 0.5);
  b.workers = static_cast<unsigned>(cfg.integer_or("budget", "workers", 0));
  if (b.n_paths < 1) throw ConfigError(cfg.where("budget", "n_paths") + "must be >= 1");
  if (!(b.dt > 0.0)) throw ConfigError(cfg.where("budget", "dt") + "must be positive");
  if (!(b.t_max >= b.dt)) throw ConfigError(cfg.where("budget", "t_max") + "must be >= dt");
  if (b.record_interval > b.t_max) b.record_interval = 0.0;
  return b;
}

Interval read_domain(const Config& cfg, const std::string& section) {
  const std::string d = cfg.text_or(section, "domain", "real");
  if (d == "real") return Interval::real_line();
  if (d == "positive") return Interval::positive();
  const auto v = cfg.numbers(section, "domain");
  if (v.size() != 2 || !(v[0] < v[1]))
    throw ConfigError(cfg.where(section, "domain") + "expected 'real', 'positive' or 'lo, hi' with lo < hi");
  return {v[0], v[1]};
}

ItoDynamics read_ito(const Config& cfg, const std::string& section) {
  try {
    return build_ito(cfg.text(section, "drift"), cfg.text(section, "diffusion"), read_domain(cfg, section));
  } catch (const ConfigError& e) {
    throw ConfigError(cfg.origin() + ": [" + section + "] " + e.what());
  }
}

std::string kind_of(const Config& cfg, const std::string& section) {
  const std::string k = cfg.text_or(section, "kind", "ito");
  if (k != "ito" && k != "discrete" && k != "deterministic")
    throw ConfigError(cfg.where(section, "kind") + "expected ito, discrete or deterministic, got '" + k + "'");
  return k;
}

TransformSpec read_transform(const Config& cfg, const std::string& dyn_section = "dynamics") {
  const std::string form = cfg.text_or("transform", "form", "identity");
  const double scale = cfg.number_or("transform", "scale", 1.0);
  const double offset = cfg.number_or("transform", "offset", 0.0);
  try {
    if (form == "identity")
      return scale == 1.0 && offset == 0.0 ? TransformSpec::identity() : TransformSpec::affine(scale, offset);
    if (form == "affine") return TransformSpec::affine(scale, offset);
    if (form == "log") return TransformSpec::log(scale, offset);
    if (form == "crra") return TransformSpec::crra(cfg.number("transform", "gamma"), scale, offset);
    if (form == "exponential") return TransformSpec::exponential(cfg.number("transform", "lambda"), scale, offset);
    if (form == "derived") {
      if (kind_of(cfg, dyn_section) != "ito")
        throw ConfigError(cfg.where("transform", "form") + "'derived' needs an ito [" + dyn_section + "]");
      const double x_ref = cfg.number_or("transform", "x_ref", cfg.number_or(dyn_section, "x0", 1.0));
      return derive_transform(read_ito(cfg, dyn_section), x_ref).then_affine(scale, offset);
    }
  } catch (const PreconditionError& e) {
    throw ConfigError(cfg.where("transform", "form") + e.what());
  }
  throw ConfigError(cfg.where("transform", "form") +
                    "expected identity, affine, log, crra, exponential or derived, got '" + form + "'");
}

Eigen::Index whole_steps(const Config& cfg, double t_max) {
  const double r = std::round(t_max);
  if (std::abs(r - t_max) > 1e-9 * std::max(1.0, t_max) || r < 1)
    throw ConfigError(cfg.where("budget", "t_max") + "discrete processes need a whole number of unit steps");
  return static_cast<Eigen::Index>(r);
}

/// Ensemble for a process section. Deterministic processes use the
/// recording grid of the budget and `det_paths` identical rows.
Ensemble build_process(const Config& cfg, const std::string& section, const TransformSpec& f,
                       const SimulationBudget& b, Eigen::Index det_paths, const fs::path* cache_dir = nullptr) {
  if (!cfg.has_section(section)) throw ConfigError(cfg.origin() + ": section [" + section + "] is required");
  const std::string kind = kind_of(cfg, section);
  const double x0 = cfg.number_or(section, "x0", 1.0);
  if (kind == "discrete") {
    const std::string m = cfg.text_or(section, "mode", "multiplicative");
    if (m != "additive" && m != "multiplicative")
      throw ConfigError(cfg.where(section, "mode") + "expected additive or multiplicative");
    const auto outcomes = cfg.numbers(section, "outcomes");
    std::vector<double> probs = cfg.has(section, "probabilities")
                                    ? cfg.numbers(section, "probabilities")
                                    : std::vector<double>(outcomes.size(), 1.0 / outcomes.size());
    try {
      DiscreteDynamics dyn(m == "additive" ? DiscreteDynamics::Mode::additive
                                           : DiscreteDynamics::Mode::multiplicative,
                           outcomes, probs);
      return simulate_discrete(dyn, x0, whole_steps(cfg, b.t_max), b.n_paths, b.seed);
    } catch (const PreconditionError& e) {
      throw ConfigError(cfg.where(section, "outcomes") + e.what());
    } catch (const ConfigError& e) {
      throw ConfigError(cfg.where(section, "outcomes") + e.what());
    }
  }
  if (kind == "deterministic") {
    const double step = b.record_interval > 0.0 ? b.record_interval : b.dt;
    const auto n_times = static_cast<Eigen::Index>(std::llround(b.t_max / step)) + 1;
    const Ensemble single = deterministic_rate_process(cfg.number(section, "rate"), f, x0, b.t_max, n_times);
    return deterministic_ensemble(single.time_grid(), single.path(0).transpose(), det_paths);
  }
  const ItoDynamics dyn = read_ito(cfg, section);
  if (cache_dir) {
    const fs::path cached = cache_path(*cache_dir, simulation_fingerprint(dyn, x0, b));
    if (fs::exists(cached)) return read_cache(cached);
  }
  return simulate_ito(dyn, x0, b);
}

bool any_stochastic(const Config& cfg, std::initializer_list<const char*> sections) {
  for (const char* s : sections)
    if (cfg.has_section(s) && kind_of(cfg, s) != "deterministic") return true;
  return false;
}

int cmd_simulate(const Options& opt) {
  Run run = prepare("simulate", opt, true);
  const SimulationBudget b = read_budget(run.cfg);
  Ensemble ens = build_process(run.cfg, "dynamics", TransformSpec::identity(), b, 1);
  write_cache(cache_path(run.out, ens.fingerprint()), ens);
  std::ofstream csv(run.out / "ensemble.csv");
  write_csv(csv, ens);
  std::cout << "simulated " << ens.n_paths() << " paths x " << ens.n_times() << " times ("
            << ens.n_flagged() << " flagged)\n";
  write_manifest(run);
  return kOk;
}

int cmd_diagnose(const Options& opt) {
  Run run = prepare("diagnose", opt, true);
  const SimulationBudget b = read_budget(run.cfg);
  const TransformSpec f = read_transform(run.cfg);
  const Ensemble ens = build_process(run.cfg, "dynamics", f, b, 1, &run.out);
  if (kind_of(run.cfg, "dynamics") == "ito") write_cache(cache_path(run.out, ens.fingerprint()), ens);
  const GrowthReport rep = ergodicity_diagnostic(ens, f);
  write_json(run.out / "report.json", out::to_json(rep));
  {
    std::ofstream trace(run.out / "trace.csv");
    trace.precision(17);
    trace << "t,median_rate,se\n";
    for (const auto& c : rep.time_avg.checkpoints) trace << c.t << ',' << c.median_rate << ',' << c.se << '\n';
  }
  {
    std::ofstream row(run.out / "report.csv");
    row.precision(17);
    row << "transform,t_used,n_used,time_average,time_se,ensemble_rate,ensemble_se,gap,pooled_se,verdict\n"
        << rep.transform_id << ',' << rep.t_used << ',' << rep.n_used << ',' << rep.time_avg.value << ','
        << rep.time_avg.se << ',' << rep.ensemble.full.value << ',' << rep.ensemble.full.se << ',' << rep.gap
        << ',' << rep.pooled_se << ',' << to_string(rep.verdict) << '\n';
  }
  std::cout << to_string(rep.verdict) << '\n';
  write_manifest(run);
  return kOk;
}

int cmd_derive(const Options& opt) {
  Run run = prepare("derive", opt, true);
  if (kind_of(run.cfg, "dynamics") != "ito")
    throw ConfigError(run.cfg.where("dynamics", "kind") + "derive needs an ito dynamic");
  const ItoDynamics dyn = read_ito(run.cfg, "dynamics");
  const double x_ref = run.cfg.number_or("transform", "x_ref", run.cfg.number_or("dynamics", "x0", 1.0));
  const ErgodizabilityCheck check = check_ergodizable(dyn);
  json doc = {{"check", out::to_json(check)}};
  if (!check.admits) {
    doc["transform"] = nullptr;
    write_json(run.out / "transform.json", doc);
    write_manifest(run);
    std::ostringstream os;
    os << "derive: no ergodic transformation exists for this dynamic (residual " << check.residual
       << " exceeds tolerance " << check.tolerance << ")";
    throw DomainRefusal(os.str());
  }
  const TransformSpec f = derive_transform(dyn, x_ref);
  doc["transform"] = out::to_json(f);
  write_json(run.out / "transform.json", doc);
  std::cout << f.id() << ": " << f.describe() << '\n';
  write_manifest(run);
  return kOk;
}

int cmd_rank(const Options& opt) {
  Run run = prepare("rank", opt, true);
  const SimulationBudget b = read_budget(run.cfg);
  const TransformSpec f = read_transform(run.cfg, "left");
  const Ensemble left = build_process(run.cfg, "left", f, b, 1);
  const Ensemble right = build_process(run.cfg, "right", f, b, 1);
  const RankingResult r = rank(left, right, f);
  json doc = out::to_json(r);
  doc["transform"] = f.id();
  write_json(run.out / "ranking.json", doc);
  std::cout << to_string(r.verdict) << '\n';
  write_manifest(run);
  return kOk;
}

int cmd_calibrate(const Options& opt) {
  Run run = prepare("calibrate", opt, true);
  const SimulationBudget b = read_budget(run.cfg);
  const TransformSpec f = read_transform(run.cfg, "high");
  const Eigen::Index det_paths = any_stochastic(run.cfg, {"high", "low", "query"}) ? b.n_paths : 1;
  RepresentationFrame frame{build_process(run.cfg, "high", f, b, det_paths),
                            build_process(run.cfg, "low", f, b, det_paths), Thresholds{},
                            static_cast<int>(run.cfg.integer_or("calibrate", "iterations", kBisectionIterations))};
  const Ensemble query = build_process(run.cfg, "query", f, b, det_paths);
  const RepresentationValue v = representation_value(query, frame, f);
  json doc = {{"L", out::num(v.value)},
              {"case", to_string(v.which)},
              {"conclusive", v.conclusive},
              {"search", out::to_json(v.search)},
              {"transform", f.id()}};
  write_json(run.out / "calibration.json", doc);
  std::cout << "L = " << v.value << " (" << to_string(v.which) << ")\n";
  write_manifest(run);
  return kOk;
}

AgentSpec parse_agent(const Config& cfg, const std::string& text) {
  const auto open = text.find('(');
  const std::string name = text.substr(0, open);
  std::vector<std::string> args;
  if (open != std::string::npos) {
    if (text.back() != ')') throw ConfigError(cfg.where("ce", "agents") + "unbalanced parentheses in '" + text + "'");
    std::istringstream in(text.substr(open + 1, text.size() - open - 2));
    std::string a;
    while (std::getline(in, a, ':')) args.push_back(a);
  }
  auto bad = [&] { return ConfigError(cfg.where("ce", "agents") + "cannot parse agent '" + text + "'"); };
  try {
    if (name == "ergodicity" && args.empty()) return AgentSpec::ergodicity();
    if (name == "expected_wealth" && args.empty()) return AgentSpec::expected_wealth();
    if (name == "static_exponential" && args.size() == 1) return AgentSpec::static_exponential(std::stod(args[0]));
    if (name == "backward_induction" && (args.size() == 2 || args.size() == 3)) {
      Utility u;
      const std::string& k = args[1];
      if (k == "identity") u.kind = Utility::Kind::identity;
      else if (k == "log") u.kind = Utility::Kind::log;
      else if (k == "sqrt") u.kind = Utility::Kind::sqrt;
      else if (k == "neg_exponential" && args.size() == 3) {
        u.kind = Utility::Kind::neg_exponential;
        u.lambda = std::stod(args[2]);
      } else {
        throw bad();
      }
      return AgentSpec::backward_induction(std::stoi(args[0]), u);
    }
  } catch (const std::invalid_argument&) {
    throw bad();
  } catch (const std::out_of_range&) {
    throw bad();
  }
  throw bad();
}

int cmd_ce(const Options& opt) {
  Run run = prepare("ce", opt, false);
  const Config& c = run.cfg;
  const std::string mode = c.text_or("ce", "mode", "additive");
  if (mode != "additive" && mode != "multiplicative")
    throw ConfigError(c.where("ce", "mode") + "expected additive or multiplicative");
  GameConfig g = GameConfig::defaults(mode == "additive" ? GameMode::additive : GameMode::multiplicative);
  g.n_images = static_cast<int>(c.integer_or("ce", "n_images", g.n_images));
  g.images_per_game = static_cast<int>(c.integer_or("ce", "images_per_game", g.images_per_game));
  g.passive_repetitions = static_cast<int>(c.integer_or("ce", "passive_repetitions", g.passive_repetitions));
  g.n_trials = static_cast<int>(c.integer_or("ce", "n_trials", g.n_trials));
  g.settlement_draws = static_cast<int>(c.integer_or("ce", "settlement_draws", g.settlement_draws));
  g.image_effects = c.has("ce", "effects") ? c.numbers("ce", "effects")
                                           : GameConfig::default_effects(g.mode, g.n_images);
  g.initial_endowment = c.number_or("ce", "endowment", g.initial_endowment);
  g.update_per_trial = c.flag_or("ce", "update_per_trial", false);
  g.seed = seed_of(c);

  std::vector<AgentSpec> agents;
  std::istringstream in(c.text_or("ce", "agents", "ergodicity, static_exponential(1e-9)"));
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(' ');
    const auto e = item.find_last_not_of(' ');
    if (b == std::string::npos) continue;
    agents.push_back(parse_agent(c, item.substr(b, e - b + 1)));
  }
  if (agents.empty()) throw ConfigError(c.where("ce", "agents") + "no agents listed");

  const GameResult res = run_game(g, agents);
  {
    std::ofstream csv(run.out / "trials.csv");
    write_trials_csv(csv, res);
  }
  write_json(run.out / "summary.json", out::summary_json(res));
  for (std::size_t a = 0; a < agents.size(); ++a)
    std::cout << agents[a].label() << ": terminal wealth " << res.outcomes[a].terminal_wealth << '\n';
  write_manifest(run);
  return kOk;
}

int cmd_discount_fit(const Options& opt) {
  Run run = prepare("discount-fit", opt, false);
  fs::path input = opt.input;
  if (input.empty()) {
    if (!run.cfg.has("discount", "file")) throw ConfigError("discount-fit: --input or [discount] file is required");
    input = run.cfg.text("discount", "file");
    if (input.is_relative() && !opt.config_path.empty()) input = fs::path(opt.config_path).parent_path() / input;
  }
  run.inputs.push_back(input);
  std::istringstream in(file_bytes(input));
  std::string line;
  std::vector<std::pair<double, double>> rows;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty() || line.find_first_not_of(" \r") == std::string::npos) continue;
    const auto comma = line.find(',');
    try {
      if (comma == std::string::npos) throw std::invalid_argument("no comma");
      std::size_t used = 0;
      const double dt = std::stod(line.substr(0, comma), &used);
      const double v = std::stod(line.substr(comma + 1));
      rows.emplace_back(dt, v);
    } catch (const std::exception&) {
      if (n == 1) continue;  // header
      throw ConfigError(input.string() + ":" + std::to_string(n) + ": expected 'dt,value', got '" + line + "'");
    }
  }
  try {
    const DiscountFit fit = fit_discount(rows);
    write_json(run.out / "discount.json", out::to_json(fit));
    std::cout << "alpha = " << fit.alpha << ", beta = " << fit.beta << '\n';
  } catch (const PreconditionError& e) {
    throw ConfigError(input.string() + ": " + e.what());
  }
  write_manifest(run);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Growth-rate ergodicity diagnostics, ergodic transformations and gamble-choice games"};
  app.require_subcommand(1);
  app.set_version_flag("--version", ERGODIC_VERSION);

  Options opt;
  std::uint64_t seed = 0;
  int (*handler)(const Options&) = nullptr;

  auto add = [&](const char* name, const char* help, int (*fn)(const Options&)) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opt.config_path, "Config file");
    sub->add_option("--seed", seed, "Seed; overrides [budget] seed");
    sub->add_option("--out", opt.out_dir, "Output directory")->capture_default_str();
    sub->add_option("--budget", opt.budget, "N,dt,t_max; overrides [budget]");
    sub->callback([&, fn, sub] {
      handler = fn;
      if (sub->count("--seed")) opt.seed = seed;
    });
    return sub;
  };
  add("simulate", "Simulate an ensemble; writes ensemble.csv and a binary cache", cmd_simulate);
  add("diagnose", "Time-average versus ensemble growth; writes report.json and trace.csv", cmd_diagnose);
  add("derive", "Derive the ergodic transformation of an Ito dynamic; writes transform.json", cmd_derive);
  add("rank", "Rank [left] against [right]; writes ranking.json", cmd_rank);
  add("calibrate", "Representation value of [query] against anchors [high] and [low]", cmd_calibrate);
  add("ce", "Play the two-gamble choice game; writes trials.csv and summary.json", cmd_ce);
  add("discount-fit", "Fit V = beta exp(-alpha dt) to a CSV of dt,value", cmd_discount_fit)
      ->add_option("--input", opt.input, "CSV with columns dt,value");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    return handler(opt);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const PreconditionError& e) {
    std::cerr << "invalid request: " << e.what() << '\n';
    return kConfig;
  } catch (const DomainRefusal& e) {
    std::cerr << "refused: " << e.what() << '\n';
    return kRefusal;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumeric;
  }
}
