#include "mtgw/mtgw.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace mtgw;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kUsage = 1, kInvalidSpec = 2, kInfeasible = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Infeasible : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string command;
  std::string kind;
  std::string spec_path;
  std::uint64_t seed = 1;
  int cap = 6;
  int root = 1;  // 1-based on the command line
  int n_min = 4;
  int n_max = 12;
  int grid = 5;
  int count = 10;
  int probe_size = 3;
  std::string census;
  std::string law = "1,0,1";  // D,lo,hi of a uniform box
  std::string out;
  std::string format = "csv";
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

OffspringSpec load_spec(const std::string& path) {
  if (path.empty()) throw UsageError("--spec is required");
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw SpecError(std::string("malformed JSON: ") + e.what());
  }
  try {
    return spec_from_json(j);
  } catch (const SpecError&) {
    throw;
  } catch (const std::exception& e) {
    throw SpecError(e.what());
  }
}

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(10) << x;
  return os.str();
}

std::string join(const IntVector& v, char sep = ' ') {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += sep;
    s += std::to_string(v[i]);
  }
  return s;
}

IntVector parse_ints(const std::string& text) {
  IntVector out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw UsageError("expected a comma-separated integer list, got '" + text + "'");
    }
  }
  return out;
}

LatticeDistribution parse_law(const std::string& text) {
  auto v = parse_ints(text);
  if (v.size() != 3 || v[0] < 1 || v[1] >= v[2]) throw UsageError("--law expects D,lo,hi with lo < hi");
  return LatticeDistribution::uniform_box(static_cast<std::size_t>(v[0]), v[1], v[2]);
}

// Table with a metadata header, written as CSV or as a JSON object.
class Report {
 public:
  Report(const RunConfig& cfg, std::vector<std::string> columns) : cfg_(cfg), columns_(std::move(columns)) {}

  void meta(const std::string& key, const std::string& value) { meta_.emplace_back(key, value); }
  void row(std::vector<std::string> r) { rows_.push_back(std::move(r)); }
  void footer(const std::string& line) { footer_.push_back(line); }

  void write(std::ostream& os, std::uint64_t hash) const {
    if (cfg_.format == "json") {
      json j;
      j["command"] = cfg_.command;
      j["seed"] = cfg_.seed;
      j["config_hash"] = hex(hash);
      for (const auto& [k, v] : meta_) j["meta"][k] = v;
      j["columns"] = columns_;
      j["rows"] = rows_;
      j["summary"] = footer_;
      os << j.dump(1) << "\n";
      return;
    }
    os << "# mtgw " << cfg_.command << (cfg_.kind.empty() ? "" : " " + cfg_.kind) << "\n";
    os << "# seed: " << cfg_.seed << "\n";
    os << "# config: " << hex(hash) << "\n";
    for (const auto& [k, v] : meta_) os << "# " << k << ": " << v << "\n";
    for (std::size_t i = 0; i < columns_.size(); ++i) os << (i ? "," : "") << columns_[i];
    os << "\n";
    for (const auto& r : rows_) {
      for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
      os << "\n";
    }
    for (const auto& f : footer_) os << "# " << f << "\n";
  }

 private:
  const RunConfig& cfg_;
  std::vector<std::string> columns_;
  std::vector<std::pair<std::string, std::string>> meta_;
  std::vector<std::vector<std::string>> rows_;
  std::vector<std::string> footer_;
};

std::string describe_vector(const Eigen::VectorXd& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? " " : "") + fmt(v(i));
  return s;
}

template <class Vec>
std::string describe_rationals(const Vec& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + v[i].get_str();
  return s;
}

Type root_type(const RunConfig& cfg, const OffspringSpec& spec) {
  if (cfg.root < 1 || cfg.root > spec.types()) throw UsageError("--root must lie in 1..d");
  return cfg.root - 1;
}

// ---------------------------------------------------------------------------

Report cmd_validate(const RunConfig& cfg) {
  auto spec = load_spec(cfg.spec_path);
  auto c = classify(spec);
  Report rep(cfg, {"property", "value"});
  rep.row({"d", std::to_string(spec.types())});
  auto m = mean_matrix(spec);
  std::string ms;
  for (std::size_t i = 0; i < m.size(); ++i) ms += (i ? "; " : "") + describe_rationals(m[i]);
  rep.row({"M", ms});
  if (c.primitive) {
    auto sd = perron(spec);
    rep.row({"rho", sd.exact ? sd.exact->rho.get_str() : fmt(sd.rho)});
    rep.row({"a", sd.exact ? describe_rationals(sd.exact->a) : describe_vector(sd.a)});
    rep.row({"a_star", sd.exact ? describe_rationals(sd.exact->a_star) : describe_vector(sd.a_star)});
  }
  rep.row({"criticality", to_string(c.criticality)});
  rep.row({"primitive", c.primitive ? "yes" : "no"});
  rep.row({"aperiodic", c.aperiodic ? "yes" : "no"});
  rep.row({"singular", c.non_singular ? "no" : "yes"});
  rep.row({"H1", c.h1() ? "yes" : "no"});
  rep.row({"H2", c.h2() ? "yes" : "no"});
  std::string verdict = to_string(c.criticality);
  verdict += c.primitive ? ", primitive" : ", not primitive";
  verdict += c.aperiodic ? ", aperiodic" : ", periodic";
  verdict += c.non_singular ? ", non-singular" : ", singular";
  rep.footer(verdict);
  return rep;
}

Report cmd_progeny(const RunConfig& cfg) {
  auto spec = load_spec(cfg.spec_path);
  const Type r = root_type(cfg, spec);
  if (cfg.cap < 1 || cfg.cap > kDefaultWalkCap)
    throw UsageError("--cap must lie in 1.." + std::to_string(kDefaultWalkCap));
  const int d = spec.types();
  std::vector<std::string> cols;
  for (int j = 1; j <= d; ++j) cols.push_back("k" + std::to_string(j));
  for (const char* c : {"enumeration", "walks", "numerator", "denominator", "status"}) cols.push_back(c);
  Report rep(cfg, cols);
  rep.meta("root", std::to_string(cfg.root));
  rep.meta("cap", std::to_string(cfg.cap));
  int mismatches = 0;
  IntVector k(static_cast<std::size_t>(d), 0);
  // all k with |k| <= cap, lexicographic
  while (true) {
    if (total(k) <= cfg.cap && total(k) > 0) {
      Rational walks = progeny_via_walks(spec, r, k, cfg.cap);
      std::optional<Rational> enumerated;
      if (total(k) <= kDefaultEnumerationCap) enumerated = enumerate_progeny(spec, r, k);
      if (walks > 0 || (enumerated && *enumerated > 0)) {
        std::vector<std::string> row;
        for (int v : k) row.push_back(std::to_string(v));
        row.push_back(enumerated ? enumerated->get_str() : "NA");
        row.push_back(walks.get_str());
        row.push_back(walks.get_num().get_str());
        row.push_back(walks.get_den().get_str());
        std::string status = !enumerated ? "walks-only" : *enumerated == walks ? "equal" : "DIFFER";
        if (status == "DIFFER") ++mismatches;
        row.push_back(status);
        rep.row(std::move(row));
      }
    }
    std::size_t j = 0;
    while (j < k.size() && k[j] == cfg.cap) k[j++] = 0;
    if (j == k.size()) break;
    ++k[j];
  }
  rep.footer(std::string(mismatches ? "FAIL" : "PASS") + " engines agree");
  return rep;
}

Report cmd_sample(const RunConfig& cfg) {
  auto spec = load_spec(cfg.spec_path);
  const Type r = root_type(cfg, spec);
  if (cfg.count < 1) throw UsageError("--count must be positive");
  Rng rng(cfg.seed);
  // one tree per line in the marked-tree JSON format
  Report rep(cfg, {"tree"});
  auto emit = [&](const MarkedTree& t) { rep.row({to_json(t).dump()}); };
  if (!cfg.census.empty()) {
    IntVector k = parse_ints(cfg.census);
    if (static_cast<int>(k.size()) != spec.types()) throw UsageError("--census needs d entries");
    auto batch = sample_conditioned_batch(spec, r, k, static_cast<std::size_t>(cfg.count), 10'000'000, rng);
    for (const auto& t : batch.trees) emit(t);
    rep.meta("census", join(k));
    rep.footer("acceptance rate " + fmt(batch.acceptance_rate()));
  } else {
    GwSampler sampler(spec);
    int overflow = 0;
    for (int i = 0; i < cfg.count; ++i) {
      auto t = sampler.try_sample(r, 100'000, rng);
      if (t)
        emit(*t);
      else
        ++overflow;
    }
    rep.footer(std::to_string(overflow) + " draws exceeded the node budget");
  }
  return rep;
}

// ---------------------------------------------------------------------------
// experiments

ExperimentPlan convergence_plan(const RunConfig& cfg, const OffspringSpec& spec) {
  ExperimentPlan plan{spec, perron(spec), 0, 1, 1, 1, {}, {}};
  require_critical(plan.spectral);
  plan.spectral.require_exact();
  plan.root = root_type(cfg, spec);
  plan.scale = spec.types();
  plan.n_min = cfg.n_min;
  plan.n_max = cfg.n_max;
  plan.probes = enumerate_probes(spec.types(), plan.root, cfg.probe_size);
  for (int j = 0; j < spec.types(); ++j) plan.key_offsets.push_back(unit_vector(spec.types(), j));
  return plan;
}

Report exp_convergence(const RunConfig& cfg) {
  auto spec = load_spec(cfg.spec_path);
  auto plan = convergence_plan(cfg, spec);
  plan.key_offsets.clear();
  auto table = convergence_experiment(plan);
  Report rep(cfg, {"probe", "n", "k", "conditioned", "kesten", "delta"});
  for (const auto& r : table.rows)
    rep.row({describe(plan.probes[r.probe]), std::to_string(r.n), join(r.k), fmt(r.conditioned.get_d()),
             fmt(r.kesten.get_d()), fmt(r.delta.get_d())});
  if (table.rows.empty()) throw Infeasible("no feasible census in the n range");
  for (int n : table.skipped) rep.footer("skipped n = " + std::to_string(n));
  for (const auto& s : table.summary)
    rep.footer(s.label + " decreasing=" + (s.decreasing ? "yes" : "no") + " final_delta=" + fmt(s.final_delta.get_d()));
  rep.footer(std::string(table.all_decreasing() ? "PASS" : "FAIL") + " delta decreasing for every probe");
  return rep;
}

Report exp_keyratio(const RunConfig& cfg) {
  auto spec = load_spec(cfg.spec_path);
  auto plan = convergence_plan(cfg, spec);
  plan.probes.clear();
  auto table = convergence_experiment(plan);
  Report rep(cfg, {"n", "k", "b", "ratio", "error"});
  std::map<IntVector, std::vector<double>> errors;
  for (const auto& r : table.key_ratios) {
    double e = std::fabs(r.ratio.get_d() - 1);
    errors[r.b].push_back(e);
    rep.row({std::to_string(r.n), join(r.k), join(r.b), fmt(r.ratio.get_d()), fmt(e)});
  }
  if (table.key_ratios.empty()) throw Infeasible("no feasible census in the n range");
  bool shrinks = true;
  for (const auto& [b, e] : errors) shrinks = shrinks && e.back() <= e.front();
  rep.footer(std::string(shrinks ? "PASS" : "FAIL") + " |ratio - 1| smaller at the largest n than at the smallest");
  return rep;
}

std::vector<int> doublings(int lo, int hi) {
  std::vector<int> out;
  for (int n = std::max(lo, 1); n <= hi; n *= 2) out.push_back(n);
  return out;
}

Report exp_gnedenko(const RunConfig& cfg) {
  auto f = parse_law(cfg.law);
  if (cfg.grid < 1) throw UsageError("--grid must be positive");
  auto grid = theta_grid(f.dimension(), -1, 1, cfg.grid);
  Report rep(cfg, {"n", "sup", "theta", "argmax", "off_support"});
  rep.meta("law", "uniform box " + cfg.law);
  rep.meta("grid", std::to_string(cfg.grid) + " per axis on [-1,1]");
  std::vector<double> sups;
  for (int n : doublings(cfg.n_min, cfg.n_max)) {
    auto r = gnedenko_discrepancy(f, grid, n);
    sups.push_back(r.sup);
    rep.row({std::to_string(n), fmt(r.sup), describe_vector(grid[r.theta_index]), join(r.argmax), fmt(r.off_support)});
  }
  if (f.dimension() == 1 && cfg.n_max >= 100) {
    Eigen::VectorXd zero = Eigen::VectorXd::Zero(1);
    IntVector s = mean_rounded(f, 100);
    auto p = gnedenko_point(f, zero, 100, s);
    rep.footer("spot theta=0 n=100 s=" + join(s) + " exact=" + fmt(p.exact_scaled) + " gaussian=" + fmt(p.gaussian) +
               " error=" + fmt(p.error()));
  }
  bool dec = true;
  for (std::size_t i = 1; i < sups.size(); ++i) dec = dec && sups[i] < sups[i - 1];
  rep.footer(std::string(dec ? "PASS" : "FAIL") + " sup decreases at each doubling");
  return rep;
}

Report exp_strongratio(const RunConfig& cfg) {
  auto f = parse_law(cfg.law);
  Report rep(cfg, {"n", "s_n", "b", "ratio", "error"});
  rep.meta("law", "uniform box " + cfg.law);
  rep.meta("m", "1");
  std::map<IntVector, std::vector<double>> errors;
  for (int n : doublings(cfg.n_min, cfg.n_max)) {
    IntVector s = mean_rounded(f, n);
    const auto dim = f.dimension();
    std::vector<IntVector> offsets{IntVector(dim, 0)};
    for (std::size_t j = 0; j < dim; ++j) offsets.push_back(unit_vector(static_cast<int>(dim), static_cast<int>(j)));
    for (const auto& b : offsets) {
      Rational r = strong_ratio(f, n, 1, b, s);
      double e = std::fabs(r.get_d() - 1);
      errors[b].push_back(e);
      rep.row({std::to_string(n), join(s), join(b), fmt(r.get_d()), fmt(e)});
    }
  }
  bool shrinks = true;
  for (const auto& [b, e] : errors) shrinks = shrinks && !e.empty() && e.back() <= e.front();
  rep.footer(std::string(shrinks ? "PASS" : "FAIL") + " error smaller at the largest n than at the smallest");
  return rep;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-type Galton-Watson trees conditioned on their census"};
  app.require_subcommand(1);
  RunConfig cfg;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--spec", cfg.spec_path, "offspring spec JSON");
    sub->add_option("--seed", cfg.seed, "RNG seed");
    sub->add_option("--out", cfg.out, "output file (default stdout)");
    sub->add_option("--format", cfg.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--root", cfg.root, "root type, 1-based");
  };
  auto* validate = app.add_subcommand("validate", "classify an offspring spec");
  common(validate);
  auto* progeny = app.add_subcommand("progeny", "exact census law table, both engines");
  common(progeny);
  progeny->add_option("--cap", cfg.cap, "largest |k|");
  auto* sample = app.add_subcommand("sample", "sample GW trees, optionally conditioned on a census");
  common(sample);
  sample->add_option("--count", cfg.count, "number of trees");
  sample->add_option("--census", cfg.census, "k_1,...,k_d to condition on");
  auto* experiment = app.add_subcommand("experiment", "convergence | keyratio | gnedenko | strongratio");
  common(experiment);
  experiment->add_option("kind", cfg.kind, "experiment kind")->required();
  experiment->add_option("--n-min", cfg.n_min, "smallest n");
  experiment->add_option("--n-max", cfg.n_max, "largest n");
  experiment->add_option("--grid", cfg.grid, "theta points per axis");
  experiment->add_option("--law", cfg.law, "uniform box D,lo,hi for walk experiments");
  experiment->add_option("--probe-size", cfg.probe_size, "max nodes in a probe base");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  cfg.command = app.get_subcommands().front()->get_name();

  try {
    if (cfg.n_min < 1 || cfg.n_max < cfg.n_min || cfg.probe_size < 1) throw UsageError("bad n range or probe size");
    Report rep = [&] {
      if (cfg.command == "validate") return cmd_validate(cfg);
      if (cfg.command == "progeny") return cmd_progeny(cfg);
      if (cfg.command == "sample") return cmd_sample(cfg);
      if (cfg.kind == "convergence") return exp_convergence(cfg);
      if (cfg.kind == "keyratio") return exp_keyratio(cfg);
      if (cfg.kind == "gnedenko") return exp_gnedenko(cfg);
      if (cfg.kind == "strongratio") return exp_strongratio(cfg);
      throw UsageError("unknown experiment kind '" + cfg.kind + "'");
    }();
    // the hash covers every option plus the spec bytes
    std::ostringstream key;
    key << cfg.command << '|' << cfg.kind << '|' << cfg.seed << '|' << cfg.cap << '|' << cfg.root << '|' << cfg.n_min
        << '|' << cfg.n_max << '|' << cfg.grid << '|' << cfg.count << '|' << cfg.probe_size << '|' << cfg.census << '|'
        << cfg.law << '|' << cfg.format << '|';
    if (!cfg.spec_path.empty()) key << read_file(cfg.spec_path);
    const auto hash = fnv1a(key.str());
    if (cfg.out.empty()) {
      rep.write(std::cout, hash);
    } else {
      std::ofstream os(cfg.out);
      if (!os) throw UsageError("cannot write " + cfg.out);
      rep.write(os, hash);
    }
    return kOk;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const SpecError& e) {
    std::cerr << "invalid spec: " << e.what();
    if (e.law_index >= 0) std::cerr << " (law " << e.law_index + 1 << ")";
    std::cerr << "\n";
    return kInvalidSpec;
  } catch (const std::exception& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kInfeasible;
  }
}
