#pragma once

#include <cctype>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "adaoais/common.hpp"
#include "adaoais/montecarlo.hpp"
#include "adaoais/optimizers.hpp"
#include "adaoais/proposals.hpp"
#include "adaoais/targets.hpp"

namespace adaoais {

/// Target selection: a bundled preset by name, or an inline Gaussian.
struct TargetSpec {
  std::string preset;  // empty when inline_gaussian is set
  std::optional<GaussianSpec> inline_gaussian;
};

struct ProposalSpec {
  enum class Family { gaussian, beta };
  Family family = Family::gaussian;
  GaussianSpec init_gaussian;  // gaussian family initial state
  double alpha = 1.0, beta = 1.0;  // beta family initial state
};

struct OutputSpec {
  std::string dir;
  int thin = 1;
};

/// A fully described experiment: what to sample, what to estimate, how to
/// adapt, and where results go.
struct ExperimentConfig {
  std::string name = "custom";
  TargetSpec target;
  ProposalSpec proposal;
  Vec phi_lo, phi_hi;
  OptimizerSpec optimizer;
  int particles = 1000;
  std::int64_t iterations = 0;
  int runs = 1;
  std::uint64_t master_seed = 1;
  OutputSpec output;
};

inline Target make_target(const ExperimentConfig& cfg) {
  if (cfg.target.inline_gaussian) return gaussian_target(*cfg.target.inline_gaussian);
  return make_experiment_target(cfg.target.preset);
}

inline TestFunction make_phi(const ExperimentConfig& cfg) {
  return indicator_rect(cfg.phi_lo, cfg.phi_hi);
}

/// Initial packed parameters for the configured proposal family.
inline ParamVector initial_theta(const ExperimentConfig& cfg) {
  if (cfg.proposal.family == ProposalSpec::Family::gaussian) {
    GaussianProposal fam(static_cast<int>(cfg.proposal.init_gaussian.mean.size()));
    return fam.pack(cfg.proposal.init_gaussian.mean, cholesky_of(cfg.proposal.init_gaussian.cov));
  }
  return BetaProposal().pack(cfg.proposal.alpha, cfg.proposal.beta);
}

/// Full cross-field validation. Everything is checked before any sampling
/// or file output happens; failures raise ConfigError with the offending
/// field named.
inline void validate_config(const ExperimentConfig& cfg) {
  Target target = make_target(cfg);

  if (cfg.proposal.family == ProposalSpec::Family::gaussian) {
    if (cfg.proposal.init_gaussian.mean.size() != target.dim())
      throw ConfigError("proposal: initial mean dimension does not match the target");
    cholesky_of(cfg.proposal.init_gaussian.cov);
    if (cfg.proposal.init_gaussian.cov.rows() != target.dim())
      throw ConfigError("proposal: initial covariance dimension does not match the target");
    if (target.support().kind != Support::Kind::all_reals)
      throw ConfigError("proposal: the gaussian family needs a target supported on all of R^d");
  } else {
    if (target.dim() != 1 || target.support().kind != Support::Kind::unit_interval)
      throw ConfigError("proposal: the beta family needs a one-dimensional target on (0, 1)");
    if (!(cfg.proposal.alpha > 0.0) || !(cfg.proposal.beta > 0.0))
      throw ConfigError("proposal: beta shapes must be positive");
  }

  if (cfg.phi_lo.size() != target.dim() || cfg.phi_hi.size() != target.dim())
    throw ConfigError("phi: bound dimension does not match the target");
  for (Eigen::Index i = 0; i < cfg.phi_lo.size(); ++i)
    if (!(cfg.phi_lo[i] < cfg.phi_hi[i])) throw ConfigError("phi: requires lo < hi per coordinate");

  cfg.optimizer.validate();
  if (cfg.particles < 1) throw ConfigError("run: particles must be at least 1");
  if (cfg.iterations < 0) throw ConfigError("run: iterations must be non-negative");
  if (cfg.runs < 1) throw ConfigError("run: runs must be at least 1");
  if (cfg.output.thin < 1) throw ConfigError("output: thin must be at least 1");
}

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

/// Raw INI document: section -> key -> value, with strict syntax errors.
struct IniDoc {
  std::map<std::string, std::map<std::string, std::string>> sections;

  static IniDoc parse(const std::string& text) {
    IniDoc doc;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      line = trim(line);
      // comments are whole-line only: ';' separates matrix rows inside values
      if (line.empty() || line.front() == '#' || line.front() == ';') continue;
      if (line.front() == '[') {
        if (line.back() != ']')
          throw ConfigError("config line " + std::to_string(lineno) + ": unterminated section header");
        section = trim(line.substr(1, line.size() - 2));
        if (section.empty())
          throw ConfigError("config line " + std::to_string(lineno) + ": empty section name");
        doc.sections[section];
        continue;
      }
      const std::size_t eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
      auto& sec = doc.sections[section];
      if (sec.count(key))
        throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
      sec[key] = value;
    }
    return doc;
  }
};

inline double parse_double(const std::string& where, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return d;
  } catch (const std::exception&) {
    throw ConfigError(where + ": '" + v + "' is not a number");
  }
}

inline std::int64_t parse_int(const std::string& where, const std::string& v) {
  try {
    std::size_t pos = 0;
    const std::int64_t d = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return d;
  } catch (const std::exception&) {
    throw ConfigError(where + ": '" + v + "' is not an integer");
  }
}

inline std::uint64_t parse_u64(const std::string& where, const std::string& v) {
  try {
    std::size_t pos = 0;
    const std::uint64_t d = std::stoull(v, &pos);
    if (pos != v.size() || v.find('-') != std::string::npos) throw std::invalid_argument("");
    return d;
  } catch (const std::exception&) {
    throw ConfigError(where + ": '" + v + "' is not an unsigned integer");
  }
}

/// "a, b, c" -> vector.
inline Vec parse_vec(const std::string& where, const std::string& v) {
  std::vector<double> vals;
  std::string item;
  std::istringstream in(v);
  while (std::getline(in, item, ',')) vals.push_back(parse_double(where, trim(item)));
  if (vals.empty()) throw ConfigError(where + ": empty vector");
  Vec out(vals.size());
  for (std::size_t i = 0; i < vals.size(); ++i) out[i] = vals[i];
  return out;
}

/// "a, b; c, d" -> matrix, rows separated by ';'.
inline Mat parse_mat(const std::string& where, const std::string& v) {
  std::vector<Vec> rows;
  std::string row;
  std::istringstream in(v);
  while (std::getline(in, row, ';')) rows.push_back(parse_vec(where, trim(row)));
  if (rows.empty()) throw ConfigError(where + ": empty matrix");
  Mat out(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != out.cols()) throw ConfigError(where + ": ragged matrix rows");
    out.row(i) = rows[i];
  }
  return out;
}

/// One section's key/value view with unknown-key detection.
class SectionReader {
 public:
  SectionReader(const IniDoc& doc, const std::string& name) : name_(name) {
    auto it = doc.sections.find(name);
    if (it != doc.sections.end()) entries_ = &it->second;
  }

  bool present() const { return entries_ != nullptr; }

  std::optional<std::string> get(const std::string& key) {
    seen_.insert(key);
    if (!entries_) return std::nullopt;
    auto it = entries_->find(key);
    if (it == entries_->end()) return std::nullopt;
    return it->second;
  }

  std::string require(const std::string& key) {
    auto v = get(key);
    if (!v) throw ConfigError("[" + name_ + "]: missing required key '" + key + "'");
    return *v;
  }

  std::string where(const std::string& key) const { return "[" + name_ + "] " + key; }

  void finish() const {
    if (!entries_) return;
    for (const auto& [key, value] : *entries_)
      if (!seen_.count(key))
        throw ConfigError("[" + name_ + "]: unknown key '" + key + "'");
  }

 private:
  std::string name_;
  const std::map<std::string, std::string>* entries_ = nullptr;
  std::set<std::string> seen_;
};

}  // namespace detail

/// Parse an INI experiment description. Sections: [target], [proposal],
/// [phi], [optimizer], [run], [output]; a top-level `name` key labels the
/// experiment. Comment lines start with '#' or ';'; matrix values separate
/// rows with ';'. Unknown sections or keys are errors naming the offender.
inline ExperimentConfig parse_config(const std::string& text) {
  using namespace detail;
  const IniDoc doc = IniDoc::parse(text);

  static const std::set<std::string> known_sections = {"",          "target", "proposal",
                                                       "optimizer", "phi",    "run",
                                                       "output"};
  for (const auto& [section, keys] : doc.sections)
    if (!known_sections.count(section))
      throw ConfigError("config: unknown section '[" + section + "]'");

  ExperimentConfig cfg;

  SectionReader top(doc, "");
  if (auto v = top.get("name")) cfg.name = *v;
  top.finish();

  SectionReader target(doc, "target");
  {
    auto preset = target.get("preset");
    auto mean = target.get("mean");
    auto cov = target.get("cov");
    if (preset && (mean || cov))
      throw ConfigError("[target]: give either a preset or an inline mean/cov, not both");
    if (preset) {
      cfg.target.preset = *preset;
    } else if (mean && cov) {
      GaussianSpec g;
      g.mean = parse_vec(target.where("mean"), *mean);
      g.cov = parse_mat(target.where("cov"), *cov);
      cfg.target.inline_gaussian = g;
    } else {
      throw ConfigError("[target]: needs a preset, or an inline mean and cov");
    }
  }
  target.finish();

  SectionReader proposal(doc, "proposal");
  {
    const std::string family = proposal.require("family");
    if (family == "gaussian") {
      cfg.proposal.family = ProposalSpec::Family::gaussian;
      cfg.proposal.init_gaussian.mean = parse_vec(proposal.where("mean"), proposal.require("mean"));
      cfg.proposal.init_gaussian.cov = parse_mat(proposal.where("cov"), proposal.require("cov"));
    } else if (family == "beta") {
      cfg.proposal.family = ProposalSpec::Family::beta;
      cfg.proposal.alpha = parse_double(proposal.where("alpha"), proposal.require("alpha"));
      cfg.proposal.beta = parse_double(proposal.where("beta"), proposal.require("beta"));
    } else {
      throw ConfigError("[proposal]: unknown family '" + family + "' (expected gaussian or beta)");
    }
  }
  proposal.finish();

  SectionReader phi(doc, "phi");
  cfg.phi_lo = parse_vec(phi.where("lo"), phi.require("lo"));
  cfg.phi_hi = parse_vec(phi.where("hi"), phi.require("hi"));
  phi.finish();

  SectionReader opt(doc, "optimizer");
  {
    cfg.optimizer.kind = OptimizerSpec::kind_from_name(opt.require("kind"));
    const std::string schedule = opt.get("schedule").value_or("constant");
    if (schedule == "constant")
      cfg.optimizer.schedule.kind = Schedule::Kind::constant;
    else if (schedule == "inv_sqrt")
      cfg.optimizer.schedule.kind = Schedule::Kind::inv_sqrt;
    else
      throw ConfigError("[optimizer]: unknown schedule '" + schedule +
                        "' (expected constant or inv_sqrt)");
    cfg.optimizer.schedule.base = parse_double(opt.where("rate"), opt.require("rate"));
    if (auto v = opt.get("beta1")) cfg.optimizer.beta1 = parse_double(opt.where("beta1"), *v);
    if (auto v = opt.get("beta2")) cfg.optimizer.beta2 = parse_double(opt.where("beta2"), *v);
    if (auto v = opt.get("eps")) cfg.optimizer.eps = parse_double(opt.where("eps"), *v);
  }
  opt.finish();

  SectionReader run(doc, "run");
  {
    const std::int64_t particles = parse_int(run.where("particles"), run.require("particles"));
    if (particles < 1 || particles > 1'000'000'000)
      throw ConfigError("[run] particles: out of range");
    cfg.particles = static_cast<int>(particles);
    cfg.iterations = parse_int(run.where("iterations"), run.require("iterations"));
    if (auto v = run.get("runs")) cfg.runs = static_cast<int>(parse_int(run.where("runs"), *v));
    if (auto v = run.get("master_seed")) cfg.master_seed = parse_u64(run.where("master_seed"), *v);
  }
  run.finish();

  SectionReader output(doc, "output");
  if (auto v = output.get("dir")) cfg.output.dir = *v;
  if (auto v = output.get("thin"))
    cfg.output.thin = static_cast<int>(parse_int(output.where("thin"), *v));
  output.finish();

  if (cfg.output.dir.empty()) cfg.output.dir = "out/" + cfg.name;
  validate_config(cfg);
  return cfg;
}

namespace detail {

inline ExperimentConfig gaussian_experiment_base() {
  ExperimentConfig cfg;
  cfg.target.preset = "gaussian";
  cfg.proposal.family = ProposalSpec::Family::gaussian;
  cfg.proposal.init_gaussian.mean = Vec{{10.0, -10.0}};
  cfg.proposal.init_gaussian.cov = 40.0 * Mat::Identity(2, 2);
  cfg.phi_lo = Vec{{-1.0, -1.0}};
  cfg.phi_hi = Vec{{1.0, 1.0}};
  cfg.particles = 1000;
  cfg.runs = 10;
  cfg.master_seed = 1;
  return cfg;
}

inline ExperimentConfig logitnormal_experiment_base() {
  ExperimentConfig cfg;
  cfg.target.preset = "logitnormal";
  cfg.proposal.family = ProposalSpec::Family::beta;
  cfg.proposal.alpha = 1.0;
  cfg.proposal.beta = 1.0;
  cfg.phi_lo = Vec{{0.25}};
  cfg.phi_hi = Vec{{0.75}};
  cfg.particles = 1000;
  cfg.master_seed = 1;
  return cfg;
}

}  // namespace detail

inline std::vector<std::string> preset_names() {
  return {"exp1-sgd",       "exp1-adam",      "exp1-adagrad",      "exp1-adam-fast",
          "exp1-adagrad-fast", "exp2-adam",   "exp2-adagrad",      "exp2-adam-fast",
          "exp2-adagrad-fast", "exp3-adam",   "exp3-adagrad",      "exp3-adam-fast",
          "exp3-adagrad-fast"};
}

/// Bundled experiment presets.
///
/// exp1-*: Gaussian target, Gaussian proposal from N([10, -10], 40 I),
///         phi = indicator of [-1, 1]^2, N = 1000.
///   exp1-sgd       sgd, t_k = 0.1 / sqrt(k + 1), T = 10000 (unstable on
///                  purpose: seeds blow up; 0.1 on the batch-averaged
///                  gradient equals 1e-4 on the batch sum at N = 1000)
///   exp1-adam      adam, t = 0.01, T = 30000
///   exp1-adagrad   adagrad, t = 0.1, T = 30000
///   *-fast         T = 10000
/// exp2-*: equal-weight Gaussian mixture target, otherwise as exp1,
///         T = 30000, 200 runs; *-fast: N = 500, T = 3000, 50 runs.
/// exp3-*: logit-normal target, Beta(1, 1) proposal, phi = indicator of
///         [0.25, 0.75], T = 10000, 100 runs; *-fast: T = 2000, 20 runs.
inline ExperimentConfig preset_config(const std::string& name) {
  using detail::gaussian_experiment_base;
  using detail::logitnormal_experiment_base;

  ExperimentConfig cfg;
  if (name.rfind("exp1-", 0) == 0) {
    cfg = gaussian_experiment_base();
    cfg.iterations = 30000;
    cfg.output.thin = 10;
    if (name == "exp1-sgd") {
      cfg.optimizer.kind = OptimizerSpec::Kind::sgd;
      cfg.optimizer.schedule = Schedule::InvSqrt(0.1);
      cfg.iterations = 10000;
    } else if (name == "exp1-adam" || name == "exp1-adam-fast") {
      cfg.optimizer.kind = OptimizerSpec::Kind::adam;
      cfg.optimizer.schedule = Schedule::Constant(0.01);
      if (name == "exp1-adam-fast") cfg.iterations = 10000;
    } else if (name == "exp1-adagrad" || name == "exp1-adagrad-fast") {
      cfg.optimizer.kind = OptimizerSpec::Kind::adagrad;
      cfg.optimizer.schedule = Schedule::Constant(0.1);
      if (name == "exp1-adagrad-fast") cfg.iterations = 10000;
    } else {
      throw ConfigError("unknown preset '" + name + "'");
    }
  } else if (name.rfind("exp2-", 0) == 0) {
    cfg = gaussian_experiment_base();
    cfg.target.preset = "mixture";
    cfg.iterations = 30000;
    cfg.runs = 200;
    cfg.output.thin = 10;
    const bool fast = name.rfind("-fast") != std::string::npos;
    if (fast) {
      cfg.particles = 500;
      cfg.iterations = 3000;
      cfg.runs = 50;
      cfg.output.thin = 1;
    }
    if (name == "exp2-adam" || name == "exp2-adam-fast") {
      cfg.optimizer.kind = OptimizerSpec::Kind::adam;
      cfg.optimizer.schedule = Schedule::Constant(0.01);
    } else if (name == "exp2-adagrad" || name == "exp2-adagrad-fast") {
      cfg.optimizer.kind = OptimizerSpec::Kind::adagrad;
      cfg.optimizer.schedule = Schedule::Constant(0.1);
    } else {
      throw ConfigError("unknown preset '" + name + "'");
    }
  } else if (name.rfind("exp3-", 0) == 0) {
    cfg = logitnormal_experiment_base();
    cfg.iterations = 10000;
    cfg.runs = 100;
    cfg.output.thin = 10;
    const bool fast = name.rfind("-fast") != std::string::npos;
    if (fast) {
      cfg.iterations = 2000;
      cfg.runs = 20;
      cfg.output.thin = 1;
    }
    if (name == "exp3-adam" || name == "exp3-adam-fast") {
      cfg.optimizer.kind = OptimizerSpec::Kind::adam;
      cfg.optimizer.schedule = Schedule::Constant(0.01);
    } else if (name == "exp3-adagrad" || name == "exp3-adagrad-fast") {
      cfg.optimizer.kind = OptimizerSpec::Kind::adagrad;
      cfg.optimizer.schedule = Schedule::Constant(0.1);
    } else {
      throw ConfigError("unknown preset '" + name + "'");
    }
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  cfg.name = name;
  cfg.output.dir = "out/" + name;
  validate_config(cfg);
  return cfg;
}

}  // namespace adaoais
