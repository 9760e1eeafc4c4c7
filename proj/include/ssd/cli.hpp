#pragma once

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "ssd/channel.hpp"
#include "ssd/complexity.hpp"
#include "ssd/harness.hpp"

#ifndef SSD_VERSION
#define SSD_VERSION "0.0.0"
#endif

namespace ssd {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Instance files
// ---------------------------------------------------------------------------
//
//   n m
//   H (n rows of m reals)
//   y (n reals)
//   alphabet l sigma2
//
// Whitespace separated; numbers are parsed locale-independently.

namespace detail {

class TokenReader {
 public:
  explicit TokenReader(std::istream& in) : in_(in) {}

  std::string next(const std::string& field) {
    std::string tok;
    if (!(in_ >> tok)) throw ParseError(field + ": unexpected end of input");
    return tok;
  }

  double real(const std::string& field) {
    const std::string tok = next(field);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size())
      throw ParseError(field + ": expected a real number, got '" + tok + "'");
    return v;
  }

  long long integer(const std::string& field) {
    const std::string tok = next(field);
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size())
      throw ParseError(field + ": expected an integer, got '" + tok + "'");
    return v;
  }

  bool exhausted() {
    std::string tok;
    return !(in_ >> tok);
  }

 private:
  std::istream& in_;
};

}  // namespace detail

inline IlsInstance parse_instance(std::istream& in) {
  detail::TokenReader rd(in);
  const long long n = rd.integer("n");
  const long long m = rd.integer("m");
  if (m < 1 || n < m) throw ParseError(fmt::format("m: requires 1 <= m <= n (got n={}, m={})", n, m));
  if (n * m > 100'000'000) throw ParseError("n: instance too large");
  IlsInstance inst;
  inst.h.resize(n, m);
  for (long long i = 0; i < n; ++i)
    for (long long j = 0; j < m; ++j) {
      const std::string field = fmt::format("H[{}][{}]", i, j);
      const double v = rd.real(field);
      if (!std::isfinite(v)) throw ParseError(field + ": not finite");
      inst.h(i, j) = v;
    }
  inst.y.resize(n);
  for (long long i = 0; i < n; ++i) {
    const std::string field = fmt::format("y[{}]", i);
    const double v = rd.real(field);
    if (!std::isfinite(v)) throw ParseError(field + ": not finite");
    inst.y[i] = v;
  }
  const std::string label = rd.next("alphabet");
  try {
    inst.alphabet = Alphabet::parse(label);
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(std::string("alphabet: ") + e.what());
  }
  const long long l = rd.integer("l");
  if (l < 0 || l > m) throw ParseError(fmt::format("l: requires 0 <= l <= m (got {})", l));
  inst.l = static_cast<int>(l);
  inst.sigma2 = rd.real("sigma2");
  if (!(inst.sigma2 >= 0.0) || !std::isfinite(inst.sigma2)) throw ParseError("sigma2: must be finite and >= 0");
  if (!rd.exhausted()) throw ParseError("trailing: unexpected content after sigma2");
  return inst;
}

inline IlsInstance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("input: cannot open '" + path + "'");
  return parse_instance(in);
}

inline void write_instance(std::ostream& out, const IlsInstance& inst) {
  out << inst.n() << ' ' << inst.m() << '\n';
  for (int i = 0; i < inst.n(); ++i) {
    for (int j = 0; j < inst.m(); ++j) out << (j ? " " : "") << fmt_double(inst.h(i, j));
    out << '\n';
  }
  for (int i = 0; i < inst.n(); ++i) out << (i ? " " : "") << fmt_double(inst.y[i]);
  out << '\n' << inst.alphabet.label() << ' ' << inst.l << ' ' << fmt_double(inst.sigma2) << '\n';
}

// ---------------------------------------------------------------------------
// Grids
// ---------------------------------------------------------------------------

inline double parse_real(const std::string& s, const std::string& what) {
  std::string t = s;
  while (!t.empty() && std::isspace(static_cast<unsigned char>(t.front()))) t.erase(t.begin());
  while (!t.empty() && std::isspace(static_cast<unsigned char>(t.back()))) t.pop_back();
  if (t == "inf" || t == "+inf") return std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size())
    throw InvalidArgument(what + ": cannot parse '" + s + "' as a number");
  return v;
}

/// "a:b:step" (inclusive), "a,b,c" or a single value.
inline std::vector<double> parse_grid(const std::string& spec, const std::string& what = "grid") {
  std::vector<double> out;
  if (spec.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    std::string part;
    while (std::getline(ss, part, ':')) parts.push_back(part);
    if (parts.size() != 3) throw InvalidArgument(what + ": range must look like start:stop:step");
    const double a = parse_real(parts[0], what), b = parse_real(parts[1], what), step = parse_real(parts[2], what);
    if (!(step > 0.0) || !std::isfinite(a) || !std::isfinite(b) || b < a)
      throw InvalidArgument(what + ": need finite start <= stop and step > 0");
    const auto count = static_cast<long long>(std::floor((b - a) / step + 1e-9)) + 1;
    if (count > 100000) throw InvalidArgument(what + ": too many grid points");
    for (long long i = 0; i < count; ++i) out.push_back(a + static_cast<double>(i) * step);
    return out;
  }
  std::stringstream ss(spec);
  std::string part;
  while (std::getline(ss, part, ',')) out.push_back(parse_real(part, what));
  if (out.empty()) throw InvalidArgument(what + ": empty grid");
  return out;
}

inline std::vector<int> parse_int_grid(const std::string& spec, const std::string& what) {
  std::vector<int> out;
  for (double v : parse_grid(spec, what)) {
    if (v != std::floor(v) || std::abs(v) > 1e6) throw InvalidArgument(what + ": expected integers");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ','))
    if (!part.empty()) out.push_back(part);
  return out;
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct RunConfig {
  std::string command = "decode";

  // single instance / generation
  int m = 10;
  int n = 0;  ///< 0: n = m
  int l = 3;
  std::string alphabet = "binary01";
  double snr_db = 10.0;
  std::uint64_t seed = 1;
  std::string input;  ///< instance file for decode

  // decoders
  std::string decoder = "sparse";
  bool safe_mode = false;
  std::uint64_t bound_threshold = 64;
  double one_minus_eps = 0.99;

  // grids
  std::vector<int> m_grid, n_grid, l_grid;
  std::vector<double> snr_grid;
  std::vector<std::string> decoders, alphabets;
  std::uint64_t trials = 100;
  bool fixed_radius = false;
  bool compare_theory = false;
  bool infinite_radius = false;
  unsigned workers = 0;

  // channel
  int taps = 20;
  int training = 6;
  int m_sharp = 3;
  std::vector<std::string> methods;
  std::string training_kind = "min_condition";
  std::string detection_order = "fincke_pohst";

  std::string output_dir;
  int verbosity = 0;

  int effective_n() const { return n == 0 ? m : n; }
  std::vector<int> effective_m_grid() const { return m_grid.empty() ? std::vector<int>{m} : m_grid; }
  std::vector<int> effective_l_grid() const { return l_grid.empty() ? std::vector<int>{l} : l_grid; }
  std::vector<double> effective_snr_grid() const { return snr_grid.empty() ? std::vector<double>{snr_db} : snr_grid; }
  std::vector<std::string> effective_decoders() const { return decoders.empty() ? std::vector<std::string>{decoder} : decoders; }
  std::vector<std::string> effective_alphabets() const {
    return alphabets.empty() ? std::vector<std::string>{alphabet} : alphabets;
  }
};

namespace detail {

inline Json real_to_json(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline double real_from_json(const Json& j, const std::string& key) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return parse_real(j.get<std::string>(), key);
  throw ParseError(key + ": expected a number");
}

}  // namespace detail

inline Json to_json(const RunConfig& c) {
  Json j;
  j["command"] = c.command;
  j["m"] = c.m;
  j["n"] = c.n;
  j["l"] = c.l;
  j["alphabet"] = c.alphabet;
  j["snr_db"] = detail::real_to_json(c.snr_db);
  j["seed"] = c.seed;
  j["input"] = c.input;
  j["decoder"] = c.decoder;
  j["safe_mode"] = c.safe_mode;
  j["bound_threshold"] = c.bound_threshold;
  j["one_minus_eps"] = c.one_minus_eps;
  j["m_grid"] = c.m_grid;
  j["n_grid"] = c.n_grid;
  j["l_grid"] = c.l_grid;
  Json snr = Json::array();
  for (double v : c.snr_grid) snr.push_back(detail::real_to_json(v));
  j["snr_grid"] = snr;
  j["decoders"] = c.decoders;
  j["alphabets"] = c.alphabets;
  j["trials"] = c.trials;
  j["fixed_radius"] = c.fixed_radius;
  j["compare_theory"] = c.compare_theory;
  j["infinite_radius"] = c.infinite_radius;
  j["taps"] = c.taps;
  j["training"] = c.training;
  j["m_sharp"] = c.m_sharp;
  j["methods"] = c.methods;
  j["training_kind"] = c.training_kind;
  j["detection_order"] = c.detection_order;
  j["output_dir"] = c.output_dir;
  j["verbosity"] = c.verbosity;
  return j;
}

/// Reads a config object; a run manifest is accepted as well (its
/// "config" member is used). Unknown keys are rejected.
inline RunConfig config_from_json(const Json& root, RunConfig c = {}) {
  const Json& j = (root.is_object() && root.contains("config") && root["config"].is_object()) ? root["config"] : root;
  if (!j.is_object()) throw ParseError("config: top level must be a JSON object");
  const RunConfig defaults;
  const Json known = to_json(defaults);
  for (const auto& [key, value] : j.items())
    if (!known.contains(key)) throw ParseError("config: unknown key '" + key + "'");
  try {
    auto get = [&](const char* key, auto& dst) {
      if (j.contains(key)) dst = j[key].get<std::decay_t<decltype(dst)>>();
    };
    get("command", c.command);
    get("m", c.m);
    get("n", c.n);
    get("l", c.l);
    get("alphabet", c.alphabet);
    if (j.contains("snr_db")) c.snr_db = detail::real_from_json(j["snr_db"], "snr_db");
    get("seed", c.seed);
    get("input", c.input);
    get("decoder", c.decoder);
    get("safe_mode", c.safe_mode);
    get("bound_threshold", c.bound_threshold);
    get("one_minus_eps", c.one_minus_eps);
    get("m_grid", c.m_grid);
    get("n_grid", c.n_grid);
    get("l_grid", c.l_grid);
    if (j.contains("snr_grid")) {
      const Json& g = j["snr_grid"];
      c.snr_grid.clear();
      if (g.is_string()) {
        c.snr_grid = parse_grid(g.get<std::string>(), "snr_grid");
      } else {
        for (const auto& v : g) c.snr_grid.push_back(detail::real_from_json(v, "snr_grid"));
      }
    }
    get("decoders", c.decoders);
    get("alphabets", c.alphabets);
    get("trials", c.trials);
    get("fixed_radius", c.fixed_radius);
    get("compare_theory", c.compare_theory);
    get("infinite_radius", c.infinite_radius);
    get("taps", c.taps);
    get("training", c.training);
    get("m_sharp", c.m_sharp);
    get("methods", c.methods);
    get("training_kind", c.training_kind);
    get("detection_order", c.detection_order);
    get("output_dir", c.output_dir);
    get("verbosity", c.verbosity);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  return c;
}

inline RunConfig load_config(const std::string& path, RunConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw ParseError("config: cannot open '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  return config_from_json(j, std::move(base));
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

namespace detail {

inline std::filesystem::path output_dir(const RunConfig& c) {
  std::string dir = c.output_dir;
  if (dir.empty()) {
    const char* env = std::getenv("SSD_OUTPUT_DIR");
    dir = (env && *env) ? env : "ssd_out";
  }
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << content;
}

inline void write_manifest(const std::filesystem::path& dir, const RunConfig& c, const std::vector<std::string>& outputs) {
  Json j;
  j["command"] = c.command;
  j["config"] = to_json(c);
  j["seed"] = c.seed;
  j["version"] = SSD_VERSION;
  j["outputs"] = outputs;
  write_file(dir / "manifest.json", j.dump(2) + "\n");
}

inline Json stats_json(const SearchStats& s) {
  Json j;
  j["nodes_per_level"] = s.nodes_per_level;
  j["total_nodes"] = s.total_nodes();
  j["flops"] = s.flops;
  j["radius_restarts"] = s.radius_restarts;
  j["solutions_examined"] = s.solutions_examined;
  j["bound_evaluations"] = s.bound_evaluations;
  j["bound_prunes"] = s.bound_prunes;
  return j;
}

inline std::vector<int> to_std(const IntVector& x) { return std::vector<int>(x.data(), x.data() + x.size()); }

inline DecoderOptions decoder_options(const RunConfig& c) {
  DecoderOptions o;
  o.one_minus_eps = c.one_minus_eps;
  o.safe_mode = c.safe_mode;
  o.bound_threshold = c.bound_threshold;
  return o;
}

}  // namespace detail

/// Decodes one instance (from `input` or generated from m/n/l/snr/seed) and
/// writes decode.json.
inline int cmd_decode(const RunConfig& c, std::ostream& log = std::cout) {
  const DecoderKind kind = parse_decoder(c.decoder);
  IlsInstance inst;
  std::optional<IntVector> x_true;
  if (!c.input.empty()) {
    inst = load_instance(c.input);
  } else {
    GenSpec g{c.m, c.effective_n(), Alphabet::parse(c.alphabet), c.l, c.snr_db, c.seed};
    GeneratedInstance gen = generate_instance(g);
    inst = std::move(gen.instance);
    x_true = std::move(gen.x_true);
  }
  const DecodeResult res = run_decoder(kind, inst, detail::decoder_options(c));

  Json j;
  j["decoder"] = c.decoder;
  j["mode"] = to_string(res.mode);
  j["m"] = inst.m();
  j["n"] = inst.n();
  j["l"] = inst.l;
  j["alphabet"] = inst.alphabet.label();
  j["sigma2"] = inst.sigma2;
  j["x_hat"] = detail::to_std(res.x_hat);
  j["residual2"] = res.residual2;
  if (x_true) {
    j["x_true"] = detail::to_std(*x_true);
    j["errors"] = static_cast<int>((res.x_hat.array() != x_true->array()).count());
  }
  j["stats"] = detail::stats_json(res.stats);

  const auto dir = detail::output_dir(c);
  detail::write_file(dir / "decode.json", j.dump(2) + "\n");
  detail::write_manifest(dir, c, {"decode.json"});
  log << fmt::format("residual2 {} nodes {} -> {}\n", fmt_double(res.residual2), res.stats.total_nodes(),
                     (dir / "decode.json").string());
  return 0;
}

/// Closed-form E[N_k], cost and exponent for every (alphabet, l, snr),
/// sparsity-aware next to sparsity-unaware.
inline std::string analyze_csv(const RunConfig& c) {
  const int m = c.m;
  const int n = c.effective_n();
  std::string out = "m,n,k,l,alphabet,snr_db,sigma2,d2,e_nk,C,e_c,e_nk_unaware,C_unaware,e_c_unaware\n";
  for (const auto& label : c.effective_alphabets()) {
    const Alphabet alph = Alphabet::parse(label);
    for (int l : c.effective_l_grid()) {
      if (l < 0 || l > m) throw InvalidArgument(fmt::format("analyze: l={} outside [0, m]", l));
      for (double snr : c.effective_snr_grid()) {
        const double sigma2 = sigma2_from_snr(snr, m, l, alph);
        double d2 = std::numeric_limits<double>::infinity();
        if (!c.infinite_radius) {
          if (!(sigma2 > 0.0)) throw InvalidArgument("analyze: finite SNR required unless the radius is infinite");
          d2 = choose_radius(n, sigma2, c.one_minus_eps);
        }
        const ComplexityReport aware = analyze(m, n, l, alph, sigma2, d2, CostModel{}, true);
        const ComplexityReport unaware = analyze(m, n, l, alph, sigma2, d2, CostModel{}, false);
        for (int k = 1; k <= m; ++k)
          out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", m, n, k, l, alph.label(), fmt_double(snr),
                             fmt_double(sigma2), fmt_double(d2), fmt_double(aware.e_nk[k - 1]),
                             fmt_double(aware.total_cost), fmt_double(aware.exponent),
                             fmt_double(unaware.e_nk[k - 1]), fmt_double(unaware.total_cost),
                             fmt_double(unaware.exponent));
      }
    }
  }
  return out;
}

inline int cmd_analyze(const RunConfig& c, std::ostream& log = std::cout) {
  if (c.m < 1 || c.effective_n() < c.m) throw InvalidArgument("analyze: requires 1 <= m <= n");
  const std::string csv = analyze_csv(c);
  const auto dir = detail::output_dir(c);
  detail::write_file(dir / "analyze.csv", csv);
  detail::write_manifest(dir, c, {"analyze.csv"});
  log << "wrote " << (dir / "analyze.csv").string() << '\n';
  return 0;
}

inline ExperimentSpec experiment_spec(const RunConfig& c) {
  ExperimentSpec s;
  s.m_grid = c.effective_m_grid();
  s.n_grid = c.n_grid.empty() ? (c.n == 0 ? std::vector<int>{} : std::vector<int>{c.n}) : c.n_grid;
  s.l_grid = c.effective_l_grid();
  s.snr_grid = c.effective_snr_grid();
  s.alphabet = Alphabet::parse(c.alphabet);
  s.decoders = c.effective_decoders();
  s.trials = c.trials;
  s.fixed_radius = c.fixed_radius || c.compare_theory;
  s.one_minus_eps = c.one_minus_eps;
  s.seed = c.seed;
  s.workers = c.workers;
  s.safe_mode = c.safe_mode;
  s.bound_threshold = c.bound_threshold;
  if (c.compare_theory && std::find(s.decoders.begin(), s.decoders.end(), "sparse") == s.decoders.end())
    s.decoders.insert(s.decoders.begin(), "sparse");
  return s;
}

/// Monte Carlo sweep; --compare-theory forces fixed-radius mode and adds
/// the per-level z-score table.
inline int cmd_simulate(const RunConfig& c, std::ostream& log = std::cout) {
  const ExperimentSpec spec = experiment_spec(c);
  const ExperimentResult res = run_experiment(spec);
  const auto dir = detail::output_dir(c);
  std::vector<std::string> outputs{"simulate_summary.csv", "simulate_levels.csv"};
  detail::write_file(dir / outputs[0], summary_csv(res));
  detail::write_file(dir / outputs[1], levels_csv(res));
  bool all_pass = true;
  if (c.compare_theory) {
    const auto rows = compare_theory(res, spec);
    for (const auto& r : rows) all_pass = all_pass && r.pass;
    outputs.push_back("simulate_theory.csv");
    detail::write_file(dir / outputs.back(), theory_csv(rows));
  }
  detail::write_manifest(dir, c, outputs);
  for (const auto& r : res.rows)
    log << fmt::format("m={} l={} snr={} {}: error_rate={:.4g} mean_nodes={:.4g} e_c={:.4g}{}\n", r.point.m, r.point.l,
                       r.point.snr_db, r.decoder, r.error_rate, r.mean_nodes, r.e_c,
                       r.failed_trials ? fmt::format(" failed={}", r.failed_trials) : "");
  if (c.compare_theory) log << (all_pass ? "theory: all levels within tolerance\n" : "theory: some levels outside tolerance\n");
  return 0;
}

inline int cmd_channel(const RunConfig& c, std::ostream& log = std::cout) {
  ChannelExperimentSpec s;
  s.taps = c.taps;
  s.training = c.training;
  s.m_sharp = c.m_sharp;
  s.snr_grid = c.effective_snr_grid();
  if (!c.methods.empty()) s.methods = c.methods;
  s.trials = c.trials;
  s.seed = c.seed;
  s.workers = c.workers;
  s.options.one_minus_eps = c.one_minus_eps;
  s.training_kind = parse_training_kind(c.training_kind);
  if (c.detection_order == "schnorr_euchner") {
    s.options.order = Enumeration::schnorr_euchner;
  } else if (c.detection_order != "fincke_pohst") {
    throw InvalidArgument("detection order must be fincke_pohst or schnorr_euchner");
  }
  const ChannelResult res = run_channel_experiment(s);
  const auto dir = detail::output_dir(c);
  detail::write_file(dir / "channel.csv", channel_csv(res));
  detail::write_manifest(dir, c, {"channel.csv"});
  for (const auto& r : res.rows)
    log << fmt::format("snr={} {}: mse={:.4g} flops={:.4g}\n", r.snr_db, r.method, r.mean_mse, r.mean_flops);
  return 0;
}

/// Exit codes: 0 success, 2 user or input error, 1 internal error.
inline int run_command(const RunConfig& c, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  std::ostream quiet(nullptr);
  std::ostream& log = c.verbosity < 0 ? quiet : out;
  try {
    if (c.command == "decode") return cmd_decode(c, log);
    if (c.command == "analyze") return cmd_analyze(c, log);
    if (c.command == "simulate") return cmd_simulate(c, log);
    if (c.command == "channel") return cmd_channel(c, log);
    err << "error: unknown command '" << c.command << "'\n";
    return 2;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const RankDeficient& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const TooLarge& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return 1;
  }
}

/// Full command line: `ssd <decode|analyze|simulate|channel> [options]`.
inline int run_cli(int argc, const char* const* argv, std::ostream& log = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Sparsity-aware sphere decoding toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", SSD_VERSION);

  std::string config_path, output_dir, alphabet, snr, decoder, input, m_grid, n_grid, l_grid, alphabets, methods,
      training_kind, detection_order;
  int m = 0, n = 0, l = 0, verbosity = 0, taps = 0, training = 0, m_sharp = 0;
  std::uint64_t seed = 0, trials = 0, bound_threshold = 0;
  unsigned workers = 0;
  double one_minus_eps = 0.0;

  std::vector<CLI::App*> subs;
  const std::pair<const char*, const char*> commands[]{
      {"decode", "decode one instance (from --input or generated)"},
      {"analyze", "closed-form expected node counts and complexity exponent"},
      {"simulate", "Monte Carlo error rate and complexity over a grid"},
      {"channel", "sparse channel estimation experiment"}};
  for (const auto& [name, description] : commands) {
    CLI::App* s = app.add_subcommand(name, description);
    s->add_option("--config", config_path, "JSON config or run manifest");
    s->add_option("--output-dir,-o", output_dir, "output directory (default $SSD_OUTPUT_DIR or ssd_out)");
    s->add_option("--seed", seed, "base seed");
    s->add_option("--workers", workers, "worker threads (0 = all cores)");
    s->add_option("--verbosity,-v", verbosity, "negative silences the summary on stdout");
    s->add_option("--snr", snr, "SNR in dB: value, a,b,c or start:stop:step");
    s->add_option("--one-minus-eps", one_minus_eps, "initial in-sphere probability");
    subs.push_back(s);
  }
  for (CLI::App* s : {subs[0], subs[1], subs[2]}) {
    s->add_option("--m", m, "unknowns");
    s->add_option("--n", n, "observations (0 = m)");
    s->add_option("--l", l, "sparsity bound");
    s->add_option("--alphabet", alphabet, "binary01 | ternary | custom:a,b,...");
  }
  for (CLI::App* s : {subs[0], subs[2]}) {
    s->add_option("--decoder", decoder, "sparse | sparse_se | sparse_lb | classical | brute_force | omp (comma list for simulate)");
    s->add_flag("--safe-mode", "disable lower-bound pruning in sparse_lb");
    s->add_option("--bound-threshold", bound_threshold, "nodes visited before the lower bound engages");
  }
  subs[0]->add_option("--input,-i", input, "instance file");
  subs[1]->add_option("--l-grid", l_grid, "sparsity grid");
  subs[1]->add_option("--alphabets", alphabets, "comma list of alphabets");
  subs[1]->add_flag("--infinite-radius", "evaluate with d2 = infinity");
  subs[2]->add_option("--trials", trials, "trials per grid point");
  subs[2]->add_option("--m-grid", m_grid, "grid of m");
  subs[2]->add_option("--n-grid", n_grid, "grid of n (default n = m)");
  subs[2]->add_option("--l-grid", l_grid, "grid of l");
  subs[2]->add_flag("--fixed-radius", "never grow the radius");
  subs[2]->add_flag("--compare-theory", "per-level analytic vs empirical table (implies --fixed-radius)");
  subs[3]->add_option("--trials", trials, "trials per SNR");
  subs[3]->add_option("--taps", taps, "channel length L");
  subs[3]->add_option("--training", training, "training length M");
  subs[3]->add_option("--m-sharp", m_sharp, "nonzero taps");
  subs[3]->add_option("--methods", methods, "comma list of oracle,sparse_sd,classical_sd,omp");
  subs[3]->add_option("--training-kind", training_kind, "min_condition | alternating");
  subs[3]->add_option("--detection-order", detection_order, "fincke_pohst | schnorr_euchner");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, log, err) == 0 ? 0 : 2;
  }

  CLI::App* s = nullptr;
  for (CLI::App* sub : subs)
    if (sub->parsed()) s = sub;
  const std::string command = s->get_name();
  auto given = [&](const char* opt) {
    try {
      return s->count(opt) > 0;
    } catch (const CLI::OptionNotFound&) {
      return false;
    }
  };

  RunConfig c;
  try {
    if (given("--config")) c = load_config(config_path);
    c.command = command;
    if (given("--output-dir")) c.output_dir = output_dir;
    if (given("--seed")) c.seed = seed;
    if (given("--workers")) c.workers = workers;
    if (given("--verbosity")) c.verbosity = verbosity;
    if (given("--one-minus-eps")) c.one_minus_eps = one_minus_eps;
    if (given("--snr")) {
      c.snr_grid = parse_grid(snr, "--snr");
      c.snr_db = c.snr_grid.front();
    }
    if (given("--m")) c.m = m;
    if (given("--n")) c.n = n;
    if (given("--l")) c.l = l;
    if (given("--alphabet")) c.alphabet = alphabet;
    if (given("--decoder")) {
      c.decoders = split_list(decoder);
      if (c.decoders.empty()) throw InvalidArgument("--decoder: empty list");
      c.decoder = c.decoders.front();
      if (command == "decode" && c.decoders.size() != 1) throw InvalidArgument("--decoder: decode takes one decoder");
    }
    if (given("--safe-mode")) c.safe_mode = true;
    if (given("--bound-threshold")) c.bound_threshold = bound_threshold;
    if (given("--input")) c.input = input;
    if (given("--l-grid")) c.l_grid = parse_int_grid(l_grid, "--l-grid");
    if (given("--m-grid")) c.m_grid = parse_int_grid(m_grid, "--m-grid");
    if (given("--n-grid")) c.n_grid = parse_int_grid(n_grid, "--n-grid");
    if (given("--alphabets")) c.alphabets = split_list(alphabets);
    if (given("--infinite-radius")) c.infinite_radius = true;
    if (given("--trials")) c.trials = trials;
    if (given("--fixed-radius")) c.fixed_radius = true;
    if (given("--compare-theory")) c.compare_theory = true;
    if (given("--taps")) c.taps = taps;
    if (given("--training")) c.training = training;
    if (given("--m-sharp")) c.m_sharp = m_sharp;
    if (given("--methods")) c.methods = split_list(methods);
    if (given("--training-kind")) c.training_kind = training_kind;
    if (given("--detection-order")) c.detection_order = detection_order;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return run_command(c, log, err);
}

}  // namespace ssd
