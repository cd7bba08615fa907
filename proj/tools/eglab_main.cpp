// Batch experiment runner over the library: low-degree, linearity and QUADEQ
// tests, game values, the self-improvement pipeline, and consistency metrics.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.  Every report
// embeds its fully resolved configuration; sampled subcommands refuse to run
// without --seed, and identical configurations produce byte-identical reports
// up to the timestamp field, independent of --threads (which is therefore
// kept out of the embedded config, as is the output path).

#include <unistd.h>

#include <CLI11.hpp>

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "eglab/consistency.hpp"
#include "eglab/game.hpp"
#include "eglab/gf.hpp"
#include "eglab/poly.hpp"
#include "eglab/protocols.hpp"
#include "eglab/quantum.hpp"
#include "eglab/rational.hpp"
#include "eglab/rng.hpp"
#include "eglab/sdp.hpp"
#include "eglab/serialize.hpp"

namespace {

using eglab::CounterRng;
using eglab::Rational;
using json = nlohmann::json;
namespace ser = eglab::serialize;
namespace gm = eglab::game;
namespace pr = eglab::protocols;
namespace qt = eglab::quantum;
namespace cs = eglab::consistency;
using Matrix = qt::Matrix;

// Config problems detected after flag parsing (missing seeds, contradictory
// selections) share exit code 2 with parser errors.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string iso_timestamp() {
  const std::time_t t =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  in >> j;
  return j;
}

// Atomic emit: the body lands in a sibling temp file first and is renamed
// over the destination, so readers never observe a partial report.  An empty
// path writes to stdout.
void emit(const std::string& path, const std::string& body) {
  if (path.empty()) {
    std::cout << body;
    return;
  }
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << body;
    out.flush();
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::string num_str(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

Rational parse_rational(const std::string& text) {
  const auto slash = text.find('/');
  try {
    if (slash == std::string::npos) return Rational(std::stoll(text));
    return Rational(std::stoll(text.substr(0, slash)),
                    std::stoll(text.substr(slash + 1)));
  } catch (const std::logic_error&) {
    throw UsageError("cannot parse rational '" + text + "'");
  }
}

// Bit strings are written most-significant-first, matching the instance JSON
// format: "0110" denotes the assignment with bits 1 and 2 set.
std::uint64_t parse_bits(const std::string& text, std::size_t n) {
  if (text.size() != n)
    throw UsageError("bit string '" + text + "' must have exactly " +
                     std::to_string(n) + " characters");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const char c = text[n - 1 - i];
    if (c != '0' && c != '1')
      throw UsageError("bit string '" + text + "' contains non-binary digits");
    if (c == '1') v |= std::uint64_t{1} << i;
  }
  return v;
}

// ---------------------------------------------------------------------------
// Shared options

struct Common {
  std::optional<std::uint64_t> seed;
  std::uint64_t trials = 100000;
  unsigned threads = 1;
  std::string out;
  std::string format = "json";
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed,
                  "PRNG seed; mandatory for any sampled experiment");
  cmd->add_option("--trials", c.trials, "Monte-Carlo trial count")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--threads", c.threads,
                  "worker threads (results are thread-count independent)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--out", c.out, "report file (default: stdout)");
  cmd->add_option("--format", c.format, "report format")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
}

std::uint64_t need_seed(const Common& c) {
  if (!c.seed) throw UsageError("--seed is required for sampled runs");
  return *c.seed;
}

void emit_report(const std::string& command, const json& config,
                 const json& results, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows,
                 const Common& c) {
  if (c.format == "csv") {
    std::vector<std::string> h = header;
    h.push_back("config");
    std::string body = ser::csv_row(h);
    const std::string cfg = config.dump();
    for (std::vector<std::string> row : rows) {
      row.push_back(cfg);
      body += ser::csv_row(row);
    }
    emit(c.out, body);
    return;
  }
  const json report{{"command", command},
                    {"config", config},
                    {"results", results},
                    {"timestamp", iso_timestamp()}};
  emit(c.out, report.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// ldt

struct LdtCli {
  Common common;
  pr::LdtParams params;
  std::string strategy = "honest";
  std::string poly_path, poly2_path, custom_path;
  std::uint64_t constant = 0;
  std::uint64_t function_seed = 0;
  std::uint64_t poly_seed = 0;
  double epsilon = 0.1;
  double exponent = 1.0;
  bool exhaustive = false;
  std::string transcript;
  std::uint64_t transcript_rounds = 0;  // 0: min(trials, 1000)
};

// Deterministic degree-<=d polynomial in m variables with coefficients drawn
// from (poly_seed, stream); used whenever a strategy needs a polynomial and
// none was supplied.
eglab::poly::MultiPoly seeded_poly(const pr::LdtParams& p, std::uint64_t seed,
                                   std::uint64_t stream) {
  double tuples = 1;
  for (std::uint32_t i = 0; i < p.m; ++i) tuples *= p.d + 1;
  if (tuples > 2e6)
    throw std::runtime_error(
        "too many monomials to generate a polynomial; supply --poly");
  CounterRng rng(seed, stream);
  eglab::poly::MultiPoly g(p.m, p.q, p.d);
  std::vector<std::uint32_t> expo(p.m, 0);
  while (true) {
    std::uint32_t total = 0;
    for (std::uint32_t e : expo) total += e;
    if (total <= p.d) g.set_coeff(expo, rng.next_below(p.q));
    std::uint32_t i = 0;
    while (i < p.m && ++expo[i] > p.d) expo[i++] = 0;
    if (i == p.m) break;
  }
  return g;
}

struct ResolvedOracles {
  pr::ProverOracle first, second;
  json desc;
};

ResolvedOracles resolve_ldt_strategy(const LdtCli& o) {
  const auto load_poly = [&](const std::string& path, std::uint64_t stream) {
    if (!path.empty()) {
      eglab::poly::MultiPoly g = ser::multipoly_from_json(load_json(path));
      if (g.num_vars() != o.params.m || g.modulus() != o.params.q)
        throw std::runtime_error("polynomial in " + path +
                                 " does not match --m/--q");
      return g;
    }
    return seeded_poly(o.params, o.poly_seed, stream);
  };

  ResolvedOracles r;
  if (o.strategy == "honest") {
    const auto g = load_poly(o.poly_path, 0);
    r.first = r.second = pr::honest_ldt_strategy(g, o.params);
    r.desc = {{"type", "honest"}, {"g", ser::multipoly_json(g)}};
  } else if (o.strategy == "constant-bob") {
    const auto g = load_poly(o.poly_path, 0);
    r.first = pr::honest_ldt_strategy(g, o.params);
    r.second = pr::constant_oracle(o.params, o.constant);
    r.desc = {{"type", "constant-bob"},
              {"g", ser::multipoly_json(g)},
              {"constant", o.constant}};
  } else if (o.strategy == "mismatched") {
    const auto g = load_poly(o.poly_path, 0);
    const auto g2 = load_poly(o.poly2_path, 1);
    r.first = pr::honest_ldt_strategy(g, o.params);
    r.second = pr::honest_ldt_strategy(g2, o.params);
    r.desc = {{"type", "mismatched"},
              {"g", ser::multipoly_json(g)},
              {"g2", ser::multipoly_json(g2)}};
  } else if (o.strategy == "random-function") {
    r.first = r.second = pr::random_oracle(o.params, o.function_seed);
    r.desc = {{"type", "random-function"}, {"function_seed", o.function_seed}};
  } else {  // custom-json
    if (o.custom_path.empty())
      throw UsageError("--strategy custom-json requires --strategy-file");
    const json spec = load_json(o.custom_path);
    const eglab::poly::MultiPoly gp = ser::multipoly_from_json(spec.at("plane"));
    if (gp.num_vars() != o.params.m || gp.modulus() != o.params.q)
      throw std::runtime_error("custom plane polynomial does not match --m/--q");
    std::vector<std::uint32_t> table =
        spec.at("points").get<std::vector<std::uint32_t>>();
    double cells = 1;
    for (std::uint32_t i = 0; i < o.params.m; ++i) cells *= o.params.q;
    if (static_cast<double>(table.size()) != cells)
      throw std::runtime_error("custom point table must list q^m values");
    for (std::uint32_t v : table)
      if (v >= o.params.q)
        throw std::runtime_error("custom point table value out of range");
    const std::uint64_t q = o.params.q;
    r.first.plane = [gp](const eglab::poly::AffinePlane& s) {
      return eglab::poly::restrict_to_plane(gp, s);
    };
    r.first.point = [table, q](const eglab::gf::FieldVector& x) {
      // Table index: sum x_i * q^i, coordinate 0 least significant.
      std::uint64_t idx = 0, scale = 1;
      for (std::uint32_t digit : x.raw()) {
        idx += digit * scale;
        scale *= q;
      }
      return eglab::gf::FieldElement(table[idx], q);
    };
    r.second = r.first;
    r.desc = {{"type", "custom-json"}, {"definition", spec}};
  }
  return r;
}

// Replays the exact trial streams of the sampled run and logs one CSV row
// per round: who answered the plane, the raw draws, the canonical plane, both
// answers and the verdict.  Linearly dependent rounds accept without
// querying, so their answer columns stay empty.
void write_ldt_transcript(const LdtCli& o, const ResolvedOracles& oracles,
                          std::uint64_t seed, std::uint64_t rounds) {
  const auto vec_str = [](const eglab::gf::FieldVector& v) {
    std::string s;
    for (std::uint32_t d : v.raw()) {
      if (!s.empty()) s += ' ';
      s += std::to_string(d);
    }
    return s;
  };
  std::string body = ser::csv_row({"round", "plane_prover", "x", "y1", "y2",
                                   "dependent", "plane_base", "plane_dir1",
                                   "plane_dir2", "plane_answer", "point_answer",
                                   "verdict"});
  const CounterRng root(seed);
  for (std::uint64_t i = 0; i < rounds; ++i) {
    CounterRng rng = root.split(i);
    const bool swap = rng.next_below(2) == 1;
    const pr::LdtRound round = pr::ldt_sample_round(o.params, rng);
    const pr::ProverOracle& on_plane = swap ? oracles.second : oracles.first;
    const pr::ProverOracle& on_point = swap ? oracles.first : oracles.second;

    std::vector<std::string> row{std::to_string(i), swap ? "1" : "0",
                                 vec_str(round.x), vec_str(round.y1),
                                 vec_str(round.y2)};
    if (round.dependent) {
      row.insert(row.end(), {"1", "", "", "", "", "", "accept"});
    } else {
      const eglab::poly::BivariatePoly bp = on_plane.plane(*round.plane);
      const eglab::gf::FieldElement pa = on_point.point(round.x);
      std::string coeffs;
      for (const auto& [ij, c] : bp.coefficients()) {
        if (!coeffs.empty()) coeffs += ' ';
        coeffs += "(" + std::to_string(ij.first) + "," +
                  std::to_string(ij.second) + ")=" + std::to_string(c);
      }
      const bool ok =
          bp.total_degree() <= o.params.d &&
          bp.evaluate(round.coords->first, round.coords->second) == pa;
      row.insert(row.end(),
                 {"0", vec_str(round.plane->base()),
                  vec_str(round.plane->basis1()), vec_str(round.plane->basis2()),
                  coeffs, std::to_string(pa.value()), ok ? "accept" : "reject"});
    }
    body += ser::csv_row(row);
  }
  emit(o.transcript, body);
}

void run_ldt(const LdtCli& o) {
  o.params.validate();
  const ResolvedOracles oracles = resolve_ldt_strategy(o);
  const pr::LdtSizes sizes = pr::ldt_sizes(o.params);
  const double ratio =
      pr::ldt_soundness_ratio(o.params, o.epsilon, o.exponent);

  json config{{"d", o.params.d},       {"m", o.params.m},
              {"q", o.params.q},       {"strategy", oracles.desc},
              {"epsilon", o.epsilon},  {"exponent", o.exponent},
              {"exhaustive", o.exhaustive}};
  const json diagnostics{
      {"sizes",
       {{"point_question_elems", sizes.point_question_elems},
        {"plane_question_elems", sizes.plane_question_elems},
        {"plane_answer_elems", sizes.plane_answer_elems},
        {"point_answer_elems", sizes.point_answer_elems},
        {"bits_per_element", sizes.bits_per_element},
        {"max_question_bits", sizes.max_question_bits},
        {"max_answer_bits", sizes.max_answer_bits}}},
      {"soundness_ratio", ratio}};

  json results;
  std::vector<std::vector<std::string>> rows;
  const std::vector<std::string> header{"mode",      "acceptance", "std_error",
                                        "trials",    "accepted",   "dependent",
                                        "soundness_ratio"};
  if (o.exhaustive) {
    if (!o.transcript.empty())
      throw UsageError("--transcript requires sampled mode");
    const pr::LdtExact exact = pr::ldt_exhaustive(o.params, oracles.first,
                                                  oracles.second);
    results = {{"mode", "exhaustive"},
               {"acceptance", ser::rational_json(exact.acceptance)},
               {"acceptance_value", exact.acceptance.to_double()},
               {"dependent_fraction",
                ser::rational_json(exact.dependent_fraction)},
               {"diagnostics", diagnostics}};
    rows.push_back({"exhaustive", exact.acceptance.to_string(), "", "", "",
                    exact.dependent_fraction.to_string(), num_str(ratio)});
  } else {
    const std::uint64_t seed = need_seed(o.common);
    config["seed"] = seed;
    config["trials"] = o.common.trials;
    const pr::LdtStats stats =
        pr::ldt_run(o.params, oracles.first, oracles.second, o.common.trials,
                    seed, o.common.threads);
    const double dep_rate = static_cast<double>(stats.dependent_rounds) /
                            static_cast<double>(stats.trials);
    results = {{"mode", "sampled"},
               {"acceptance", stats.acceptance},
               {"std_error", stats.std_error},
               {"trials", stats.trials},
               {"accepted", stats.accepted},
               {"dependent_rounds", stats.dependent_rounds},
               {"dependent_rate", dep_rate},
               {"diagnostics", diagnostics}};
    rows.push_back({"sampled", num_str(stats.acceptance),
                    num_str(stats.std_error), std::to_string(stats.trials),
                    std::to_string(stats.accepted), num_str(dep_rate),
                    num_str(ratio)});
    if (!o.transcript.empty()) {
      const std::uint64_t n = o.transcript_rounds
                                  ? o.transcript_rounds
                                  : std::min<std::uint64_t>(o.common.trials,
                                                            1000);
      write_ldt_transcript(o, oracles, seed, n);
    }
  }
  emit_report("ldt", config, results, header, rows, o.common);
}

// ---------------------------------------------------------------------------
// linearity

struct LinCli {
  Common common;
  std::size_t n = 3;
  bool untrimmed = false;
  bool exact = false;
  std::string table_path;
  std::uint64_t linear_mask = 0;
  std::vector<std::uint64_t> corrupt;
};

std::vector<std::uint8_t> resolve_table(const LinCli& o, json* desc) {
  const std::uint64_t size = std::uint64_t{1} << o.n;
  std::vector<std::uint8_t> table;
  if (!o.table_path.empty()) {
    table = load_json(o.table_path).get<std::vector<std::uint8_t>>();
    if (table.size() != size)
      throw std::runtime_error("truth table must have exactly 2^n entries");
    (*desc)["source"] = "table-file";
  } else {
    table.resize(size);
    for (std::uint64_t x = 0; x < size; ++x)
      table[x] = static_cast<std::uint8_t>(
          std::popcount(x & o.linear_mask) & 1);
    (*desc)["source"] = "generated";
    (*desc)["linear_mask"] = o.linear_mask;
  }
  for (std::uint8_t b : table)
    if (b > 1) throw std::runtime_error("truth table entries must be bits");
  for (std::uint64_t idx : o.corrupt) {
    if (idx >= size) throw UsageError("--corrupt index out of range");
    table[idx] ^= 1;
  }
  (*desc)["corrupt"] = o.corrupt;
  if (o.n <= 12) {
    std::string bits(size, '0');
    for (std::uint64_t x = 0; x < size; ++x) bits[x] = '0' + table[x];
    (*desc)["table"] = bits;  // character i is f(i)
  } else {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::uint8_t b : table) h = (h ^ b) * 0x100000001b3ull;
    std::ostringstream os;
    os << std::hex << h;
    (*desc)["table_fnv1a"] = os.str();
  }
  return table;
}

void run_linearity(const LinCli& o) {
  json strategy_desc;
  const std::vector<std::uint8_t> table = resolve_table(o, &strategy_desc);
  const pr::LinearityGame lg = pr::linearity_game(o.n, !o.untrimmed);

  json config{{"n", o.n},
              {"trimmed", !o.untrimmed},
              {"strategy", strategy_desc},
              {"exact", o.exact}};
  json results;
  std::vector<std::vector<std::string>> rows;
  const std::vector<std::string> header{"subtest", "acceptance", "std_error",
                                        "trials", "accepts"};

  if (o.exact) {
    if (!lg.explicit_mode)
      throw UsageError("--exact requires n <= 8 (explicit game)");
    const gm::ClassicalStrategy strat = lg.table_strategy(table);
    const Rational value = gm::strategy_value_exact(lg.game, strat);
    // Conditional acceptance per verifier coordinate, grouped by the entry's
    // aux field.
    std::map<std::uint32_t, std::pair<Rational, Rational>> by_aux;
    for (const auto& e : lg.game.entries()) {
      auto& slot = by_aux[e.aux];
      slot.second += e.weight;
      if (lg.game.accepts(e.qa, e.qb, e.aux, strat.alice[e.qa],
                          strat.bob[e.qb]))
        slot.first += e.weight;
    }
    json breakdown = json::array();
    for (const auto& [aux, acc] : by_aux) {
      const Rational cond =
          acc.first * Rational(acc.second.den(), acc.second.num());
      breakdown.push_back({{"subtest", "coordinate-" + std::to_string(aux)},
                           {"acceptance", ser::rational_json(cond)},
                           {"weight", ser::rational_json(acc.second)}});
      rows.push_back({"coordinate-" + std::to_string(aux), cond.to_string(),
                      "", "", ""});
    }
    results = {{"mode", "exact"},
               {"acceptance", ser::rational_json(value)},
               {"acceptance_value", value.to_double()},
               {"subtests", breakdown}};
    rows.push_back({"overall", value.to_string(), "", "", ""});
  } else if (lg.explicit_mode) {
    // Small n: the game is explicit, so Monte-Carlo runs through the
    // question distribution directly (per-subtest tallies come from --exact).
    const std::uint64_t seed = need_seed(o.common);
    config["seed"] = seed;
    config["trials"] = o.common.trials;
    const gm::ValueEstimate est = gm::strategy_value_sampled(
        lg.game, lg.table_strategy(table), seed, o.common.trials,
        o.common.threads);
    results = {{"mode", "sampled"},
               {"acceptance", est.value},
               {"std_error", est.std_error},
               {"trials", est.trials}};
    rows.push_back({"overall", num_str(est.value), num_str(est.std_error),
                    std::to_string(est.trials), ""});
  } else {
    const std::uint64_t seed = need_seed(o.common);
    config["seed"] = seed;
    config["trials"] = o.common.trials;
    const auto f = [table](std::uint64_t x) { return table[x]; };
    const gm::SampledStats stats =
        gm::run_sampled(lg.game, lg.function_strategy(f), seed,
                        o.common.trials, o.common.threads);
    json breakdown = json::array();
    for (std::size_t s = 0; s < stats.subtest_trials.size(); ++s) {
      const double acc = stats.subtest_trials[s]
                             ? static_cast<double>(stats.subtest_accepts[s]) /
                                   static_cast<double>(stats.subtest_trials[s])
                             : 0.0;
      breakdown.push_back({{"subtest", s},
                           {"trials", stats.subtest_trials[s]},
                           {"accepts", stats.subtest_accepts[s]},
                           {"acceptance", acc}});
      rows.push_back({std::to_string(s), num_str(acc), "",
                      std::to_string(stats.subtest_trials[s]),
                      std::to_string(stats.subtest_accepts[s])});
    }
    results = {{"mode", "sampled"},
               {"acceptance", stats.overall.value},
               {"std_error", stats.overall.std_error},
               {"trials", stats.overall.trials},
               {"subtests", breakdown}};
    rows.push_back({"overall", num_str(stats.overall.value),
                    num_str(stats.overall.std_error),
                    std::to_string(stats.overall.trials), ""});
  }
  emit_report("linearity", config, results, header, rows, o.common);
}

// ---------------------------------------------------------------------------
// quadeq

struct QuadeqCli {
  Common common;
  std::string instance_path;
  std::string builtin = "satisfiable";
  bool untrimmed = false;
  bool exhaustive = false;
  std::string mixture_csv;
  std::string assignment;
};

pr::QuadeqInstance builtin_instance(const std::string& name) {
  pr::QuadeqInstance inst;
  inst.n = 4;
  if (name == "satisfiable") {
    inst.forms = {{0b1010, 0b0110, 0b0001, 0b1111},
                  {0b0111, 0b1000, 0b0010, 0b0100}};
    inst.constants = {0, 1};
    inst.witness = 0b0110;
  } else {  // contradictory: the same form constrained to 0 and to 1
    inst.forms = {{0b1010, 0b0110, 0b0001, 0b1111},
                  {0b1010, 0b0110, 0b0001, 0b1111}};
    inst.constants = {0, 1};
  }
  inst.validate();
  return inst;
}

pr::QuadeqMixture resolve_mixture(const std::string& csv) {
  if (csv.empty()) return pr::QuadeqMixture::standard();
  pr::QuadeqMixture mix;
  std::stringstream ss(csv);
  std::string item;
  std::size_t i = 0;
  while (std::getline(ss, item, ',')) {
    if (i >= pr::kNumQuadeqSubtests)
      throw UsageError("--mixture takes exactly 7 comma-separated rationals");
    mix.weights[i++] = parse_rational(item);
  }
  if (i != pr::kNumQuadeqSubtests)
    throw UsageError("--mixture takes exactly 7 comma-separated rationals");
  mix.validate();
  return mix;
}

const char* kQuadeqLabels[pr::kNumQuadeqSubtests] = {
    "lin-half1", "lin-half2",         "lin-full",  "lin-tensor",
    "consistency", "tensor-consistency", "constraint"};

void run_quadeq(const QuadeqCli& o) {
  const pr::QuadeqInstance inst = o.instance_path.empty()
                                      ? builtin_instance(o.builtin)
                                      : ser::quadeq_from_json(
                                            load_json(o.instance_path));
  const pr::QuadeqMixture mixture = resolve_mixture(o.mixture_csv);

  json strategy_desc;
  std::optional<pr::LinearFormStrategy> forms;
  if (!o.assignment.empty()) {
    const std::uint64_t x = parse_bits(o.assignment, inst.n);
    forms = pr::forms_from_assignment(inst, x);
    strategy_desc = {{"type", "assignment"}, {"bits", o.assignment}};
  } else {
    if (!inst.witness)
      throw UsageError(
          "instance has no witness; supply --assignment for a cheating "
          "strategy");
    strategy_desc = {{"type", "honest"}};
  }

  json mixture_json = json::array();
  for (const Rational& w : mixture.weights)
    mixture_json.push_back(ser::rational_json(w));
  json config{{"instance", ser::quadeq_json(inst)},
              {"mixture", mixture_json},
              {"trimmed", !o.untrimmed},
              {"strategy", strategy_desc},
              {"exhaustive", o.exhaustive}};

  json results;
  std::vector<std::vector<std::string>> rows;
  const std::vector<std::string> header{"subtest", "acceptance", "std_error",
                                        "trials", "accepts"};

  if (o.exhaustive) {
    const pr::LinearFormStrategy strat =
        forms ? *forms : pr::forms_from_assignment(inst, *inst.witness);
    const pr::QuadeqBreakdown bd = pr::quadeq_exhaustive(inst, strat, mixture);
    json breakdown = json::array();
    for (std::size_t s = 0; s < pr::kNumQuadeqSubtests; ++s) {
      breakdown.push_back(
          {{"subtest", kQuadeqLabels[s]},
           {"acceptance", ser::rational_json(bd.subtest_acceptance[s])},
           {"weight", ser::rational_json(mixture.weights[s])}});
      rows.push_back({kQuadeqLabels[s], bd.subtest_acceptance[s].to_string(),
                      "", "", ""});
    }
    results = {{"mode", "exhaustive"},
               {"acceptance", ser::rational_json(bd.overall)},
               {"acceptance_value", bd.overall.to_double()},
               {"subtests", breakdown}};
    rows.push_back({"overall", bd.overall.to_string(), "", "", ""});
  } else {
    const std::uint64_t seed = need_seed(o.common);
    config["seed"] = seed;
    config["trials"] = o.common.trials;
    const pr::QuadeqGame qg = pr::quadeq_game(inst, mixture, !o.untrimmed);
    const gm::FunctionStrategy strat =
        forms ? qg.strategy(*forms) : qg.honest_strategy();
    const gm::SampledStats stats = gm::run_sampled(
        qg.game, strat, seed, o.common.trials, o.common.threads);
    json breakdown = json::array();
    for (std::size_t s = 0; s < stats.subtest_trials.size(); ++s) {
      const double acc = stats.subtest_trials[s]
                             ? static_cast<double>(stats.subtest_accepts[s]) /
                                   static_cast<double>(stats.subtest_trials[s])
                             : 0.0;
      breakdown.push_back({{"subtest", kQuadeqLabels[s]},
                           {"trials", stats.subtest_trials[s]},
                           {"accepts", stats.subtest_accepts[s]},
                           {"acceptance", acc}});
      rows.push_back({kQuadeqLabels[s], num_str(acc), "",
                      std::to_string(stats.subtest_trials[s]),
                      std::to_string(stats.subtest_accepts[s])});
    }
    results = {{"mode", "sampled"},
               {"acceptance", stats.overall.value},
               {"std_error", stats.overall.std_error},
               {"trials", stats.overall.trials},
               {"subtests", breakdown}};
    rows.push_back({"overall", num_str(stats.overall.value),
                    num_str(stats.overall.std_error),
                    std::to_string(stats.overall.trials), ""});
  }
  emit_report("quadeq", config, results, header, rows, o.common);
}

// ---------------------------------------------------------------------------
// value

struct ValueCli {
  Common common;
  std::string game_path;
  std::string builtin;
  std::string mode = "exact-classical";
  std::string strategy_path;
  std::size_t dim = 2;
  std::size_t iters = 50;
  std::size_t restarts = 1;
  bool sampled = false;
};

void run_value(const ValueCli& o) {
  gm::GameSpec g = [&] {
    if (!o.builtin.empty()) {
      if (o.builtin != "chsh") throw UsageError("unknown builtin game");
      return gm::chsh_game();
    }
    if (o.game_path.empty())
      throw UsageError("supply --game FILE or --builtin chsh");
    return ser::game_from_json(load_json(o.game_path));
  }();

  json config{{"mode", o.mode},
              {"game", o.builtin.empty() ? ser::game_json(g)
                                         : ser::game_json(g, o.builtin)}};
  json results;
  std::vector<std::vector<std::string>> rows;
  const std::vector<std::string> header{"mode", "method", "value",
                                        "std_error"};

  if (o.mode == "exact-classical") {
    gm::ClassicalStrategy best;
    const Rational v = gm::classical_value_exact(g, &best);
    results = {{"mode", o.mode},
               {"method", "exact"},
               {"value", ser::rational_json(v)},
               {"value_decimal", v.to_double()},
               {"optimal_strategy", ser::strategy_json(best)}};
    rows.push_back({o.mode, "exact", v.to_string(), ""});
  } else if (o.mode == "strategy-eval") {
    if (o.strategy_path.empty())
      throw UsageError("strategy-eval requires --strategy FILE");
    const gm::ClassicalStrategy s =
        ser::strategy_from_json(load_json(o.strategy_path));
    config["strategy"] = ser::strategy_json(s);
    if (o.sampled) {
      const std::uint64_t seed = need_seed(o.common);
      config["seed"] = seed;
      config["trials"] = o.common.trials;
      const gm::ValueEstimate est = gm::strategy_value_sampled(
          g, s, seed, o.common.trials, o.common.threads);
      results = {{"mode", o.mode},
                 {"method", "MC"},
                 {"value", est.value},
                 {"std_error", est.std_error},
                 {"trials", est.trials}};
      rows.push_back({o.mode, "MC", num_str(est.value),
                      num_str(est.std_error)});
    } else {
      const Rational v = gm::strategy_value_exact(g, s);
      results = {{"mode", o.mode},
                 {"method", "exact"},
                 {"value", ser::rational_json(v)},
                 {"value_decimal", v.to_double()}};
      rows.push_back({o.mode, "exact", v.to_string(), ""});
    }
  } else if (o.mode == "seesaw") {
    const std::uint64_t seed = need_seed(o.common);
    config["seed"] = seed;
    config["dim"] = o.dim;
    config["iters"] = o.iters;
    config["restarts"] = o.restarts;
    double best = 0;
    json restarts = json::array();
    for (std::size_t i = 0; i < o.restarts; ++i) {
      const gm::SeesawResult r =
          gm::seesaw_lower_bound(g, o.dim, seed + i, o.iters);
      best = std::max(best, r.value);
      restarts.push_back({{"seed", seed + i},
                          {"value", r.value},
                          {"half_steps", r.trace.size()},
                          {"stagnated", r.stagnated}});
    }
    results = {{"mode", o.mode},
               {"method", "lower-bound"},
               {"value", best},
               {"restarts", restarts}};
    rows.push_back({o.mode, "lower-bound", num_str(best), ""});
  } else if (o.mode.rfind("repeat:", 0) == 0) {
    std::size_t k = 0;
    try {
      k = std::stoul(o.mode.substr(7));
    } catch (const std::logic_error&) {
      throw UsageError("cannot parse repetition count in '" + o.mode + "'");
    }
    if (k == 0 || k > 8) throw UsageError("repeat:k requires 1 <= k <= 8");
    config["k"] = k;
    const Rational base = gm::classical_value_exact(g);
    const Rational repeated =
        gm::classical_value_exact(gm::parallel_repeat(g, k));
    Rational base_pow(1);
    for (std::size_t i = 0; i < k; ++i) base_pow *= base;
    results = {{"mode", o.mode},
               {"method", "exact"},
               {"value", ser::rational_json(repeated)},
               {"value_decimal", repeated.to_double()},
               {"base_value", ser::rational_json(base)},
               {"base_value_pow_k", ser::rational_json(base_pow)}};
    rows.push_back({o.mode, "exact", repeated.to_string(), ""});
  } else {
    throw UsageError("unknown --mode '" + o.mode + "'");
  }
  emit_report("value", config, results, header, rows, o.common);
}

// ---------------------------------------------------------------------------
// improve / metrics

struct PipelineCli {
  Common common;
  std::string instance_path;
  std::string builtin;
  std::vector<double> levels = {0.1, 0.05, 0.025};
  std::optional<double> eta;
  std::string trace_path;
  bool certify = false;  // metrics only
};

struct PipelineInstance {
  qt::BipartiteState psi{Matrix::Identity(2, 2) / std::sqrt(2.0)};
  qt::MeasurementFamily family{
      std::vector<std::vector<qt::Operator>>(1, {qt::Operator::identity(2)})};
  cs::StructuredFamily structured{1, 1, {{0}}};
  qt::SubMeasurement baseline{std::vector<qt::Operator>{
      qt::Operator::identity(2)}};
  std::optional<double> eta;
};

Matrix diag4(double a, double b, double c, double d) {
  Matrix m = Matrix::Zero(4, 4);
  m(0, 0) = a;
  m(1, 1) = b;
  m(2, 2) = c;
  m(3, 3) = d;
  return m;
}

// x-dependent rotation in the (0,2) plane; real orthogonal, so the rotated
// family stays projective and exactly self-consistent on the maximally
// entangled state while disagreeing with the fixed constant tables.
qt::MeasurementFamily rotated_family(double eta) {
  const Matrix p0 = diag4(1, 1, 0, 0), p1 = diag4(0, 0, 1, 1);
  const double speeds[3] = {1.0, 0.7, -0.5};
  std::vector<std::vector<qt::Operator>> ops;
  for (int x = 0; x < 3; ++x) {
    Matrix r = Matrix::Identity(4, 4);
    const double angle = eta * speeds[x];
    r(0, 0) = std::cos(angle);
    r(2, 2) = std::cos(angle);
    r(0, 2) = -std::sin(angle);
    r(2, 0) = std::sin(angle);
    ops.push_back({qt::Operator(Matrix(r * p0 * r.transpose())),
                   qt::Operator(Matrix(r * p1 * r.transpose()))});
  }
  return qt::MeasurementFamily(ops);
}

PipelineInstance exact_instance(double perturbation) {
  PipelineInstance inst;
  inst.psi = qt::maximally_entangled(4);
  inst.family = perturbation == 0
                    ? qt::MeasurementFamily(std::vector<std::vector<qt::Operator>>(
                          3, {qt::Operator(diag4(1, 1, 0, 0)),
                              qt::Operator(diag4(0, 0, 1, 1))}))
                    : rotated_family(perturbation);
  inst.structured = cs::StructuredFamily(3, 2, {{0, 0, 0}, {1, 1, 1}});
  inst.baseline = qt::SubMeasurement({qt::Operator(diag4(1, 1, 0, 0)),
                                      qt::Operator(diag4(0, 0, 1, 1))});
  return inst;
}

PipelineInstance load_pipeline_instance(const json& j, bool need_baseline) {
  PipelineInstance inst;
  inst.psi = ser::state_from_json(j.at("state"));
  inst.family = ser::family_from_json(j.at("family"));
  inst.structured = ser::structured_family_from_json(j.at("structured"));
  const char* key = j.contains("baseline") ? "baseline" : "submeasurement";
  if (j.contains(key))
    inst.baseline = ser::submeasurement_from_json(j.at(key));
  else if (need_baseline)
    throw std::runtime_error("instance file lacks a baseline sub-measurement");
  if (j.contains("eta")) inst.eta = j.at("eta").get<double>();
  return inst;
}

// The report shape shared by the before/after stages: family
// self-consistency, the sub-measurement's defects against the family, and
// the (recomputed) structure constant.
cs::ConsistencyReport stage_report(const PipelineInstance& in,
                                   const qt::SubMeasurement& t) {
  cs::ConsistencyReport r;
  r.self_consistency = cs::self_consistency(in.family, in.psi);
  r.consistency = cs::cross_consistency(t, in.structured, in.family, in.psi);
  r.projectivity = cs::projectivity_defect(t, in.psi);
  r.completeness_error = cs::completeness_error(t, in.psi);
  r.structure = in.structured.kappa().to_double();
  r.validate();
  return r;
}

std::vector<std::string> report_row(const std::string& stage,
                                    const cs::ConsistencyReport& r) {
  return {stage,
          num_str(r.self_consistency),
          num_str(r.projectivity),
          num_str(r.consistency),
          num_str(r.completeness_error),
          num_str(r.structure)};
}

const std::vector<std::string> kReportHeader{
    "stage",      "self_consistency",  "projectivity",
    "consistency", "completeness_error", "structure"};

// One improvement pass: measures the baseline, runs the SDP-driven step, and
// re-solves the same aggregated program to expose the solver trace the step
// consumed.
json improve_once(const PipelineInstance& in, std::optional<double> eta_flag,
                  const std::string& trace_path,
                  std::vector<std::vector<std::string>>* rows) {
  const cs::ConsistencyReport before = stage_report(in, in.baseline);
  const double eta = eta_flag ? *eta_flag
                              : (in.eta ? *in.eta : before.consistency);
  auto [s, after] = eglab::sdp::improve(in.family, in.structured, in.psi,
                                        in.baseline, eta);

  std::vector<qt::Operator> aggregated;
  for (std::size_t gi = 0; gi < in.structured.size(); ++gi)
    aggregated.push_back(
        cs::aggregate(in.family, in.structured.function(gi)));
  const eglab::sdp::SdpResult sol = eglab::sdp::solve(eglab::sdp::SdpInstance(
      qt::maximally_entangled(in.family.dim()), std::move(aggregated)));
  if (!trace_path.empty()) emit(trace_path, ser::sdp_trace_csv(sol.trace));

  rows->push_back(report_row("before", before));
  rows->push_back(report_row("after", after));
  return json{{"before", ser::report_json(before)},
              {"after", ser::report_json(after)},
              {"eta", eta},
              {"sdp",
               {{"primal_value", sol.primal_value},
                {"dual_value", sol.dual_value},
                {"gap", sol.gap},
                {"slackness_residual", sol.slackness_residual},
                {"iterations", sol.trace.size()}}}};
}

void run_improve(const PipelineCli& o) {
  json config{{"eta", o.eta ? json(*o.eta) : json()},
              {"trace", !o.trace_path.empty()}};
  json results;
  std::vector<std::vector<std::string>> rows;

  if (o.builtin == "sweep") {
    if (!o.trace_path.empty())
      throw UsageError("--trace requires a single-run mode, not sweep");
    config["builtin"] = "sweep";
    config["levels"] = o.levels;
    json table = json::array();
    bool monotone = true;
    double last = 1e300;
    for (const double level : o.levels) {
      const PipelineInstance in = exact_instance(level);
      std::vector<std::vector<std::string>> scratch;
      json one = improve_once(in, o.eta, "", &scratch);
      const double out = one["after"]["consistency"].get<double>();
      const double eps = one["before"]["self_consistency"].get<double>();
      const double delta_in = one["before"]["consistency"].get<double>();
      monotone = monotone && out <= last + 1e-12;
      last = out;
      table.push_back({{"perturbation", level},
                       {"self_consistency", eps},
                       {"consistency_before", delta_in},
                       {"consistency_after", out},
                       {"bound", 10.0 * std::sqrt(eps + delta_in)}});
      rows.push_back({"perturbation " + num_str(level), num_str(eps), "",
                      num_str(out), "", ""});
    }
    results = {{"mode", "sweep"}, {"levels", table}, {"monotone", monotone}};
  } else {
    PipelineInstance in;
    if (!o.instance_path.empty()) {
      const json doc = load_json(o.instance_path);
      in = load_pipeline_instance(doc, true);
      config["instance"] = doc;
    } else if (o.builtin == "exact" || o.builtin.empty()) {
      in = exact_instance(0);
      config["builtin"] = "exact";
    } else {
      throw UsageError("unknown builtin '" + o.builtin + "'");
    }
    results = improve_once(in, o.eta, o.trace_path, &rows);
  }
  emit_report("improve", config, results, kReportHeader, rows, o.common);
}

void run_metrics(const PipelineCli& o) {
  PipelineInstance in;
  json config{{"certify", o.certify}};
  if (!o.instance_path.empty()) {
    const json doc = load_json(o.instance_path);
    in = load_pipeline_instance(doc, true);
    config["instance"] = doc;
  } else if (o.builtin == "exact" || o.builtin.empty()) {
    in = exact_instance(0);
    config["builtin"] = "exact";
  } else {
    throw UsageError("unknown builtin '" + o.builtin + "'");
  }

  const cs::ConsistencyReport report = stage_report(in, in.baseline);
  json results{{"report", ser::report_json(report)},
               {"aggregate_swap_gap",
                cs::aggregate_swap_gap(in.family, in.structured, in.baseline,
                                       in.psi)},
               {"commutation_defect",
                cs::commutation_defect(in.baseline, in.family, in.psi)}};
  if (o.certify) {
    const cs::GlobalConsistencyCertificate cert =
        cs::certify_global_consistency(in.family, in.structured, in.psi);
    results["certificate"] = {{"epsilon", cert.epsilon},
                              {"delta", cert.delta},
                              {"z", ser::operator_json(cert.z)}};
  }
  std::vector<std::vector<std::string>> rows{report_row("report", report)};
  emit_report("metrics", config, results, kReportHeader, rows, o.common);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-prover test experiments: low-degree, linearity and QUADEQ "
               "protocols, game values, and measurement-consistency tools"};
  app.require_subcommand(1);

  LdtCli ldt;
  CLI::App* ldt_cmd =
      app.add_subcommand("ldt", "plane-vs-point low-degree test");
  add_common(ldt_cmd, ldt.common);
  ldt_cmd->add_option("--d", ldt.params.d, "degree bound")
      ->capture_default_str();
  ldt_cmd->add_option("--m", ldt.params.m, "number of variables")
      ->capture_default_str();
  ldt_cmd->add_option("--q", ldt.params.q, "field size (prime, > d)")
      ->capture_default_str();
  ldt_cmd->add_option("--strategy", ldt.strategy, "prover strategy")
      ->check(CLI::IsMember({"honest", "constant-bob", "mismatched",
                             "random-function", "custom-json"}))
      ->capture_default_str();
  ldt_cmd->add_option("--poly", ldt.poly_path,
                      "polynomial JSON for honest-style strategies");
  ldt_cmd->add_option("--poly2", ldt.poly2_path,
                      "second polynomial JSON for --strategy mismatched");
  ldt_cmd->add_option("--strategy-file", ldt.custom_path,
                      "custom oracle JSON for --strategy custom-json");
  ldt_cmd->add_option("--constant", ldt.constant,
                      "answer value for --strategy constant-bob")
      ->capture_default_str();
  ldt_cmd->add_option("--function-seed", ldt.function_seed,
                      "seed of the random-function oracle")
      ->capture_default_str();
  ldt_cmd->add_option("--poly-seed", ldt.poly_seed,
                      "seed for generated polynomials when --poly is absent")
      ->capture_default_str();
  ldt_cmd->add_option("--epsilon", ldt.epsilon,
                      "target soundness parameter for the diagnostic ratio")
      ->capture_default_str();
  ldt_cmd->add_option("--exponent", ldt.exponent,
                      "exponent c in the q >= (dm/eps)^c diagnostic")
      ->capture_default_str();
  ldt_cmd->add_flag("--exhaustive", ldt.exhaustive,
                    "exact enumeration instead of sampling (small m, q)");
  ldt_cmd->add_option("--transcript", ldt.transcript,
                      "dump per-round transcripts to this CSV file");
  ldt_cmd->add_option("--transcript-rounds", ldt.transcript_rounds,
                      "transcript length (default min(trials, 1000))");

  LinCli lin;
  CLI::App* lin_cmd =
      app.add_subcommand("linearity", "oracularized BLR linearity test");
  add_common(lin_cmd, lin.common);
  lin_cmd->add_option("--n", lin.n, "number of variables")
      ->check(CLI::Range(std::size_t{1}, std::size_t{20}))
      ->capture_default_str();
  lin_cmd->add_flag("--untrimmed", lin.untrimmed,
                    "keep the redundant third answer bit");
  lin_cmd->add_flag("--exact", lin.exact,
                    "exact evaluation on the explicit game (n <= 8)");
  lin_cmd->add_option("--table", lin.table_path,
                      "truth table JSON (array of 2^n bits)");
  lin_cmd->add_option("--linear", lin.linear_mask,
                      "built-in linear function f(x) = <mask, x>")
      ->capture_default_str();
  lin_cmd->add_option("--corrupt", lin.corrupt,
                      "table indices to flip, applied in order");

  QuadeqCli qe;
  CLI::App* qe_cmd =
      app.add_subcommand("quadeq", "two-prover quadratic-equations test");
  add_common(qe_cmd, qe.common);
  qe_cmd->add_option("--instance", qe.instance_path, "instance JSON file");
  qe_cmd->add_option("--builtin", qe.builtin, "built-in instance")
      ->check(CLI::IsMember({"satisfiable", "contradictory"}))
      ->capture_default_str();
  qe_cmd->add_flag("--untrimmed", qe.untrimmed,
                   "keep the redundant third answer bit");
  qe_cmd->add_flag("--exhaustive", qe.exhaustive,
                   "exact per-sub-test enumeration for linear-form strategies");
  qe_cmd->add_option("--mixture", qe.mixture_csv,
                     "7 comma-separated sub-test weights (rationals)");
  qe_cmd->add_option("--assignment", qe.assignment,
                     "play the linear-form strategy of this assignment "
                     "(bit string, most-significant first)");

  ValueCli val;
  CLI::App* val_cmd = app.add_subcommand("value", "game value computations");
  add_common(val_cmd, val.common);
  val_cmd->add_option("--game", val.game_path, "game JSON file");
  val_cmd->add_option("--builtin", val.builtin, "built-in game (chsh)");
  val_cmd->add_option("--mode", val.mode,
                      "exact-classical | strategy-eval | seesaw | repeat:k")
      ->capture_default_str();
  val_cmd->add_option("--strategy", val.strategy_path,
                      "classical strategy JSON for strategy-eval");
  val_cmd->add_flag("--sampled", val.sampled,
                    "Monte-Carlo strategy evaluation instead of exact");
  val_cmd->add_option("--dim", val.dim, "seesaw measurement dimension")
      ->capture_default_str();
  val_cmd->add_option("--iters", val.iters, "seesaw sweep budget")
      ->capture_default_str();
  val_cmd->add_option("--restarts", val.restarts,
                      "seesaw restarts (seeds seed, seed+1, ...)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  PipelineCli imp;
  CLI::App* imp_cmd =
      app.add_subcommand("improve", "SDP-driven sub-measurement improvement");
  add_common(imp_cmd, imp.common);
  imp_cmd->add_option("--instance", imp.instance_path,
                      "instance JSON (state, family, structured, baseline)");
  imp_cmd->add_option("--builtin", imp.builtin, "built-in instance")
      ->check(CLI::IsMember({"exact", "sweep"}));
  imp_cmd->add_option("--levels", imp.levels,
                      "perturbation levels for --builtin sweep")
      ->capture_default_str();
  imp_cmd->add_option("--eta", imp.eta,
                      "consistency budget (default: measured)");
  imp_cmd->add_option("--trace", imp.trace_path,
                      "write the solver trace to this CSV file");

  PipelineCli met;
  CLI::App* met_cmd =
      app.add_subcommand("metrics", "consistency metrics of an instance");
  add_common(met_cmd, met.common);
  met_cmd->add_option("--instance", met.instance_path,
                      "instance JSON (state, family, structured, "
                      "submeasurement)");
  met_cmd->add_option("--builtin", met.builtin, "built-in instance (exact)");
  met_cmd->add_flag("--certify", met.certify,
                    "also compute the global-consistency certificate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand(ldt_cmd)) run_ldt(ldt);
    if (app.got_subcommand(lin_cmd)) run_linearity(lin);
    if (app.got_subcommand(qe_cmd)) run_quadeq(qe);
    if (app.got_subcommand(val_cmd)) run_value(val);
    if (app.got_subcommand(imp_cmd)) run_improve(imp);
    if (app.got_subcommand(met_cmd)) run_metrics(met);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
