#include "eglab/serialize.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <set>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace eglab::serialize {

namespace {

// Enumeration cap when dumping a predicate as an accepting-tuple list.
constexpr std::uint64_t kPredicateDumpGuard = 10'000'000;

void require_object(const json& j, const char* what) {
  if (!j.is_object())
    throw std::invalid_argument(std::string(what) + ": expected an object");
}

std::vector<std::string> positional_labels(char prefix, std::size_t count) {
  std::vector<std::string> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i)
    out.push_back(prefix + std::to_string(i));
  return out;
}

}  // namespace

json rational_json(const Rational& r) { return json::array({r.num(), r.den()}); }

Rational rational_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2)
    throw std::invalid_argument("rational: expected [numerator, denominator]");
  return Rational(j.at(0).get<std::int64_t>(), j.at(1).get<std::int64_t>());
}

// ---------------------------------------------------------------------------
// Polynomials

json multipoly_json(const poly::MultiPoly& g) {
  json coeffs = json::array();
  // CoeffMap already iterates in graded lexicographic order.
  for (const auto& [exps, c] : g.coefficients())
    coeffs.push_back(json::array({exps, c}));
  return {{"num_vars", g.num_vars()},
          {"modulus", g.modulus()},
          {"degree_bound", g.degree_bound()},
          {"coefficients", std::move(coeffs)}};
}

poly::MultiPoly multipoly_from_json(const json& j) {
  require_object(j, "polynomial");
  poly::MultiPoly g(j.at("num_vars").get<std::uint32_t>(),
                    j.at("modulus").get<std::uint64_t>(),
                    j.at("degree_bound").get<std::uint32_t>());
  for (const json& term : j.at("coefficients")) {
    if (!term.is_array() || term.size() != 2)
      throw std::invalid_argument("polynomial: bad coefficient entry");
    g.set_coeff(term.at(0).get<std::vector<std::uint32_t>>(),
                term.at(1).get<std::uint64_t>());
  }
  return g;
}

json bivariate_json(const poly::BivariatePoly& g) {
  // The coefficient map is plain (i, j)-ordered; re-sort into graded order
  // so the dump is canonical alongside the multivariate one.
  std::vector<std::array<std::uint32_t, 3>> terms;
  for (const auto& [ij, c] : g.coefficients())
    terms.push_back({ij.first, ij.second, c});
  std::sort(terms.begin(), terms.end(), [](const auto& a, const auto& b) {
    const poly::GradedLexLess less;
    return less({a[0], a[1]}, {b[0], b[1]});
  });
  json coeffs = json::array();
  for (const auto& t : terms) coeffs.push_back(json::array({t[0], t[1], t[2]}));
  return {{"modulus", g.modulus()},
          {"degree_bound", g.degree_bound()},
          {"coefficients", std::move(coeffs)}};
}

poly::BivariatePoly bivariate_from_json(const json& j) {
  require_object(j, "bivariate polynomial");
  poly::BivariatePoly g(j.at("modulus").get<std::uint64_t>(),
                        j.at("degree_bound").get<std::uint32_t>());
  for (const json& term : j.at("coefficients")) {
    if (!term.is_array() || term.size() != 3)
      throw std::invalid_argument("bivariate polynomial: bad coefficient entry");
    g.set_coeff(term.at(0).get<std::uint32_t>(), term.at(1).get<std::uint32_t>(),
                term.at(2).get<std::uint64_t>());
  }
  return g;
}

// ---------------------------------------------------------------------------
// States, operators, measurement families

json matrix_json(const quantum::Matrix& m) {
  json entries = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      entries.push_back(json::array({m(r, c).real(), m(r, c).imag()}));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"entries", std::move(entries)}};
}

quantum::Matrix matrix_from_json(const json& j) {
  require_object(j, "matrix");
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const json& entries = j.at("entries");
  if (rows < 0 || cols < 0 ||
      entries.size() != static_cast<std::size_t>(rows * cols))
    throw std::invalid_argument("matrix: entry count does not match the shape");
  quantum::Matrix m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c, ++k) {
      const json& e = entries.at(k);
      if (!e.is_array() || e.size() != 2)
        throw std::invalid_argument("matrix: entries must be [re, im] pairs");
      m(r, c) = quantum::Complex(e.at(0).get<double>(), e.at(1).get<double>());
    }
  return m;
}

json operator_json(const quantum::Operator& op) { return matrix_json(op.mat()); }

quantum::Operator operator_from_json(const json& j) {
  return quantum::Operator(matrix_from_json(j));
}

json state_json(const quantum::BipartiteState& psi) {
  return matrix_json(psi.coeffs());
}

quantum::BipartiteState state_from_json(const json& j) {
  return quantum::BipartiteState(matrix_from_json(j));
}

json family_json(const quantum::MeasurementFamily& m) {
  json questions = json::array();
  for (std::size_t x = 0; x < m.num_questions(); ++x) {
    json ops = json::array();
    for (std::size_t a = 0; a < m.num_outcomes(); ++a)
      ops.push_back(operator_json(m.op(x, a)));
    questions.push_back(std::move(ops));
  }
  return {{"operators", std::move(questions)}, {"weights", m.weights()}};
}

quantum::MeasurementFamily family_from_json(const json& j) {
  require_object(j, "measurement family");
  std::vector<std::vector<quantum::Operator>> ops;
  for (const json& question : j.at("operators")) {
    std::vector<quantum::Operator> row;
    for (const json& op : question) row.push_back(operator_from_json(op));
    ops.push_back(std::move(row));
  }
  std::vector<double> weights;
  if (j.contains("weights")) weights = j.at("weights").get<std::vector<double>>();
  return quantum::MeasurementFamily(std::move(ops), std::move(weights));
}

json submeasurement_json(const quantum::SubMeasurement& t) {
  json ops = json::array();
  for (std::size_t g = 0; g < t.num_outcomes(); ++g)
    ops.push_back(operator_json(t.op(g)));
  return {{"operators", std::move(ops)}};
}

quantum::SubMeasurement submeasurement_from_json(const json& j) {
  require_object(j, "sub-measurement");
  std::vector<quantum::Operator> ops;
  for (const json& op : j.at("operators")) ops.push_back(operator_from_json(op));
  return quantum::SubMeasurement(std::move(ops));
}

// ---------------------------------------------------------------------------
// Consistency metrics

json report_json(const consistency::ConsistencyReport& r) {
  return {{"self_consistency", r.self_consistency},
          {"projectivity", r.projectivity},
          {"consistency", r.consistency},
          {"completeness_error", r.completeness_error},
          {"structure", r.structure}};
}

consistency::ConsistencyReport report_from_json(const json& j) {
  require_object(j, "consistency report");
  consistency::ConsistencyReport r;
  r.self_consistency = j.at("self_consistency").get<double>();
  r.projectivity = j.at("projectivity").get<double>();
  r.consistency = j.at("consistency").get<double>();
  r.completeness_error = j.at("completeness_error").get<double>();
  r.structure = j.at("structure").get<double>();
  return r;
}

json structured_family_json(const consistency::StructuredFamily& g) {
  json functions = json::array();
  for (std::size_t i = 0; i < g.size(); ++i) functions.push_back(g.function(i));
  return {{"num_questions", g.num_questions()},
          {"num_answers", g.num_answers()},
          {"functions", std::move(functions)}};
}

consistency::StructuredFamily structured_family_from_json(const json& j) {
  require_object(j, "structured family");
  std::vector<consistency::FunctionTable> functions;
  for (const json& f : j.at("functions"))
    functions.push_back(f.get<consistency::FunctionTable>());
  return consistency::StructuredFamily(j.at("num_questions").get<std::size_t>(),
                                       j.at("num_answers").get<std::size_t>(),
                                       std::move(functions));
}

// ---------------------------------------------------------------------------
// Semidefinite programs

json sdp_instance_json(const sdp::SdpInstance& inst) {
  json constraints = json::array();
  for (const auto& a : inst.constraints()) constraints.push_back(operator_json(a));
  return {{"psi", state_json(inst.psi())}, {"constraints", std::move(constraints)}};
}

sdp::SdpInstance sdp_instance_from_json(const json& j) {
  require_object(j, "sdp instance");
  std::vector<quantum::Operator> constraints;
  for (const json& a : j.at("constraints"))
    constraints.push_back(operator_from_json(a));
  return sdp::SdpInstance(state_from_json(j.at("psi")), std::move(constraints));
}

json sdp_result_json(const sdp::SdpResult& r) {
  json trace = json::array();
  for (const auto& row : r.trace)
    trace.push_back({{"step", row.step},
                     {"mu", row.mu},
                     {"dual_value", row.dual_value},
                     {"primal_estimate", row.primal_estimate},
                     {"gap_estimate", row.gap_estimate}});
  return {{"primal", submeasurement_json(r.primal)},
          {"dual_z", operator_json(r.dual_z)},
          {"primal_value", r.primal_value},
          {"dual_value", r.dual_value},
          {"gap", r.gap},
          {"slackness_residual", r.slackness_residual},
          {"trace", std::move(trace)}};
}

sdp::SdpResult sdp_result_from_json(const json& j) {
  require_object(j, "sdp result");
  std::vector<sdp::SdpTraceRow> trace;
  for (const json& row : j.at("trace"))
    trace.push_back({row.at("step").get<std::size_t>(),
                     row.at("mu").get<double>(),
                     row.at("dual_value").get<double>(),
                     row.at("primal_estimate").get<double>(),
                     row.at("gap_estimate").get<double>()});
  return {submeasurement_from_json(j.at("primal")),
          operator_from_json(j.at("dual_z")),
          j.at("primal_value").get<double>(),
          j.at("dual_value").get<double>(),
          j.at("gap").get<double>(),
          j.at("slackness_residual").get<double>(),
          std::move(trace)};
}

std::string sdp_trace_csv(const std::vector<sdp::SdpTraceRow>& trace) {
  std::string out =
      csv_row({"step", "mu", "dual_value", "primal_estimate", "gap_estimate"});
  for (const auto& row : trace) {
    std::ostringstream mu, dual, primal, gap;
    mu.precision(17);
    dual.precision(17);
    primal.precision(17);
    gap.precision(17);
    mu << row.mu;
    dual << row.dual_value;
    primal << row.primal_estimate;
    gap << row.gap_estimate;
    out += csv_row({std::to_string(row.step), mu.str(), dual.str(),
                    primal.str(), gap.str()});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Games and strategies

game::GameSpec::Predicate builtin_predicate(const std::string& name) {
  if (name == "chsh")
    return [](std::size_t qa, std::size_t qb, std::uint32_t, std::size_t a,
              std::size_t b) { return (a ^ b) == (qa & qb); };
  if (name == "equality")
    return [](std::size_t, std::size_t, std::uint32_t, std::size_t a,
              std::size_t b) { return a == b; };
  if (name == "always")
    return [](std::size_t, std::size_t, std::uint32_t, std::size_t,
              std::size_t) { return true; };
  throw std::invalid_argument("unknown builtin predicate: " + name);
}

json game_json(const game::GameSpec& g, const std::string& predicate_name) {
  if (!g.is_explicit())
    throw std::invalid_argument(
        "sampler-backed games are procedural and cannot be serialized");

  json answers_a = json::array(), answers_b = json::array();
  for (std::size_t x = 0; x < g.num_questions_a(); ++x)
    answers_a.push_back(positional_labels('a', g.answers_a(x)));
  for (std::size_t y = 0; y < g.num_questions_b(); ++y)
    answers_b.push_back(positional_labels('b', g.answers_b(y)));

  json distribution = json::array();
  std::set<std::array<std::uint64_t, 3>> keys;
  for (const auto& e : g.entries()) {
    distribution.push_back({{"qa", e.qa},
                            {"qb", e.qb},
                            {"aux", e.aux},
                            {"weight", rational_json(e.weight)}});
    keys.insert({e.qa, e.qb, e.aux});
  }

  std::uint64_t work = 0;
  for (const auto& k : keys)
    work += static_cast<std::uint64_t>(g.answers_a(k[0])) * g.answers_b(k[1]);
  if (work > kPredicateDumpGuard)
    throw std::runtime_error("predicate table too large to enumerate");

  json predicate;
  if (!predicate_name.empty()) {
    const game::GameSpec::Predicate named = builtin_predicate(predicate_name);
    for (const auto& k : keys)
      for (std::size_t a = 0; a < g.answers_a(k[0]); ++a)
        for (std::size_t b = 0; b < g.answers_b(k[1]); ++b)
          if (named(k[0], k[1], static_cast<std::uint32_t>(k[2]), a, b) !=
              g.accepts(k[0], k[1], static_cast<std::uint32_t>(k[2]), a, b))
            throw std::invalid_argument(
                "game predicate disagrees with builtin '" + predicate_name +
                "'");
    predicate = {{"type", "builtin"}, {"name", predicate_name}};
  } else {
    json accepting = json::array();
    for (const auto& k : keys)
      for (std::size_t a = 0; a < g.answers_a(k[0]); ++a)
        for (std::size_t b = 0; b < g.answers_b(k[1]); ++b)
          if (g.accepts(k[0], k[1], static_cast<std::uint32_t>(k[2]), a, b))
            accepting.push_back(json::array({k[0], k[1], k[2], a, b}));
    predicate = {{"type", "truth-table"}, {"accepting", std::move(accepting)}};
  }

  return {{"questions_a", positional_labels('x', g.num_questions_a())},
          {"questions_b", positional_labels('y', g.num_questions_b())},
          {"answers_a", std::move(answers_a)},
          {"answers_b", std::move(answers_b)},
          {"distribution", std::move(distribution)},
          {"predicate", std::move(predicate)},
          {"projection", g.projection_verified()}};
}

game::GameSpec game_from_json(const json& j) {
  require_object(j, "game");
  std::vector<std::size_t> answers_a, answers_b;
  for (const json& labels : j.at("answers_a")) answers_a.push_back(labels.size());
  for (const json& labels : j.at("answers_b")) answers_b.push_back(labels.size());
  if (j.at("questions_a").size() != answers_a.size() ||
      j.at("questions_b").size() != answers_b.size())
    throw std::invalid_argument(
        "game: question labels and answer lists disagree on the counts");

  std::vector<game::GameSpec::Entry> entries;
  for (const json& row : j.at("distribution"))
    entries.push_back({row.at("qa").get<std::size_t>(),
                       row.at("qb").get<std::size_t>(),
                       row.at("aux").get<std::uint32_t>(),
                       rational_from_json(row.at("weight"))});

  const json& pj = j.at("predicate");
  game::GameSpec::Predicate pred;
  const std::string type = pj.at("type").get<std::string>();
  if (type == "builtin") {
    pred = builtin_predicate(pj.at("name").get<std::string>());
  } else if (type == "truth-table") {
    std::vector<std::array<std::uint64_t, 5>> accepting;
    for (const json& row : pj.at("accepting")) {
      if (!row.is_array() || row.size() != 5)
        throw std::invalid_argument("game: accepting tuples need 5 fields");
      accepting.push_back({row.at(0).get<std::uint64_t>(),
                           row.at(1).get<std::uint64_t>(),
                           row.at(2).get<std::uint64_t>(),
                           row.at(3).get<std::uint64_t>(),
                           row.at(4).get<std::uint64_t>()});
    }
    std::sort(accepting.begin(), accepting.end());
    pred = [accepting = std::move(accepting)](
               std::size_t qa, std::size_t qb, std::uint32_t aux, std::size_t a,
               std::size_t b) {
      return std::binary_search(
          accepting.begin(), accepting.end(),
          std::array<std::uint64_t, 5>{qa, qb, aux, a, b});
    };
  } else {
    throw std::invalid_argument("game: unknown predicate type '" + type + "'");
  }

  return game::GameSpec::make_explicit(std::move(answers_a),
                                       std::move(answers_b), std::move(entries),
                                       std::move(pred),
                                       j.value("projection", false));
}

json strategy_json(const game::ClassicalStrategy& s) {
  return {{"alice", s.alice}, {"bob", s.bob}};
}

game::ClassicalStrategy strategy_from_json(const json& j) {
  require_object(j, "strategy");
  game::ClassicalStrategy s;
  s.alice = j.at("alice").get<std::vector<std::size_t>>();
  s.bob = j.at("bob").get<std::vector<std::size_t>>();
  return s;
}

// ---------------------------------------------------------------------------
// Protocol inputs

namespace {

std::string bits_to_string(std::uint64_t bits, std::size_t n) {
  std::string s(n, '0');
  for (std::size_t i = 0; i < n; ++i)
    if ((bits >> i) & 1) s[n - 1 - i] = '1';
  return s;
}

std::uint64_t bits_from_string(const std::string& s, std::size_t n,
                               const char* what) {
  if (s.size() != n)
    throw std::invalid_argument(std::string(what) + ": expected " +
                                std::to_string(n) + " binary digits");
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const char c = s[n - 1 - i];
    if (c != '0' && c != '1')
      throw std::invalid_argument(std::string(what) + ": non-binary digit");
    bits |= static_cast<std::uint64_t>(c - '0') << i;
  }
  return bits;
}

}  // namespace

json quadeq_json(const protocols::QuadeqInstance& inst) {
  json forms = json::array();
  for (const auto& rows : inst.forms) {
    json matrix = json::array();
    for (std::uint64_t row : rows) matrix.push_back(bits_to_string(row, inst.n));
    forms.push_back(std::move(matrix));
  }
  json constants = json::array();
  for (std::uint8_t c : inst.constants) constants.push_back(static_cast<int>(c));
  json out = {{"n", inst.n},
              {"forms", std::move(forms)},
              {"constants", std::move(constants)}};
  if (inst.witness) out["witness"] = bits_to_string(*inst.witness, inst.n);
  return out;
}

protocols::QuadeqInstance quadeq_from_json(const json& j) {
  require_object(j, "quadeq instance");
  protocols::QuadeqInstance inst;
  inst.n = j.at("n").get<std::size_t>();
  for (const json& matrix : j.at("forms")) {
    std::vector<std::uint64_t> rows;
    for (const json& row : matrix)
      rows.push_back(
          bits_from_string(row.get<std::string>(), inst.n, "form row"));
    inst.forms.push_back(std::move(rows));
  }
  for (const json& c : j.at("constants"))
    inst.constants.push_back(c.get<std::uint8_t>());
  if (j.contains("witness"))
    inst.witness =
        bits_from_string(j.at("witness").get<std::string>(), inst.n, "witness");
  inst.validate();
  return inst;
}

json ldt_params_json(const protocols::LdtParams& p) {
  return {{"d", p.d}, {"m", p.m}, {"q", p.q}};
}

protocols::LdtParams ldt_params_from_json(const json& j) {
  require_object(j, "low-degree params");
  protocols::LdtParams p;
  p.d = j.at("d").get<std::uint32_t>();
  p.m = j.at("m").get<std::uint32_t>();
  p.q = j.at("q").get<std::uint64_t>();
  p.validate();
  return p;
}

// ---------------------------------------------------------------------------
// CSV plumbing

std::string csv_field(const std::string& raw) {
  const bool needs_quotes =
      raw.find_first_of(",\"\r\n") != std::string::npos;
  if (!needs_quotes) return raw;
  std::string out = "\"";
  for (char c : raw) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string csv_row(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += csv_field(fields[i]);
  }
  out += "\r\n";
  return out;
}

}  // namespace eglab::serialize
