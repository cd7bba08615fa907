#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "eglab/consistency.hpp"
#include "eglab/game.hpp"
#include "eglab/poly.hpp"
#include "eglab/protocols.hpp"
#include "eglab/quantum.hpp"
#include "eglab/rational.hpp"
#include "eglab/sdp.hpp"

// JSON and CSV encodings of the value types the command-line tools read and
// write.  Dumps are canonical: object keys serialize alphabetically and
// coefficient lists are emitted in graded lexicographic order, so equal
// values produce byte-identical text.  Parsers validate through the type
// constructors, so a file that loads is a file that satisfies the type
// invariants.
namespace eglab::serialize {

using json = nlohmann::json;

// Rationals travel as [numerator, denominator] pairs.
json rational_json(const Rational& r);
Rational rational_from_json(const json& j);

// ---------------------------------------------------------------------------
// Polynomials

// {"num_vars", "modulus", "degree_bound", "coefficients": [[[e...], c], ...]}
json multipoly_json(const poly::MultiPoly& g);
poly::MultiPoly multipoly_from_json(const json& j);

// {"modulus", "degree_bound", "coefficients": [[i, j, c], ...]}
json bivariate_json(const poly::BivariatePoly& g);
poly::BivariatePoly bivariate_from_json(const json& j);

// ---------------------------------------------------------------------------
// States, operators, measurement families

// {"rows", "cols", "entries": [[re, im], ...]} in row-major order.
json matrix_json(const quantum::Matrix& m);
quantum::Matrix matrix_from_json(const json& j);

json operator_json(const quantum::Operator& op);
quantum::Operator operator_from_json(const json& j);

json state_json(const quantum::BipartiteState& psi);
quantum::BipartiteState state_from_json(const json& j);

// {"operators": [[op, ...] per question], "weights": [...]}
json family_json(const quantum::MeasurementFamily& m);
quantum::MeasurementFamily family_from_json(const json& j);

json submeasurement_json(const quantum::SubMeasurement& t);
quantum::SubMeasurement submeasurement_from_json(const json& j);

// ---------------------------------------------------------------------------
// Consistency metrics

// Flat object, one key per metric.
json report_json(const consistency::ConsistencyReport& r);
consistency::ConsistencyReport report_from_json(const json& j);

json structured_family_json(const consistency::StructuredFamily& g);
consistency::StructuredFamily structured_family_from_json(const json& j);

// ---------------------------------------------------------------------------
// Semidefinite programs

json sdp_instance_json(const sdp::SdpInstance& inst);
sdp::SdpInstance sdp_instance_from_json(const json& j);

json sdp_result_json(const sdp::SdpResult& r);
sdp::SdpResult sdp_result_from_json(const json& j);

// Central-path iterates as CSV (header row included).
std::string sdp_trace_csv(const std::vector<sdp::SdpTraceRow>& trace);

// ---------------------------------------------------------------------------
// Games and strategies

// Named predicates usable in game files: "chsh" ((a xor b) = (qa and qb)),
// "equality" (a = b), "always".  Unknown names throw std::invalid_argument.
game::GameSpec::Predicate builtin_predicate(const std::string& name);

// Explicit games only.  Question and answer sets appear as label lists
// (positional; the labels carry no semantics beyond their count), the
// distribution as {qa, qb, aux, weight} rows, and the predicate either as a
// named builtin or as the enumerated list of accepting (qa, qb, aux, a, b)
// tuples.  Passing a predicate name both names and *verifies* it: the dump
// fails if the named builtin disagrees with the game's predicate anywhere
// on the enumerated support.
json game_json(const game::GameSpec& g, const std::string& predicate_name = "");
game::GameSpec game_from_json(const json& j);

json strategy_json(const game::ClassicalStrategy& s);
game::ClassicalStrategy strategy_from_json(const json& j);

// ---------------------------------------------------------------------------
// Protocol inputs

// Quadratic-system files carry each form row as a binary string, most
// significant bit first (the leftmost character is the coefficient of
// variable n-1).  The optional witness uses the same convention.
json quadeq_json(const protocols::QuadeqInstance& inst);
protocols::QuadeqInstance quadeq_from_json(const json& j);

json ldt_params_json(const protocols::LdtParams& p);
protocols::LdtParams ldt_params_from_json(const json& j);

// ---------------------------------------------------------------------------
// CSV plumbing (RFC 4180: quote fields containing commas, quotes or line
// breaks; double embedded quotes; CRLF row terminators)

std::string csv_field(const std::string& raw);
std::string csv_row(const std::vector<std::string>& fields);

}  // namespace eglab::serialize
