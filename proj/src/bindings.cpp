// Python bindings for the main library operations: field/polynomial types
// used by the low-degree test, quantum states and measurement families, the
// consistency metrics, the dual SDP and the self-improvement step, game
// values, and the three concrete protocols.

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "eglab/consistency.hpp"
#include "eglab/game.hpp"
#include "eglab/gf.hpp"
#include "eglab/poly.hpp"
#include "eglab/protocols.hpp"
#include "eglab/quantum.hpp"
#include "eglab/rational.hpp"
#include "eglab/sdp.hpp"
#include "eglab/serialize.hpp"

namespace py = pybind11;

using eglab::Rational;
namespace qt = eglab::quantum;
namespace cs = eglab::consistency;
namespace gm = eglab::game;
namespace pr = eglab::protocols;
namespace sdp = eglab::sdp;
namespace ser = eglab::serialize;
namespace poly = eglab::poly;

namespace {

// The Monte-Carlo runners and solvers below never call back into Python, so
// they release the GIL for the duration of the C++ work.
using NoGil = py::call_guard<py::gil_scoped_release>;

std::vector<std::uint8_t> checked_table(std::size_t n,
                                        std::vector<std::uint8_t> table) {
  if (n < 1 || n > 20) throw std::invalid_argument("n must be in 1..20");
  if (table.size() != (std::size_t{1} << n))
    throw std::invalid_argument("truth table must have exactly 2^n entries");
  for (std::uint8_t b : table)
    if (b > 1) throw std::invalid_argument("truth table entries must be bits");
  return table;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() =
      "Two-prover test toolkit: low-degree, linearity and QUADEQ protocols, "
      "nonlocal game values, measurement-consistency metrics and the "
      "SDP-driven self-improvement step.";
  m.attr("__version__") = "0.1.0";

  // ---- exact rationals ----------------------------------------------------
  py::class_<Rational>(m, "Rational",
                       "Exact rational number with overflow-checked int64 "
                       "numerator and denominator.")
      .def(py::init<std::int64_t>(), py::arg("num"))
      .def(py::init<std::int64_t, std::int64_t>(), py::arg("num"),
           py::arg("den"))
      .def_property_readonly("num", &Rational::num)
      .def_property_readonly("den", &Rational::den)
      .def("__float__", &Rational::to_double)
      .def("as_integer_ratio",
           [](const Rational& r) { return py::make_tuple(r.num(), r.den()); })
      .def("__eq__",
           [](const Rational& a, const Rational& b) { return a == b; })
      .def("__mul__", [](const Rational& a, const Rational& b) { return a * b; })
      .def("__add__", [](const Rational& a, const Rational& b) { return a + b; })
      .def("__repr__", &Rational::to_string);

  // ---- polynomials over prime fields -------------------------------------
  py::class_<poly::MultiPoly>(m, "MultiPoly",
                              "Multivariate polynomial over a prime field "
                              "with a total-degree bound.")
      .def(py::init<std::uint32_t, std::uint64_t, std::uint32_t>(),
           py::arg("num_vars"), py::arg("modulus"), py::arg("degree_bound"))
      .def_property_readonly("num_vars", &poly::MultiPoly::num_vars)
      .def_property_readonly("modulus", &poly::MultiPoly::modulus)
      .def_property_readonly("degree_bound", &poly::MultiPoly::degree_bound)
      .def("set_coeff", &poly::MultiPoly::set_coeff, py::arg("exponents"),
           py::arg("coefficient"))
      .def("total_degree", &poly::MultiPoly::total_degree)
      .def(
          "evaluate",
          [](const poly::MultiPoly& g, const std::vector<std::uint32_t>& x) {
            return g.evaluate(eglab::gf::FieldVector(x, g.modulus())).value();
          },
          py::arg("point"), "Evaluate at a point given as a list of digits.")
      .def("__eq__", [](const poly::MultiPoly& a, const poly::MultiPoly& b) {
        return a == b;
      });

  // ---- quantum layer ------------------------------------------------------
  py::class_<qt::Operator>(m, "Operator",
                           "Hermitian operator; construction validates "
                           "Hermiticity and symmetrizes exactly.")
      .def(py::init<qt::Matrix>(), py::arg("matrix"))
      .def_static("identity", &qt::Operator::identity, py::arg("dim"))
      .def_static("zero", &qt::Operator::zero, py::arg("dim"))
      .def_property_readonly(
          "mat", [](const qt::Operator& o) -> qt::Matrix { return o.mat(); })
      .def_property_readonly("dim", &qt::Operator::dim)
      .def("min_eigenvalue", &qt::Operator::min_eigenvalue)
      .def("max_eigenvalue", &qt::Operator::max_eigenvalue)
      .def("is_psd", &qt::Operator::is_psd, py::arg("floor") = -1e-10);

  py::class_<qt::BipartiteState>(
      m, "BipartiteState",
      "Bipartite state |Psi> = sum_ij M_ij |i>|j> with symmetric, "
      "unit-norm coefficient matrix.")
      .def(py::init<qt::Matrix>(), py::arg("coeffs"))
      .def_static("normalized", &qt::BipartiteState::normalized,
                  py::arg("coeffs"))
      .def_property_readonly("coeffs",
                             [](const qt::BipartiteState& s) -> qt::Matrix {
                               return s.coeffs();
                             })
      .def_property_readonly("dim", &qt::BipartiteState::dim)
      .def("reduced_density", &qt::BipartiteState::reduced_density)
      .def("support_dim", &qt::BipartiteState::support_dim,
           py::arg("tol") = 1e-10);

  m.def("maximally_entangled", &qt::maximally_entangled, py::arg("dim"));

  py::class_<qt::MeasurementFamily>(
      m, "MeasurementFamily",
      "Question-indexed family {M_x^a} of PSD operators with per-question "
      "sums bounded by the identity.")
      .def(py::init<std::vector<std::vector<qt::Operator>>,
                    std::vector<double>>(),
           py::arg("ops"), py::arg("weights") = std::vector<double>{})
      .def_property_readonly("num_questions",
                             &qt::MeasurementFamily::num_questions)
      .def_property_readonly("num_outcomes",
                             &qt::MeasurementFamily::num_outcomes)
      .def_property_readonly("dim", &qt::MeasurementFamily::dim)
      .def("op", &qt::MeasurementFamily::op, py::arg("x"), py::arg("a"))
      .def("weight", &qt::MeasurementFamily::weight, py::arg("x"))
      .def("sum_at", &qt::MeasurementFamily::sum_at, py::arg("x"))
      .def("is_complete", &qt::MeasurementFamily::is_complete,
           py::arg("tol") = 1e-10);

  py::class_<qt::SubMeasurement>(
      m, "SubMeasurement",
      "Outcome-indexed PSD operators {T^g} with sum_g T^g <= Id.")
      .def(py::init<std::vector<qt::Operator>>(), py::arg("ops"))
      .def_property_readonly("num_outcomes", &qt::SubMeasurement::num_outcomes)
      .def_property_readonly("dim", &qt::SubMeasurement::dim)
      .def("op", &qt::SubMeasurement::op, py::arg("g"))
      .def_property_readonly(
          "sum",
          [](const qt::SubMeasurement& t) -> qt::Matrix { return t.sum(); });

  m.def("pair_expectation",
        py::overload_cast<const qt::Operator&, const qt::Operator&,
                          const qt::BipartiteState&>(&qt::pair_expectation),
        py::arg("a"), py::arg("b"), py::arg("psi"),
        "<Psi| A (x) B |Psi>, contracted against the coefficient matrix.");
  m.def("restricted_state", &qt::restricted_state, py::arg("psi"),
        py::arg("t"),
        "Normalized (Id-T)(x)(Id-T)|Psi> together with its squared norm.");

  // ---- consistency metrics ------------------------------------------------
  py::class_<cs::StructuredFamily>(
      m, "StructuredFamily",
      "Finite set of tabulated functions with its recomputed structure "
      "constant kappa.")
      .def(py::init<std::size_t, std::size_t, std::vector<cs::FunctionTable>>(),
           py::arg("num_questions"), py::arg("num_answers"),
           py::arg("functions"))
      .def_property_readonly("num_questions",
                             &cs::StructuredFamily::num_questions)
      .def_property_readonly("num_answers", &cs::StructuredFamily::num_answers)
      .def("__len__", &cs::StructuredFamily::size)
      .def("function", &cs::StructuredFamily::function, py::arg("g"))
      .def_property_readonly("kappa", &cs::StructuredFamily::kappa)
      .def("agreement", &cs::StructuredFamily::agreement, py::arg("g"),
           py::arg("h"));

  py::class_<cs::ConsistencyReport>(m, "ConsistencyReport")
      .def(py::init<>())
      .def_readwrite("self_consistency",
                     &cs::ConsistencyReport::self_consistency)
      .def_readwrite("projectivity", &cs::ConsistencyReport::projectivity)
      .def_readwrite("consistency", &cs::ConsistencyReport::consistency)
      .def_readwrite("completeness_error",
                     &cs::ConsistencyReport::completeness_error)
      .def_readwrite("structure", &cs::ConsistencyReport::structure)
      .def("validate", &cs::ConsistencyReport::validate)
      .def("__repr__", [](const cs::ConsistencyReport& r) {
        return ser::report_json(r).dump();
      });

  m.def("self_consistency",
        py::overload_cast<const qt::MeasurementFamily&,
                          const qt::BipartiteState&>(&cs::self_consistency),
        py::arg("m"), py::arg("psi"));
  m.def("self_consistency",
        py::overload_cast<const qt::SubMeasurement&, const qt::BipartiteState&>(
            &cs::self_consistency),
        py::arg("t"), py::arg("psi"));
  m.def("projectivity_defect",
        py::overload_cast<const qt::MeasurementFamily&,
                          const qt::BipartiteState&>(&cs::projectivity_defect),
        py::arg("m"), py::arg("psi"));
  m.def("projectivity_defect",
        py::overload_cast<const qt::SubMeasurement&, const qt::BipartiteState&>(
            &cs::projectivity_defect),
        py::arg("t"), py::arg("psi"));
  m.def("cross_consistency", &cs::cross_consistency, py::arg("t"),
        py::arg("g"), py::arg("m"), py::arg("psi"));
  m.def("completeness_error", &cs::completeness_error, py::arg("t"),
        py::arg("psi"));
  m.def("aggregate", &cs::aggregate, py::arg("m"), py::arg("g"),
        "A^g = E_x M_x^{g(x)} under the family's question distribution.");
  m.def("commutation_defect", &cs::commutation_defect, py::arg("t"),
        py::arg("m"), py::arg("psi"));
  m.def("aggregate_swap_gap", &cs::aggregate_swap_gap, py::arg("m"),
        py::arg("g"), py::arg("r"), py::arg("psi"));

  py::class_<cs::GlobalConsistencyCertificate>(m,
                                               "GlobalConsistencyCertificate")
      .def_readonly("epsilon", &cs::GlobalConsistencyCertificate::epsilon)
      .def_readonly("delta", &cs::GlobalConsistencyCertificate::delta)
      .def_readonly("z", &cs::GlobalConsistencyCertificate::z)
      .def_readonly("aggregated",
                    &cs::GlobalConsistencyCertificate::aggregated);
  m.def("certify_global_consistency", &cs::certify_global_consistency,
        py::arg("m"), py::arg("g"), py::arg("psi"), NoGil());

  // ---- the dual SDP and self-improvement ----------------------------------
  py::class_<sdp::SdpInstance>(m, "SdpInstance")
      .def(py::init<qt::BipartiteState, std::vector<qt::Operator>>(),
           py::arg("psi"), py::arg("constraints"))
      .def_property_readonly("dim", &sdp::SdpInstance::dim)
      .def("__len__", &sdp::SdpInstance::size)
      .def_property_readonly("psi", &sdp::SdpInstance::psi)
      .def("constraint", &sdp::SdpInstance::constraint, py::arg("i"));

  py::class_<sdp::SdpTraceRow>(m, "SdpTraceRow")
      .def_readonly("step", &sdp::SdpTraceRow::step)
      .def_readonly("mu", &sdp::SdpTraceRow::mu)
      .def_readonly("dual_value", &sdp::SdpTraceRow::dual_value)
      .def_readonly("primal_estimate", &sdp::SdpTraceRow::primal_estimate)
      .def_readonly("gap_estimate", &sdp::SdpTraceRow::gap_estimate);

  py::class_<sdp::SdpResult>(m, "SdpResult")
      .def_readonly("primal", &sdp::SdpResult::primal)
      .def_readonly("dual_z", &sdp::SdpResult::dual_z)
      .def_readonly("primal_value", &sdp::SdpResult::primal_value)
      .def_readonly("dual_value", &sdp::SdpResult::dual_value)
      .def_readonly("gap", &sdp::SdpResult::gap)
      .def_readonly("slackness_residual", &sdp::SdpResult::slackness_residual)
      .def_readonly("trace", &sdp::SdpResult::trace);

  m.def("solve", &sdp::solve, py::arg("instance"), NoGil(),
        "Log-det barrier path following on the dual program.");
  m.def("coarse_dual_estimate", &sdp::coarse_dual_estimate,
        py::arg("instance"), py::arg("iters"), NoGil());
  m.def("improve", &sdp::improve, py::arg("a"), py::arg("g"), py::arg("psi"),
        py::arg("q"), py::arg("eta"), NoGil(),
        "One self-improvement round; returns (S, consistency report).");
  m.def("combine_R", &sdp::combine_R, py::arg("t"), py::arg("q"));
  m.def("complete_to_measurement", &sdp::complete_to_measurement,
        py::arg("r"));

  py::class_<sdp::SelfImprovementConfig>(m, "SelfImprovementConfig")
      .def(py::init<>())
      .def_readwrite("eps0", &sdp::SelfImprovementConfig::eps0)
      .def_readwrite("delta0", &sdp::SelfImprovementConfig::delta0)
      .def_readwrite("t0", &sdp::SelfImprovementConfig::t0)
      .def_readwrite("max_outer_iterations",
                     &sdp::SelfImprovementConfig::max_outer_iterations);

  py::class_<sdp::LoopResult>(m, "LoopResult")
      .def_readonly("result", &sdp::LoopResult::result)
      .def_readonly("report", &sdp::LoopResult::report)
      .def_readonly("outer_iterations", &sdp::LoopResult::outer_iterations)
      .def_readonly("consistency_trace", &sdp::LoopResult::consistency_trace);

  // Keeps the GIL: the baseline provider is typically a Python callable.
  m.def("self_improvement_loop", &sdp::self_improvement_loop, py::arg("a"),
        py::arg("g"), py::arg("psi"), py::arg("config"), py::arg("baseline"));

  // ---- games ---------------------------------------------------------------
  py::class_<gm::GameSpec>(m, "GameSpec",
                           "Two-prover game; build one with chsh_game, "
                           "game_from_json or the protocol factories.")
      .def_property_readonly("is_explicit", &gm::GameSpec::is_explicit)
      .def_property_readonly("projection_verified",
                             &gm::GameSpec::projection_verified);

  py::class_<gm::ClassicalStrategy>(m, "ClassicalStrategy")
      .def(py::init<>())
      .def(py::init([](std::vector<std::size_t> alice,
                       std::vector<std::size_t> bob) {
             return gm::ClassicalStrategy{std::move(alice), std::move(bob)};
           }),
           py::arg("alice"), py::arg("bob"))
      .def_readwrite("alice", &gm::ClassicalStrategy::alice)
      .def_readwrite("bob", &gm::ClassicalStrategy::bob);

  py::class_<gm::QuantumStrategy>(m, "QuantumStrategy")
      .def(py::init<qt::BipartiteState, qt::MeasurementFamily,
                    qt::MeasurementFamily>(),
           py::arg("psi"), py::arg("alice"), py::arg("bob"))
      .def_property_readonly("psi", &gm::QuantumStrategy::psi)
      .def_property_readonly("alice", &gm::QuantumStrategy::alice)
      .def_property_readonly("bob", &gm::QuantumStrategy::bob);

  py::class_<gm::ValueEstimate>(m, "ValueEstimate")
      .def_readonly("value", &gm::ValueEstimate::value)
      .def_readonly("std_error", &gm::ValueEstimate::std_error)
      .def_readonly("trials", &gm::ValueEstimate::trials);

  py::class_<gm::SampledStats>(m, "SampledStats")
      .def_readonly("overall", &gm::SampledStats::overall)
      .def_readonly("subtest_trials", &gm::SampledStats::subtest_trials)
      .def_readonly("subtest_accepts", &gm::SampledStats::subtest_accepts);

  m.def(
      "classical_value_exact",
      [](const gm::GameSpec& g) {
        gm::ClassicalStrategy best;
        Rational v;
        {
          py::gil_scoped_release release;
          v = gm::classical_value_exact(g, &best);
        }
        return py::make_tuple(v, best);
      },
      py::arg("game"),
      "Exact classical value by enumeration; returns (value, optimal "
      "strategy).");
  m.def("strategy_value_exact",
        py::overload_cast<const gm::GameSpec&, const gm::ClassicalStrategy&>(
            &gm::strategy_value_exact),
        py::arg("game"), py::arg("strategy"));
  m.def("strategy_value_exact",
        py::overload_cast<const gm::GameSpec&, const gm::QuantumStrategy&>(
            &gm::strategy_value_exact),
        py::arg("game"), py::arg("strategy"));
  m.def("strategy_value_sampled", &gm::strategy_value_sampled, py::arg("game"),
        py::arg("strategy"), py::arg("seed"), py::arg("trials") = 100000,
        py::arg("threads") = 1, NoGil());
  m.def("embed_classical", &gm::embed_classical, py::arg("game"),
        py::arg("strategy"), py::arg("dim") = 1);

  py::class_<gm::SeesawResult>(m, "SeesawResult")
      .def_readonly("value", &gm::SeesawResult::value)
      .def_readonly("strategy", &gm::SeesawResult::strategy)
      .def_readonly("trace", &gm::SeesawResult::trace)
      .def_readonly("stagnated", &gm::SeesawResult::stagnated);
  m.def("seesaw_lower_bound", &gm::seesaw_lower_bound, py::arg("game"),
        py::arg("dim"), py::arg("seed"), py::arg("iters") = 50, NoGil(),
        "Alternating-optimization lower bound on the entangled value.");

  m.def("parallel_repeat", &gm::parallel_repeat, py::arg("game"), py::arg("k"));
  m.def("repeat_strategy", &gm::repeat_strategy, py::arg("game"),
        py::arg("strategy"), py::arg("k"));
  m.def("chsh_game", &gm::chsh_game);
  m.def("chsh_optimal_strategy", &gm::chsh_optimal_strategy);

  // ---- protocols -----------------------------------------------------------
  py::class_<pr::LdtParams>(m, "LdtParams")
      .def(py::init([](std::uint32_t d, std::uint32_t m_, std::uint64_t q) {
             return pr::LdtParams{d, m_, q};
           }),
           py::arg("d"), py::arg("m"), py::arg("q"))
      .def_readwrite("d", &pr::LdtParams::d)
      .def_readwrite("m", &pr::LdtParams::m)
      .def_readwrite("q", &pr::LdtParams::q)
      .def("validate", &pr::LdtParams::validate);

  py::class_<pr::ProverOracle>(m, "ProverOracle",
                               "Deterministic prover answering both the "
                               "plane and the point question kinds.");
  m.def("honest_ldt_strategy", &pr::honest_ldt_strategy, py::arg("g"),
        py::arg("params"));
  m.def("constant_oracle", &pr::constant_oracle, py::arg("params"),
        py::arg("value"));
  m.def("random_oracle", &pr::random_oracle, py::arg("params"),
        py::arg("seed"));

  py::class_<pr::LdtStats>(m, "LdtStats")
      .def_readonly("acceptance", &pr::LdtStats::acceptance)
      .def_readonly("std_error", &pr::LdtStats::std_error)
      .def_readonly("trials", &pr::LdtStats::trials)
      .def_readonly("accepted", &pr::LdtStats::accepted)
      .def_readonly("dependent_rounds", &pr::LdtStats::dependent_rounds);
  py::class_<pr::LdtExact>(m, "LdtExact")
      .def_readonly("acceptance", &pr::LdtExact::acceptance)
      .def_readonly("dependent_fraction", &pr::LdtExact::dependent_fraction);

  m.def("ldt_run", &pr::ldt_run, py::arg("params"), py::arg("first"),
        py::arg("second"), py::arg("trials"), py::arg("seed"),
        py::arg("threads") = 1, NoGil());
  m.def("ldt_exhaustive", &pr::ldt_exhaustive, py::arg("params"),
        py::arg("first"), py::arg("second"), NoGil());
  m.def("ldt_soundness_ratio", &pr::ldt_soundness_ratio, py::arg("params"),
        py::arg("epsilon"), py::arg("exponent"));

  py::class_<pr::LdtSizes>(m, "LdtSizes")
      .def_readonly("point_question_elems", &pr::LdtSizes::point_question_elems)
      .def_readonly("plane_question_elems", &pr::LdtSizes::plane_question_elems)
      .def_readonly("plane_answer_elems", &pr::LdtSizes::plane_answer_elems)
      .def_readonly("point_answer_elems", &pr::LdtSizes::point_answer_elems)
      .def_readonly("bits_per_element", &pr::LdtSizes::bits_per_element)
      .def_readonly("max_question_bits", &pr::LdtSizes::max_question_bits)
      .def_readonly("max_answer_bits", &pr::LdtSizes::max_answer_bits);
  m.def("ldt_sizes", &pr::ldt_sizes, py::arg("params"));

  // Linearity: table-driven helpers keep the trial loop free of Python
  // callbacks, so the threaded runners stay safe.
  m.def(
      "linearity_value_exact",
      [](std::size_t n, std::vector<std::uint8_t> table, bool trimmed) {
        const auto t = checked_table(n, std::move(table));
        const pr::LinearityGame lg = pr::linearity_game(n, trimmed);
        if (!lg.explicit_mode)
          throw std::invalid_argument("exact evaluation needs n <= 8");
        return gm::strategy_value_exact(lg.game, lg.table_strategy(t));
      },
      py::arg("n"), py::arg("table"), py::arg("trimmed") = true,
      "Exact acceptance of the induced table strategy on the oracularized "
      "linearity game.");
  m.def(
      "linearity_value_sampled",
      [](std::size_t n, std::vector<std::uint8_t> table, bool trimmed,
         std::uint64_t seed, std::uint64_t trials, unsigned threads) {
        const auto t = checked_table(n, std::move(table));
        const pr::LinearityGame lg = pr::linearity_game(n, trimmed);
        py::gil_scoped_release release;
        if (lg.explicit_mode)
          return gm::strategy_value_sampled(lg.game, lg.table_strategy(t),
                                            seed, trials, threads);
        const auto f = [&t](std::uint64_t x) { return t[x]; };
        return gm::run_sampled(lg.game, lg.function_strategy(f), seed, trials,
                               threads)
            .overall;
      },
      py::arg("n"), py::arg("table"), py::arg("trimmed") = true,
      py::arg("seed") = 0, py::arg("trials") = 100000, py::arg("threads") = 1);

  // QUADEQ
  py::class_<pr::QuadeqInstance>(m, "QuadeqInstance")
      .def(py::init<>())
      .def_readwrite("n", &pr::QuadeqInstance::n)
      .def_readwrite("forms", &pr::QuadeqInstance::forms)
      .def_readwrite("constants", &pr::QuadeqInstance::constants)
      .def_readwrite("witness", &pr::QuadeqInstance::witness)
      .def("validate", &pr::QuadeqInstance::validate)
      .def("check", &pr::QuadeqInstance::check, py::arg("assignment"));

  py::class_<pr::LinearFormStrategy>(m, "LinearFormStrategy")
      .def(py::init<>())
      .def_readwrite("half1", &pr::LinearFormStrategy::half1)
      .def_readwrite("half2", &pr::LinearFormStrategy::half2)
      .def_readwrite("full", &pr::LinearFormStrategy::full)
      .def_readwrite("tensor", &pr::LinearFormStrategy::tensor);
  m.def("forms_from_assignment", &pr::forms_from_assignment, py::arg("inst"),
        py::arg("assignment"));

  py::class_<pr::QuadeqMixture>(m, "QuadeqMixture")
      .def(py::init<>())
      .def_static("standard", &pr::QuadeqMixture::standard)
      .def_readwrite("weights", &pr::QuadeqMixture::weights)
      .def("validate", &pr::QuadeqMixture::validate);

  py::class_<pr::QuadeqBreakdown>(m, "QuadeqBreakdown")
      .def_readonly("subtest_acceptance",
                    &pr::QuadeqBreakdown::subtest_acceptance)
      .def_readonly("overall", &pr::QuadeqBreakdown::overall);
  m.def("quadeq_exhaustive", &pr::quadeq_exhaustive, py::arg("inst"),
        py::arg("strategy"),
        py::arg("mixture") = pr::QuadeqMixture::standard(), NoGil());

  m.def(
      "quadeq_run",
      [](const pr::QuadeqInstance& inst,
         std::optional<pr::LinearFormStrategy> forms,
         const pr::QuadeqMixture& mixture, bool trimmed, std::uint64_t seed,
         std::uint64_t trials, unsigned threads) {
        const pr::QuadeqGame qg = pr::quadeq_game(inst, mixture, trimmed);
        const gm::FunctionStrategy strat =
            forms ? qg.strategy(*forms) : qg.honest_strategy();
        py::gil_scoped_release release;
        return gm::run_sampled(qg.game, strat, seed, trials, threads);
      },
      py::arg("inst"), py::arg("forms") = std::nullopt,
      py::arg("mixture") = pr::QuadeqMixture::standard(),
      py::arg("trimmed") = true, py::arg("seed") = 0,
      py::arg("trials") = 100000, py::arg("threads") = 1,
      "Sampled run of the QUADEQ game; None forms plays the honest witness "
      "strategy.");

  py::class_<pr::LinearityGame>(m, "LinearityGame")
      .def_readonly("game", &pr::LinearityGame::game)
      .def_readonly("n", &pr::LinearityGame::n)
      .def_readonly("trimmed", &pr::LinearityGame::trimmed)
      .def_readonly("explicit_mode", &pr::LinearityGame::explicit_mode)
      .def("table_strategy", &pr::LinearityGame::table_strategy,
           py::arg("truth_table"));
  m.def("linearity_game", &pr::linearity_game, py::arg("n"),
        py::arg("trimmed") = true);
  m.def("answer_trim", &pr::answer_trim, py::arg("game"));

  // ---- JSON bridges --------------------------------------------------------
  m.def(
      "game_from_json",
      [](const std::string& text) {
        return ser::game_from_json(nlohmann::json::parse(text));
      },
      py::arg("text"));
  m.def(
      "game_to_json",
      [](const gm::GameSpec& g, const std::string& predicate_name) {
        return ser::game_json(g, predicate_name).dump(2);
      },
      py::arg("game"), py::arg("predicate_name") = "");
  m.def(
      "quadeq_from_json",
      [](const std::string& text) {
        return ser::quadeq_from_json(nlohmann::json::parse(text));
      },
      py::arg("text"));
  m.def(
      "quadeq_to_json",
      [](const pr::QuadeqInstance& inst) { return ser::quadeq_json(inst).dump(2); },
      py::arg("inst"));
}
