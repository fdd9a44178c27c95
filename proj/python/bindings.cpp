#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "epnr/config.hpp"
#include "epnr/experiment.hpp"
#include "epnr/least_squares.hpp"
#include "epnr/solver.hpp"

namespace py = pybind11;
using namespace epnr;

PYBIND11_MODULE(_core, m) {
    m.doc() = "Post-disaster power network recovery planning";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<ContractViolation>(m, "ContractViolation", PyExc_RuntimeError);

    py::enum_<Objective>(m, "Objective").value("R1", Objective::R1).value("R2", Objective::R2);
    py::enum_<SelectorKind>(m, "SelectorKind")
        .value("BASE", SelectorKind::Base)
        .value("UNIFORM_ROLLOUT", SelectorKind::UniformRollout)
        .value("LINEAR_BELIEF", SelectorKind::LinearBelief)
        .value("ADAPTIVE", SelectorKind::Adaptive);

    py::class_<Network>(m, "Network")
        .def_property_readonly("size", &Network::size)
        .def_property_readonly("total_population", &Network::total_population)
        .def_property_readonly("n_cells", [](const Network& n) { return n.cells().size(); })
        .def("powered_population",
             [](const Network& n, const std::vector<std::uint8_t>& damaged) { return n.powered_population(damaged); },
             py::arg("damaged"))
        .def("to_json", [](const Network& n) { return to_json(n).dump(); });

    m.def("desk_network", &desk_network);
    m.def("gilroy_like_network", &gilroy_like_network);
    m.def(
        "build_synthetic_network",
        [](int n_cells, int transmission_len, double spacing, const std::vector<std::int64_t>& pops) {
            return build_synthetic_network(n_cells, transmission_len, spacing, pops);
        },
        py::arg("n_cells"), py::arg("transmission_len"), py::arg("segment_spacing_m"), py::arg("populations"));

    py::class_<DamageScenario>(m, "DamageScenario")
        .def_readonly("seed", &DamageScenario::seed)
        .def_property_readonly("states",
                               [](const DamageScenario& s) {
                                   std::vector<int> out;
                                   for (auto st : s.initial_state) out.push_back(static_cast<int>(st));
                                   return out;
                               })
        .def_readonly("durations", &DamageScenario::realized_duration)
        .def_property_readonly("damaged_count", &DamageScenario::damaged_count);

    m.def(
        "sample_scenario",
        [](const Network& net, std::uint64_t seed) {
            return sample_scenario(net, FragilityProfile::defaults(), RepairTimeTable::defaults(), seed);
        },
        py::arg("network"), py::arg("seed"));

    py::class_<SelectorConfig>(m, "SelectorConfig")
        .def(py::init([](SelectorKind kind) { return default_selector(kind); }), py::arg("kind"))
        .def_readwrite("label", &SelectorConfig::label)
        .def_readwrite("horizon", &SelectorConfig::horizon)
        .def_readwrite("alpha_tilde", &SelectorConfig::alpha_tilde)
        .def_readwrite("beta", &SelectorConfig::beta)
        .def_readwrite("b_star", &SelectorConfig::b_star)
        .def_readwrite("budget", &SelectorConfig::budget)
        .def_readwrite("threads", &SelectorConfig::threads)
        .def_property_readonly("name", &SelectorConfig::name)
        .def("validate", &SelectorConfig::validate);

    py::class_<EpisodeTrace>(m, "EpisodeTrace")
        .def_readonly("n_units", &EpisodeTrace::n_units)
        .def_readonly("days_to_goal", &EpisodeTrace::days_to_goal)
        .def_readonly("t_tot_days", &EpisodeTrace::t_tot_days)
        .def_readonly("benefit", &EpisodeTrace::benefit)
        .def_readonly("initial_powered", &EpisodeTrace::initial_powered)
        .def_property_readonly("elapsed_days",
                               [](const EpisodeTrace& t) {
                                   std::vector<double> out;
                                   for (const auto& s : t.steps) out.push_back(s.elapsed_days);
                                   return out;
                               })
        .def_property_readonly("powered", [](const EpisodeTrace& t) {
            std::vector<std::int64_t> out;
            for (const auto& s : t.steps) out.push_back(s.powered);
            return out;
        });

    m.def(
        "run_recovery",
        [](const Network& net, const DamageScenario& scenario, const SelectorConfig& selector, Objective objective,
           std::uint64_t seed, bool deterministic) {
            RewardSpec spec;
            spec.objective = objective;
            EpisodeOptions options;
            options.deterministic = deterministic;
            py::gil_scoped_release release;
            return run_recovery(net, scenario, RepairTimeTable::defaults(), selector, spec, seed, options);
        },
        py::arg("network"), py::arg("scenario"), py::arg("selector"), py::arg("objective") = Objective::R1,
        py::arg("seed") = 0, py::arg("deterministic") = false);

    m.def(
        "run_batch",
        [](const Network& net, const std::vector<DamageScenario>& scenarios,
           const std::vector<SelectorConfig>& selectors, Objective objective, std::uint64_t seed, int jobs) {
            RewardSpec spec;
            spec.objective = objective;
            BatchResult batch;
            {
                py::gil_scoped_release release;
                batch = run_batch(net, scenarios, selectors, RepairTimeTable::defaults(), spec, seed, jobs);
            }
            py::dict out;
            for (std::size_t s = 0; s < batch.selectors.size(); ++s) {
                py::dict entry;
                entry["days_to_goal"] = batch.days_to_goal(s);
                entry["benefit"] = batch.benefit(s);
                out[py::str(batch.selectors[s].name())] = entry;
            }
            return out;
        },
        py::arg("network"), py::arg("scenarios"), py::arg("selectors"), py::arg("objective") = Objective::R1,
        py::arg("seed") = 0, py::arg("jobs") = 1);

    m.def(
        "min_norm_least_squares",
        [](const Eigen::MatrixXd& H, const Eigen::VectorXd& y) { return min_norm_least_squares(H, y); },
        py::arg("H"), py::arg("y"));
    m.def(
        "numerical_rank", [](const Eigen::MatrixXd& H, double tol) { return numerical_rank(H, tol); }, py::arg("H"),
        py::arg("rel_tol") = kSingularCutoff);
    m.def(
        "sequential_assignment",
        [](const std::vector<double>& theta, int n_locations, int n_units, bool maximize) {
            return sequential_assignment(theta, n_locations, n_units, maximize ? Sense::Maximize : Sense::Minimize);
        },
        py::arg("theta"), py::arg("n_locations"), py::arg("n_units"), py::arg("maximize") = true);
    m.def(
        "ucb1_select",
        [](const std::vector<double>& means, const std::vector<std::int64_t>& counts, std::int64_t total) {
            return ucb1_select(means, counts, total);
        },
        py::arg("means"), py::arg("counts"), py::arg("total"));
    m.def("horizon_error_bound", &horizon_error_bound, py::arg("gamma"), py::arg("h"), py::arg("r_max"));
    m.def("cumulative_moving_average",
          [](const std::vector<double>& v) { return cumulative_moving_average(v); });
    m.def(
        "unit_count", &unit_count, py::arg("damaged"), py::arg("fraction") = 0.15, py::arg("round_up") = false);

    m.def(
        "main",
        [](const std::vector<std::string>& args) {
            std::vector<std::string> full = {"epnr"};
            full.insert(full.end(), args.begin(), args.end());
            std::vector<const char*> argv;
            for (const auto& a : full) argv.push_back(a.c_str());
            std::ostringstream out;
            std::ostringstream err;
            int rc = 0;
            {
                py::gil_scoped_release release;
                rc = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
            }
            return py::make_tuple(rc, out.str(), err.str());
        },
        py::arg("args"), "Runs the command line tool; returns (exit_code, stdout, stderr).");
}
