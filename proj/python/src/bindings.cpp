#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "cli.hpp"
#include "feedbias/errors.hpp"
#include "feedbias/estimation.hpp"
#include "feedbias/evaluation.hpp"
#include "feedbias/io.hpp"
#include "feedbias/models.hpp"
#include "feedbias/policy.hpp"
#include "feedbias/quality.hpp"
#include "feedbias/simulator.hpp"
#include "feedbias/yule_simon.hpp"

namespace py = pybind11;
using namespace feedbias;

namespace {

std::vector<double> context_list(const ContextVector& c) {
  return {c.values().begin(), c.values().end()};
}

}  // namespace

PYBIND11_MODULE(_feedbias, m) {
  m.doc() = "Yule-Simon position-bias models, fitting, simulation and IPS evaluation";
  m.attr("__version__") = FEEDBIAS_VERSION;

  py::register_exception<UndefinedCorrelationError>(m, "UndefinedCorrelationError", PyExc_ValueError);
  py::register_exception<FitError>(m, "FitError", PyExc_RuntimeError);

  // Scroll-depth distribution.
  m.def("survival", [](double rho, std::int64_t rank) { return survival(YuleSimonParams(rho), rank); },
        py::arg("rho"), py::arg("rank"));
  m.def("log_survival",
        [](double rho, std::int64_t rank) { return log_survival(YuleSimonParams(rho), rank); },
        py::arg("rho"), py::arg("rank"));
  m.def("pmf",
        [](double rho, std::int64_t depth) {
          return std::exp(yule_simon_log_pmf(YuleSimonParams(rho), depth));
        },
        py::arg("rho"), py::arg("depth"));
  m.def("sample_depths",
        [](double rho, std::int64_t n, std::uint64_t seed) {
          const YuleSimonParams params(rho);
          if (n < 0) throw UsageError("n must be >= 0");
          py::array_t<std::int64_t> out(n);
          auto view = out.mutable_unchecked<1>();
          Rng rng(seed);
          for (py::ssize_t i = 0; i < n; ++i) view(i) = sample_depth(params, rng);
          return out;
        },
        py::arg("rho"), py::arg("n"), py::arg("seed") = 0);

  py::enum_<Family>(m, "Family")
      .value("dcg", Family::dcg)
      .value("log", Family::log)
      .value("exp", Family::exp)
      .value("prob", Family::prob)
      .value("empirical", Family::empirical)
      .value("contextual_log", Family::contextual_log)
      .value("contextual_exp", Family::contextual_exp)
      .value("contextual_prob", Family::contextual_prob);
  m.def("parse_family", [](const std::string& name) { return parse_family(name); });

  py::enum_<LinkKind>(m, "LinkKind")
      .value("identity", LinkKind::identity)
      .value("softplus", LinkKind::softplus)
      .value("sigmoid", LinkKind::sigmoid);
  m.def("link", [](double raw, LinkKind kind) { return feedbias::link(raw, kind); }, py::arg("raw"),
        py::arg("kind"));
  m.def("link_inverse", &link_inverse, py::arg("value"), py::arg("kind"));

  py::class_<ContextVector>(m, "ContextVector")
      .def(py::init([](const std::vector<double>& values) { return ContextVector(values); }))
      .def("__len__", &ContextVector::size)
      .def("__getitem__",
           [](const ContextVector& c, std::size_t i) {
             if (i >= c.size()) throw py::index_error();
             return c[i];
           })
      .def("tolist", &context_list)
      .def("__eq__", [](const ContextVector& a, const ContextVector& b) { return a == b; })
      .def("__repr__", [](const ContextVector& c) {
        std::ostringstream s;
        s << "ContextVector(" << py::repr(py::cast(context_list(c))).cast<std::string>() << ")";
        return s.str();
      });
  py::implicitly_convertible<py::list, ContextVector>();
  py::implicitly_convertible<py::tuple, ContextVector>();

  py::class_<PositionBiasModel>(m, "PositionBiasModel")
      .def_static("dcg", &PositionBiasModel::dcg)
      .def_static("log", &PositionBiasModel::log, py::arg("alpha"))
      .def_static("exp", &PositionBiasModel::exp, py::arg("gamma"))
      .def_static("prob", &PositionBiasModel::prob, py::arg("rho"))
      .def_static("empirical", &PositionBiasModel::empirical, py::arg("table"))
      .def_static("contextual",
                  py::overload_cast<Family, std::vector<double>, LinkKind>(&PositionBiasModel::contextual),
                  py::arg("base"), py::arg("theta"), py::arg("link"))
      .def_static("from_json",
                  [](const std::string& text) { return io::model_from_json(io::Json::parse(text)); })
      .def_property_readonly("family", &PositionBiasModel::family)
      .def("prob_view",
           [](const PositionBiasModel& model, std::int64_t rank, const ContextVector* context) {
             return model.prob_view(rank, context);
           },
           py::arg("rank"), py::arg("context") = nullptr)
      .def("resolved_parameter", &PositionBiasModel::resolved_parameter, py::arg("context"))
      .def("to_json", [](const PositionBiasModel& model) {
        return io::dump_json(io::model_to_json(model));
      })
      .def("__eq__", [](const PositionBiasModel& a, const PositionBiasModel& b) { return a == b; })
      .def("__repr__", [](const PositionBiasModel& model) {
        return "PositionBiasModel(" + io::dump_json(io::model_to_json(model), false) + ")";
      });

  py::class_<ImpressionRecord>(m, "ImpressionRecord")
      .def(py::init<>())
      .def(py::init([](std::uint64_t session_id, const ContextVector& context, std::uint64_t item_id,
                       std::int64_t rank, bool viewed, bool clicked) {
             return ImpressionRecord{session_id, context, item_id, rank, viewed, clicked};
           }),
           py::arg("session_id"), py::arg("context"), py::arg("item_id"), py::arg("rank"),
           py::arg("viewed"), py::arg("clicked"))
      .def_readwrite("session_id", &ImpressionRecord::session_id)
      .def_readwrite("context", &ImpressionRecord::context)
      .def_readwrite("item_id", &ImpressionRecord::item_id)
      .def_readwrite("rank", &ImpressionRecord::rank)
      .def_readwrite("viewed", &ImpressionRecord::viewed)
      .def_readwrite("clicked", &ImpressionRecord::clicked)
      .def("__eq__", [](const ImpressionRecord& a, const ImpressionRecord& b) { return a == b; })
      .def("__repr__", [](const ImpressionRecord& r) { return io::format_record(r); });

  py::class_<QualityModel, std::shared_ptr<QualityModel>>(m, "QualityModel")
      .def(py::init<std::vector<double>, std::vector<double>>(), py::arg("base"),
           py::arg("weights") = std::vector<double>{})
      .def_property_readonly("n_items", &QualityModel::n_items)
      .def("base", &QualityModel::base, py::arg("item"))
      .def("__call__", &QualityModel::operator(), py::arg("item"), py::arg("context"));

  py::class_<SimConfig>(m, "SimConfig")
      .def(py::init<>())
      .def_readwrite("n_sessions", &SimConfig::n_sessions)
      .def_readwrite("list_length", &SimConfig::list_length)
      .def_readwrite("n_items", &SimConfig::n_items)
      .def_readwrite("true_theta", &SimConfig::true_theta)
      .def_readwrite("quality_seed", &SimConfig::quality_seed)
      .def_property(
          "intervention", [](const SimConfig& c) { return std::string(to_string(c.intervention)); },
          [](SimConfig& c, const std::string& name) { c.intervention = parse_intervention(name); })
      .def_readwrite("seed", &SimConfig::seed)
      .def_readwrite("quality_min", &SimConfig::quality_min)
      .def_readwrite("quality_max", &SimConfig::quality_max)
      .def_readwrite("interaction_scale", &SimConfig::interaction_scale)
      .def("validate", &SimConfig::validate)
      .def("quality_model",
           [](const SimConfig& c) { return std::make_shared<QualityModel>(c.quality_model()); });

  m.def("simulate_dataset", py::overload_cast<const SimConfig&>(&simulate_dataset), py::arg("config"));
  m.def("true_rho", &true_rho, py::arg("config"), py::arg("context"));

  py::class_<OnlineReward>(m, "OnlineReward")
      .def_readonly("mean", &OnlineReward::mean)
      .def_readonly("std_error", &OnlineReward::std_error)
      .def_readonly("sessions", &OnlineReward::sessions)
      .def_readonly("list_length", &OnlineReward::list_length)
      .def_property_readonly("per_impression", &OnlineReward::per_impression)
      .def_property_readonly("per_impression_std_error", &OnlineReward::per_impression_std_error);

  py::class_<Policy>(m, "Policy")
      .def_static("by_true_quality",
                  [](std::shared_ptr<QualityModel> q) { return Policy::by_true_quality(std::move(q)); },
                  py::arg("quality"))
      .def_static("by_noisy_quality",
                  [](std::shared_ptr<QualityModel> q, double sd, std::uint64_t seed) {
                    return Policy::by_noisy_quality(std::move(q), sd, seed);
                  },
                  py::arg("quality"), py::arg("noise_sd"), py::arg("seed"))
      .def_static("random", &Policy::random, py::arg("seed"))
      .def_static("identity_logged", &Policy::identity_logged)
      .def_property_readonly("name", &Policy::name)
      .def("rank",
           [](const Policy& p, const ContextVector& context, const std::vector<std::uint64_t>& items) {
             return p.rank(context, items);
           },
           py::arg("context"), py::arg("candidates"));

  m.def("online_reward",
        [](const Policy& policy, const SimConfig& config, std::int64_t n_mc, std::uint64_t seed) {
          Rng rng(seed);
          return online_reward(policy, config, config.quality_model(), n_mc, rng);
        },
        py::arg("policy"), py::arg("config"), py::arg("n_mc"), py::arg("seed") = 0);

  py::enum_<StopReason>(m, "StopReason")
      .value("tolerance", StopReason::tolerance)
      .value("zero_gradient", StopReason::zero_gradient)
      .value("line_search_exhausted", StopReason::line_search_exhausted)
      .value("max_iters", StopReason::max_iters);

  py::class_<FitConfig>(m, "FitConfig")
      .def(py::init<>())
      .def_readwrite("k_cutoff", &FitConfig::k_cutoff)
      .def_readwrite("max_iters", &FitConfig::max_iters)
      .def_readwrite("tol", &FitConfig::tol)
      .def_readwrite("step_size", &FitConfig::step_size)
      .def_readwrite("seed", &FitConfig::seed)
      .def_readwrite("init", &FitConfig::init)
      .def_readwrite("link", &FitConfig::link);

  py::class_<FitResult>(m, "FitResult")
      .def_readonly("model", &FitResult::model)
      .def_readonly("theta", &FitResult::theta)
      .def_readonly("link", &FitResult::link)
      .def_readonly("initial_nll", &FitResult::initial_nll)
      .def_readonly("final_nll", &FitResult::final_nll)
      .def_readonly("iterations", &FitResult::iterations)
      .def_readonly("converged", &FitResult::converged)
      .def_readonly("stop_reason", &FitResult::stop_reason)
      .def_readonly("clamp_events", &FitResult::clamp_events)
      .def_readonly("nll_history", &FitResult::nll_history);

  m.def("fit",
        [](Family family, const Dataset& data, const FitConfig& config) {
          py::gil_scoped_release release;
          return fit(family, data, config);
        },
        py::arg("family"), py::arg("dataset"), py::arg("config") = FitConfig{});
  m.def("nll_at_k",
        [](const PositionBiasModel& model, const Dataset& data, std::int64_t k) {
          return nll_at_k(model, data, k);
        },
        py::arg("model"), py::arg("dataset"), py::arg("k"));
  m.def("nll_gradient",
        [](Family family, const std::vector<double>& theta, const Dataset& data, std::int64_t k) {
          return nll_gradient(family, theta, data, k);
        },
        py::arg("family"), py::arg("theta"), py::arg("dataset"), py::arg("k"));
  m.def("fit_empirical",
        [](const Dataset& data, std::int64_t max_rank) { return fit_empirical(data, max_rank); },
        py::arg("dataset"), py::arg("max_rank"));

  m.def("unbiased_dcg",
        [](const Dataset& data, const Policy& policy, const PositionBiasModel& model,
           std::optional<double> weight_cap, bool self_normalize) {
          return unbiased_dcg(data, policy, model, IpsOptions{weight_cap, self_normalize});
        },
        py::arg("dataset"), py::arg("policy"), py::arg("model"), py::arg("weight_cap") = py::none(),
        py::arg("self_normalize") = false);
  m.def("pearson_correlation",
        [](const std::vector<double>& xs, const std::vector<double>& ys) {
          return pearson_correlation(xs, ys);
        },
        py::arg("xs"), py::arg("ys"));

  m.def("read_dataset", &io::read_dataset_file, py::arg("path"));
  m.def("write_dataset", &io::write_dataset_file, py::arg("path"), py::arg("dataset"));

  // Runs the command-line tool in-process; returns (exit_code, stdout, stderr).
  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return std::make_tuple(code, out.str(), err.str());
  });
}
