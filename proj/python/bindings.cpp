#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "bsim/distributions.hpp"
#include "bsim/geometry.hpp"
#include "bsim/huff.hpp"
#include "bsim/mcmc.hpp"
#include "bsim/metrics.hpp"
#include "bsim/model.hpp"
#include "bsim/special_functions.hpp"
#include "bsim/synthetic.hpp"
#include "bsim/vi.hpp"

namespace py = pybind11;
using namespace bsim;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bayesian spatial interaction model: attraction fields, visit "
            "probabilities, revenue prediction and posterior inference";

  py::class_<Point2>(m, "Point2")
      .def(py::init<>())
      .def(py::init<double, double>(), py::arg("x"), py::arg("y"))
      .def_readwrite("x", &Point2::x)
      .def_readwrite("y", &Point2::y)
      .def("__repr__", [](const Point2& p) {
        return "Point2(" + std::to_string(p.x) + ", " + std::to_string(p.y) + ")";
      });

  py::class_<Polygon>(m, "Polygon")
      .def(py::init<>())
      .def(py::init([](const std::vector<std::pair<double, double>>& pts) {
             Polygon poly;
             for (const auto& [x, y] : pts) poly.vertices.push_back({x, y});
             poly.validate();
             return poly;
           }),
           py::arg("vertices"))
      .def_readwrite("vertices", &Polygon::vertices)
      .def("area", &Polygon::area)
      .def_static("rectangle", &Polygon::rectangle);

  m.def("euclidean_distance", &euclidean_distance);
  m.def("contains", &contains, py::arg("polygon"), py::arg("point"));
  m.def("area_fraction", &area_fraction, py::arg("center"), py::arg("eta"),
        py::arg("region"), py::arg("n_samples") = 100000, py::arg("seed") = 0);

  py::class_<RngStream>(m, "RngStream")
      .def(py::init<std::uint64_t>(), py::arg("seed"))
      .def("uniform", py::overload_cast<>(&RngStream::uniform))
      .def("normal", &RngStream::normal);

  py::class_<GaussianDiag>(m, "GaussianDiag")
      .def(py::init<Eigen::VectorXd, Eigen::VectorXd>(), py::arg("mean"), py::arg("var"))
      .def_readonly("mean", &GaussianDiag::mean)
      .def_readonly("var", &GaussianDiag::var);
  py::class_<GammaDist>(m, "GammaDist")
      .def(py::init<double, double>(), py::arg("shape"), py::arg("rate"))
      .def_readonly("shape", &GammaDist::shape)
      .def_readonly("rate", &GammaDist::rate)
      .def("mean", &GammaDist::mean)
      .def("variance", &GammaDist::variance);
  m.def("gaussian_logpdf", &gaussian_logpdf);
  m.def("gamma_logpdf", &gamma_logpdf);
  m.def("kl_gaussian", &kl_gaussian);
  m.def("kl_gamma", &kl_gamma);
  m.def("digamma", &digamma);
  m.def("log_gamma", &log_gamma);
  m.def("standard_normal_quantile", &standard_normal_quantile);
  m.def("empirical_quantile",
        [](const std::vector<double>& samples, double q) {
          return empirical_quantile(samples, q);
        });

  py::class_<Store>(m, "Store")
      .def(py::init<>())
      .def(py::init([](const std::string& id, double x, double y,
                       const Eigen::VectorXd& features, double revenue) {
             return Store{id, {x, y}, features, revenue};
           }),
           py::arg("id"), py::arg("x"), py::arg("y"), py::arg("features"),
           py::arg("revenue") = 0.0)
      .def_readwrite("id", &Store::id)
      .def_readwrite("location", &Store::location)
      .def_readwrite("features", &Store::features)
      .def_readwrite("revenue", &Store::revenue);

  py::class_<CustomerRegion>(m, "CustomerRegion")
      .def(py::init<>())
      .def(py::init([](const std::string& id, double x, double y,
                       const Eigen::VectorXd& features) {
             return CustomerRegion{id, {x, y}, features};
           }),
           py::arg("id"), py::arg("x"), py::arg("y"), py::arg("features"))
      .def_readwrite("id", &CustomerRegion::id)
      .def_readwrite("location", &CustomerRegion::location)
      .def_readwrite("features", &CustomerRegion::features);

  py::enum_<AttractionMode>(m, "AttractionMode")
      .value("STORE_SPECIFIC", AttractionMode::kStoreSpecific)
      .value("FEATURE_DRIVEN", AttractionMode::kFeatureDriven);

  py::class_<ModelConfig>(m, "ModelConfig")
      .def(py::init<>())
      .def(py::init<double, AttractionMode>(), py::arg("truncation_radius"),
           py::arg("attraction_mode") = AttractionMode::kFeatureDriven)
      .def_readwrite("truncation_radius", &ModelConfig::truncation_radius)
      .def_readwrite("attraction_mode", &ModelConfig::attraction_mode);

  py::class_<Dataset>(m, "Dataset")
      .def(py::init<>())
      .def_readwrite("stores", &Dataset::stores)
      .def_readwrite("customers", &Dataset::customers)
      .def_readwrite("region", &Dataset::region)
      .def("n_stores", &Dataset::n_stores)
      .def("n_customers", &Dataset::n_customers)
      .def("revenues", &Dataset::revenues)
      .def("validate", &Dataset::validate);

  py::class_<ParameterVector>(m, "ParameterVector")
      .def(py::init<>())
      .def_readwrite("beta", &ParameterVector::beta)
      .def_readwrite("lambda_", &ParameterVector::lambda)
      .def_readwrite("epsilon", &ParameterVector::epsilon)
      .def_readwrite("gamma", &ParameterVector::gamma)
      .def_readwrite("alpha", &ParameterVector::alpha);

  py::class_<PriorSpec>(m, "PriorSpec")
      .def(py::init<>())
      .def_static("weakly_informative", &PriorSpec::weakly_informative)
      .def_readwrite("mu_beta", &PriorSpec::mu_beta)
      .def_readwrite("alpha_shape", &PriorSpec::alpha_shape)
      .def_readwrite("alpha_rate", &PriorSpec::alpha_rate)
      .def_readwrite("gamma_shape", &PriorSpec::gamma_shape)
      .def_readwrite("gamma_rate", &PriorSpec::gamma_rate)
      .def_readwrite("mu_lambda", &PriorSpec::mu_lambda)
      .def_readwrite("var_lambda", &PriorSpec::var_lambda)
      .def_readwrite("mu_epsilon", &PriorSpec::mu_epsilon)
      .def_readwrite("var_epsilon", &PriorSpec::var_epsilon);

  py::class_<AttractionFieldEntry>(m, "AttractionFieldEntry")
      .def(py::init<>())
      .def_readwrite("center", &AttractionFieldEntry::center)
      .def_readwrite("variance", &AttractionFieldEntry::variance)
      .def_readwrite("truncation_radius", &AttractionFieldEntry::truncation_radius);

  m.def("attraction_variance", &attraction_variance);
  m.def("truncated_gaussian_pdf", &truncated_gaussian_pdf);
  m.def("attraction_field", &attraction_field);
  m.def("customer_budget", &customer_budget);
  m.def("visit_probabilities",
        py::overload_cast<const Dataset&, const ModelConfig&, const ParameterVector&>(
            &visit_probabilities));
  m.def("predict_revenues",
        py::overload_cast<const Dataset&, const ModelConfig&, const ParameterVector&>(
            &predict_revenues));
  m.def("log_joint",
        py::overload_cast<const Dataset&, const ModelConfig&, const ParameterVector&,
                          const PriorSpec&>(&log_joint));

  py::class_<VariationalState>(m, "VariationalState")
      .def_readonly("q_beta", &VariationalState::q_beta)
      .def_readonly("q_alpha", &VariationalState::q_alpha)
      .def_readonly("q_gamma", &VariationalState::q_gamma)
      .def_readonly("q_lambda", &VariationalState::q_lambda)
      .def_readonly("q_epsilon", &VariationalState::q_epsilon);

  py::class_<VIConfig>(m, "VIConfig")
      .def(py::init<>())
      .def_readwrite("mc_samples", &VIConfig::mc_samples)
      .def_readwrite("max_iters", &VIConfig::max_iters)
      .def_readwrite("learning_rate", &VIConfig::learning_rate)
      .def_readwrite("lr_decay_iters", &VIConfig::lr_decay_iters)
      .def_readwrite("convergence_window", &VIConfig::convergence_window)
      .def_readwrite("convergence_tol", &VIConfig::convergence_tol)
      .def_readwrite("seed", &VIConfig::seed)
      .def_readwrite("tail_average", &VIConfig::tail_average)
      .def_readwrite("informed_init", &VIConfig::informed_init);

  py::class_<FitResult>(m, "FitResult")
      .def_readonly("state", &FitResult::state)
      .def_readonly("elbo_trace", &FitResult::elbo_trace)
      .def_readonly("wall_time", &FitResult::wall_time)
      .def_readonly("iterations_run", &FitResult::iterations_run)
      .def_readonly("converged", &FitResult::converged);

  py::class_<ParameterSummary>(m, "ParameterSummary")
      .def_readonly("name", &ParameterSummary::name)
      .def_readonly("mean", &ParameterSummary::mean)
      .def_readonly("stddev", &ParameterSummary::stddev)
      .def_readonly("ci_lo", &ParameterSummary::ci_lo)
      .def_readonly("ci_hi", &ParameterSummary::ci_hi);

  m.def("fit_vi", &fit_vi, py::arg("data"), py::arg("config"), py::arg("priors"),
        py::arg("vi_config"));
  m.def("summarize", &summarize, py::arg("state"), py::arg("level") = 0.95);

  py::class_<MCMCConfig>(m, "MCMCConfig")
      .def(py::init<>())
      .def_readwrite("iterations", &MCMCConfig::iterations)
      .def_readwrite("warmup", &MCMCConfig::warmup)
      .def_readwrite("thin", &MCMCConfig::thin)
      .def_readwrite("init_step_sizes", &MCMCConfig::init_step_sizes)
      .def_readwrite("target_accept", &MCMCConfig::target_accept)
      .def_readwrite("target_accept_pair", &MCMCConfig::target_accept_pair)
      .def_readwrite("seed", &MCMCConfig::seed);

  py::class_<Chain>(m, "Chain")
      .def_readonly("draws", &Chain::draws)
      .def_readonly("names", &Chain::names)
      .def_readonly("accept_rate", &Chain::accept_rate)
      .def_readonly("wall_time", &Chain::wall_time);

  py::class_<ChainParamSummary>(m, "ChainParamSummary")
      .def_readonly("name", &ChainParamSummary::name)
      .def_readonly("mean", &ChainParamSummary::mean)
      .def_readonly("stddev", &ChainParamSummary::stddev)
      .def_readonly("ci_lo", &ChainParamSummary::ci_lo)
      .def_readonly("ci_hi", &ChainParamSummary::ci_hi)
      .def_readonly("ess", &ChainParamSummary::ess);

  m.def("run_chain", &run_chain);
  m.def("chain_summary", &chain_summary, py::arg("chain"), py::arg("level") = 0.95);
  m.def("log_posterior_unconstrained",
        py::overload_cast<const Dataset&, const ModelConfig&, const PriorSpec&,
                          const Eigen::VectorXd&>(&log_posterior_unconstrained));

  py::class_<SimSpec>(m, "SimSpec")
      .def(py::init<>())
      .def_static("sim1", &SimSpec::sim1)
      .def_static("sim2", &SimSpec::sim2)
      .def_readwrite("n_stores", &SimSpec::n_stores)
      .def_readwrite("n_customers", &SimSpec::n_customers)
      .def_readwrite("true_beta", &SimSpec::true_beta)
      .def_readwrite("true_lambda", &SimSpec::true_lambda)
      .def_readwrite("true_gamma", &SimSpec::true_gamma)
      .def_readwrite("lengthscales", &SimSpec::lengthscales)
      .def_readwrite("domain", &SimSpec::domain)
      .def_readwrite("truncation_radius", &SimSpec::truncation_radius)
      .def_readwrite("feature_offset", &SimSpec::feature_offset)
      .def_readwrite("n_replicates", &SimSpec::n_replicates)
      .def_readwrite("seed", &SimSpec::seed)
      .def("model_config", &SimSpec::model_config);

  m.def("generate_dataset", &generate_dataset, py::arg("spec"), py::arg("replicate"));
  m.def("sample_gp_feature",
        [](const std::vector<Point2>& locations, double lengthscale, std::uint64_t seed) {
          RngStream rng(seed);
          return sample_gp_feature(locations, lengthscale, rng);
        },
        py::arg("locations"), py::arg("lengthscale"), py::arg("seed") = 0);
  m.def("morans_i", &morans_i);

  py::class_<HuffParams>(m, "HuffParams")
      .def(py::init<>())
      .def_readwrite("attract_exponents", &HuffParams::attract_exponents)
      .def_readwrite("distance_decay", &HuffParams::distance_decay)
      .def_readwrite("budget_weights", &HuffParams::budget_weights);
  py::class_<HuffFit>(m, "HuffFit")
      .def_readonly("params", &HuffFit::params)
      .def_readonly("rss", &HuffFit::rss)
      .def_readonly("r2", &HuffFit::r2)
      .def_readonly("nrmse", &HuffFit::nrmse)
      .def_readonly("predictions", &HuffFit::predictions);
  py::class_<HuffGrid>(m, "HuffGrid")
      .def(py::init<>())
      .def_readwrite("exponents", &HuffGrid::exponents)
      .def_readwrite("decays", &HuffGrid::decays);
  m.def("huff_probabilities", &huff_probabilities);
  m.def("fit_huff", &fit_huff, py::arg("data"), py::arg("grid") = HuffGrid{});

  py::class_<PredictionPair>(m, "PredictionPair")
      .def(py::init([](const Eigen::VectorXd& observed, const Eigen::VectorXd& predicted) {
             return PredictionPair{observed, predicted};
           }),
           py::arg("observed"), py::arg("predicted"));
  m.def("r_squared", &r_squared);
  m.def("nrmse", &nrmse);
  m.def("spearman", &spearman);
  m.def("bias_mse_coverage", &bias_mse_coverage);
}
