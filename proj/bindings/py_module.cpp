#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "hitab/bab.hpp"
#include "hitab/certify.hpp"
#include "hitab/errors.hpp"
#include "hitab/lipschitz.hpp"
#include "hitab/network.hpp"
#include "hitab/reach.hpp"
#include "hitab/serialize.hpp"

namespace py = pybind11;
using namespace hitab;

PYBIND11_MODULE(_core, m) {
    m.doc() = "Certified output bounds and closed-loop reachability for smooth "
              "fully connected networks";

    py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
    py::register_exception<IoError>(m, "IoError", PyExc_IOError);

    py::enum_<ActivationKind>(m, "ActivationKind")
        .value("Tanh", ActivationKind::Tanh)
        .value("Sigmoid", ActivationKind::Sigmoid)
        .value("Identity", ActivationKind::Identity);

    py::class_<ActivationProfile>(m, "ActivationProfile")
        .def_static("make", &ActivationProfile::make, py::arg("kind"))
        .def_readonly("kind", &ActivationProfile::kind)
        .def_readonly("lip_value", &ActivationProfile::lip_value)
        .def_readonly("lip_deriv1", &ActivationProfile::lip_deriv1)
        .def_readonly("lip_deriv2", &ActivationProfile::lip_deriv2);

    py::class_<Layer>(m, "Layer")
        .def(py::init([](Eigen::MatrixXd weights, Eigen::VectorXd bias, ActivationKind kind) {
                 return Layer{std::move(weights), std::move(bias),
                              ActivationProfile::make(kind)};
             }),
             py::arg("weights"), py::arg("bias"), py::arg("activation"))
        .def_readonly("weights", &Layer::weights)
        .def_readonly("bias", &Layer::bias)
        .def_readonly("activation", &Layer::activation);

    py::class_<Network>(m, "Network")
        .def(py::init<std::vector<Layer>, Eigen::VectorXd>(), py::arg("layers"),
             py::arg("out_vector"))
        .def_property_readonly("layers", &Network::layers)
        .def_property_readonly("out_vector", &Network::out_vector)
        .def_property_readonly("input_dim", &Network::input_dim)
        .def_property_readonly("output_dim", &Network::output_dim)
        .def("eval", &Network::eval, py::arg("x"))
        .def("eval_vector", &Network::eval_vector, py::arg("x"))
        .def("with_out_vector", &Network::with_out_vector, py::arg("out_vector"));

    py::class_<LocalModel>(m, "LocalModel")
        .def_readonly("center", &LocalModel::center)
        .def_readonly("value", &LocalModel::value)
        .def_readonly("gradient", &LocalModel::gradient)
        .def_readonly("hessian", &LocalModel::hessian);

    m.def("local_model", &local_model, py::arg("net"), py::arg("center"));
    m.def("fold_input_map", &fold_input_map, py::arg("net"), py::arg("shift"),
          py::arg("linear"));
    m.def("spectral_norm", &spectral_norm, py::arg("matrix"));

    py::class_<LayerConstants>(m, "LayerConstants")
        .def_readonly("lip_value", &LayerConstants::lip_value)
        .def_readonly("lip_jac", &LayerConstants::lip_jac)
        .def_readonly("lip_jac_rows", &LayerConstants::lip_jac_rows)
        .def_readonly("lip_hess_rows", &LayerConstants::lip_hess_rows);

    py::class_<LayerLocalConstants>(m, "LayerLocalConstants")
        .def_readonly("sup_partial", &LayerLocalConstants::sup_partial)
        .def_readonly("lip_partial", &LayerLocalConstants::lip_partial)
        .def_readonly("lip_grad", &LayerLocalConstants::lip_grad)
        .def_readonly("lip_hess", &LayerLocalConstants::lip_hess);

    py::class_<TailCoupling>(m, "TailCoupling")
        .def_readonly("matrix_a", &TailCoupling::matrix_a)
        .def_readonly("sup_partials", &TailCoupling::sup_partials)
        .def_readonly("lip_partials", &TailCoupling::lip_partials)
        .def_readonly("lip_grad_tail", &TailCoupling::lip_grad_tail)
        .def_readonly("lip_hess_tail", &TailCoupling::lip_hess_tail);

    py::class_<LipschitzBundle>(m, "LipschitzBundle")
        .def_readonly("per_layer", &LipschitzBundle::per_layer)
        .def_readonly("lip_f", &LipschitzBundle::lip_f)
        .def_readonly("lip_grad", &LipschitzBundle::lip_grad)
        .def_readonly("lip_hess", &LipschitzBundle::lip_hess);

    m.def("input_constants", &input_constants, py::arg("dim"));
    m.def("layer_local_constants", &layer_local_constants, py::arg("layer"), py::arg("j"));
    m.def("propagate_layer", &propagate_layer, py::arg("prev"), py::arg("layer"),
          py::arg("value_override") = std::optional<double>{});
    m.def("tail_constants", &tail_constants, py::arg("net"));
    m.def(
        "bundle",
        [](const Network& net, std::optional<std::vector<double>> overrides) {
            BundleOptions opts;
            opts.value_overrides = std::move(overrides);
            return bundle(net, opts);
        },
        py::arg("net"), py::arg("value_overrides") = std::optional<std::vector<double>>{});

    py::class_<BallSpec>(m, "BallSpec")
        .def(py::init([](Eigen::VectorXd center, double radius) {
                 return BallSpec{std::move(center), radius};
             }),
             py::arg("center"), py::arg("radius"))
        .def_readonly("center", &BallSpec::center)
        .def_readonly("radius", &BallSpec::radius);

    py::class_<BoxSpec>(m, "BoxSpec")
        .def(py::init([](Eigen::VectorXd center, Eigen::VectorXd radii) {
                 return BoxSpec{std::move(center), std::move(radii)};
             }),
             py::arg("center"), py::arg("radii"))
        .def_readonly("center", &BoxSpec::center)
        .def_readonly("radii", &BoxSpec::radii);

    py::class_<Certificate>(m, "Certificate")
        .def_readonly("bound0", &Certificate::bound0)
        .def_readonly("bound1", &Certificate::bound1)
        .def_readonly("bound2", &Certificate::bound2)
        .def_readonly("combined", &Certificate::combined)
        .def_readonly("lambda_max_term", &Certificate::lambda_max_term)
        .def_readonly("center", &Certificate::center)
        .def_readonly("radius", &Certificate::radius)
        .def_readonly("radii", &Certificate::radii);

    py::class_<CrossoverThresholds>(m, "CrossoverThresholds")
        .def_readonly("eps01", &CrossoverThresholds::eps01)
        .def_readonly("eps12", &CrossoverThresholds::eps12);

    m.def("bound_ball", &bound_ball, py::arg("model"), py::arg("bundle"), py::arg("spec"));
    m.def("bound_box", &bound_box, py::arg("model"), py::arg("bundle"), py::arg("spec"));
    m.def("crossover_thresholds", &crossover_thresholds, py::arg("model"), py::arg("bundle"));
    m.def("lambda_max_scaled", &lambda_max_scaled, py::arg("hessian"), py::arg("radii"));

    py::enum_<BabStatus>(m, "BabStatus")
        .value("Converged", BabStatus::Converged)
        .value("NodeBudget", BabStatus::NodeBudget)
        .value("TimeBudget", BabStatus::TimeBudget);

    py::enum_<BoundMode>(m, "BoundMode")
        .value("Hierarchy", BoundMode::Hierarchy)
        .value("FirstOrder", BoundMode::FirstOrder);

    py::class_<BabConfig>(m, "BabConfig")
        .def(py::init<>())
        .def_readwrite("tolerance", &BabConfig::tolerance)
        .def_readwrite("max_nodes", &BabConfig::max_nodes)
        .def_readwrite("max_seconds", &BabConfig::max_seconds)
        .def_readwrite("threads", &BabConfig::threads)
        .def_readwrite("bound_mode", &BabConfig::bound_mode);

    py::class_<BabNode>(m, "BabNode")
        .def(py::init([](BoxSpec region, double upper, double lower_witness) {
                 return BabNode{std::move(region), upper, lower_witness};
             }),
             py::arg("region"), py::arg("upper"), py::arg("lower_witness"))
        .def_readonly("region", &BabNode::region)
        .def_readonly("upper", &BabNode::upper)
        .def_readonly("lower_witness", &BabNode::lower_witness);

    py::class_<BabProgress>(m, "BabProgress")
        .def_readonly("iteration", &BabProgress::iteration)
        .def_readonly("upper", &BabProgress::upper)
        .def_readonly("lower", &BabProgress::lower)
        .def_readonly("gap", &BabProgress::gap)
        .def_readonly("frontier_size", &BabProgress::frontier_size);

    py::class_<BabResult>(m, "BabResult")
        .def_readonly("upper", &BabResult::upper)
        .def_readonly("lower", &BabResult::lower)
        .def_readonly("gap", &BabResult::gap)
        .def_readonly("nodes_expanded", &BabResult::nodes_expanded)
        .def_readonly("elapsed", &BabResult::elapsed)
        .def_readonly("status", &BabResult::status);

    py::class_<AffineObjective>(m, "AffineObjective")
        .def(py::init([](Network net, Eigen::VectorXd linear, double constant) {
                 return AffineObjective{std::move(net), std::move(linear), constant};
             }),
             py::arg("net"), py::arg("linear"), py::arg("constant") = 0.0)
        .def_static("from_network", &AffineObjective::from_network, py::arg("net"))
        .def_readonly("net", &AffineObjective::net)
        .def_readonly("linear", &AffineObjective::linear)
        .def_readonly("constant", &AffineObjective::constant)
        .def("eval", &AffineObjective::eval, py::arg("x"))
        .def("local_model_at", &AffineObjective::local_model_at, py::arg("x"))
        .def("lipschitz_bundle",
             [](const AffineObjective& o) { return o.lipschitz_bundle(); });

    m.def("split", &split, py::arg("node"));
    m.def(
        "run_bab",
        [](const Network& net, const BoxSpec& root, const BabConfig& config,
           const ProgressSink& progress) { return run(net, root, config, progress); },
        py::arg("net"), py::arg("root"), py::arg("config") = BabConfig{},
        py::arg("progress") = ProgressSink{});
    m.def(
        "run_bab_objective",
        [](const AffineObjective& obj, const BoxSpec& root, const BabConfig& config,
           const ProgressSink& progress) { return run(obj, root, config, progress); },
        py::arg("objective"), py::arg("root"), py::arg("config") = BabConfig{},
        py::arg("progress") = ProgressSink{});

    py::class_<LtiSystem>(m, "LtiSystem")
        .def(py::init([](Eigen::MatrixXd a, Eigen::MatrixXd b, Eigen::VectorXd d) {
                 return LtiSystem{std::move(a), std::move(b), std::move(d)};
             }),
             py::arg("a_matrix"), py::arg("b_matrix"), py::arg("d_vector"))
        .def_readonly("a_matrix", &LtiSystem::a_matrix)
        .def_readonly("b_matrix", &LtiSystem::b_matrix)
        .def_readonly("d_vector", &LtiSystem::d_vector);

    py::class_<RotatedRect>(m, "RotatedRect")
        .def(py::init([](Eigen::MatrixXd rotation, Eigen::VectorXd center,
                         Eigen::VectorXd radii) {
                 RotatedRect r{std::move(rotation), std::move(center), std::move(radii)};
                 r.validate();
                 return r;
             }),
             py::arg("rotation"), py::arg("center"), py::arg("radii"))
        .def_readonly("rotation", &RotatedRect::rotation)
        .def_readonly("center", &RotatedRect::center)
        .def_readonly("radii", &RotatedRect::radii)
        .def("contains", &RotatedRect::contains, py::arg("x"), py::arg("slack") = 1e-9);

    py::class_<Obstacle>(m, "Obstacle")
        .def(py::init([](Eigen::VectorXd center, double radius) {
                 return Obstacle{std::move(center), radius};
             }),
             py::arg("center"), py::arg("radius"))
        .def_readonly("center", &Obstacle::center)
        .def_readonly("radius", &Obstacle::radius);

    py::class_<ReachConfig>(m, "ReachConfig")
        .def(py::init<>())
        .def_readwrite("steps", &ReachConfig::steps)
        .def_readwrite("bab", &ReachConfig::bab)
        .def_readwrite("sample_count", &ReachConfig::sample_count)
        .def_readwrite("seed", &ReachConfig::seed);

    py::class_<DirectionReport>(m, "DirectionReport")
        .def_readonly("upper", &DirectionReport::upper)
        .def_readonly("gap", &DirectionReport::gap)
        .def_readonly("nodes", &DirectionReport::nodes)
        .def_readonly("status", &DirectionReport::status);

    py::class_<StepResult>(m, "StepResult")
        .def_readonly("set", &StepResult::set)
        .def_readonly("directions", &StepResult::directions)
        .def_readonly("elapsed", &StepResult::elapsed)
        .def("converged", &StepResult::converged)
        .def("total_nodes", &StepResult::total_nodes)
        .def("max_gap", &StepResult::max_gap);

    m.def("closed_loop_objective", &closed_loop_objective, py::arg("sys"), py::arg("net"),
          py::arg("c"));
    m.def("step_reach", &step_reach, py::arg("sys"), py::arg("net"), py::arg("input"),
          py::arg("cfg"));
    m.def("multi_step", &multi_step, py::arg("sys"), py::arg("net"), py::arg("init"),
          py::arg("cfg"));
    m.def("simulate_step", &simulate_step, py::arg("sys"), py::arg("net"), py::arg("x"));
    m.def("rect_distance", &rect_distance, py::arg("rect"), py::arg("point"));
    m.def("rect_avoids", &rect_avoids, py::arg("rect"), py::arg("obstacle"));
    m.def("quadrotor_system", &quadrotor_system, py::arg("dt"), py::arg("g") = 9.81);
    m.def("reference_controller", &reference_controller);

    m.def("load_network", &load_network, py::arg("path"));
    m.def("save_network", &save_network, py::arg("net"), py::arg("path"));
    m.def("network_to_json", [](const Network& net) { return network_to_json(net).dump(2); },
          py::arg("net"));
    m.def(
        "network_from_json",
        [](const std::string& text) { return network_from_json(nlohmann::json::parse(text)); },
        py::arg("text"));
}
