#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "hitab/errors.hpp"
#include "hitab/rng.hpp"
#include "hitab/serialize.hpp"

namespace {

using hitab::InputError;
using hitab::IoError;
using hitab::NumericError;
using nlohmann::ordered_json;

struct CommonFlags {
    bool verbose = false;
    std::uint64_t seed = 0;
    int threads = 0;  // 0: fall back to HITAB_THREADS, then 1
    std::string out_dir = ".";
};

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("HITAB_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return 1;
}

ordered_json bundle_report(const hitab::LipschitzBundle& b) {
    ordered_json rep;
    rep["lip_f"] = b.lip_f;
    rep["lip_grad"] = b.lip_grad;
    rep["lip_hess"] = b.lip_hess;
    rep["per_layer"] = ordered_json::array();
    for (const auto& layer : b.per_layer) {
        ordered_json lj;
        lj["lip_value"] = layer.lip_value;
        lj["lip_jac"] = layer.lip_jac;
        lj["lip_jac_rows"] = hitab::vector_to_json(layer.lip_jac_rows);
        lj["lip_hess_rows"] = hitab::vector_to_json(layer.lip_hess_rows);
        rep["per_layer"].push_back(std::move(lj));
    }
    return rep;
}

int cmd_lipschitz(const std::string& network_path) {
    const hitab::Network net = hitab::load_network(network_path);
    std::cout << hitab::dump_report(bundle_report(hitab::bundle(net))) << "\n";
    return 0;
}

int cmd_bound(const std::string& network_path, const std::string& problem_path) {
    const hitab::Network net = hitab::load_network(network_path);
    const hitab::Problem problem = hitab::load_problem(problem_path);
    if (!problem.norm)
        throw InputError("problem: a region (norm/center/radius) is required for bound");
    if (problem.center.size() != net.input_dim())
        throw InputError("problem: center dimension does not match the network input width");

    const hitab::LocalModel model = hitab::local_model(net, problem.center);
    const hitab::LipschitzBundle lips = hitab::bundle(net);
    const hitab::Certificate cert = problem.norm == hitab::RegionNorm::L2
        ? hitab::bound_ball(model, lips, problem.ball())
        : hitab::bound_box(model, lips, problem.box());
    const hitab::CrossoverThresholds cross = hitab::crossover_thresholds(model, lips);

    ordered_json rep;
    rep["bound0"] = cert.bound0;
    rep["bound1"] = cert.bound1;
    rep["bound2"] = cert.bound2;
    rep["combined"] = cert.combined;
    rep["eps01"] = cross.eps01;
    rep["eps12"] = cross.eps12;
    std::cout << hitab::dump_report(rep) << "\n";
    return 0;
}

int cmd_bab(const std::string& network_path, const std::string& problem_path,
            const CommonFlags& flags) {
    const hitab::Network net = hitab::load_network(network_path);
    const hitab::Problem problem = hitab::load_problem(problem_path);
    if (!problem.norm || problem.norm != hitab::RegionNorm::Linf)
        throw InputError("problem: bab requires an linf region (center plus radii)");
    if (problem.center.size() != net.input_dim())
        throw InputError("problem: center dimension does not match the network input width");

    hitab::BabConfig config = problem.bab;
    config.threads = resolve_threads(flags.threads);

    hitab::ProgressSink sink;
    if (flags.verbose) {
        sink = [](const hitab::BabProgress& p) {
            ordered_json rec;
            rec["iteration"] = p.iteration;
            rec["upper"] = p.upper;
            rec["lower"] = p.lower;
            rec["gap"] = p.gap;
            rec["frontier_size"] = p.frontier_size;
            std::cerr << hitab::dump_report(rec) << "\n";
        };
    }

    const hitab::BabResult result = hitab::run(net, problem.box(), config, sink);
    if (flags.verbose)
        std::cerr << "elapsed_seconds " << result.elapsed << "\n";

    // Wall-clock time is deliberately left out of the machine report so that
    // repeated runs stay byte-identical.
    ordered_json rep;
    rep["status"] = hitab::bab_status_name(result.status);
    rep["upper"] = result.upper;
    rep["lower"] = result.lower;
    rep["gap"] = result.gap;
    rep["nodes_expanded"] = result.nodes_expanded;
    std::cout << hitab::dump_report(rep) << "\n";
    return 0;
}

int cmd_reach(const std::string& network_path, const std::string& problem_path,
              const CommonFlags& flags) {
    const hitab::Network net = hitab::load_network(network_path);
    const hitab::Problem problem = hitab::load_problem(problem_path);
    if (!problem.system)
        throw InputError("problem: reach requires a \"system\" block");

    hitab::RotatedRect init;
    if (problem.init) {
        init = *problem.init;
    } else if (problem.norm && problem.norm == hitab::RegionNorm::Linf) {
        init.rotation = Eigen::MatrixXd::Identity(problem.center.size(), problem.center.size());
        init.center = problem.center;
        init.radii = problem.radii;
    } else {
        throw InputError("problem: reach requires an \"init\" rect or an linf region");
    }

    hitab::ReachConfig cfg;
    cfg.steps = problem.steps;
    cfg.bab = problem.bab;
    cfg.bab.threads = resolve_threads(flags.threads);
    cfg.sample_count = problem.sample_count;
    cfg.seed = flags.seed;

    const auto steps = hitab::multi_step(*problem.system, net, init, cfg);

    std::error_code ec;
    std::filesystem::create_directories(flags.out_dir, ec);
    if (ec)
        throw IoError("cannot create output directory " + flags.out_dir + ": " + ec.message());

    ordered_json sets = ordered_json::array();
    for (std::size_t k = 0; k < steps.size(); ++k) {
        const hitab::StepResult& step = steps[k];
        ordered_json rec;
        rec["step"] = k + 1;
        ordered_json rot = ordered_json::array();
        for (Eigen::Index i = 0; i < step.set.rotation.rows(); ++i)
            for (Eigen::Index j = 0; j < step.set.rotation.cols(); ++j)
                rot.push_back(step.set.rotation(i, j));
        rec["rotation"] = std::move(rot);
        rec["center"] = hitab::vector_to_json(step.set.center);
        rec["radii"] = hitab::vector_to_json(step.set.radii);
        ordered_json dir_bounds = ordered_json::array();
        for (const auto& d : step.directions) dir_bounds.push_back(d.upper);
        rec["per_direction_bounds"] = std::move(dir_bounds);
        ordered_json safe = ordered_json::array();
        for (const auto& obstacle : problem.obstacles)
            safe.push_back(hitab::rect_avoids(step.set, obstacle));
        rec["safe_flags"] = std::move(safe);
        sets.push_back(std::move(rec));
    }
    const std::string sets_path =
        (std::filesystem::path(flags.out_dir) / "reach_sets.json").string();
    hitab::write_text_file(sets_path, hitab::dump_report(sets) + "\n");

    // Simulated trajectory samples for plotting.
    const Eigen::Index n = init.center.size();
    const Eigen::MatrixXd basis = init.rotation.transpose() * init.radii.asDiagonal();
    hitab::Rng rng(flags.seed);
    std::string csv = "traj,step";
    for (Eigen::Index i = 0; i < n; ++i) csv += ",x" + std::to_string(i);
    csv += "\n";
    const auto append_row = [&csv, n](int traj, int step, const Eigen::VectorXd& x) {
        csv += std::to_string(traj) + "," + std::to_string(step);
        for (Eigen::Index i = 0; i < n; ++i) {
            char buf[40];
            std::snprintf(buf, sizeof(buf), ",%.17g", x(i));
            csv += buf;
        }
        csv += "\n";
    };
    for (int traj = 0; traj < problem.sample_count; ++traj) {
        Eigen::VectorXd x = init.center + basis * rng.uniform_vector(n, -1.0, 1.0);
        append_row(traj, 0, x);
        for (int k = 1; k <= cfg.steps; ++k) {
            x = hitab::simulate_step(*problem.system, net, x);
            append_row(traj, k, x);
        }
    }
    const std::string csv_path =
        (std::filesystem::path(flags.out_dir) / "trajectories.csv").string();
    hitab::write_text_file(csv_path, csv);

    std::cout << "step  max_gap      branches   run_time_s  converged\n";
    for (std::size_t k = 0; k < steps.size(); ++k) {
        std::printf("%-5zu %-12.6g %-10llu %-11.3f %s\n", k + 1, steps[k].max_gap(),
                    static_cast<unsigned long long>(steps[k].total_nodes()),
                    steps[k].elapsed, steps[k].converged() ? "yes" : "no");
    }
    std::cout << "wrote " << sets_path << " and " << csv_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Certified output bounds and reachability for smooth networks"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string network_path;
    std::string problem_path;

    auto add_common = [&flags](CLI::App* cmd) {
        cmd->add_flag("--verbose", flags.verbose, "emit progress records on stderr");
        cmd->add_option("--seed", flags.seed, "seed for sampled quantities");
        cmd->add_option("--threads", flags.threads,
                        "worker count (default: HITAB_THREADS env, then 1)");
    };

    CLI::App* lip = app.add_subcommand("lipschitz", "certified network constants");
    lip->add_option("network", network_path, "network JSON file")->required();
    add_common(lip);

    CLI::App* bound = app.add_subcommand("bound", "one-shot certificate over a region");
    bound->add_option("network", network_path, "network JSON file")->required();
    bound->add_option("problem", problem_path, "problem JSON file")->required();
    add_common(bound);

    CLI::App* bab = app.add_subcommand("bab", "branch-and-bound maximization");
    bab->add_option("network", network_path, "network JSON file")->required();
    bab->add_option("problem", problem_path, "problem JSON file")->required();
    add_common(bab);

    CLI::App* reach = app.add_subcommand("reach", "multi-step closed-loop reach sets");
    reach->add_option("network", network_path, "controller network JSON file")->required();
    reach->add_option("problem", problem_path, "problem JSON file")->required();
    reach->add_option("--out", flags.out_dir, "output directory for result files");
    add_common(reach);

    CLI11_PARSE(app, argc, argv);

    try {
        if (lip->parsed()) return cmd_lipschitz(network_path);
        if (bound->parsed()) return cmd_bound(network_path, problem_path);
        if (bab->parsed()) return cmd_bab(network_path, problem_path, flags);
        if (reach->parsed()) return cmd_reach(network_path, problem_path, flags);
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
