#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hitab/bab.hpp"
#include "hitab/reach.hpp"

namespace hitab {

/// Network file schema:
/// {"layers": [{"weights": [[...]], "bias": [...],
///              "activation": "tanh"|"sigmoid"|"identity"}, ...],
///  "out_vector": [...]}
nlohmann::ordered_json network_to_json(const Network& net);
Network network_from_json(const nlohmann::json& j);
Network load_network(const std::string& path);
void save_network(const Network& net, const std::string& path);

enum class RegionNorm { L2, Linf };

/// Parsed problem file. The region block (center/norm/radius-or-radii) drives
/// bound and branch-and-bound queries; the system/init/steps block drives
/// reachability queries.
struct Problem {
    std::optional<RegionNorm> norm;
    Eigen::VectorXd center;
    double radius = 0.0;            // L2 regions
    Eigen::VectorXd radii;          // Linf regions
    BabConfig bab;
    std::optional<LtiSystem> system;
    int steps = 1;
    std::optional<RotatedRect> init;
    int sample_count = 1000;
    std::vector<Obstacle> obstacles;

    BallSpec ball() const;
    BoxSpec box() const;
};

Problem problem_from_json(const nlohmann::json& j);
Problem load_problem(const std::string& path);

/// Serialize a report with numbers printed at 17 significant digits so that
/// identical runs produce byte-identical output. Non-finite values are
/// emitted as the strings "inf", "-inf", "nan".
std::string dump_report(const nlohmann::ordered_json& j);

nlohmann::json vector_to_json(const Eigen::VectorXd& v);
nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::VectorXd vector_from_json(const nlohmann::json& j, const std::string& what);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, const std::string& what);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace hitab
