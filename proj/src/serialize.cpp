#include "hitab/serialize.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "hitab/errors.hpp"

namespace hitab {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

const json& require_field(const json& j, const std::string& key, const std::string& where) {
    if (!j.is_object() || !j.contains(key))
        throw InputError(where + ": missing \"" + key + "\"");
    return j.at(key);
}

double number_field(const json& j, const std::string& key, const std::string& where) {
    const json& v = require_field(j, key, where);
    if (!v.is_number())
        throw InputError(where + ": \"" + key + "\" must be a number");
    return v.get<double>();
}

void append_number(std::string& out, double v) {
    if (std::isnan(v)) {
        out += "\"nan\"";
        return;
    }
    if (std::isinf(v)) {
        out += v > 0 ? "\"inf\"" : "\"-inf\"";
        return;
    }
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
}

void append_value(std::string& out, const ordered_json& j) {
    switch (j.type()) {
        case json::value_t::object: {
            out += '{';
            bool first = true;
            for (const auto& [key, value] : j.items()) {
                if (!first) out += ',';
                first = false;
                out += ordered_json(key).dump();
                out += ':';
                append_value(out, value);
            }
            out += '}';
            return;
        }
        case json::value_t::array: {
            out += '[';
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i) out += ',';
                append_value(out, j[i]);
            }
            out += ']';
            return;
        }
        case json::value_t::number_float:
            append_number(out, j.get<double>());
            return;
        default:
            out += j.dump();
            return;
    }
}

}  // namespace

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    json out = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        out.push_back(std::move(row));
    }
    return out;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j, const std::string& what) {
    if (!j.is_array())
        throw InputError(what + ": expected an array of numbers");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number())
            throw InputError(what + ": entry " + std::to_string(i) + " is not a number");
        v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    }
    return v;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, const std::string& what) {
    if (!j.is_array() || j.empty())
        throw InputError(what + ": expected a non-empty array of rows");
    const std::size_t rows = j.size();
    std::size_t cols = 0;
    Eigen::MatrixXd m;
    for (std::size_t i = 0; i < rows; ++i) {
        const std::string row_name = what + " row " + std::to_string(i);
        const Eigen::VectorXd row = vector_from_json(j[i], row_name);
        if (i == 0) {
            cols = static_cast<std::size_t>(row.size());
            m.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        } else if (static_cast<std::size_t>(row.size()) != cols) {
            throw InputError(what + ": rows have inconsistent lengths");
        }
        m.row(static_cast<Eigen::Index>(i)) = row.transpose();
    }
    return m;
}

nlohmann::ordered_json network_to_json(const Network& net) {
    ordered_json out;
    out["layers"] = ordered_json::array();
    for (const Layer& l : net.layers()) {
        ordered_json layer;
        layer["weights"] = matrix_to_json(l.weights);
        layer["bias"] = vector_to_json(l.bias);
        layer["activation"] = activation_name(l.activation.kind);
        out["layers"].push_back(std::move(layer));
    }
    out["out_vector"] = vector_to_json(net.out_vector());
    return out;
}

Network network_from_json(const nlohmann::json& j) {
    const json& layer_list = require_field(j, "layers", "network");
    if (!layer_list.is_array() || layer_list.empty())
        throw InputError("network: \"layers\" must be a non-empty array");
    std::vector<Layer> layers;
    layers.reserve(layer_list.size());
    for (std::size_t i = 0; i < layer_list.size(); ++i) {
        const std::string where = "network layer " + std::to_string(i);
        const json& lj = layer_list[i];
        Layer layer;
        layer.weights = matrix_from_json(require_field(lj, "weights", where), where + " weights");
        layer.bias = vector_from_json(require_field(lj, "bias", where), where + " bias");
        const json& act = require_field(lj, "activation", where);
        if (!act.is_string())
            throw InputError(where + ": \"activation\" must be a string");
        layer.activation = ActivationProfile::make(activation_from_name(act.get<std::string>()));
        layers.push_back(std::move(layer));
    }
    Eigen::VectorXd out_vector =
        vector_from_json(require_field(j, "out_vector", "network"), "network out_vector");
    return Network(std::move(layers), std::move(out_vector));
}

Network load_network(const std::string& path) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw InputError("network file " + path + ": " + e.what());
    }
    return network_from_json(j);
}

void save_network(const Network& net, const std::string& path) {
    write_text_file(path, network_to_json(net).dump(2) + "\n");
}

BallSpec Problem::ball() const {
    if (norm != RegionNorm::L2)
        throw InputError("problem: an l2 region is required here");
    return {center, radius};
}

BoxSpec Problem::box() const {
    if (norm != RegionNorm::Linf)
        throw InputError("problem: an linf region is required here");
    return {center, radii};
}

Problem problem_from_json(const nlohmann::json& j) {
    if (!j.is_object())
        throw InputError("problem: expected a JSON object");
    Problem p;

    if (j.contains("norm")) {
        const json& norm = j.at("norm");
        if (!norm.is_string())
            throw InputError("problem: \"norm\" must be \"l2\" or \"linf\"");
        const std::string name = norm.get<std::string>();
        if (name == "l2")
            p.norm = RegionNorm::L2;
        else if (name == "linf")
            p.norm = RegionNorm::Linf;
        else
            throw InputError("problem: \"norm\" must be \"l2\" or \"linf\"");

        p.center = vector_from_json(require_field(j, "center", "problem"), "problem center");
        if (j.contains("radius") && j.contains("radii"))
            throw InputError("problem: give exactly one of \"radius\" or \"radii\"");
        if (p.norm == RegionNorm::L2) {
            p.radius = number_field(j, "radius", "problem");
            if (!(p.radius > 0.0))
                throw InputError("problem: \"radius\" must be positive");
        } else {
            p.radii = vector_from_json(require_field(j, "radii", "problem"), "problem radii");
            if (p.radii.size() != p.center.size())
                throw InputError("problem: \"radii\" length must match \"center\"");
            if (p.radii.size() == 0 || !(p.radii.minCoeff() > 0.0))
                throw InputError("problem: \"radii\" must be positive");
        }
    }

    if (j.contains("tolerance")) {
        p.bab.tolerance = number_field(j, "tolerance", "problem");
        if (!(p.bab.tolerance > 0.0))
            throw InputError("problem: \"tolerance\" must be positive");
    }
    if (j.contains("max_nodes")) {
        const double n = number_field(j, "max_nodes", "problem");
        if (!(n >= 1.0))
            throw InputError("problem: \"max_nodes\" must be a positive integer");
        p.bab.max_nodes = static_cast<std::uint64_t>(n);
    }
    if (j.contains("max_seconds")) {
        p.bab.max_seconds = number_field(j, "max_seconds", "problem");
        if (!(p.bab.max_seconds > 0.0))
            throw InputError("problem: \"max_seconds\" must be positive");
    }

    if (j.contains("system")) {
        const json& s = j.at("system");
        LtiSystem sys;
        sys.a_matrix = matrix_from_json(require_field(s, "a", "problem system"), "system a");
        sys.b_matrix = matrix_from_json(require_field(s, "b", "problem system"), "system b");
        sys.d_vector = vector_from_json(require_field(s, "d", "problem system"), "system d");
        p.system = std::move(sys);
    }
    if (j.contains("steps")) {
        const double n = number_field(j, "steps", "problem");
        if (!(n >= 1.0))
            throw InputError("problem: \"steps\" must be a positive integer");
        p.steps = static_cast<int>(n);
    }
    if (j.contains("sample_count")) {
        const double n = number_field(j, "sample_count", "problem");
        if (!(n >= 2.0))
            throw InputError("problem: \"sample_count\" must be at least 2");
        p.sample_count = static_cast<int>(n);
    }
    if (j.contains("init")) {
        const json& r = j.at("init");
        RotatedRect rect;
        rect.rotation = matrix_from_json(require_field(r, "rotation", "problem init"), "init rotation");
        rect.center = vector_from_json(require_field(r, "center", "problem init"), "init center");
        rect.radii = vector_from_json(require_field(r, "radii", "problem init"), "init radii");
        rect.validate();
        p.init = std::move(rect);
    }
    if (j.contains("obstacles")) {
        const json& obs = j.at("obstacles");
        if (!obs.is_array())
            throw InputError("problem: \"obstacles\" must be an array");
        for (std::size_t i = 0; i < obs.size(); ++i) {
            const std::string where = "problem obstacle " + std::to_string(i);
            Obstacle o;
            o.center = vector_from_json(require_field(obs[i], "center", where), where + " center");
            o.radius = number_field(obs[i], "radius", where);
            if (!(o.radius > 0.0))
                throw InputError(where + ": \"radius\" must be positive");
            p.obstacles.push_back(std::move(o));
        }
    }
    return p;
}

Problem load_problem(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw InputError("problem file " + path + ": " + e.what());
    }
    return problem_from_json(j);
}

std::string dump_report(const nlohmann::ordered_json& j) {
    std::string out;
    append_value(out, j);
    return out;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad())
        throw IoError("failed reading " + path);
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot open " + path + " for writing");
    out << content;
    out.flush();
    if (!out)
        throw IoError("failed writing " + path);
}

}  // namespace hitab
