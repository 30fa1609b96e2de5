#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "hitab/serialize.hpp"
#include "test_helpers.hpp"

using namespace hitab;
using namespace testutil;
using nlohmann::json;

namespace fs = std::filesystem;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunResult run_cli(const std::string& args) {
    static int counter = 0;
    const fs::path dir = fs::temp_directory_path() / "hitab_cli_test";
    fs::create_directories(dir);
    const fs::path out = dir / ("out" + std::to_string(counter) + ".txt");
    const fs::path err = dir / ("err" + std::to_string(counter) + ".txt");
    ++counter;

    const std::string cmd = std::string(HITAB_CLI_PATH) + " " + args + " > " +
                            out.string() + " 2> " + err.string();
    const int raw = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

fs::path write_temp(const std::string& name, const std::string& content) {
    const fs::path dir = fs::temp_directory_path() / "hitab_cli_test";
    fs::create_directories(dir);
    const fs::path p = dir / name;
    std::ofstream(p, std::ios::binary) << content;
    return p;
}

fs::path demo_net_path() {
    return fs::path(HITAB_DATA_DIR) / "tanh_demo_net.json";
}

}  // namespace

TEST_CASE("lipschitz report on the bundled demo network") {
    const RunResult r = run_cli("lipschitz " + demo_net_path().string());
    REQUIRE(r.exit_code == 0);
    const json rep = json::parse(r.out);
    CHECK(rep.at("lip_f").get<double>() == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(rep.at("lip_grad").get<double>() == doctest::Approx(3.0792016).epsilon(1e-6));
    CHECK(rep.at("lip_hess").get<double>() == doctest::Approx(16.0).epsilon(1e-12));
    CHECK(rep.at("per_layer").is_array());
}

TEST_CASE("lipschitz report on a zero-weight network") {
    const std::string net = R"({
      "layers": [
        {"weights": [[0.0]], "bias": [0.0], "activation": "tanh"},
        {"weights": [[0.0]], "bias": [0.0], "activation": "identity"}
      ],
      "out_vector": [1.0]})";
    const fs::path p = write_temp("zero_net.json", net);
    const RunResult r = run_cli("lipschitz " + p.string());
    REQUIRE(r.exit_code == 0);
    const json rep = json::parse(r.out);
    CHECK(rep.at("lip_f").get<double>() == 0.0);
    CHECK(rep.at("lip_grad").get<double>() == 0.0);
    CHECK(rep.at("lip_hess").get<double>() == 0.0);
}

TEST_CASE("malformed network files name the offending field") {
    const std::string missing_bias = R"({
      "layers": [
        {"weights": [[1.0]], "activation": "tanh"},
        {"weights": [[1.0]], "bias": [0.0], "activation": "identity"}
      ],
      "out_vector": [1.0]})";
    const fs::path p = write_temp("missing_bias.json", missing_bias);
    const RunResult r = run_cli("lipschitz " + p.string());
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("bias") != std::string::npos);
}

TEST_CASE("missing files are io errors") {
    const RunResult r = run_cli("lipschitz /nonexistent/net.json");
    CHECK(r.exit_code == 3);
}

TEST_CASE("bound on the demo ball problem") {
    const fs::path problem = fs::path(HITAB_DATA_DIR) / "tanh_demo_ball.json";
    const RunResult r = run_cli("bound " + demo_net_path().string() + " " + problem.string());
    REQUIRE(r.exit_code == 0);
    const json rep = json::parse(r.out);
    CHECK(rep.at("combined").get<double>() == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(rep.at("bound1").get<double>() == doctest::Approx(0.2153960).epsilon(1e-6));
    CHECK(rep.at("bound2").get<double>() == doctest::Approx(0.2026667).epsilon(1e-6));
    CHECK(rep.at("eps12").get<double>() == doctest::Approx(0.5773503).epsilon(1e-6));
}

TEST_CASE("bound rejects invalid regions") {
    const fs::path zero_radius =
        write_temp("zero_radius.json", R"({"center":[0.0],"radius":0.0,"norm":"l2"})");
    CHECK(run_cli("bound " + demo_net_path().string() + " " + zero_radius.string()).exit_code == 2);

    const fs::path wrong_len = write_temp(
        "wrong_len.json", R"({"center":[0.0],"radii":[0.5,0.5],"norm":"linf"})");
    CHECK(run_cli("bound " + demo_net_path().string() + " " + wrong_len.string()).exit_code == 2);

    const fs::path both = write_temp(
        "both.json", R"({"center":[0.0],"radius":0.5,"radii":[0.5],"norm":"l2"})");
    CHECK(run_cli("bound " + demo_net_path().string() + " " + both.string()).exit_code == 2);
}

TEST_CASE("bab converges on the demo box problem") {
    const fs::path problem = fs::path(HITAB_DATA_DIR) / "tanh_demo_box.json";
    const RunResult r = run_cli("bab " + demo_net_path().string() + " " + problem.string());
    REQUIRE(r.exit_code == 0);
    const json rep = json::parse(r.out);
    CHECK(rep.at("status").get<std::string>() == "Converged");
    const double upper = rep.at("upper").get<double>();
    CHECK(upper >= 0.9640275800758169 - 1e-12);
    CHECK(upper <= 0.9640275800758169 + 1e-3 + 1e-12);
    CHECK(rep.at("gap").get<double>() <= 1e-3 + 1e-12);
}

TEST_CASE("bab under a node budget stays valid") {
    const fs::path problem = write_temp("budget.json",
        R"({"center":[0.0],"radii":[1.0],"norm":"linf","tolerance":1e-9,"max_nodes":1})");
    const RunResult r = run_cli("bab " + demo_net_path().string() + " " + problem.string());
    REQUIRE(r.exit_code == 0);
    const json rep = json::parse(r.out);
    CHECK(rep.at("status").get<std::string>() == "NodeBudget");
    CHECK(rep.at("upper").get<double>() >= 0.9640275800758169);
}

TEST_CASE("bab rejects l2 problems") {
    const fs::path problem = fs::path(HITAB_DATA_DIR) / "tanh_demo_ball.json";
    CHECK(run_cli("bab " + demo_net_path().string() + " " + problem.string()).exit_code == 2);
}

TEST_CASE("verbose progress stream has nonincreasing uppers") {
    const fs::path problem = write_temp("verbose.json",
        R"({"center":[0.0],"radii":[1.0],"norm":"linf","tolerance":1e-5})");
    const RunResult r =
        run_cli("bab --verbose " + demo_net_path().string() + " " + problem.string());
    REQUIRE(r.exit_code == 0);

    std::istringstream lines(r.err);
    std::string line;
    double prev = std::numeric_limits<double>::infinity();
    int records = 0;
    while (std::getline(lines, line)) {
        if (line.empty() || line.front() != '{') continue;
        const json rec = json::parse(line);
        const double upper = rec.at("upper").get<double>();
        CHECK(upper <= prev + 1e-15);
        prev = upper;
        ++records;
    }
    CHECK(records > 0);
}

TEST_CASE("identical seeds give byte-identical bab reports") {
    const fs::path problem = fs::path(HITAB_DATA_DIR) / "tanh_demo_box.json";
    const std::string args =
        "bab --seed 7 " + demo_net_path().string() + " " + problem.string();
    const RunResult a = run_cli(args);
    const RunResult b = run_cli(args);
    REQUIRE(a.exit_code == 0);
    REQUIRE(b.exit_code == 0);
    CHECK(a.out == b.out);
    CHECK(!a.out.empty());
}

TEST_CASE("reach writes set and trajectory files") {
    const fs::path out_dir = fs::temp_directory_path() / "hitab_cli_test" / "reach_out";
    fs::remove_all(out_dir);

    // Small two-step problem derived from the bundled benchmark.
    json problem = json::parse(slurp(fs::path(HITAB_DATA_DIR) / "quadrotor_problem.json"));
    problem["steps"] = 2;
    problem["sample_count"] = 100;
    problem["radii"] = {0.05, 0.05, 0.05, 0.05, 0.05, 0.05};
    const fs::path p = write_temp("quad_small.json", problem.dump());
    const fs::path net = fs::path(HITAB_DATA_DIR) / "quadrotor_controller.json";

    const RunResult r =
        run_cli("reach --seed 3 --out " + out_dir.string() + " " + net.string() + " " + p.string());
    REQUIRE(r.exit_code == 0);
    REQUIRE(fs::exists(out_dir / "reach_sets.json"));
    REQUIRE(fs::exists(out_dir / "trajectories.csv"));

    const json sets = json::parse(slurp(out_dir / "reach_sets.json"));
    REQUIRE(sets.is_array());
    REQUIRE(sets.size() == 2);
    for (const auto& rec : sets) {
        CHECK(rec.contains("step"));
        CHECK(rec.at("rotation").size() == 36);
        CHECK(rec.at("center").size() == 6);
        CHECK(rec.at("radii").size() == 6);
        CHECK(rec.at("per_direction_bounds").size() == 12);
        CHECK(rec.at("safe_flags").size() == 2);
        for (const auto& flag : rec.at("safe_flags")) CHECK(flag.get<bool>());
    }

    const std::string csv = slurp(out_dir / "trajectories.csv");
    CHECK(csv.rfind("traj,step,x0,x1,x2,x3,x4,x5", 0) == 0);
    // 100 trajectories times (2 steps + initial state) plus the header.
    const long rows = std::count(csv.begin(), csv.end(), '\n');
    CHECK(rows == 1 + 100 * 3);
}

TEST_CASE("reach requires a system block") {
    const fs::path problem = fs::path(HITAB_DATA_DIR) / "tanh_demo_box.json";
    const RunResult r = run_cli("reach " + demo_net_path().string() + " " + problem.string());
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("system") != std::string::npos);
}

TEST_CASE("network files round-trip through the serializer") {
    Rng rng(51);
    const Network net = random_net(rng, {3, 5, 2});
    const auto dumped = network_to_json(net);
    const Network back = network_from_json(dumped);
    for (std::size_t i = 0; i < net.layers().size(); ++i) {
        CHECK((net.layers()[i].weights - back.layers()[i].weights).cwiseAbs().maxCoeff() == 0.0);
        CHECK((net.layers()[i].bias - back.layers()[i].bias).cwiseAbs().maxCoeff() == 0.0);
    }
    CHECK((net.out_vector() - back.out_vector()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("HITAB_THREADS env var is honored") {
    const fs::path problem = fs::path(HITAB_DATA_DIR) / "tanh_demo_box.json";
    const std::string cmd = "HITAB_THREADS=2 " + std::string(HITAB_CLI_PATH) + " bab " +
                            demo_net_path().string() + " " + problem.string();
    const fs::path out = fs::temp_directory_path() / "hitab_cli_test" / "env_out.txt";
    const int raw = std::system((cmd + " > " + out.string() + " 2> /dev/null").c_str());
    REQUIRE(WIFEXITED(raw));
    REQUIRE(WEXITSTATUS(raw) == 0);
    const json rep = json::parse(slurp(out));
    CHECK(rep.at("status").get<std::string>() == "Converged");
}
