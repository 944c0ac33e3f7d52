// End-to-end runs of the `penny` executable.
#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "penny/io.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "penny_cli_tests";

int run(const std::string& args) {
    const std::string cmd = std::string(PENNY_CLI_PATH) + " " + args + " >" +
                            (kWork / "stdout.txt").string() + " 2>" + (kWork / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> lines(const fs::path& p) {
    std::vector<std::string> out;
    std::ifstream in(p);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

std::string path(const std::string& name) { return (kWork / name).string(); }

class Cli : public ::testing::Test {
  protected:
    static void SetUpTestSuite() {
        fs::remove_all(kWork);
        fs::create_directories(kWork);
        ASSERT_EQ(run("generate --seed 3 --n-traj 3 --t-end 2 --out " + path("small")), 0);
        ASSERT_EQ(run("train --seed 4 --dataset " + path("small") +
                      " --group s1r2 --epochs 10 --out " + path("run10")),
                  0);
    }
};

} // namespace

TEST_F(Cli, GenerateDefaultShape) {
    ASSERT_EQ(run("generate --seed 1 --out " + path("default")), 0);
    const auto manifest = nlohmann::json::parse(slurp(kWork / "default" / "manifest.json"));
    EXPECT_EQ(manifest.at("trajectories").size(), 32u);
    for (int i = 0; i < 32; ++i) {
        const fs::path f = kWork / "default" / penny::io::trajectory_file_name(i);
        const auto rows = lines(f);
        ASSERT_EQ(rows.size(), 2002u) << f;
        EXPECT_EQ(rows[0], "t,theta,phi,x,y,theta_dot,phi_dot,x_dot,y_dot");
    }
}

TEST_F(Cli, GenerateIsReproducible) {
    ASSERT_EQ(run("generate --seed 3 --n-traj 3 --t-end 2 --workers 3 --out " + path("small2")), 0);
    for (const char* f : {"manifest.json", "traj_0000.csv", "traj_0001.csv", "traj_0002.csv"}) {
        EXPECT_EQ(slurp(kWork / "small" / f), slurp(kWork / "small2" / f)) << f;
    }
}

TEST_F(Cli, GenerateRejectsBadConfig) {
    EXPECT_NE(run("generate --seed 1 --dt 0 --out " + path("bad")), 0);
    EXPECT_NE(slurp(kWork / "stderr.txt").find("dt"), std::string::npos);
    EXPECT_NE(run("generate --seed 1 --dt -0.01 --out " + path("bad")), 0);
    EXPECT_NE(run("generate --out " + path("bad")), 0) << "--seed is mandatory";
    EXPECT_NE(run("generate --seed 1 --n-traj 0 --out " + path("bad")), 0);
}

TEST_F(Cli, TrainSmokeRun) {
    const auto loss = lines(kWork / "run10" / "loss.csv");
    ASSERT_EQ(loss.size(), 11u);
    EXPECT_EQ(loss[0], "epoch,loss");
    EXPECT_EQ(loss[1].rfind("0,", 0), 0u);
    const auto metrics = nlohmann::json::parse(slurp(kWork / "run10" / "metrics.json"));
    EXPECT_EQ(metrics.at("epochs"), 10);
    EXPECT_EQ(metrics.at("group"), "s1r2");
    EXPECT_TRUE(metrics.at("grid").contains("vertical_residual"));
    EXPECT_TRUE(metrics.at("grid").contains("max_section_angle"));
    EXPECT_NO_THROW(penny::io::load_weights(kWork / "run10" / "weights.txt"));
}

TEST_F(Cli, TrainIsReproducible) {
    ASSERT_EQ(run("train --seed 4 --dataset " + path("small") + " --group s1r2 --epochs 10 --out " +
                  path("run10b")),
              0);
    EXPECT_EQ(slurp(kWork / "run10" / "weights.txt"), slurp(kWork / "run10b" / "weights.txt"));
    EXPECT_EQ(slurp(kWork / "run10" / "loss.csv"), slurp(kWork / "run10b" / "loss.csv"));
    EXPECT_EQ(slurp(kWork / "run10" / "metrics.json"), slurp(kWork / "run10b" / "metrics.json"));
}

TEST_F(Cli, TrainErrors) {
    EXPECT_NE(run("train --seed 1 --dataset " + path("nowhere") + " --out " + path("x")), 0);
    EXPECT_NE(run("train --dataset " + path("small") + " --out " + path("x")), 0);
    EXPECT_NE(run("train --seed 1 --dataset " + path("small") + " --group so3 --out " + path("x")), 0);
    EXPECT_NE(run("train --seed 1 --dataset " + path("small") + " --epochs 0 --out " + path("x")), 0);
}

TEST_F(Cli, ConfigFileWithFlagOverride) {
    {
        std::ofstream cfg(kWork / "run.ini");
        cfg << "[train]\nseed = 4\ngroup = se2\nepochs = 7\ndataset = " << path("small") << "\n";
    }
    ASSERT_EQ(run("--config " + path("run.ini") + " train --epochs 3 --out " + path("cfgrun")), 0);
    EXPECT_EQ(lines(kWork / "cfgrun" / "loss.csv").size(), 4u);
    const auto metrics = nlohmann::json::parse(slurp(kWork / "cfgrun" / "metrics.json"));
    EXPECT_EQ(metrics.at("group"), "se2");
    EXPECT_EQ(metrics.at("seed"), 4);
}

TEST_F(Cli, EvalSchemas) {
    ASSERT_EQ(run("eval --weights " + path("run10/weights.txt") + " --group s1r2 --dataset " +
                  path("small") + " --out " + path("eval")),
              0);
    const auto field = lines(kWork / "eval" / "field.csv");
    ASSERT_EQ(field.size(), 65u);
    EXPECT_EQ(field[0], "theta,phi,x,y,f1,f2,f3");
    const auto lie = lines(kWork / "eval" / "lie_algebra.csv");
    ASSERT_EQ(lie.size(), 65u);
    EXPECT_EQ(lie[0], "theta,phi,x,y,xi1,xi2,xi3,ref1,ref2,ref3");
    for (const char* f : {"residual_learned.csv", "residual_exact.csv"}) {
        const auto r = lines(kWork / "eval" / f);
        ASSERT_GE(r.size(), 2u);
        EXPECT_EQ(r[0], "t,value");
        EXPECT_EQ(penny::io::split(r[1], ',').size(), 2u);
    }
    const auto metrics = nlohmann::json::parse(slurp(kWork / "eval" / "metrics.json"));
    EXPECT_EQ(metrics.at("grid_points"), 64);

    ASSERT_EQ(run("eval --weights " + path("run10/weights.txt") + " --group se2 --out " +
                  path("eval_se2")),
              0);
    EXPECT_EQ(lines(kWork / "eval_se2" / "field.csv").size(), 257u);
}

TEST_F(Cli, EvalSinglePointGrid) {
    ASSERT_EQ(run("eval --weights " + path("run10/weights.txt") +
                  " --group s1r2 --phi-points 1 --out " + path("eval1")),
              0);
    EXPECT_EQ(lines(kWork / "eval1" / "field.csv").size(), 2u);
    EXPECT_EQ(lines(kWork / "eval1" / "lie_algebra.csv").size(), 2u);
    ASSERT_EQ(run("eval --weights " + path("run10/weights.txt") +
                  " --group se2 --xy-points 1 --out " + path("eval1se2")),
              0);
    EXPECT_EQ(lines(kWork / "eval1se2" / "field.csv").size(), 2u);
}

TEST_F(Cli, EvalRejectsMalformedWeights) {
    {
        std::ofstream bad(kWork / "bad_weights.txt");
        bad << "penny-mlp-weights 1\ndims 4 10\nlayer 0 weight 10 4\n1 2 3\n";
    }
    EXPECT_NE(run("eval --weights " + path("bad_weights.txt") + " --group s1r2 --out " +
                  path("evalbad")),
              0);
    EXPECT_NE(run("eval --weights " + path("missing.txt") + " --group s1r2 --out " + path("evalbad")),
              0);
}
