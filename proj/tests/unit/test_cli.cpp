#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "config.hpp"
#include "kronest/error.hpp"

namespace kronest::cli {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("kronest_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream(p, std::ios::binary) << text;
}

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result cli(std::vector<std::string> args) {
    args.insert(args.begin(), "kronest");
    std::ostringstream out, err;
    const int code = run(args, out, err);
    return {code, out.str(), err.str()};
}

/// Column `name` of every data row of a CSV.
std::vector<std::string> column(const std::string& csv, const std::string& name) {
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    std::vector<std::string> head;
    {
        std::istringstream h(line);
        for (std::string f; std::getline(h, f, ',');) head.push_back(f);
    }
    const auto idx = static_cast<std::size_t>(std::find(head.begin(), head.end(), name) - head.begin());
    std::vector<std::string> out;
    while (std::getline(in, line)) {
        std::istringstream r(line);
        std::vector<std::string> row;
        for (std::string f; std::getline(r, f, ',');) row.push_back(f);
        if (idx < row.size()) out.push_back(row[idx]);
    }
    return out;
}

const char* kSmallScene = R"({
  "scene": {"radar": {"n_s": 1, "n_t": 8, "n_p": 3}, "n_patches": 41, "samples": 6,
            "texture": {"nu": 1.0}},
  "trials": 8,
  "seed": 11
})";

TEST(Config, UnknownKeysNameTheirPath) {
    try {
        parse_config(Json::parse(R"({"scene": {"radar": {"n_tt": 4}}})"));
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("scene.radar.n_tt"), std::string::npos) << e.what();
    }
    EXPECT_THROW(parse_config(Json::parse(R"({"bogus": 1})")), ConfigError);
    EXPECT_THROW(parse_config(Json::parse(R"({"trials": "many"})")), ConfigError);
}

TEST(Config, DottedKeysEqualNested) {
    const auto a = parse_config(Json::parse(R"({"scene.radar.n_t": 4, "solver.k_max": 30})"));
    const auto b = parse_config(Json::parse(R"({"scene": {"radar": {"n_t": 4}}, "solver": {"k_max": 30}})"));
    EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
    EXPECT_EQ(a.scene.radar.n_t, 4);
    EXPECT_THROW(expand_dotted_keys(Json::parse(R"({"a.b": 1, "a": {"b": 2}})")), ConfigError);
}

TEST(Config, ConflictingSeedsRejected) {
    EXPECT_THROW(parse_config(Json::parse(R"({"seed": 3, "scene": {"seed": 4}})")), ConfigError);
}

TEST(Config, DigestIgnoresSeedAndKeyOrder) {
    const auto a = parse_config(Json::parse(R"({"seed": 1, "trials": 5, "solver": {"delta": 1e-4}})"));
    const auto b = parse_config(Json::parse(R"({"solver": {"delta": 1e-4}, "trials": 5, "seed": 99})"));
    EXPECT_EQ(config_digest(a), config_digest(b));
    EXPECT_EQ(config_digest(a).size(), 16u);
    const auto c = parse_config(Json::parse(R"({"trials": 6, "solver": {"delta": 1e-4}})"));
    EXPECT_NE(config_digest(a), config_digest(c));
    // Round trip through the canonical form.
    EXPECT_EQ(to_json(parse_config(to_json(a))).dump(), to_json(a).dump());
}

TEST(Config, FnvReferenceVectors) {
    EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
    EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
    EXPECT_EQ(fnv1a_hex("foobar"), "85944171f73967e8");
}

TEST(Summary, MeanAndInterval) {
    const Summary s = summarize({1.0, 2.0, 3.0, 4.0});
    EXPECT_DOUBLE_EQ(s.mean, 2.5);
    EXPECT_NEAR(s.ci95, 1.96 * std::sqrt(5.0 / 3.0) / 2.0, 1e-15);
    EXPECT_TRUE(std::isnan(summarize({}).mean));
}

TEST(Cli, ExitCodes) {
    const fs::path dir = scratch("exit");
    EXPECT_EQ(cli({"--help"}).code, kExitOk);
    EXPECT_EQ(cli({"frobnicate"}).code, kExitIo);
    EXPECT_EQ(cli({"estimate", "--dataset", (dir / "missing.ksamp").string()}).code, kExitIo);
    write_file(dir / "bad.json", R"({"scene": {"radr": {}}})");
    const Result bad = cli({"simulate", "--config", (dir / "bad.json").string(), "--out", dir.string()});
    EXPECT_EQ(bad.code, kExitIo);
    EXPECT_NE(bad.err.find("scene.radr"), std::string::npos);

    // L N_p <= N_st: the unshrunk estimator has no solution.
    write_file(dir / "cfg.json", kSmallScene);
    ASSERT_EQ(cli({"simulate", "--config", (dir / "cfg.json").string(), "--samples", "2", "--out",
                   dir.string()})
                  .code,
              kExitOk);
    const Result ill = cli({"estimate", "--dataset", (dir / "dataset.ksamp").string(), "--estimator", "kmle",
                            "--out", dir.string()});
    EXPECT_EQ(ill.code, kExitNumerical);
}

TEST(Cli, SimulateIsByteIdenticalAcrossRuns) {
    const fs::path dir = scratch("simulate");
    write_file(dir / "cfg.json", kSmallScene);
    const std::string cfg = (dir / "cfg.json").string();
    const Result a = cli({"simulate", "--config", cfg, "--out", (dir / "a").string()});
    const Result b = cli({"simulate", "--config", cfg, "--out", (dir / "b").string()});
    ASSERT_EQ(a.code, 0) << a.err;
    ASSERT_EQ(b.code, 0) << b.err;
    EXPECT_EQ(slurp(dir / "a" / "dataset.ksamp"), slurp(dir / "b" / "dataset.ksamp"));
    const Result c = cli({"simulate", "--config", cfg, "--seed", "12", "--out", (dir / "c").string()});
    ASSERT_EQ(c.code, 0) << c.err;
    EXPECT_NE(slurp(dir / "a" / "dataset.ksamp"), slurp(dir / "c" / "dataset.ksamp"));
}

TEST(Cli, UnshrunkRskeReproducesKmle) {
    const fs::path dir = scratch("estimate");
    write_file(dir / "cfg.json", kSmallScene);
    ASSERT_EQ(cli({"simulate", "--config", (dir / "cfg.json").string(), "--out", dir.string()}).code, 0);
    const Result r = cli({"estimate", "--dataset", (dir / "dataset.ksamp").string(), "--estimator", "kmle",
                          "--estimator", "rske:manual:0:0", "--estimator", "rske:cv:knscm", "--out",
                          dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto nmse = column(slurp(dir / "metrics.csv"), "nmse");
    ASSERT_EQ(nmse.size(), 3u);
    EXPECT_EQ(nmse[0], nmse[1]);

    const Json report = Json::parse(slurp(dir / "report.json"));
    for (const auto& res : report.at("results")) {
        const auto& half = res.at("report").at("half_costs");
        for (std::size_t i = 1; i < half.size(); ++i) {
            const double prev = half[i - 1].get<double>();
            EXPECT_LE(half[i].get<double>(), prev + 1e-9 * std::abs(prev));
        }
    }
}

TEST(Cli, SelectShrinkageWritesFactors) {
    const fs::path dir = scratch("select");
    write_file(dir / "cfg.json", kSmallScene);
    ASSERT_EQ(cli({"simulate", "--config", (dir / "cfg.json").string(), "--out", dir.string()}).code, 0);
    const Result r = cli({"select-shrinkage", "--dataset", (dir / "dataset.ksamp").string(), "--method",
                          "koas", "--out", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const Json j = Json::parse(slurp(dir / "shrinkage.json"));
    EXPECT_GE(j.at("rho_st").get<double>(), 0.0);
    EXPECT_LE(j.at("rho_st").get<double>(), 1.0);
    EXPECT_EQ(j.at("estimator"), "rske:koas:knscm");
}

TEST(Cli, SweepOutputsIndependentOfThreads) {
    const fs::path dir = scratch("sweep");
    write_file(dir / "cfg.json", R"({
      "scene": {"radar": {"n_s": 1, "n_t": 8, "n_p": 3}, "n_patches": 41},
      "sweep": {"axis": "L", "values": [4, 8]},
      "estimators": ["knscm", "rske:cv:knscm"],
      "trials": 6,
      "seed": 5
    })");
    const std::string cfg = (dir / "cfg.json").string();
    ASSERT_EQ(cli({"sweep", "--config", cfg, "--threads", "1", "--out", (dir / "a").string()}).code, 0);
    ASSERT_EQ(cli({"sweep", "--config", cfg, "--threads", "3", "--out", (dir / "b").string()}).code, 0);
    for (const char* f : {"metrics_vs_L.csv", "nmse_vs_L.csv", "scnr_loss_vs_L.csv", "cond_vs_L.csv"}) {
        ASSERT_TRUE(fs::exists(dir / "a" / f)) << f;
        EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
    }
    EXPECT_EQ(column(slurp(dir / "a" / "metrics_vs_L.csv"), "L"),
              (std::vector<std::string>{"4", "4", "8", "8"}));
    EXPECT_TRUE(fs::exists(dir / "a" / "manifest.json"));
}

TEST(Cli, FitReadsCsvAndDataset) {
    const fs::path dir = scratch("fit");
    std::ofstream csv(dir / "amp.csv");
    Rng rng(7);
    for (const double a : sample_amplitudes(Family::k, {1.5, 1.0}, 2000, rng)) csv << a << '\n';
    csv.close();
    const Result r = cli({"fit", "--input", (dir / "amp.csv").string(), "--families", "rayleigh,k",
                          "--out", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(column(slurp(dir / "fit.csv"), "family"), (std::vector<std::string>{"rayleigh", "k"}));
    EXPECT_EQ(r.out.rfind("family,param1,param2,fitting_error,gaussian_limit\n", 0), 0u);

    write_file(dir / "bad.csv", "1.0\nnope\n");
    EXPECT_EQ(cli({"fit", "--input", (dir / "bad.csv").string(), "--out", dir.string()}).code, kExitIo);
}

}  // namespace
}  // namespace kronest::cli
