#include "mortboost/domain.hpp"
#include "mortboost/io.hpp"
#include "mortboost/poisson_tree.hpp"
#include "mortboost/text.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;
using namespace mortboost;

namespace {

const fs::path fixtures{MORTBOOST_FIXTURE_DIR};

// Runs the CLI with stdout/stderr discarded and returns its exit status.
int run(const std::string &args) {
    const std::string cmd = std::string("\"") + MORTBOOST_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

int to_int(std::string_view s) { return static_cast<int>(text::parse_int(s).value()); }
double to_double(std::string_view s) { return text::parse_double(s).value(); }

std::string sha256_of(const std::string &data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

std::string quote(const fs::path &p) { return "\"" + p.string() + "\""; }

nlohmann::json manifest(const fs::path &dir) {
    return nlohmann::json::parse(read_text_file(dir / "manifest.json"));
}

std::vector<std::vector<std::string>> csv_rows(const fs::path &file) {
    const auto content = read_text_file(file);
    std::vector<std::vector<std::string>> rows;
    for (const auto line : text::lines(content)) {
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> cells;
        for (const auto c : text::split(line, ',')) {
            cells.emplace_back(c);
        }
        rows.push_back(std::move(cells));
    }
    return rows;
}

class Cli : public ::testing::Test {
  protected:
    void SetUp() override {
        const auto *info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() /
               (std::string("mortboost_cli_") + info->name() + "_" + std::to_string(::getpid()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string small_data() const {
        return "--deaths " + quote(fixtures / "small_deaths.txt") + " --exposures " +
               quote(fixtures / "small_exposures.txt");
    }

    int fit_lc(const fs::path &out) const {
        return run("fit lc " + small_data() + " --ages 60:64 --years 2000:2004 --out " + quote(out));
    }

    fs::path dir_;
};

TEST_F(Cli, FitLcThenCheck) {
    const auto out = dir_ / "lc";
    ASSERT_EQ(fit_lc(out), 0);
    for (const char *f : {"params.csv", "qfit.csv", "manifest.json"}) {
        EXPECT_TRUE(fs::exists(out / f)) << f;
    }
    const auto m = manifest(out);
    EXPECT_EQ(m["command"], "fit lc");
    EXPECT_TRUE(m["result"]["converged"].get<bool>());
    EXPECT_TRUE(m["warnings"].empty());
    for (const auto &[g, fit] : m["result"]["fits"].items()) {
        EXPECT_LT(fit["constraint_violation"].get<double>(), 1e-10) << g;
    }
    const auto q = read_rates_csv(read_text_file(out / "qfit.csv"));
    EXPECT_EQ(q.space().size(), 50u);

    EXPECT_EQ(run("check --params " + quote(out / "params.csv") + " --qfit " +
                  quote(out / "qfit.csv") + " --out " + quote(dir_ / "check")),
              0);
    EXPECT_TRUE(manifest(dir_ / "check")["result"]["ok"].get<bool>());
}

TEST_F(Cli, ManifestHashesMatchFiles) {
    const auto out = dir_ / "lc";
    ASSERT_EQ(fit_lc(out), 0);
    const auto m = manifest(out);
    ASSERT_EQ(m["outputs"].size(), 2u);
    for (const auto &o : m["outputs"]) {
        const auto path = out / o["path"].get<std::string>();
        ASSERT_TRUE(fs::exists(path));
        EXPECT_EQ(o["sha256"].get<std::string>(), sha256_of(read_text_file(path)));
    }
    ASSERT_EQ(m["inputs"].size(), 2u);
    for (const auto &i : m["inputs"]) {
        EXPECT_EQ(i["sha256"].get<std::string>(),
                  sha256_of(read_text_file(i["path"].get<std::string>())));
    }
}

TEST_F(Cli, RhWarmStartDoesNotIncreaseDeviance) {
    const auto lc = dir_ / "lc";
    ASSERT_EQ(fit_lc(lc), 0);
    const auto rh = dir_ / "rh";
    const int code = run("fit rh " + small_data() + " --ages 60:64 --years 2000:2004 --warm-start " +
                         quote(lc / "params.csv") + " --max-iter 2000 --out " + quote(rh));
    ASSERT_TRUE(code == 0 || code == 4) << code;
    const auto m = manifest(rh);
    EXPECT_EQ(m["result"]["converged"].get<bool>(), code == 0);
    const auto lc_fits = manifest(lc)["result"]["fits"];
    for (const auto &[g, fit] : m["result"]["fits"].items()) {
        EXPECT_TRUE(fit["warm_started"].get<bool>());
        EXPECT_NEAR(fit["warm_start_deviance"].get<double>(), lc_fits[g]["deviance"].get<double>(),
                    1e-6 * (1.0 + lc_fits[g]["deviance"].get<double>()));
        EXPECT_LE(fit["deviance"].get<double>(), lc_fits[g]["deviance"].get<double>() + 1e-8) << g;
    }
    EXPECT_EQ(run("check --params " + quote(rh / "params.csv")), 0);
}

TEST_F(Cli, BacktestOutputsAgreeWithTree) {
    const auto lc = dir_ / "lc";
    ASSERT_EQ(fit_lc(lc), 0);
    const auto out = dir_ / "bt";
    ASSERT_EQ(run("backtest --qfit " + quote(lc / "qfit.csv") + " " + small_data() +
                  " --min-bucket 2 --cp 0 --years-to-plot 2000,2004 --out " + quote(out)),
              0);
    for (const char *f : {"delta.csv", "tree.txt", "qtree.csv", "rate_profile.csv",
                          "delta_female.svg", "delta_male.svg"}) {
        EXPECT_TRUE(fs::exists(out / f)) << f;
    }
    const auto m = manifest(out);
    EXPECT_DOUBLE_EQ(m["config"]["white_band"].get<double>(), 0.05);
    EXPECT_EQ(m["result"]["working_points"].get<std::size_t>(), 50u);

    const auto tree_text = read_text_file(out / "tree.txt");
    const auto tree = parse_tree(tree_text);
    EXPECT_EQ(serialize_tree(tree), tree_text);

    const auto rows = csv_rows(out / "delta.csv");
    ASSERT_EQ(rows.size(), 51u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"gender", "age", "year", "cohort", "delta"}));
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const ExtendedFeature x(parse_gender(rows[r][0]), to_int(rows[r][1]),
                                to_int(rows[r][2]));
        EXPECT_EQ(to_int(rows[r][3]), x.cohort());
        EXPECT_EQ(to_double(rows[r][4]), predict_mu(tree, x) - 1.0) << r;
    }
    EXPECT_EQ(csv_rows(out / "rate_profile.csv").size(), 1u + 2u * 5u * 2u);
}

TEST_F(Cli, RerunsAreByteIdentical) {
    const auto lc = dir_ / "lc";
    ASSERT_EQ(fit_lc(lc), 0);
    const auto args = "backtest --qfit " + quote(lc / "qfit.csv") + " " + small_data() +
                      " --min-bucket 2 --cp 0 --out ";
    ASSERT_EQ(run(args + quote(dir_ / "a")), 0);
    ASSERT_EQ(run(args + quote(dir_ / "a")), 0);
    ASSERT_EQ(run(args + quote(dir_ / "b")), 0);
    for (const char *f : {"manifest.json", "delta.csv", "tree.txt", "delta_male.svg"}) {
        EXPECT_EQ(read_text_file(dir_ / "a" / f), read_text_file(dir_ / "b" / f)) << f;
    }
}

TEST_F(Cli, SimulateIsDeterministicAndReingests) {
    const auto spec = fixtures / "small.spec";
    ASSERT_EQ(run("simulate --spec " + quote(spec) + " --out " + quote(dir_ / "a")), 0);
    ASSERT_EQ(run("simulate --spec " + quote(spec) + " --out " + quote(dir_ / "b")), 0);
    for (const char *f : {"deaths.txt", "exposures.txt", "rates.csv", "manifest.json"}) {
        EXPECT_EQ(read_text_file(dir_ / "a" / f), read_text_file(dir_ / "b" / f)) << f;
    }
    // The checked-in fixture was produced by this scenario.
    EXPECT_EQ(read_text_file(dir_ / "a" / "deaths.txt"),
              read_text_file(fixtures / "small_deaths.txt"));

    ASSERT_EQ(run("simulate --spec " + quote(spec) + " --seed 1 --out " + quote(dir_ / "c")), 0);
    EXPECT_NE(read_text_file(dir_ / "a" / "deaths.txt"), read_text_file(dir_ / "c" / "deaths.txt"));

    const auto fit = dir_ / "fit";
    ASSERT_EQ(run("fit lc --deaths " + quote(dir_ / "a" / "deaths.txt") + " --exposures " +
                  quote(dir_ / "a" / "exposures.txt") +
                  " --ages 60:64 --years 2000:2004 --out " + quote(fit)),
              0);
    const auto m = manifest(fit);
    EXPECT_TRUE(m["warnings"].empty());
    EXPECT_DOUBLE_EQ(m["result"]["ingest"]["rounding_delta_total"].get<double>(), 0.0);
}

TEST_F(Cli, CodResidualsAreZeroExactlyWhereMissing) {
    const auto sim = dir_ / "sim";
    ASSERT_EQ(run("simulate --spec " + quote(fixtures / "cod.spec") + " --out " + quote(sim)), 0);
    const auto out = dir_ / "cod";
    ASSERT_EQ(run("cod --cod " + quote(sim / "cod.csv") + " --qfit " + quote(sim / "rates.csv") +
                  " --exposures " + quote(sim / "exposures.txt") + " --deaths " +
                  quote(sim / "deaths.txt") + " --buckets \"0-19;20-39;40-59\" --causes 4 --out " +
                  quote(out)),
              0);
    const auto rows = csv_rows(out / "residuals.csv");
    ASSERT_EQ(rows[0], (std::vector<std::string>{"gender", "age_group", "year", "cause", "delta",
                                                 "missing"}));
    ASSERT_EQ(rows.size(), 1u + 2u * 3u * 15u * 4u);
    std::size_t missing = 0;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const bool is_missing = rows[r][5] == "1";
        const bool recorded_missing =
            rows[r][3] == "3" && to_int(rows[r][2]) <= 2002;
        EXPECT_EQ(is_missing, recorded_missing) << r;
        if (is_missing) {
            ++missing;
            EXPECT_EQ(rows[r][4], "0") << r;
        } else {
            EXPECT_NE(to_double(rows[r][4]), 0.0) << r;
        }
    }
    EXPECT_EQ(missing, 18u);

    const auto m = manifest(out);
    EXPECT_EQ(m["result"]["missing_points"].get<std::size_t>(), 18u);
    EXPECT_EQ(m["result"]["partial_all_cause"].size(), 18u);
    for (const char *f : {"theta.csv", "theta_smoothed.csv", "tree.txt", "theta.svg",
                          "residuals.svg"}) {
        EXPECT_TRUE(fs::exists(out / f)) << f;
    }
    // Normalized theta sums to one over recorded causes.
    const auto theta = csv_rows(out / "theta.csv");
    for (std::size_t r = 1; r + 3 < theta.size(); r += 4) {
        double sum = 0.0;
        for (std::size_t k = 0; k < 4; ++k) {
            sum += to_double(theta[r + k][5]);
        }
        EXPECT_NEAR(sum, 1.0, 1e-12) << r;
    }
}

TEST_F(Cli, CodUniformInitWithTwelveCauses) {
    {
        std::ofstream spec(dir_ / "k12.spec");
        spec << "seed = 11\nages = 0:29\nyears = 2001:2004\nexposure = 100000\n"
                "cause_weights = 1,1,1,1,1,1,1,1,1,1,1,1\nbuckets = 0-9;10-19;20-29\n";
    }
    const auto sim = dir_ / "sim";
    ASSERT_EQ(run("simulate --spec " + quote(dir_ / "k12.spec") + " --out " + quote(sim)), 0);
    const auto out = dir_ / "cod";
    ASSERT_EQ(run("cod --cod " + quote(sim / "cod.csv") + " --qfit " + quote(sim / "rates.csv") +
                  " --exposures " + quote(sim / "exposures.txt") +
                  " --buckets \"0-9;10-19;20-29\" --theta-init uniform --no-svg --out " +
                  quote(out)),
              0);
    const auto m = manifest(out);
    ASSERT_EQ(m["result"]["theta_init"].size(), 12u);
    for (const auto &c : m["result"]["theta_init"]) {
        EXPECT_DOUBLE_EQ(c["theta"].get<double>(), 1.0 / 12.0);
    }
    EXPECT_FALSE(fs::exists(out / "theta.svg"));
}

TEST_F(Cli, ConfigFileIsOverriddenByFlags) {
    const auto lc = dir_ / "lc";
    ASSERT_EQ(fit_lc(lc), 0);
    {
        std::ofstream cfg(dir_ / "run.toml");
        cfg << "[backtest]\nmin-bucket = 3\ncp = 0.01\n";
    }
    const auto out = dir_ / "bt";
    ASSERT_EQ(run("--config " + quote(dir_ / "run.toml") + " backtest --qfit " +
                  quote(lc / "qfit.csv") + " " + small_data() + " --cp 0 --out " + quote(out)),
              0);
    const auto m = manifest(out);
    EXPECT_EQ(m["config"]["min_bucket"].get<std::size_t>(), 3u);
    EXPECT_DOUBLE_EQ(m["config"]["cp"].get<double>(), 0.0);
}

TEST_F(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(run(""), 2);
    EXPECT_EQ(run("backtest --qfit x"), 2);
    EXPECT_EQ(run("fit ar " + small_data() + " --ages 60:64 --years 2000:2004 --out " +
                  quote(dir_ / "x")),
              2);
    EXPECT_EQ(run("fit lc " + small_data() + " --ages 64:60 --years 2000:2004 --out " +
                  quote(dir_ / "x")),
              2);
    EXPECT_EQ(run("fit lc " + small_data() +
                  " --ages 60:64 --years 2000:2004 --warm-start x.csv --out " + quote(dir_ / "x")),
              2);
    EXPECT_EQ(run("--version"), 0);
}

TEST_F(Cli, DataErrorsExitThree) {
    EXPECT_EQ(run("fit lc --deaths " + quote(dir_ / "none.txt") + " --exposures " +
                  quote(fixtures / "small_exposures.txt") +
                  " --ages 60:64 --years 2000:2004 --out " + quote(dir_ / "x")),
              3);
    {
        std::ofstream bad(dir_ / "bad.txt");
        bad << "not an HMD file\n";
    }
    EXPECT_EQ(run("fit lc --deaths " + quote(dir_ / "bad.txt") + " --exposures " +
                  quote(fixtures / "small_exposures.txt") +
                  " --ages 60:64 --years 2000:2004 --out " + quote(dir_ / "x")),
              3);
    // Ages outside the data.
    EXPECT_EQ(run("fit lc " + small_data() + " --ages 50:64 --years 2000:2004 --no-pool --out " +
                  quote(dir_ / "x")),
              3);
}

TEST_F(Cli, NonConvergenceExitsFourWithOutputs) {
    const auto out = dir_ / "lc";
    EXPECT_EQ(run("fit lc " + small_data() + " --ages 60:64 --years 2000:2004 --max-iter 1 --out " +
                  quote(out)),
              4);
    ASSERT_TRUE(fs::exists(out / "params.csv"));
    const auto m = manifest(out);
    EXPECT_FALSE(m["result"]["converged"].get<bool>());
    EXPECT_FALSE(m["warnings"].empty());
}

} // namespace
