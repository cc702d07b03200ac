#include <gtest/gtest.h>

#include <cstdlib>
#include <stdexcept>

#include "kronest/error.hpp"
#include "kronest/parallel.hpp"
#include "kronest/pipeline.hpp"
#include "test_support.hpp"

namespace kronest {
namespace {

TEST(Parallel, EnvironmentSetsThreadCount) {
    ::setenv("KRONEST_THREADS", "3", 1);
    EXPECT_EQ(resolve_threads(), 3);
    EXPECT_EQ(resolve_threads(5), 5);
    ::setenv("KRONEST_THREADS", "x2", 1);
    EXPECT_THROW(resolve_threads(), ConfigError);
    ::unsetenv("KRONEST_THREADS");
    EXPECT_GE(resolve_threads(), 1);
    EXPECT_THROW(resolve_threads(0), ConfigError);
}

TEST(Parallel, EveryIndexOnce) {
    for (const int threads : {1, 2, 8}) {
        std::vector<int> hits(1000, 0);
        parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; }, threads);
        EXPECT_EQ(std::count(hits.begin(), hits.end(), 1), 1000);
    }
    parallel_for(0, [](std::size_t) { FAIL(); }, 4);
}

TEST(Parallel, RethrowsWorkerException) {
    for (const int threads : {1, 4}) {
        EXPECT_THROW(parallel_for(
                         100,
                         [](std::size_t i) {
                             if (i == 37) throw std::runtime_error("boom");
                         },
                         threads),
                     std::runtime_error);
    }
}

TEST(EstimatorSpec, LabelsRoundTrip) {
    for (const std::string text :
         {"scm", "knscm", "kmle", "rske:cv:knscm", "rske:cv:kmle", "rske:koas:knscm",
          "rske:koas:kmle", "rske:oracle", "rske:manual:0.25:0.5"}) {
        EXPECT_EQ(EstimatorSpec::parse(text).label(), text);
    }
    EXPECT_EQ(EstimatorSpec::parse("rske:cv").label(), "rske:cv:knscm");
}

TEST(EstimatorSpec, RejectsMalformedText) {
    for (const std::string text : {"", "tyler", "scm:x", "rske", "rske:cv:tyler", "rske:manual:0.2",
                                   "rske:manual:a:0.1", "rske:manual:1.5:0", "rske:oracle:x",
                                   "rske:lw"}) {
        EXPECT_THROW(EstimatorSpec::parse(text), ConfigError) << text;
    }
}

TEST(Estimate, DispatchesByKind) {
    Rng rng(91);
    const SampleSet s = testing::cg_samples(rng, testing::random_kron(rng, 4, 3), 6);
    EXPECT_TRUE(std::holds_alternative<Matrix>(estimate(s, EstimatorSpec::parse("scm")).cov));
    const Estimate k = estimate(s, EstimatorSpec::parse("kmle"));
    ASSERT_TRUE(k.report.has_value());
    const Estimate m = estimate(s, EstimatorSpec::parse("rske:manual:0:0"));
    EXPECT_EQ((std::get<KroneckerCov>(k.cov).st - std::get<KroneckerCov>(m.cov).st).norm(), 0.0);
    const Estimate cv = estimate(s, EstimatorSpec::parse("rske:cv:kmle"));
    EXPECT_EQ(cv.rho.method, ShrinkageMethod::cv);

    SampleSet no_truth = s;
    no_truth.truth.reset();
    EXPECT_THROW(estimate(no_truth, EstimatorSpec::parse("rske:oracle")), ConfigError);
}

TEST(Estimate, SelectorsKeepSolveWellPosed) {
    Rng rng(92);
    const SampleSet s = testing::cg_samples(rng, testing::random_kron(rng, 8, 3), 2);
    for (const std::string text : {"rske:cv:knscm", "rske:koas:knscm", "rske:cv:kmle"}) {
        const Estimate e = estimate(s, EstimatorSpec::parse(text));
        EXPECT_GT(e.rho.st, 0.25) << text;
    }
}

}  // namespace
}  // namespace kronest
