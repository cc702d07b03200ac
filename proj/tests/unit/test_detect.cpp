#include <gtest/gtest.h>

#include <numbers>

#include "kronest/detect.hpp"
#include "kronest/error.hpp"
#include "test_support.hpp"

namespace kronest {
namespace {

SceneConfig small_scene() {
    SceneConfig c;
    c.radar.n_t = 4;
    c.radar.n_s = 2;
    c.radar.n_p = 3;
    c.n_patches = 31;
    c.samples = 8;
    return c;
}

TEST(Nmf, BoundedAndScaleInvariant) {
    Rng rng(71);
    for (int t = 0; t < 50; ++t) {
        const KroneckerCov r = testing::random_kron(rng, 6, 3);
        const InverseOperator inv(r);
        const DataMatrix s = rng.complex_normal_matrix(3, 6);
        const DataMatrix y = rng.complex_normal_matrix(3, 6);
        const double v = nmf_statistic(s, y, inv);
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
        EXPECT_NEAR(nmf_statistic(s * Complex(0.0, 4.0), y * 1e-3, inv), v, 1e-12);
        const InverseOperator scaled(KroneckerCov{r.st * 9.0, r.p});
        EXPECT_NEAR(nmf_statistic(s, y, scaled), v, 1e-12);
    }
}

TEST(Nmf, UnityWhenCellIsTargetOnly) {
    Rng rng(72);
    const KroneckerCov r = testing::random_kron(rng, 6, 3);
    const DataMatrix s = rng.complex_normal_matrix(3, 6);
    EXPECT_NEAR(nmf_statistic(s, s * Complex(2.0, -1.0), CovEstimate{r}), 1.0, 1e-12);
    EXPECT_THROW(nmf_statistic(s, DataMatrix::Zero(3, 6), CovEstimate{r}), NumericalError);
}

TEST(Nmf, UnstructuredMatchesKronecker) {
    Rng rng(73);
    const KroneckerCov r = testing::random_kron(rng, 4, 2);
    const DataMatrix s = rng.complex_normal_matrix(2, 4);
    const DataMatrix y = rng.complex_normal_matrix(2, 4);
    EXPECT_NEAR(nmf_statistic(s, y, CovEstimate{r}),
                nmf_statistic(s, y, CovEstimate{testing::full_cov(r)}), 1e-10);
}

// With the true covariance the statistic is Beta(1, N - 1) under H0 for any
// texture, so P(Lambda > t) = (1 - t)^(N - 1).
TEST(Nmf, NullDistributionWithTrueCovariance) {
    Rng rng(75);
    const KroneckerCov truth = testing::random_kron(rng, 8, 3, 1e3);
    const SampleSet cells = testing::cg_samples(rng, truth, 40000, 0.5);
    const DataMatrix s = rng.complex_normal_matrix(3, 8);
    const InverseOperator inv(truth);
    std::vector<double> stats;
    for (const auto& y : cells.samples) stats.push_back(nmf_statistic(s, y, inv));
    const double n = static_cast<double>(stats.size());
    for (const double t : {0.02, 0.05, 0.1, 0.2}) {
        const double expect = std::pow(1.0 - t, 23.0);
        const double got = static_cast<double>(count_detections(stats, t)) / n;
        EXPECT_NEAR(got, expect, 4.0 * std::sqrt(expect * (1.0 - expect) / n)) << "t=" << t;
    }
}

TEST(Threshold, AllowsFloorOfExpectedExceedances) {
    std::vector<double> v(1000);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i) / 1000.0;
    const double th = empirical_threshold(v, 0.01);
    EXPECT_EQ(count_detections(v, th), 10u);
    EXPECT_DOUBLE_EQ(th, 0.989);
    EXPECT_EQ(count_detections(v, empirical_threshold(v, 0.0105)), 10u);
    EXPECT_EQ(empirical_threshold(v, 1.0), 0.0);
    EXPECT_THROW(empirical_threshold({}, 0.1), DimensionError);
    EXPECT_THROW(empirical_threshold(v, 0.0), ConfigError);
}

TEST(Target, AmplitudeRealizesScr) {
    Rng rng(74);
    const DataMatrix s = rng.complex_normal_matrix(3, 8);
    const double a = target_amplitude(-10.0, s, 24.0);
    EXPECT_NEAR(a * a * s.squaredNorm(), 2.4, 1e-12);
    const DataMatrix y = DataMatrix::Zero(3, 8);
    EXPECT_LT((inject_target(y, s, Complex(a, 0.0)) - a * s).norm(), 1e-15);
    EXPECT_THROW(inject_target(DataMatrix::Zero(2, 8), s, 1.0), DimensionError);
}

TEST(Target, SignatureLayout) {
    RadarParams radar;
    radar.n_s = 2;
    radar.n_t = 4;
    TargetSignature t = TargetSignature::from_angles(0.25, 60.0, 0.0, radar);
    EXPECT_NEAR(t.spatial, 0.25, 1e-12);
    const DataMatrix s = t.matrix(radar);
    ASSERT_EQ(s.rows(), 3);
    ASSERT_EQ(s.cols(), 8);
    EXPECT_EQ(s.row(1).norm(), 0.0);
    const Vector a = space_time_steering(0.25, 0.25, 4, 2);
    EXPECT_LT((s.row(0).transpose() - a.conjugate()).norm(), 1e-14);
    t.polarization = Vector::Zero(2);
    EXPECT_THROW(t.matrix(radar), DimensionError);
}

TEST(Detection, CalibratedRateAndSeedDeterminism) {
    const Scene scene(small_scene());
    DetectionConfig dc;
    dc.estimator = EstimatorSpec::parse("rske:koas:knscm");
    dc.target = TargetSignature::from_angles(0.25, 0.0, 3.6, scene.config().radar);
    const DetectionThreshold th = calibrate_threshold(0.05, scene, dc, 5, 1000);
    EXPECT_FALSE(th.unstable);
    const TrialStatistics h0 = trial_statistics(scene, dc, 1000, 6, std::nullopt);
    const double rate = static_cast<double>(count_detections(h0.stats, th.value)) / 1000.0;
    // Threshold and check set are independent draws of the same size.
    EXPECT_NEAR(rate, 0.05, 4.0 * std::sqrt(2.0 * 0.05 * 0.95 / 1000.0));
    EXPECT_GT(h0.rho_st_mean, 0.0);

    const auto a = pd_curve({-30.0, -10.0}, scene, dc, th, 300, 7);
    const auto b = pd_curve({-30.0, -10.0}, scene, dc, th, 300, 7);
    ASSERT_EQ(a.size(), 2u);
    EXPECT_EQ(a[0].detections, b[0].detections);
    EXPECT_EQ(a[1].detections, b[1].detections);
    EXPECT_GT(a[1].pd(), a[0].pd());
}

TEST(Detection, ThreadCountDoesNotChangeStatistics) {
    const Scene scene(small_scene());
    DetectionConfig dc;
    dc.estimator = EstimatorSpec::parse("rske:cv:knscm");
    dc.target = TargetSignature::from_angles(0.25, 0.0, 3.6, scene.config().radar);
    const auto one = trial_statistics(scene, dc, 64, 3, 0.0);
    dc.threads = 4;
    const auto four = trial_statistics(scene, dc, 64, 3, 0.0);
    EXPECT_EQ(one.stats, four.stats);
}

TEST(Detection, DefaultCalibrationSize) {
    const Scene scene(small_scene());
    DetectionConfig dc;
    dc.estimator = EstimatorSpec::parse("knscm");
    dc.reuse_covariance = true;
    const DetectionThreshold th = calibrate_threshold(0.1, scene, dc, 1);
    EXPECT_EQ(th.trials, 1000u);
    EXPECT_FALSE(th.unstable);
    EXPECT_TRUE(calibrate_threshold(0.1, scene, dc, 1, 50).unstable);
}

}  // namespace
}  // namespace kronest
