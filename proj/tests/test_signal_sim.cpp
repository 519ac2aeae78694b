// SPDX-License-Identifier: Apache-2.0
//
// osa-doa: DOA estimation for hybrid massive-MIMO receive arrays with
// overlapped subarrays
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "osa/rng.hpp"
#include "osa/signal_sim.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

using namespace osa;

namespace
{

ArrayConfig desk_scale()
{
    return ArrayConfig::from_partition(7, 8, 4, 0.5, 1.0, 60.0, 1.0);
}

} // namespace

TEST_CASE("snr bookkeeping fixes the power ratio")
{
    SimParams p = SimParams::from_snr(10.0, 100, {10.0}, 1);
    CHECK(p.signal_power == doctest::Approx(10.0));
    CHECK(p.noise_power == doctest::Approx(1.0));

    SimParams up = SimParams::from_snr(20.0, 100, {10.0}, 1);
    CHECK(up.signal_power / up.noise_power ==
          doctest::Approx(10.0 * (p.signal_power / p.noise_power)));

    SimParams tampered = p;
    tampered.snr_db = 0.0;
    CHECK_THROWS_AS(tampered.validate(), std::invalid_argument);
    CHECK_THROWS_AS(SimParams::from_snr(0.0, 0, {1.0}, 1), std::invalid_argument);
}

TEST_CASE("snapshot batches have the configured shape and are seed-reproducible")
{
    ArrayConfig cfg = desk_scale();
    BeamformerMatrix bf = build_beamformer(cfg, PhasePolicy::random_uniform, 5);
    SimParams params = SimParams::from_snr(0.0, 100, {10.0}, 77);

    SnapshotBatch batch = simulate_snapshots(cfg, bf, params);
    CHECK(batch.y.rows() == 7);
    CHECK(batch.y.cols() == 100);

    SnapshotBatch again = simulate_snapshots(cfg, bf, params);
    CHECK((batch.y - again.y).cwiseAbs().maxCoeff() == 0.0);

    SUBCASE("identifiability guard")
    {
        SimParams overloaded = SimParams::from_snr(0.0, 10, {-30, -20, -10, 0, 10, 20, 30}, 1);
        CHECK_THROWS_AS(simulate_snapshots(cfg, bf, overloaded), std::domain_error);
    }
    SUBCASE("angles outside the region are rejected")
    {
        SimParams outside = SimParams::from_snr(0.0, 10, {75.0}, 1);
        CHECK_THROWS_AS(simulate_snapshots(cfg, bf, outside), std::domain_error);
    }
}

TEST_CASE("noise-only covariance is the scaled beamformer gram matrix")
{
    ArrayConfig cfg = desk_scale();
    BeamformerMatrix bf = build_beamformer(cfg, PhasePolicy::random_uniform, 5);

    CovarianceEstimate exact = exact_covariance(cfg, bf, {}, 0.0, 2.0);
    CMat expected = 2.0 * (bf.w.adjoint() * bf.w);
    CHECK((exact.c - expected).cwiseAbs().maxCoeff() < 1e-12);

    // large-N sample covariance of pure noise approaches it too
    SimParams params = SimParams::noise_only(20000, 3, 2.0);
    CovarianceEstimate sample = sample_covariance(simulate_snapshots(cfg, bf, params));
    const double rel = (sample.c - expected).norm() / expected.norm();
    CHECK(rel < 0.05);
}

TEST_CASE("single broadside source through zero phases gives the analytic rank-1 part")
{
    ArrayConfig cfg = desk_scale();
    BeamformerMatrix zero = build_beamformer(cfg, PhasePolicy::all_zero, 0);
    const double sig = 3.0, noise = 0.5;
    CovarianceEstimate exact = exact_covariance(cfg, zero, {0.0}, sig, noise);

    // every virtual steering entry is sqrt(subarray_size)
    CMat gram = zero.w.adjoint() * zero.w;
    for (int i = 0; i < 7; ++i)
        for (int j = 0; j < 7; ++j)
        {
            const cxd expected = sig * 8.0 + noise * gram(i, j);
            CHECK(std::abs(exact.c(i, j) - expected) < 1e-12);
        }
}

TEST_CASE("exact covariance matches a long Monte-Carlo average")
{
    ArrayConfig cfg = desk_scale();
    BeamformerMatrix bf = build_beamformer(cfg, PhasePolicy::random_uniform, 11);
    const std::vector<double> thetas = {-20.0, 10.1};
    const double sig = std::pow(10.0, 0.5), noise = 1.0;

    CovarianceEstimate exact = exact_covariance(cfg, bf, thetas, sig, noise);
    CHECK(hermitian_defect(exact.c) < 1e-12);

    SimParams params = SimParams::from_snr(5.0, 200000, thetas, 99);
    CovarianceEstimate mc = sample_covariance(simulate_snapshots(cfg, bf, params));
    const double rel = (mc.c - exact.c).norm() / exact.c.norm();
    CHECK(rel < 0.02);
}

TEST_CASE("sample covariance basics")
{
    ArrayConfig cfg = desk_scale();
    BeamformerMatrix bf = build_beamformer(cfg, PhasePolicy::random_uniform, 5);

    SUBCASE("single snapshot is the outer product")
    {
        SimParams params = SimParams::from_snr(0.0, 1, {5.0}, 13);
        SnapshotBatch batch = simulate_snapshots(cfg, bf, params);
        CovarianceEstimate c = sample_covariance(batch);
        CMat outer = batch.y.col(0) * batch.y.col(0).adjoint();
        CHECK((c.c - outer).cwiseAbs().maxCoeff() < 1e-14);
    }
    SUBCASE("identical snapshots average to the same outer product")
    {
        SnapshotBatch batch;
        batch.params = SimParams::from_snr(0.0, 1, {5.0}, 13);
        CVec y = simulate_snapshots(cfg, bf, batch.params).y.col(0);
        batch.y.resize(7, 9);
        for (int n = 0; n < 9; ++n)
            batch.y.col(n) = y;
        CovarianceEstimate c = sample_covariance(batch);
        CHECK((c.c - y * y.adjoint()).cwiseAbs().maxCoeff() < 1e-13);
    }
    SUBCASE("empty batch is rejected")
    {
        SnapshotBatch batch;
        batch.y.resize(7, 0);
        CHECK_THROWS_AS(sample_covariance(batch), std::invalid_argument);
    }
    SUBCASE("eigenvalues are nonnegative up to roundoff")
    {
        SimParams params = SimParams::from_snr(-5.0, 20, {5.0, -12.0}, 21);
        CovarianceEstimate c = sample_covariance(simulate_snapshots(cfg, bf, params));
        Eigen::SelfAdjointEigenSolver<CMat> eig(c.c);
        CHECK(eig.eigenvalues().minCoeff() > -1e-10);
        CHECK(hermitian_defect(c.c) < 1e-12);
    }
}

TEST_CASE("sample covariance error shrinks like the square root of the snapshot count")
{
    ArrayConfig cfg = desk_scale();
    BeamformerMatrix bf = build_beamformer(cfg, PhasePolicy::random_uniform, 5);
    const std::vector<double> thetas = {10.1};
    CovarianceEstimate exact = exact_covariance(cfg, bf, thetas, 1.0, 1.0);

    auto median_err = [&](int n)
    {
        std::vector<double> errs;
        for (uint64_t seed = 0; seed < 20; ++seed)
        {
            SimParams p = SimParams::from_snr(0.0, n, thetas, Rng::derive(1234, seed));
            CovarianceEstimate c = sample_covariance(simulate_snapshots(cfg, bf, p));
            errs.push_back((c.c - exact.c).norm());
        }
        std::sort(errs.begin(), errs.end());
        return errs[errs.size() / 2];
    };

    const double e100 = median_err(100);
    const double e400 = median_err(400);
    const double e1600 = median_err(1600);
    // quadrupling N should halve the error, within a factor 1.5
    CHECK(e100 / e400 > 2.0 / 1.5);
    CHECK(e100 / e400 < 2.0 * 1.5);
    CHECK(e400 / e1600 > 2.0 / 1.5);
    CHECK(e400 / e1600 < 2.0 * 1.5);
}
