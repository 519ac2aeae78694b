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

#include "osa/array_model.hpp"
#include "osa/rng.hpp"

#include <cmath>

using namespace osa;

namespace
{

ArrayConfig paper_scale()
{
    // 128 elements, subarrays of 16 with overlap 8 -> 15 RF chains
    return ArrayConfig::from_partition(15, 16, 8);
}

ArrayConfig desk_scale()
{
    // 32 elements, subarrays of 8 with overlap 4 -> 7 RF chains
    return ArrayConfig::from_partition(7, 8, 4, 0.5, 1.0, 60.0, 1.0);
}

} // namespace

TEST_CASE("partition arithmetic ties element count to subarray layout")
{
    ArrayConfig cfg = paper_scale();
    CHECK(cfg.num_elements == 128);
    CHECK(cfg.num_subarrays == 15);

    ArrayConfig nosa = cfg.nosa_counterpart();
    CHECK(nosa.num_elements == 128);
    CHECK(nosa.num_subarrays == 8);
    CHECK(nosa.subarray_overlap == 0);

    CHECK_THROWS_AS(ArrayConfig::from_partition(4, 8, 8), std::invalid_argument);  // overlap == size
    CHECK_THROWS_AS(ArrayConfig::from_partition(4, 8, -1), std::invalid_argument);
    CHECK_THROWS_AS(ArrayConfig::from_partition(0, 8, 0), std::invalid_argument);

    ArrayConfig bad = cfg;
    bad.num_elements = 127;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("steering vector matches the closed-form phase progression")
{
    ArrayConfig cfg = ArrayConfig::from_partition(1, 4, 0);

    SUBCASE("broadside gives all ones")
    {
        CVec a = steering_vector(0.0, cfg);
        for (int m = 0; m < 4; ++m)
            CHECK(std::abs(a(m) - cxd(1, 0)) < 1e-15);
    }
    SUBCASE("endfire at two elements alternates sign")
    {
        ArrayConfig two = ArrayConfig::from_partition(1, 2, 0);
        CVec a = steering_vector(90.0, two);
        CHECK(std::abs(a(0) - cxd(1, 0)) < 1e-12);
        CHECK(std::abs(a(1) - cxd(-1, 0)) < 1e-12);
    }
    SUBCASE("30 degrees walks the quarter circle")
    {
        CVec a = steering_vector(30.0, cfg);
        CHECK(std::abs(a(0) - cxd(1, 0)) < 1e-12);
        CHECK(std::abs(a(1) - cxd(0, 1)) < 1e-12);
        CHECK(std::abs(a(2) - cxd(-1, 0)) < 1e-12);
        CHECK(std::abs(a(3) - cxd(0, -1)) < 1e-12);
    }
    SUBCASE("angles outside [-90, 90] are rejected")
    {
        CHECK_THROWS_AS(steering_vector(90.5, cfg), std::domain_error);
        CHECK_THROWS_AS(steering_vector(-120.0, cfg), std::domain_error);
    }
    SUBCASE("negated angle conjugates the vector")
    {
        ArrayConfig cfg8 = ArrayConfig::from_partition(1, 8, 0);
        for (double theta : {7.3, 41.0, 63.9})
        {
            CVec pos = steering_vector(theta, cfg8);
            CVec neg = steering_vector(-theta, cfg8);
            CHECK((neg - pos.conjugate()).cwiseAbs().maxCoeff() < 1e-14);
        }
    }
}

TEST_CASE("steering matrix stacks per-angle columns and rejects duplicates")
{
    ArrayConfig cfg = ArrayConfig::from_partition(1, 8, 0);

    SUBCASE("single column equals the steering vector")
    {
        SteeringMatrix sm = steering_matrix({17.0}, cfg);
        CHECK(sm.a.cols() == 1);
        CHECK((sm.a.col(0) - steering_vector(17.0, cfg)).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("duplicates are a rank-deficiency error")
    {
        CHECK_THROWS_AS(steering_matrix({0.0, 0.0}, cfg), std::domain_error);
        CHECK_THROWS_AS(steering_matrix({}, cfg), std::domain_error);
    }
    SUBCASE("entries recomputed independently")
    {
        SteeringMatrix sm = steering_matrix({10.0, 20.0}, cfg);
        std::vector<double> thetas = {10.0, 20.0};
        for (int q = 0; q < 2; ++q)
            for (int m = 0; m < 8; ++m)
            {
                const double phase = 2.0 * pi * 0.5 * m * std::sin(deg2rad(thetas[size_t(q)]));
                CHECK(std::abs(sm.a(m, q) - std::polar(1.0, phase)) < 1e-14);
            }
        CHECK(sm.a.row(0).cwiseAbs().minCoeff() == doctest::Approx(1.0));
    }
}

TEST_CASE("subarray rows follow the overlapped partition")
{
    ArrayConfig cfg = paper_scale();

    RowRange first = subarray_rows(1, cfg);
    CHECK(first.first == 0); // rows 1..16 one-based
    CHECK(first.count == 16);

    RowRange second = subarray_rows(2, cfg);
    CHECK(second.first == 8); // rows 9..24 one-based
    CHECK(second.count == 16);

    ArrayConfig nosa = ArrayConfig::from_partition(3, 4, 0);
    RowRange third = subarray_rows(3, nosa);
    CHECK(third.first == 8); // rows 9..12: disjoint blocks
    CHECK(third.count == 4);

    CHECK_THROWS_AS(subarray_rows(0, cfg), std::domain_error);
    CHECK_THROWS_AS(subarray_rows(16, cfg), std::domain_error);
}

TEST_CASE("beamformer columns live on their subarray support with unit magnitude")
{
    ArrayConfig cfg = paper_scale();
    BeamformerMatrix bf = build_beamformer(cfg, PhasePolicy::random_uniform, 42);
    CHECK(bf.w.rows() == 128);
    CHECK(bf.w.cols() == 15);

    const double mag = 1.0 / std::sqrt(16.0);
    for (int k = 1; k <= cfg.num_subarrays; ++k)
    {
        RowRange rows = subarray_rows(k, cfg);
        for (int m = 0; m < cfg.num_elements; ++m)
        {
            const bool inside = m >= rows.first && m < rows.first + rows.count;
            if (inside)
                CHECK(std::abs(std::abs(bf.w(m, k - 1)) - mag) < 1e-14);
            else
                CHECK(bf.w(m, k - 1) == cxd(0, 0));
        }
        CHECK(std::abs(bf.w.col(k - 1).norm() - 1.0) < 1e-12);
    }

    SUBCASE("adjacent columns share exactly the overlap rows")
    {
        for (int k = 1; k < cfg.num_subarrays; ++k)
        {
            int shared = 0;
            for (int m = 0; m < cfg.num_elements; ++m)
                if (bf.w(m, k - 1) != cxd(0, 0) && bf.w(m, k) != cxd(0, 0))
                    ++shared;
            CHECK(shared == 8);
        }
    }
    SUBCASE("all-zero phases give constant entries")
    {
        ArrayConfig small = ArrayConfig::from_partition(2, 4, 2);
        BeamformerMatrix zero = build_beamformer(small, PhasePolicy::all_zero, 0);
        for (int k = 0; k < small.num_subarrays; ++k)
        {
            RowRange rows = subarray_rows(k + 1, small);
            for (int m = rows.first; m < rows.first + rows.count; ++m)
                CHECK(std::abs(zero.w(m, k) - cxd(0.5, 0)) < 1e-15);
        }
    }
    SUBCASE("user phases must have the right shape")
    {
        RMat wrong = RMat::Zero(3, 3);
        CHECK_THROWS_AS(build_beamformer(cfg, PhasePolicy::user_supplied, 0, &wrong),
                        std::invalid_argument);
        RMat right = RMat::Zero(15, 16);
        BeamformerMatrix bf2 = build_beamformer(cfg, PhasePolicy::user_supplied, 0, &right);
        CHECK(std::abs(bf2.w.col(0).norm() - 1.0) < 1e-12);
    }
    SUBCASE("same seed reproduces the same matrix")
    {
        BeamformerMatrix again = build_beamformer(cfg, PhasePolicy::random_uniform, 42);
        CHECK((again.w - bf.w).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("gram matrix of the beamformer has unit diagonal and overlap coupling")
{
    for (int overlap : {0, 4})
    {
        ArrayConfig cfg = ArrayConfig::from_partition(4, 8, overlap);
        BeamformerMatrix bf = build_beamformer(cfg, PhasePolicy::random_uniform, 3);
        CMat gram = bf.w.adjoint() * bf.w;
        for (int k = 0; k < cfg.num_subarrays; ++k)
            CHECK(std::abs(gram(k, k) - cxd(1, 0)) < 1e-12);
        for (int k = 0; k + 1 < cfg.num_subarrays; ++k)
        {
            if (overlap > 0)
                CHECK(std::abs(gram(k, k + 1)) > 1e-6);
            else
                CHECK(std::abs(gram(k, k + 1)) < 1e-15);
        }
    }
}

TEST_CASE("virtual steering equals a naive triple-loop product")
{
    ArrayConfig cfg = desk_scale();
    BeamformerMatrix bf = build_beamformer(cfg, PhasePolicy::random_uniform, 7);

    SUBCASE("all-zero phases at broadside accumulate sqrt(subarray_size)")
    {
        BeamformerMatrix zero = build_beamformer(cfg, PhasePolicy::all_zero, 0);
        CVec v = virtual_steering(0.0, zero, cfg);
        CHECK(v.size() == 7);
        for (int k = 0; k < 7; ++k)
            CHECK(std::abs(v(k) - cxd(std::sqrt(8.0), 0)) < 1e-12);
    }
    SUBCASE("random beamformer matches elementwise accumulation")
    {
        for (double theta : {-33.0, 10.1, 58.0})
        {
            CVec a = steering_vector(theta, cfg);
            CVec fast = virtual_steering(theta, bf, cfg);
            for (int k = 0; k < cfg.num_subarrays; ++k)
            {
                cxd acc(0, 0);
                for (int m = 0; m < cfg.num_elements; ++m)
                    acc += std::conj(bf.w(m, k)) * a(m);
                CHECK(std::abs(fast(k) - acc) < 1e-12);
            }
        }
    }
}

TEST_CASE("grid helpers index the label grid both ways")
{
    ArrayConfig cfg = desk_scale();
    CHECK(cfg.grid_size() == 121);
    CHECK(cfg.grid_angle_deg(0) == -60.0);
    CHECK(cfg.grid_angle_deg(120) == 60.0);
    CHECK(cfg.nearest_grid_index(10.1) == 70);
    CHECK(cfg.nearest_grid_index(-60.4) == 0);
}
