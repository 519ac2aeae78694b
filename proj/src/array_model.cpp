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

#include "osa/array_model.hpp"
#include "osa/rng.hpp"

#include <cmath>
#include <set>

namespace osa
{

ArrayConfig ArrayConfig::from_partition(int num_subarrays, int subarray_size, int subarray_overlap,
                                        double element_spacing, double wavelength,
                                        double region_half_width_deg, double grid_step_deg)
{
    ArrayConfig cfg;
    cfg.num_subarrays = num_subarrays;
    cfg.subarray_size = subarray_size;
    cfg.subarray_overlap = subarray_overlap;
    cfg.num_elements = num_subarrays * subarray_size - (num_subarrays - 1) * subarray_overlap;
    cfg.element_spacing = element_spacing;
    cfg.wavelength = wavelength;
    cfg.region_half_width_deg = region_half_width_deg;
    cfg.grid_step_deg = grid_step_deg;
    cfg.validate();
    return cfg;
}

ArrayConfig ArrayConfig::nosa_counterpart() const
{
    validate();
    if (num_elements % subarray_size != 0)
        throw std::invalid_argument("nosa_counterpart: subarray size " +
                                    std::to_string(subarray_size) + " does not divide " +
                                    std::to_string(num_elements) + " elements");
    ArrayConfig cfg = *this;
    cfg.subarray_overlap = 0;
    cfg.num_subarrays = num_elements / subarray_size;
    cfg.validate();
    return cfg;
}

void ArrayConfig::validate() const
{
    if (subarray_size < 1)
        throw std::invalid_argument("subarray_size must be >= 1");
    if (num_subarrays < 1)
        throw std::invalid_argument("num_subarrays must be >= 1");
    if (subarray_overlap < 0 || subarray_overlap >= subarray_size)
        throw std::invalid_argument("subarray_overlap must satisfy 0 <= overlap < subarray_size");
    int expected = num_subarrays * subarray_size - (num_subarrays - 1) * subarray_overlap;
    if (num_elements != expected)
        throw std::invalid_argument("inconsistent partition: " + std::to_string(num_subarrays) +
                                    " subarrays of " + std::to_string(subarray_size) +
                                    " elements with overlap " + std::to_string(subarray_overlap) +
                                    " give " + std::to_string(expected) + " elements, not " +
                                    std::to_string(num_elements));
    if (!(element_spacing > 0.0) || !(wavelength > 0.0))
        throw std::invalid_argument("element_spacing and wavelength must be positive");
    if (!(region_half_width_deg > 0.0) || region_half_width_deg > 90.0)
        throw std::invalid_argument("region_half_width_deg must lie in (0, 90]");
    if (!(grid_step_deg > 0.0))
        throw std::invalid_argument("grid_step_deg must be positive");
    double l = 2.0 * region_half_width_deg / grid_step_deg;
    if (std::abs(l - std::round(l)) > 1e-9)
        throw std::invalid_argument("grid_step_deg must divide the angular region evenly");
}

int ArrayConfig::grid_size() const
{
    return int(std::lround(2.0 * region_half_width_deg / grid_step_deg)) + 1;
}

double ArrayConfig::grid_angle_deg(int index) const
{
    return -region_half_width_deg + index * grid_step_deg;
}

int ArrayConfig::nearest_grid_index(double theta_deg) const
{
    int idx = int(std::lround((theta_deg + region_half_width_deg) / grid_step_deg));
    if (idx < 0)
        idx = 0;
    if (idx >= grid_size())
        idx = grid_size() - 1;
    return idx;
}

const char *to_string(PhasePolicy p)
{
    switch (p)
    {
    case PhasePolicy::random_uniform:
        return "random_uniform";
    case PhasePolicy::all_zero:
        return "all_zero";
    case PhasePolicy::user_supplied:
        return "user_supplied";
    }
    return "unknown";
}

CVec steering_vector(double theta_deg, const ArrayConfig &cfg)
{
    if (theta_deg < -90.0 || theta_deg > 90.0)
        throw std::domain_error("steering angle " + std::to_string(theta_deg) +
                                " deg outside [-90, 90]");
    const double phase_step =
        2.0 * pi / cfg.wavelength * cfg.element_spacing * std::sin(deg2rad(theta_deg));
    CVec a(cfg.num_elements);
    for (int m = 0; m < cfg.num_elements; ++m)
        a(m) = std::polar(1.0, phase_step * m);
    return a;
}

SteeringMatrix steering_matrix(const std::vector<double> &thetas_deg, const ArrayConfig &cfg)
{
    if (thetas_deg.empty())
        throw std::domain_error("steering_matrix needs at least one angle");
    std::set<double> unique(thetas_deg.begin(), thetas_deg.end());
    if (unique.size() != thetas_deg.size())
        throw std::domain_error("duplicate source angles make the steering matrix rank deficient");

    SteeringMatrix sm;
    sm.thetas_deg = thetas_deg;
    sm.a.resize(cfg.num_elements, Eigen::Index(thetas_deg.size()));
    for (size_t q = 0; q < thetas_deg.size(); ++q)
        sm.a.col(Eigen::Index(q)) = steering_vector(thetas_deg[q], cfg);
    return sm;
}

RowRange subarray_rows(int subarray_index, const ArrayConfig &cfg)
{
    if (subarray_index < 1 || subarray_index > cfg.num_subarrays)
        throw std::domain_error("subarray index " + std::to_string(subarray_index) +
                                " outside [1, " + std::to_string(cfg.num_subarrays) + "]");
    int first = (subarray_index - 1) * (cfg.subarray_size - cfg.subarray_overlap);
    return {first, cfg.subarray_size};
}

BeamformerMatrix build_beamformer(const ArrayConfig &cfg, PhasePolicy policy, uint64_t seed,
                                  const RMat *user_phases)
{
    cfg.validate();
    BeamformerMatrix bf;
    bf.seed = seed;
    bf.policy = policy;
    bf.phases.setZero(cfg.num_subarrays, cfg.subarray_size);

    switch (policy)
    {
    case PhasePolicy::all_zero:
        break;
    case PhasePolicy::random_uniform:
    {
        Rng rng(seed);
        for (int k = 0; k < cfg.num_subarrays; ++k)
            for (int m = 0; m < cfg.subarray_size; ++m)
                bf.phases(k, m) = rng.uniform(0.0, 2.0 * pi);
        break;
    }
    case PhasePolicy::user_supplied:
        if (user_phases == nullptr || user_phases->rows() != cfg.num_subarrays ||
            user_phases->cols() != cfg.subarray_size)
            throw std::invalid_argument("user-supplied phases must be num_subarrays x subarray_size");
        bf.phases = *user_phases;
        break;
    }

    const double gain = 1.0 / std::sqrt(double(cfg.subarray_size));
    bf.w.setZero(cfg.num_elements, cfg.num_subarrays);
    for (int k = 1; k <= cfg.num_subarrays; ++k)
    {
        RowRange rows = subarray_rows(k, cfg);
        for (int m = 0; m < rows.count; ++m)
            bf.w(rows.first + m, k - 1) = std::polar(gain, bf.phases(k - 1, m));
    }
    return bf;
}

CVec virtual_steering(double theta_deg, const BeamformerMatrix &bf, const ArrayConfig &cfg)
{
    if (bf.w.rows() != cfg.num_elements || bf.w.cols() != cfg.num_subarrays)
        throw std::invalid_argument("beamformer shape does not match the array config");
    return bf.w.adjoint() * steering_vector(theta_deg, cfg);
}

} // namespace osa
