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

#ifndef OSA_ARRAY_MODEL_HPP
#define OSA_ARRAY_MODEL_HPP

#include "osa/common.hpp"

#include <cstdint>
#include <vector>

namespace osa
{

// Geometry and partition of a hybrid ULA split into overlapping subarrays,
// one RF chain per subarray. Element count, subarray size, overlap and the
// number of subarrays are tied by
//   num_elements = num_subarrays * subarray_size
//                  - (num_subarrays - 1) * subarray_overlap.
// Angles at API boundaries are degrees; conversion to radians happens
// internally. Antennas and subarrays are 1-based in documentation and
// 0-based in code.
struct ArrayConfig
{
    int num_elements = 0;     // total antennas in the ULA
    int subarray_size = 0;    // antennas per subarray
    int subarray_overlap = 0; // antennas shared between adjacent subarrays
    int num_subarrays = 0;    // number of subarrays == RF chains
    double element_spacing = 0.5;
    double wavelength = 1.0;
    double region_half_width_deg = 90.0; // sources live in [-w, +w]
    double grid_step_deg = 1.0;          // label/search grid interval

    // Builds a config from the partition parameters; derives num_elements.
    static ArrayConfig from_partition(int num_subarrays, int subarray_size, int subarray_overlap,
                                      double element_spacing = 0.5, double wavelength = 1.0,
                                      double region_half_width_deg = 90.0,
                                      double grid_step_deg = 1.0);

    // Non-overlapped counterpart with the same total elements and subarray
    // size. Requires subarray_size to divide num_elements.
    ArrayConfig nosa_counterpart() const;

    void validate() const;

    // Number of grid points L = 2*theta0/dtheta + 1
    int grid_size() const;
    // Grid angle at index l in [0, L)
    double grid_angle_deg(int index) const;
    // Index of the grid point nearest to theta
    int nearest_grid_index(double theta_deg) const;
};

// Half-open 0-based row range [first, first + count) of one subarray;
// selecting these rows is equivalent to left-multiplying by the subarray's
// 0/1 selection matrix, which is never materialized.
struct RowRange
{
    int first = 0;
    int count = 0;
};

enum class PhasePolicy
{
    random_uniform, // i.i.d. U[0, 2*pi) per shifter, drawn from the seed
    all_zero,
    user_supplied,
};

const char *to_string(PhasePolicy p);

// Structured analog beamforming matrix. Column k is nonzero exactly on the
// rows of subarray k and every nonzero entry has magnitude
// 1/sqrt(subarray_size), so each column has unit norm.
struct BeamformerMatrix
{
    CMat w;       // num_elements x num_subarrays
    RMat phases;  // num_subarrays x subarray_size, radians
    uint64_t seed = 0;
    PhasePolicy policy = PhasePolicy::random_uniform;
};

struct SteeringMatrix
{
    CMat a; // num_elements x Q
    std::vector<double> thetas_deg;
};

// Plane-wave steering vector: element m = exp(j*(2*pi/lambda)*m*d*sin(theta)),
// element 0 = 1. theta must lie in [-90, 90] degrees.
CVec steering_vector(double theta_deg, const ArrayConfig &cfg);

// Columns are steering vectors of the given (distinct) angles.
SteeringMatrix steering_matrix(const std::vector<double> &thetas_deg, const ArrayConfig &cfg);

// Rows occupied by subarray k (1-based k in [1, num_subarrays]).
RowRange subarray_rows(int subarray_index, const ArrayConfig &cfg);

// Draws the analog beamformer. user_phases (num_subarrays x subarray_size)
// is required iff policy == user_supplied.
BeamformerMatrix build_beamformer(const ArrayConfig &cfg, PhasePolicy policy, uint64_t seed,
                                  const RMat *user_phases = nullptr);

// Virtual (post-combining) steering vector W^H a(theta), length num_subarrays.
CVec virtual_steering(double theta_deg, const BeamformerMatrix &bf, const ArrayConfig &cfg);

} // namespace osa

#endif
