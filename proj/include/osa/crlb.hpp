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

#ifndef OSA_CRLB_HPP
#define OSA_CRLB_HPP

#include "osa/array_model.hpp"

#include <vector>

namespace osa
{

// Fisher information for the source angles of the hybrid array, treating
// source and noise powers as known. Computed in radians; per-snapshot (the
// CRLB divides by the snapshot count).
struct FisherInformation
{
    RMat f; // Q x Q, symmetric PSD, units rad^-2
    ArrayConfig cfg;
    std::vector<double> thetas_deg;
    double signal_power = 0.0;
    double noise_power = 0.0;
    uint64_t w_seed = 0;
};

struct CrlbResult
{
    RMat matrix_deg2;         // (1/N) F^-1 converted to degrees^2
    RVec per_source_deg2;     // diagonal
    int num_snapshots = 0;
    double condition = 0.0;   // condition number of F
};

// Derivative of the steering vector with respect to the angle in radians:
// element m = j*(2*pi/lambda)*m*d*cos(theta) * a_m(theta). Vanishes at
// theta = +/-90 deg (endfire); the Fisher matrix becomes singular there and
// crlb() reports the configuration as unidentifiable.
CVec steering_derivative(double theta_deg, const ArrayConfig &cfg);

// dC/dtheta_q = W^H D_q C_s A_v^H + A_v C_s D_q^H W with A_v = W^H A;
// source_index is 1-based.
CMat partial_covariance(int source_index, const ArrayConfig &cfg, const BeamformerMatrix &bf,
                        const std::vector<double> &thetas_deg, double signal_power);

// F[p][q] = tr(C^-1 dC/dtheta_p C^-1 dC/dtheta_q), also evaluated through the
// assembled Hadamard-product form; the two routes must agree to 1e-8 relative
// or the function throws.
FisherInformation fisher_matrix(const ArrayConfig &cfg, const BeamformerMatrix &bf,
                                const std::vector<double> &thetas_deg, double signal_power,
                                double noise_power);

// CRLB = (1/N) F^-1. Throws when cond(F) exceeds 1e12, naming the offending
// configuration.
CrlbResult crlb(const FisherInformation &fim, int num_snapshots);

} // namespace osa

#endif
