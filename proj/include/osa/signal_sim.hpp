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

#ifndef OSA_SIGNAL_SIM_HPP
#define OSA_SIGNAL_SIM_HPP

#include "osa/array_model.hpp"

#include <cstdint>
#include <vector>

namespace osa
{

// Snapshot-generation parameters. SNR convention: per-source signal power
// over noise power, noise_power fixed to 1 by default and
// signal_power = 10^(snr_db/10). Sources are uncorrelated and equal-power
// (C_s = signal_power * I).
struct SimParams
{
    double snr_db = 0.0;
    double signal_power = 1.0; // sigma_s^2 per source
    double noise_power = 1.0;  // sigma_v^2
    int num_snapshots = 1;     // N
    std::vector<double> thetas_deg;
    uint64_t seed = 0;

    static SimParams from_snr(double snr_db, int num_snapshots, std::vector<double> thetas_deg,
                              uint64_t seed, double noise_power = 1.0);
    // signal_power = 0; snr_db reported as -inf
    static SimParams noise_only(int num_snapshots, uint64_t seed, double noise_power = 1.0);

    void validate() const;
    bool is_noise_only() const { return signal_power == 0.0; }
};

// Received baseband samples y(n) = W^H A(theta) s(n) + W^H v(n), one column
// per snapshot.
struct SnapshotBatch
{
    CMat y; // num_subarrays x num_snapshots
    SimParams params;
    uint64_t w_seed = 0;
};

enum class CovKind
{
    exact,
    sample,
};

struct CovarianceEstimate
{
    CMat c; // num_subarrays x num_subarrays, Hermitian
    CovKind kind = CovKind::exact;
    int num_snapshots = 0; // used for the sample kind
    SimParams meta;
};

// Draw order per snapshot: Q source symbols, then all element noise values;
// deterministic given params.seed.
SnapshotBatch simulate_snapshots(const ArrayConfig &cfg, const BeamformerMatrix &bf,
                                 const SimParams &params);

// Exact covariance W^H (A C_s A^H + sigma_v^2 I) W with C_s = signal_power*I.
CovarianceEstimate exact_covariance(const ArrayConfig &cfg, const BeamformerMatrix &bf,
                                    const std::vector<double> &thetas_deg, double signal_power,
                                    double noise_power);

// Sample covariance (1/N) sum_n y(n) y(n)^H.
CovarianceEstimate sample_covariance(const SnapshotBatch &batch);

} // namespace osa

#endif
