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

#include "osa/signal_sim.hpp"
#include "osa/rng.hpp"

#include <cmath>
#include <limits>

namespace osa
{

SimParams SimParams::from_snr(double snr_db, int num_snapshots, std::vector<double> thetas_deg,
                              uint64_t seed, double noise_power)
{
    SimParams p;
    p.snr_db = snr_db;
    p.noise_power = noise_power;
    p.signal_power = noise_power * std::pow(10.0, snr_db / 10.0);
    p.num_snapshots = num_snapshots;
    p.thetas_deg = std::move(thetas_deg);
    p.seed = seed;
    p.validate();
    return p;
}

SimParams SimParams::noise_only(int num_snapshots, uint64_t seed, double noise_power)
{
    SimParams p;
    p.snr_db = -std::numeric_limits<double>::infinity();
    p.noise_power = noise_power;
    p.signal_power = 0.0;
    p.num_snapshots = num_snapshots;
    p.seed = seed;
    p.validate();
    return p;
}

void SimParams::validate() const
{
    if (num_snapshots < 1)
        throw std::invalid_argument("num_snapshots must be >= 1");
    if (!(noise_power > 0.0))
        throw std::invalid_argument("noise_power must be positive");
    if (signal_power < 0.0)
        throw std::invalid_argument("signal_power must be nonnegative");
    if (signal_power > 0.0)
    {
        double implied = 10.0 * std::log10(signal_power / noise_power);
        if (std::abs(implied - snr_db) > 1e-9)
            throw std::invalid_argument("snr_db inconsistent with signal_power/noise_power");
        if (thetas_deg.empty())
            throw std::invalid_argument("signal present but no source angles given");
    }
}

SnapshotBatch simulate_snapshots(const ArrayConfig &cfg, const BeamformerMatrix &bf,
                                 const SimParams &params)
{
    params.validate();
    const int num_sources = int(params.thetas_deg.size());
    if (!params.is_noise_only() && num_sources >= cfg.num_subarrays)
        throw std::domain_error("identifiability: " + std::to_string(num_sources) +
                                " sources with only " + std::to_string(cfg.num_subarrays) +
                                " RF chains");
    for (double theta : params.thetas_deg)
        if (std::abs(theta) > cfg.region_half_width_deg)
            throw std::domain_error("source angle " + std::to_string(theta) +
                                    " outside the configured region of +/-" +
                                    std::to_string(cfg.region_half_width_deg) + " deg");

    const CMat wh = bf.w.adjoint(); // K x M
    CMat combined_steering;         // K x Q
    if (num_sources > 0)
        combined_steering = wh * steering_matrix(params.thetas_deg, cfg).a;

    SnapshotBatch batch;
    batch.params = params;
    batch.w_seed = bf.seed;
    batch.y.resize(cfg.num_subarrays, params.num_snapshots);

    Rng rng(params.seed);
    CVec sources(num_sources);
    CVec noise(cfg.num_elements);
    for (int n = 0; n < params.num_snapshots; ++n)
    {
        for (int q = 0; q < num_sources; ++q)
            sources(q) = rng.complex_normal(params.signal_power);
        for (int m = 0; m < cfg.num_elements; ++m)
            noise(m) = rng.complex_normal(params.noise_power);
        if (num_sources > 0 && !params.is_noise_only())
            batch.y.col(n) = combined_steering * sources + wh * noise;
        else
            batch.y.col(n) = wh * noise;
    }
    return batch;
}

CovarianceEstimate exact_covariance(const ArrayConfig &cfg, const BeamformerMatrix &bf,
                                    const std::vector<double> &thetas_deg, double signal_power,
                                    double noise_power)
{
    if (!(noise_power > 0.0))
        throw std::invalid_argument("noise_power must be positive");
    if (signal_power < 0.0)
        throw std::invalid_argument("signal_power must be nonnegative");

    CMat c = noise_power * (bf.w.adjoint() * bf.w);
    if (!thetas_deg.empty() && signal_power > 0.0)
    {
        CMat virt = bf.w.adjoint() * steering_matrix(thetas_deg, cfg).a; // K x Q
        c += signal_power * (virt * virt.adjoint());
    }
    c = 0.5 * (c + c.adjoint().eval()); // scrub roundoff asymmetry

    CovarianceEstimate est;
    est.c = std::move(c);
    est.kind = CovKind::exact;
    est.num_snapshots = 0;
    est.meta.signal_power = signal_power;
    est.meta.noise_power = noise_power;
    est.meta.snr_db = signal_power > 0.0 ? 10.0 * std::log10(signal_power / noise_power)
                                         : -std::numeric_limits<double>::infinity();
    est.meta.thetas_deg = thetas_deg;
    est.meta.seed = bf.seed;
    return est;
}

CovarianceEstimate sample_covariance(const SnapshotBatch &batch)
{
    const int n = int(batch.y.cols());
    if (n < 1)
        throw std::invalid_argument("empty snapshot batch");
    CMat c = (batch.y * batch.y.adjoint()) / double(n);
    c = 0.5 * (c + c.adjoint().eval());

    CovarianceEstimate est;
    est.c = std::move(c);
    est.kind = CovKind::sample;
    est.num_snapshots = n;
    est.meta = batch.params;
    return est;
}

} // namespace osa
