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

#ifndef OSA_DATASET_HPP
#define OSA_DATASET_HPP

#include "osa/signal_sim.hpp"

#include <optional>
#include <string>
#include <vector>

namespace osa
{

// Two real channels of a normalized covariance: channel 0 = Re{C}/norm,
// channel 1 = Im{C}/norm. Stored channel-major (Re plane then Im plane),
// row-major within each K x K plane. The normalizer is the average diagonal
// power trace(C)/K recorded at construction, which keeps the feature scale
// SNR-stable and invertible.
struct FeatureTensor
{
    int k = 0;
    double norm_factor = 1.0;
    std::vector<double> data; // 2 * k * k

    double re(int i, int j) const { return data[size_t(i * k + j)]; }
    double im(int i, int j) const { return data[size_t(k * k + i * k + j)]; }
    // Undoes the normalization
    CMat denormalize() const;
};

struct AngleGrid
{
    double half_width_deg = 90.0;
    double step_deg = 1.0;

    int size() const;
    double angle_deg(int index) const { return -half_width_deg + index * step_deg; }
    static AngleGrid of(const ArrayConfig &cfg)
    {
        return {cfg.region_half_width_deg, cfg.grid_step_deg};
    }
};

// Multi-hot grid labels: bit index (theta + half_width)/step.
struct LabelVector
{
    std::vector<uint8_t> z; // 0/1 per grid angle
    AngleGrid grid;
    bool snapped = false; // an off-grid angle was mapped to its nearest point

    int ones() const;
    std::vector<int> active_indices() const;
};

struct Sample
{
    FeatureTensor noisy; // from the sample covariance
    FeatureTensor clean; // from the exact covariance, same norm_factor
    LabelVector label;
    SimParams meta;
    uint64_t w_seed = 0;

    bool operator==(const Sample &other) const;
};

// Generation recipe; either a discrete SNR list (every Q=1 angle is paired
// with every listed SNR) or a continuous range sampled per realization.
struct DatasetSpec
{
    AngleGrid grid;
    std::vector<double> snr_list_db;                  // used when non-empty
    std::pair<double, double> snr_range_db{-20, 10};  // used when snr_list_db empty
    int num_snapshots = 100;
    int reps_per_angle = 1;      // Q=1 coverage passes over the whole grid
    int num_pairs = 0;           // extra Q=2 samples with random on-grid pairs
    double pair_min_sep_deg = 2; // minimum pair separation (>= 2 grid steps typical)
    uint64_t master_seed = 1;
    bool redraw_beamformer = false; // false: one W for the whole dataset

    std::string describe() const;
};

struct Dataset
{
    ArrayConfig cfg;
    DatasetSpec spec;
    uint64_t w_seed = 0;
    std::vector<Sample> samples;

    bool operator==(const Dataset &other) const;
};

// Splits a Hermitian covariance into normalized Re/Im channels. When
// norm_factor is absent it is set to trace(C)/K.
FeatureTensor to_feature_tensor(const CovarianceEstimate &cov,
                                std::optional<double> norm_factor = std::nullopt);

// Multi-hot label for the given angles. strict=true (training) rejects
// off-grid angles; strict=false snaps to the nearest grid point and flags it.
LabelVector make_label(const std::vector<double> &thetas_deg, const AngleGrid &grid,
                       bool strict = true);

// Deterministic dataset generation; sample i derives its own seed from the
// master seed so generation parallelizes without changing the result.
Dataset generate_dataset(const DatasetSpec &spec, const ArrayConfig &cfg,
                         const BeamformerMatrix &bf);

// Binary container, little-endian. Header: magic "OSAD", u16 version, u16 K,
// u32 L, u64 sample count, u8 payload flag (1 = tensors stored as f32,
// 0 = f64). Per-sample records follow, then a CRC-32 over all preceding
// bytes. A human-readable manifest is written next to the file.
// The f64 payload (default) round-trips bit-exactly; f32 halves the size at
// ~1e-7 relative feature error.
void save_dataset(const Dataset &ds, const std::string &path, bool f32_payload = false);
Dataset load_dataset(const std::string &path);

inline constexpr uint16_t dataset_format_version = 1;

} // namespace osa

#endif
