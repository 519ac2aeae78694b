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

#ifndef OSA_BENCH_HPP
#define OSA_BENCH_HPP

#include "osa/cdae_dnn.hpp"
#include "osa/crlb.hpp"
#include "osa/music.hpp"

#include <map>
#include <optional>
#include <string>

namespace osa
{

enum class SweepKind
{
    snr_db,
    snapshots,
};

enum class EstimatorKind
{
    cdae_dnn,
    music,          // plain, no whitening
    music_whitened, // noise whitened by (W^H W)^(-1/2)
};

enum class ArchKind
{
    osa,
    nosa,
};

const char *to_string(SweepKind k);
const char *to_string(EstimatorKind k);
const char *to_string(ArchKind k);
EstimatorKind estimator_from_string(const std::string &s);
ArchKind arch_from_string(const std::string &s);

// One Monte-Carlo experiment description. OSA/NOSA comparisons reuse the
// same element count and subarray size; only the overlap (and hence the
// number of RF chains) changes.
struct Scenario
{
    ArrayConfig cfg; // the OSA base config
    std::vector<EstimatorKind> estimators = {EstimatorKind::music_whitened};
    std::vector<ArchKind> architectures = {ArchKind::osa};
    std::vector<double> sweep = {-20, -15, -10, -5, 0, 5, 10};
    SweepKind sweep_kind = SweepKind::snr_db;
    int trials = 200;
    std::vector<double> truth_thetas_deg = {10.1};
    uint64_t master_seed = 1;
    bool fixed_w = true; // false: redraw the beamformer every trial
    uint64_t w_seed = 1;
    double fixed_snr_db = -13.0; // used while sweeping snapshots
    int fixed_snapshots = 100;   // used while sweeping snr
    bool with_crlb = false;
    std::string precision = "f64"; // recorded in result files

    void validate() const;
};

struct ResultRow
{
    double sweep_value = 0.0;
    std::string estimator;
    std::string architecture;
    double rmse_deg = 0.0;
    int trials = 0;
    int failures = 0;
    std::optional<double> crlb_deg; // sqrt(mean per-source CRLB), same W
    uint64_t seed = 0;

    bool operator==(const ResultRow &other) const;
};

struct ResultTable
{
    std::vector<ResultRow> rows;
    std::string build_id;
    uint64_t config_hash = 0;
    uint64_t master_seed = 0;
    std::string w_policy;  // "fixed" | "redrawn"
    std::string precision; // "f32" | "f64"
    std::string sweep_name;

    bool operator==(const ResultTable &other) const;
};

// Per-architecture trained estimators; required iff the scenario lists
// cdae_dnn.
using NnEstimators = std::map<ArchKind, CdaeDnnEstimator>;

// Runs the Monte-Carlo sweep. For every (architecture, sweep point, trial)
// one snapshot batch is simulated and shared by all estimators. Per-trial
// seeds derive from the master seed by counter, so any worker count gives
// identical output. Estimator exceptions count as failures and are excluded
// from the RMSE.
ResultTable run_sweep(const Scenario &scenario, const NnEstimators *nn = nullptr,
                      uint64_t config_hash = 0);

// Named wrappers for the three benchmark families
ResultTable run_rmse_vs_snr(const Scenario &scenario, const NnEstimators *nn = nullptr,
                            uint64_t config_hash = 0);
ResultTable run_rmse_vs_snapshots(const Scenario &scenario, const NnEstimators *nn = nullptr,
                                  uint64_t config_hash = 0);
ResultTable run_two_source(const Scenario &scenario, const NnEstimators *nn = nullptr,
                           uint64_t config_hash = 0);

// CSV with '#'-prefixed metadata lines, a header row, LF endings, '.'
// decimals, %.17g doubles (so values round-trip exactly).
void emit_csv(const ResultTable &table, const std::string &path);
std::string csv_string(const ResultTable &table);
ResultTable parse_csv_string(const std::string &text);
ResultTable parse_csv(const std::string &path);

// Build identifier embedded in result files (set from the build system).
std::string build_id();

} // namespace osa

#endif
