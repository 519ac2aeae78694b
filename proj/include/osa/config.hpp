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

#ifndef OSA_CONFIG_HPP
#define OSA_CONFIG_HPP

#include "osa/bench.hpp"
#include "osa/cdae_dnn.hpp"

#include <map>
#include <string>

namespace osa
{

// Raw key/value view of the structured text config. Grammar: [section]
// headers, key = value lines, '#' comments, comma-separated lists. Unknown
// sections, unknown keys and duplicate keys are rejected.
struct ConfigFile
{
    std::map<std::string, std::map<std::string, std::string>> sections;
    std::string raw_text;
    uint64_t hash = 0; // FNV-1a of the raw text

    bool has(const std::string &section, const std::string &key) const;
    std::string get(const std::string &section, const std::string &key) const;
};

ConfigFile parse_config_text(const std::string &text);
ConfigFile load_config_file(const std::string &path);

// Everything the CLI needs, materialized with defaults; flags override fields
// after loading.
struct AppConfig
{
    ArrayConfig array = ArrayConfig::from_partition(7, 8, 4, 0.5, 1.0, 60.0, 1.0);
    PhasePolicy w_policy = PhasePolicy::random_uniform;
    uint64_t w_seed = 1;

    // [sim] single-scenario settings
    double sim_snr_db = 0.0;
    int sim_snapshots = 100;
    std::vector<double> sim_thetas_deg = {10.1};
    uint64_t sim_seed = 1;
    double noise_power = 1.0;

    DatasetSpec dataset;
    bool dataset_f32 = false;

    CdaeArch cdae;
    FcArch fc;
    TrainHyper train = TrainHyper::toy_scale();
    std::string precision = "f64"; // f32 | f64

    Scenario bench;
    std::vector<double> bench_snapshot_list = {10, 100, 500, 1000};

    ConfigFile file;
};

AppConfig make_app_config(const ConfigFile &file);
AppConfig load_app_config(const std::string &path);

} // namespace osa

#endif
