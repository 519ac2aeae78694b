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

#include "osa/config.hpp"
#include "osa/binio.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

namespace osa
{

namespace
{

const std::map<std::string, std::set<std::string>> &schema()
{
    static const std::map<std::string, std::set<std::string>> s = {
        {"array",
         {"subarrays", "subarray_size", "subarray_overlap", "elements", "element_spacing",
          "wavelength", "region_half_width_deg", "grid_step_deg", "w_policy", "w_seed"}},
        {"sim", {"snr_db", "snapshots", "thetas", "seed", "noise_power"}},
        {"dataset",
         {"snr_list_db", "snr_range_db", "snapshots", "reps_per_angle", "pairs",
          "pair_min_sep_deg", "seed", "redraw_w", "payload"}},
        {"cdae", {"channels", "kernel"}},
        {"fc", {"widths", "dropout"}},
        {"train", {"batch", "epochs", "lr", "seed", "validation_fraction", "precision"}},
        {"bench",
         {"trials", "snr_list_db", "snapshot_list", "truth_thetas", "estimators", "archs", "seed",
          "fixed_w", "with_crlb", "fixed_snr_db", "fixed_snapshots"}},
    };
    return s;
}

std::string trim(const std::string &s)
{
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos)
        return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double to_double(const std::string &section, const std::string &key, const std::string &v)
{
    try
    {
        size_t used = 0;
        double d = std::stod(v, &used);
        if (used != v.size())
            throw std::invalid_argument("");
        return d;
    }
    catch (...)
    {
        throw std::invalid_argument("[" + section + "] " + key + ": '" + v + "' is not a number");
    }
}

int to_int(const std::string &section, const std::string &key, const std::string &v)
{
    double d = to_double(section, key, v);
    if (d != std::floor(d))
        throw std::invalid_argument("[" + section + "] " + key + ": '" + v + "' is not an integer");
    return int(d);
}

uint64_t to_u64(const std::string &section, const std::string &key, const std::string &v)
{
    try
    {
        size_t used = 0;
        uint64_t u = std::stoull(v, &used);
        if (used != v.size())
            throw std::invalid_argument("");
        return u;
    }
    catch (...)
    {
        throw std::invalid_argument("[" + section + "] " + key + ": '" + v +
                                    "' is not an unsigned integer");
    }
}

bool to_bool(const std::string &section, const std::string &key, const std::string &v)
{
    if (v == "true" || v == "1")
        return true;
    if (v == "false" || v == "0")
        return false;
    throw std::invalid_argument("[" + section + "] " + key + ": '" + v + "' is not a boolean");
}

std::vector<std::string> split_list(const std::string &v)
{
    std::vector<std::string> out;
    std::string cur;
    for (char c : v)
    {
        if (c == ',')
        {
            out.push_back(trim(cur));
            cur.clear();
        }
        else
            cur += c;
    }
    cur = trim(cur);
    if (!cur.empty() || !out.empty())
        out.push_back(cur);
    return out;
}

std::vector<double> to_double_list(const std::string &section, const std::string &key,
                                   const std::string &v)
{
    std::vector<double> out;
    for (const std::string &item : split_list(v))
        out.push_back(to_double(section, key, item));
    return out;
}

std::vector<int> to_int_list(const std::string &section, const std::string &key,
                             const std::string &v)
{
    std::vector<int> out;
    for (const std::string &item : split_list(v))
        out.push_back(to_int(section, key, item));
    return out;
}

} // namespace

bool ConfigFile::has(const std::string &section, const std::string &key) const
{
    auto s = sections.find(section);
    return s != sections.end() && s->second.count(key) > 0;
}

std::string ConfigFile::get(const std::string &section, const std::string &key) const
{
    return sections.at(section).at(key);
}

ConfigFile parse_config_text(const std::string &text)
{
    ConfigFile cfg;
    cfg.raw_text = text;
    cfg.hash = fnv1a64(text);

    std::istringstream is(text);
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(is, line))
    {
        ++line_no;
        auto hash_pos = line.find('#');
        if (hash_pos != std::string::npos)
            line = line.substr(0, hash_pos);
        line = trim(line);
        if (line.empty())
            continue;
        if (line.front() == '[')
        {
            if (line.back() != ']')
                throw std::invalid_argument("config line " + std::to_string(line_no) +
                                            ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (schema().count(section) == 0)
                throw std::invalid_argument("config line " + std::to_string(line_no) +
                                            ": unknown section [" + section + "]");
            cfg.sections[section]; // materialize even when empty
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": expected key = value");
        if (section.empty())
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": key outside any section");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (schema().at(section).count(key) == 0)
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": unknown key '" + key + "' in section [" + section + "]");
        if (cfg.sections[section].count(key))
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": duplicate key '" + key + "'");
        cfg.sections[section][key] = value;
    }
    return cfg;
}

ConfigFile load_config_file(const std::string &path)
{
    return parse_config_text(read_text_file(path));
}

AppConfig make_app_config(const ConfigFile &file)
{
    AppConfig app;
    app.file = file;

    auto get = [&](const std::string &s, const std::string &k) { return file.get(s, k); };
    auto has = [&](const std::string &s, const std::string &k) { return file.has(s, k); };

    if (file.sections.count("array"))
    {
        int subarrays = has("array", "subarrays") ? to_int("array", "subarrays", get("array", "subarrays"))
                                                  : app.array.num_subarrays;
        int size = has("array", "subarray_size")
                       ? to_int("array", "subarray_size", get("array", "subarray_size"))
                       : app.array.subarray_size;
        int overlap = has("array", "subarray_overlap")
                          ? to_int("array", "subarray_overlap", get("array", "subarray_overlap"))
                          : app.array.subarray_overlap;
        double spacing = has("array", "element_spacing")
                             ? to_double("array", "element_spacing", get("array", "element_spacing"))
                             : app.array.element_spacing;
        double wavelength = has("array", "wavelength")
                                ? to_double("array", "wavelength", get("array", "wavelength"))
                                : app.array.wavelength;
        double region = has("array", "region_half_width_deg")
                            ? to_double("array", "region_half_width_deg",
                                        get("array", "region_half_width_deg"))
                            : app.array.region_half_width_deg;
        double step = has("array", "grid_step_deg")
                          ? to_double("array", "grid_step_deg", get("array", "grid_step_deg"))
                          : app.array.grid_step_deg;
        app.array =
            ArrayConfig::from_partition(subarrays, size, overlap, spacing, wavelength, region, step);
        if (has("array", "elements"))
        {
            int elements = to_int("array", "elements", get("array", "elements"));
            if (elements != app.array.num_elements)
                throw std::invalid_argument("[array] elements = " + std::to_string(elements) +
                                            " contradicts the partition (expected " +
                                            std::to_string(app.array.num_elements) + ")");
        }
        if (has("array", "w_policy"))
        {
            const std::string p = get("array", "w_policy");
            if (p == "random_uniform")
                app.w_policy = PhasePolicy::random_uniform;
            else if (p == "all_zero")
                app.w_policy = PhasePolicy::all_zero;
            else
                throw std::invalid_argument("[array] w_policy must be random_uniform or all_zero");
        }
        if (has("array", "w_seed"))
            app.w_seed = to_u64("array", "w_seed", get("array", "w_seed"));
    }

    if (file.sections.count("sim"))
    {
        if (has("sim", "snr_db"))
            app.sim_snr_db = to_double("sim", "snr_db", get("sim", "snr_db"));
        if (has("sim", "snapshots"))
            app.sim_snapshots = to_int("sim", "snapshots", get("sim", "snapshots"));
        if (has("sim", "thetas"))
            app.sim_thetas_deg = to_double_list("sim", "thetas", get("sim", "thetas"));
        if (has("sim", "seed"))
            app.sim_seed = to_u64("sim", "seed", get("sim", "seed"));
        if (has("sim", "noise_power"))
            app.noise_power = to_double("sim", "noise_power", get("sim", "noise_power"));
    }

    app.dataset.grid = AngleGrid::of(app.array);
    if (file.sections.count("dataset"))
    {
        if (has("dataset", "snr_list_db"))
            app.dataset.snr_list_db =
                to_double_list("dataset", "snr_list_db", get("dataset", "snr_list_db"));
        if (has("dataset", "snr_range_db"))
        {
            auto range = to_double_list("dataset", "snr_range_db", get("dataset", "snr_range_db"));
            if (range.size() != 2 || range[0] > range[1])
                throw std::invalid_argument("[dataset] snr_range_db must be 'low, high'");
            app.dataset.snr_range_db = {range[0], range[1]};
        }
        if (has("dataset", "snapshots"))
            app.dataset.num_snapshots = to_int("dataset", "snapshots", get("dataset", "snapshots"));
        if (has("dataset", "reps_per_angle"))
            app.dataset.reps_per_angle =
                to_int("dataset", "reps_per_angle", get("dataset", "reps_per_angle"));
        if (has("dataset", "pairs"))
            app.dataset.num_pairs = to_int("dataset", "pairs", get("dataset", "pairs"));
        if (has("dataset", "pair_min_sep_deg"))
            app.dataset.pair_min_sep_deg =
                to_double("dataset", "pair_min_sep_deg", get("dataset", "pair_min_sep_deg"));
        if (has("dataset", "seed"))
            app.dataset.master_seed = to_u64("dataset", "seed", get("dataset", "seed"));
        if (has("dataset", "redraw_w"))
            app.dataset.redraw_beamformer = to_bool("dataset", "redraw_w", get("dataset", "redraw_w"));
        if (has("dataset", "payload"))
        {
            const std::string p = get("dataset", "payload");
            if (p == "f32")
                app.dataset_f32 = true;
            else if (p == "f64")
                app.dataset_f32 = false;
            else
                throw std::invalid_argument("[dataset] payload must be f32 or f64");
        }
    }

    if (file.sections.count("cdae"))
    {
        if (has("cdae", "channels"))
            app.cdae.channels = to_int_list("cdae", "channels", get("cdae", "channels"));
        if (has("cdae", "kernel"))
            app.cdae.kernel = to_int("cdae", "kernel", get("cdae", "kernel"));
    }

    if (file.sections.count("fc"))
    {
        if (has("fc", "widths"))
            app.fc.widths = to_int_list("fc", "widths", get("fc", "widths"));
        if (has("fc", "dropout"))
            app.fc.dropout_rate = to_double("fc", "dropout", get("fc", "dropout"));
    }

    if (file.sections.count("train"))
    {
        if (has("train", "batch"))
            app.train.batch_size = to_int("train", "batch", get("train", "batch"));
        if (has("train", "epochs"))
            app.train.epochs = to_int("train", "epochs", get("train", "epochs"));
        if (has("train", "lr"))
            app.train.learning_rate = to_double("train", "lr", get("train", "lr"));
        if (has("train", "seed"))
            app.train.seed = to_u64("train", "seed", get("train", "seed"));
        if (has("train", "validation_fraction"))
            app.train.validation_fraction =
                to_double("train", "validation_fraction", get("train", "validation_fraction"));
        if (has("train", "precision"))
        {
            app.precision = get("train", "precision");
            if (app.precision != "f32" && app.precision != "f64")
                throw std::invalid_argument("[train] precision must be f32 or f64");
        }
    }

    app.bench.cfg = app.array;
    app.bench.w_seed = app.w_seed;
    app.bench.precision = app.precision;
    if (file.sections.count("bench"))
    {
        if (has("bench", "trials"))
            app.bench.trials = to_int("bench", "trials", get("bench", "trials"));
        if (has("bench", "snr_list_db"))
            app.bench.sweep = to_double_list("bench", "snr_list_db", get("bench", "snr_list_db"));
        if (has("bench", "snapshot_list"))
        {
            // kept separately; the subcommand picks which sweep applies
            auto list = to_double_list("bench", "snapshot_list", get("bench", "snapshot_list"));
            app.bench_snapshot_list = list;
        }
        if (has("bench", "truth_thetas"))
            app.bench.truth_thetas_deg =
                to_double_list("bench", "truth_thetas", get("bench", "truth_thetas"));
        if (has("bench", "estimators"))
        {
            app.bench.estimators.clear();
            for (const std::string &e : split_list(get("bench", "estimators")))
                app.bench.estimators.push_back(estimator_from_string(e));
        }
        if (has("bench", "archs"))
        {
            app.bench.architectures.clear();
            for (const std::string &a : split_list(get("bench", "archs")))
                app.bench.architectures.push_back(arch_from_string(a));
        }
        if (has("bench", "seed"))
            app.bench.master_seed = to_u64("bench", "seed", get("bench", "seed"));
        if (has("bench", "fixed_w"))
            app.bench.fixed_w = to_bool("bench", "fixed_w", get("bench", "fixed_w"));
        if (has("bench", "with_crlb"))
            app.bench.with_crlb = to_bool("bench", "with_crlb", get("bench", "with_crlb"));
        if (has("bench", "fixed_snr_db"))
            app.bench.fixed_snr_db = to_double("bench", "fixed_snr_db", get("bench", "fixed_snr_db"));
        if (has("bench", "fixed_snapshots"))
            app.bench.fixed_snapshots =
                to_int("bench", "fixed_snapshots", get("bench", "fixed_snapshots"));
    }
    return app;
}

AppConfig load_app_config(const std::string &path)
{
    return make_app_config(load_config_file(path));
}

} // namespace osa
