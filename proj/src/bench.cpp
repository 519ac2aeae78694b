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

#include "osa/bench.hpp"
#include "osa/binio.hpp"
#include "osa/parallel.hpp"
#include "osa/signal_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#ifndef OSA_BUILD_ID
#define OSA_BUILD_ID "unknown"
#endif

namespace osa
{

std::string build_id() { return OSA_BUILD_ID; }

const char *to_string(SweepKind k) { return k == SweepKind::snr_db ? "snr_db" : "snapshots"; }

const char *to_string(EstimatorKind k)
{
    switch (k)
    {
    case EstimatorKind::cdae_dnn:
        return "cdae_dnn";
    case EstimatorKind::music:
        return "music";
    case EstimatorKind::music_whitened:
        return "music_whitened";
    }
    return "unknown";
}

const char *to_string(ArchKind k) { return k == ArchKind::osa ? "osa" : "nosa"; }

EstimatorKind estimator_from_string(const std::string &s)
{
    if (s == "cdae_dnn")
        return EstimatorKind::cdae_dnn;
    if (s == "music")
        return EstimatorKind::music;
    if (s == "music_whitened")
        return EstimatorKind::music_whitened;
    throw std::invalid_argument("unknown estimator '" + s + "'");
}

ArchKind arch_from_string(const std::string &s)
{
    if (s == "osa")
        return ArchKind::osa;
    if (s == "nosa")
        return ArchKind::nosa;
    throw std::invalid_argument("unknown architecture '" + s + "'");
}

void Scenario::validate() const
{
    cfg.validate();
    if (sweep.empty())
        throw std::invalid_argument("empty sweep");
    if (trials < 1)
        throw std::invalid_argument("trials must be >= 1");
    if (truth_thetas_deg.empty())
        throw std::invalid_argument("no truth angles");
    if (estimators.empty() || architectures.empty())
        throw std::invalid_argument("need at least one estimator and architecture");
    if (sweep_kind == SweepKind::snapshots)
        for (double n : sweep)
            if (n < 1 || n != std::floor(n))
                throw std::invalid_argument("snapshot sweep values must be positive integers");
}

bool ResultRow::operator==(const ResultRow &other) const
{
    auto eq = [](double a, double b)
    { return (std::isnan(a) && std::isnan(b)) || a == b; };
    return eq(sweep_value, other.sweep_value) && estimator == other.estimator &&
           architecture == other.architecture && eq(rmse_deg, other.rmse_deg) &&
           trials == other.trials && failures == other.failures &&
           crlb_deg.has_value() == other.crlb_deg.has_value() &&
           (!crlb_deg || eq(*crlb_deg, *other.crlb_deg)) && seed == other.seed;
}

bool ResultTable::operator==(const ResultTable &other) const
{
    return rows == other.rows && build_id == other.build_id && config_hash == other.config_hash &&
           master_seed == other.master_seed && w_policy == other.w_policy &&
           precision == other.precision && sweep_name == other.sweep_name;
}

namespace
{

// Mean over sources of squared error after pairing sorted truths with sorted
// estimates (positionally optimal in one dimension).
double paired_squared_error(std::vector<double> truth, std::vector<double> estimates)
{
    std::sort(truth.begin(), truth.end());
    std::sort(estimates.begin(), estimates.end());
    if (truth.size() != estimates.size())
        throw std::runtime_error("estimator returned a wrong number of angles");
    double sum = 0.0;
    for (size_t i = 0; i < truth.size(); ++i)
        sum += (estimates[i] - truth[i]) * (estimates[i] - truth[i]);
    return sum / double(truth.size());
}

// Smallest distance from any truth angle to its nearest grid point: the
// floor every grid-based estimator is subject to.
double grid_floor_deg(const ArrayConfig &cfg, const std::vector<double> &truth)
{
    double floor_deg = std::numeric_limits<double>::infinity();
    for (double t : truth)
    {
        double pos = (t + cfg.region_half_width_deg) / cfg.grid_step_deg;
        double frac = std::abs(pos - std::round(pos)) * cfg.grid_step_deg;
        floor_deg = std::min(floor_deg, frac);
    }
    return floor_deg;
}

struct TrialOutcome
{
    std::vector<double> sq_err; // per estimator; NaN marks a failure
};

} // namespace

ResultTable run_sweep(const Scenario &scenario, const NnEstimators *nn, uint64_t config_hash)
{
    scenario.validate();
    const int num_sources = int(scenario.truth_thetas_deg.size());
    const int n_est = int(scenario.estimators.size());

    for (EstimatorKind e : scenario.estimators)
        if (e == EstimatorKind::cdae_dnn)
        {
            if (nn == nullptr)
                throw std::invalid_argument("cdae_dnn requested but no checkpoint provided");
            for (ArchKind a : scenario.architectures)
                if (nn->find(a) == nn->end())
                    throw std::invalid_argument(std::string("cdae_dnn requested but no checkpoint "
                                                            "provided for architecture ") +
                                                to_string(a));
        }

    ResultTable table;
    table.build_id = build_id();
    table.config_hash = config_hash;
    table.master_seed = scenario.master_seed;
    table.w_policy = scenario.fixed_w ? "fixed" : "redrawn";
    table.precision = scenario.precision;
    table.sweep_name = to_string(scenario.sweep_kind);

    for (size_t ai = 0; ai < scenario.architectures.size(); ++ai)
    {
        const ArchKind arch = scenario.architectures[ai];
        const ArrayConfig cfg =
            arch == ArchKind::osa ? scenario.cfg : scenario.cfg.nosa_counterpart();
        const BeamformerMatrix base_w =
            build_beamformer(cfg, PhasePolicy::random_uniform, scenario.w_seed);
        const uint64_t arch_seed = Rng::derive(scenario.master_seed, 1000 + ai);

        for (size_t si = 0; si < scenario.sweep.size(); ++si)
        {
            const double sweep_value = scenario.sweep[si];
            const double snr_db = scenario.sweep_kind == SweepKind::snr_db ? sweep_value
                                                                           : scenario.fixed_snr_db;
            const int snapshots = scenario.sweep_kind == SweepKind::snapshots
                                      ? int(sweep_value)
                                      : scenario.fixed_snapshots;
            const uint64_t point_seed = Rng::derive(arch_seed, si);

            std::vector<TrialOutcome> outcomes(size_t(scenario.trials));
            parallel_for(scenario.trials, [&](int trial)
            {
                const uint64_t trial_seed = Rng::derive(point_seed, uint64_t(trial));
                const BeamformerMatrix *w = &base_w;
                BeamformerMatrix redrawn;
                if (!scenario.fixed_w)
                {
                    redrawn = build_beamformer(cfg, PhasePolicy::random_uniform,
                                               Rng::derive(trial_seed, 101));
                    w = &redrawn;
                }
                SimParams params = SimParams::from_snr(snr_db, snapshots,
                                                       scenario.truth_thetas_deg,
                                                       Rng::derive(trial_seed, 1));
                SnapshotBatch batch = simulate_snapshots(cfg, *w, params);
                CovarianceEstimate cov = sample_covariance(batch);

                TrialOutcome &out = outcomes[size_t(trial)];
                out.sq_err.assign(size_t(n_est), std::numeric_limits<double>::quiet_NaN());
                for (int ei = 0; ei < n_est; ++ei)
                {
                    try
                    {
                        std::vector<double> est;
                        switch (scenario.estimators[size_t(ei)])
                        {
                        case EstimatorKind::music:
                        case EstimatorKind::music_whitened:
                        {
                            MusicConfig mcfg;
                            mcfg.num_sources = num_sources;
                            mcfg.whiten = scenario.estimators[size_t(ei)] ==
                                          EstimatorKind::music_whitened;
                            est = music_estimate(cov.c, *w, cfg, mcfg);
                            break;
                        }
                        case EstimatorKind::cdae_dnn:
                            est = nn->at(arch)(cov, num_sources).thetas_deg;
                            break;
                        }
                        out.sq_err[size_t(ei)] =
                            paired_squared_error(scenario.truth_thetas_deg, est);
                    }
                    catch (const std::exception &)
                    {
                        // recorded as a failure for this estimator only
                    }
                }
            });

            std::optional<double> crlb_deg;
            if (scenario.with_crlb)
            {
                FisherInformation fim =
                    fisher_matrix(cfg, base_w, scenario.truth_thetas_deg,
                                  std::pow(10.0, snr_db / 10.0), 1.0);
                CrlbResult bound = crlb(fim, snapshots);
                crlb_deg = std::sqrt(bound.per_source_deg2.mean());
            }

            const double floor_deg = grid_floor_deg(cfg, scenario.truth_thetas_deg);
            for (int ei = 0; ei < n_est; ++ei)
            {
                double sum = 0.0;
                int ok = 0;
                for (const TrialOutcome &out : outcomes)
                    if (!std::isnan(out.sq_err[size_t(ei)]))
                    {
                        sum += out.sq_err[size_t(ei)];
                        ++ok;
                    }
                const double rmse =
                    ok > 0 ? std::sqrt(sum / ok) : std::numeric_limits<double>::quiet_NaN();

                const bool grid_based = true; // both estimator families search the grid
                if (grid_based && ok > 0 && floor_deg > 0.0 && rmse < floor_deg - 1e-9)
                    throw std::runtime_error("internal error: RMSE below the grid floor");

                ResultRow row;
                row.sweep_value = sweep_value;
                row.estimator = to_string(scenario.estimators[size_t(ei)]);
                row.architecture = to_string(arch);
                row.rmse_deg = rmse;
                row.trials = scenario.trials;
                row.failures = scenario.trials - ok;
                row.crlb_deg = crlb_deg;
                row.seed = scenario.master_seed;
                table.rows.push_back(std::move(row));
            }
        }
    }
    return table;
}

ResultTable run_rmse_vs_snr(const Scenario &scenario, const NnEstimators *nn, uint64_t hash)
{
    Scenario s = scenario;
    s.sweep_kind = SweepKind::snr_db;
    return run_sweep(s, nn, hash);
}

ResultTable run_rmse_vs_snapshots(const Scenario &scenario, const NnEstimators *nn, uint64_t hash)
{
    Scenario s = scenario;
    s.sweep_kind = SweepKind::snapshots;
    return run_sweep(s, nn, hash);
}

ResultTable run_two_source(const Scenario &scenario, const NnEstimators *nn, uint64_t hash)
{
    if (scenario.truth_thetas_deg.size() != 2)
        throw std::invalid_argument("two-source benchmark needs exactly two truth angles");
    Scenario s = scenario;
    s.sweep_kind = SweepKind::snr_db;
    return run_sweep(s, nn, hash);
}

namespace
{

std::string format_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string format_hex64(uint64_t v)
{
    char buf[24];
    std::snprintf(buf, sizeof(buf), "0x%016llX", static_cast<unsigned long long>(v));
    return buf;
}

} // namespace

std::string csv_string(const ResultTable &table)
{
    std::ostringstream os;
    os << "# build: " << table.build_id << "\n";
    os << "# config_hash: " << format_hex64(table.config_hash) << "\n";
    os << "# seed: " << table.master_seed << "\n";
    os << "# w_policy: " << table.w_policy << "\n";
    os << "# precision: " << table.precision << "\n";
    os << "# sweep: " << table.sweep_name << "\n";
    os << "sweep_var,estimator,architecture,rmse_deg,trials,failures,crlb_deg,seed\n";
    for (const ResultRow &r : table.rows)
    {
        os << format_double(r.sweep_value) << ',' << r.estimator << ',' << r.architecture << ','
           << format_double(r.rmse_deg) << ',' << r.trials << ',' << r.failures << ','
           << (r.crlb_deg ? format_double(*r.crlb_deg) : "") << ',' << r.seed << "\n";
    }
    return os.str();
}

void emit_csv(const ResultTable &table, const std::string &path)
{
    const std::string text = csv_string(table);
    write_file(path, std::vector<uint8_t>(text.begin(), text.end()));
}

namespace
{

std::vector<std::string> split_fields(const std::string &line, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    for (char c : line)
    {
        if (c == sep)
        {
            out.push_back(cur);
            cur.clear();
        }
        else
            cur += c;
    }
    out.push_back(cur);
    return out;
}

} // namespace

ResultTable parse_csv_string(const std::string &text)
{
    ResultTable table;
    std::istringstream is(text);
    std::string line;
    bool header_seen = false;
    while (std::getline(is, line))
    {
        if (line.empty())
            continue;
        if (line[0] == '#')
        {
            auto colon = line.find(": ");
            if (colon == std::string::npos)
                continue;
            const std::string key = line.substr(2, colon - 2);
            const std::string value = line.substr(colon + 2);
            if (key == "build")
                table.build_id = value;
            else if (key == "config_hash")
                table.config_hash = std::stoull(value, nullptr, 16);
            else if (key == "seed")
                table.master_seed = std::stoull(value);
            else if (key == "w_policy")
                table.w_policy = value;
            else if (key == "precision")
                table.precision = value;
            else if (key == "sweep")
                table.sweep_name = value;
            continue;
        }
        if (!header_seen)
        {
            if (line != "sweep_var,estimator,architecture,rmse_deg,trials,failures,crlb_deg,seed")
                throw std::runtime_error("unexpected CSV header: " + line);
            header_seen = true;
            continue;
        }
        auto fields = split_fields(line, ',');
        if (fields.size() != 8)
            throw std::runtime_error("malformed CSV row: " + line);
        ResultRow row;
        row.sweep_value = std::stod(fields[0]);
        row.estimator = fields[1];
        row.architecture = fields[2];
        row.rmse_deg = std::stod(fields[3]);
        row.trials = std::stoi(fields[4]);
        row.failures = std::stoi(fields[5]);
        if (!fields[6].empty())
            row.crlb_deg = std::stod(fields[6]);
        row.seed = std::stoull(fields[7]);
        table.rows.push_back(std::move(row));
    }
    if (!header_seen)
        throw std::runtime_error("CSV has no header row");
    return table;
}

ResultTable parse_csv(const std::string &path)
{
    return parse_csv_string(read_text_file(path));
}

} // namespace osa
