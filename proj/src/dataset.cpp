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

#include "osa/dataset.hpp"
#include "osa/binio.hpp"
#include "osa/parallel.hpp"
#include "osa/rng.hpp"

#include <cmath>
#include <sstream>

namespace osa
{

CMat FeatureTensor::denormalize() const
{
    CMat c(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
            c(i, j) = cxd(re(i, j), im(i, j)) * norm_factor;
    return c;
}

int AngleGrid::size() const
{
    double l = 2.0 * half_width_deg / step_deg;
    if (std::abs(l - std::round(l)) > 1e-9)
        throw std::invalid_argument("grid step does not divide the angular region");
    return int(std::lround(l)) + 1;
}

int LabelVector::ones() const
{
    int n = 0;
    for (uint8_t b : z)
        n += b;
    return n;
}

std::vector<int> LabelVector::active_indices() const
{
    std::vector<int> idx;
    for (size_t i = 0; i < z.size(); ++i)
        if (z[i])
            idx.push_back(int(i));
    return idx;
}

FeatureTensor to_feature_tensor(const CovarianceEstimate &cov, std::optional<double> norm_factor)
{
    const int k = int(cov.c.rows());
    if (cov.c.cols() != k)
        throw std::invalid_argument("covariance must be square");
    if (!cov.c.allFinite())
        throw std::invalid_argument("covariance has non-finite entries");

    FeatureTensor ft;
    ft.k = k;
    ft.norm_factor = norm_factor ? *norm_factor : cov.c.trace().real() / double(k);
    if (!(ft.norm_factor > 0.0) || !std::isfinite(ft.norm_factor))
        throw std::invalid_argument("normalization factor must be positive and finite");

    ft.data.resize(size_t(2 * k * k));
    const double inv = 1.0 / ft.norm_factor;
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
        {
            ft.data[size_t(i * k + j)] = cov.c(i, j).real() * inv;
            ft.data[size_t(k * k + i * k + j)] = cov.c(i, j).imag() * inv;
        }
    return ft;
}

LabelVector make_label(const std::vector<double> &thetas_deg, const AngleGrid &grid, bool strict)
{
    LabelVector label;
    label.grid = grid;
    label.z.assign(size_t(grid.size()), 0);
    for (double theta : thetas_deg)
    {
        const double pos = (theta + grid.half_width_deg) / grid.step_deg;
        const double rounded = std::round(pos);
        if (std::abs(pos - rounded) > 1e-9)
        {
            if (strict)
                throw std::domain_error("angle " + std::to_string(theta) +
                                        " deg is off-grid; training labels must be on-grid");
            label.snapped = true;
        }
        const int idx = int(rounded);
        if (idx < 0 || idx >= grid.size())
            throw std::domain_error("angle " + std::to_string(theta) +
                                    " deg outside the label grid");
        if (label.z[size_t(idx)] && strict)
            throw std::domain_error("two sources map to the same grid index " +
                                    std::to_string(idx));
        label.z[size_t(idx)] = 1;
    }
    return label;
}

namespace
{

struct SamplePlan
{
    std::vector<double> thetas_deg; // empty: draw a Q=2 pair inside the task
    double snr_db = 0.0;            // NaN: draw from the range inside the task
    bool draw_pair = false;
};

double draw_snr(const DatasetSpec &spec, Rng &rng)
{
    if (!spec.snr_list_db.empty())
        return spec.snr_list_db[size_t(rng.uniform_index(spec.snr_list_db.size()))];
    return rng.uniform(spec.snr_range_db.first, spec.snr_range_db.second);
}

} // namespace

std::string DatasetSpec::describe() const
{
    std::ostringstream os;
    os << "grid +/-" << grid.half_width_deg << " deg @ " << grid.step_deg << " deg";
    if (!snr_list_db.empty())
    {
        os << "; snr {";
        for (size_t i = 0; i < snr_list_db.size(); ++i)
            os << (i ? "," : "") << snr_list_db[i];
        os << "} dB";
    }
    else
    {
        os << "; snr U[" << snr_range_db.first << "," << snr_range_db.second << "] dB";
    }
    os << "; N=" << num_snapshots << "; reps=" << reps_per_angle << "; pairs=" << num_pairs
       << "; seed=" << master_seed << "; W " << (redraw_beamformer ? "redrawn" : "fixed");
    return os.str();
}

Dataset generate_dataset(const DatasetSpec &spec, const ArrayConfig &cfg,
                         const BeamformerMatrix &bf)
{
    cfg.validate();
    if (spec.grid.half_width_deg > cfg.region_half_width_deg + 1e-12)
        throw std::invalid_argument("label grid exceeds the configured angular region");
    if (spec.num_snapshots < 1 || spec.reps_per_angle < 0 || spec.num_pairs < 0)
        throw std::invalid_argument("bad dataset spec counts");
    const int grid_points = spec.grid.size();
    if (spec.num_pairs > 0 && spec.pair_min_sep_deg > (grid_points - 1) * spec.grid.step_deg)
        throw std::invalid_argument("pair separation of " + std::to_string(spec.pair_min_sep_deg) +
                                    " deg is infeasible on this grid");

    // Q=1 coverage passes, then Q=2 pairs
    std::vector<SamplePlan> plans;
    const int snr_count = spec.snr_list_db.empty() ? 1 : int(spec.snr_list_db.size());
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (int rep = 0; rep < spec.reps_per_angle; ++rep)
        for (int ai = 0; ai < grid_points; ++ai)
            for (int si = 0; si < snr_count; ++si)
            {
                SamplePlan plan;
                plan.thetas_deg = {spec.grid.angle_deg(ai)};
                plan.snr_db = spec.snr_list_db.empty() ? nan : spec.snr_list_db[size_t(si)];
                plans.push_back(std::move(plan));
            }
    for (int i = 0; i < spec.num_pairs; ++i)
    {
        SamplePlan plan;
        plan.draw_pair = true;
        plan.snr_db = nan;
        plans.push_back(std::move(plan));
    }

    Dataset ds;
    ds.cfg = cfg;
    ds.spec = spec;
    ds.w_seed = bf.seed;
    ds.samples.resize(plans.size());

    parallel_for(int(plans.size()), [&](int i)
    {
        const uint64_t sample_seed = Rng::derive(spec.master_seed, uint64_t(i));
        Rng rng(Rng::derive(sample_seed, 3));

        SamplePlan plan = plans[size_t(i)];
        if (plan.draw_pair)
        {
            const int min_sep_steps =
                int(std::ceil(spec.pair_min_sep_deg / spec.grid.step_deg - 1e-9));
            int a = 0, b = 0;
            do
            {
                a = int(rng.uniform_index(uint64_t(grid_points)));
                b = int(rng.uniform_index(uint64_t(grid_points)));
            } while (std::abs(a - b) < min_sep_steps);
            plan.thetas_deg = {spec.grid.angle_deg(std::min(a, b)),
                               spec.grid.angle_deg(std::max(a, b))};
        }
        if (std::isnan(plan.snr_db))
            plan.snr_db = draw_snr(spec, rng);

        const BeamformerMatrix *used = &bf;
        BeamformerMatrix redrawn;
        if (spec.redraw_beamformer)
        {
            redrawn = build_beamformer(cfg, PhasePolicy::random_uniform,
                                       Rng::derive(sample_seed, 2));
            used = &redrawn;
        }

        SimParams params = SimParams::from_snr(plan.snr_db, spec.num_snapshots, plan.thetas_deg,
                                               Rng::derive(sample_seed, 1));
        SnapshotBatch batch = simulate_snapshots(cfg, *used, params);
        CovarianceEstimate noisy = sample_covariance(batch);
        CovarianceEstimate clean =
            exact_covariance(cfg, *used, plan.thetas_deg, params.signal_power, params.noise_power);

        Sample &s = ds.samples[size_t(i)];
        s.noisy = to_feature_tensor(noisy);
        s.clean = to_feature_tensor(clean, s.noisy.norm_factor);
        s.label = make_label(plan.thetas_deg, spec.grid, true);
        s.meta = params;
        s.w_seed = used->seed;
    });
    return ds;
}

bool Sample::operator==(const Sample &other) const
{
    return noisy.k == other.noisy.k && noisy.norm_factor == other.noisy.norm_factor &&
           noisy.data == other.noisy.data && clean.norm_factor == other.clean.norm_factor &&
           clean.data == other.clean.data && label.z == other.label.z &&
           label.snapped == other.label.snapped && meta.snr_db == other.meta.snr_db &&
           meta.signal_power == other.meta.signal_power &&
           meta.noise_power == other.meta.noise_power &&
           meta.num_snapshots == other.meta.num_snapshots &&
           meta.thetas_deg == other.meta.thetas_deg && meta.seed == other.meta.seed &&
           w_seed == other.w_seed;
}

bool Dataset::operator==(const Dataset &other) const
{
    auto cfg_eq = [](const ArrayConfig &a, const ArrayConfig &b)
    {
        return a.num_elements == b.num_elements && a.subarray_size == b.subarray_size &&
               a.subarray_overlap == b.subarray_overlap && a.num_subarrays == b.num_subarrays &&
               a.element_spacing == b.element_spacing && a.wavelength == b.wavelength &&
               a.region_half_width_deg == b.region_half_width_deg &&
               a.grid_step_deg == b.grid_step_deg;
    };
    return cfg_eq(cfg, other.cfg) && w_seed == other.w_seed && samples == other.samples;
}

namespace
{

void write_tensor(ByteWriter &w, const FeatureTensor &ft, bool f32)
{
    w.f64(ft.norm_factor);
    for (double v : ft.data)
    {
        if (f32)
            w.f32(float(v));
        else
            w.f64(v);
    }
}

FeatureTensor read_tensor(ByteReader &r, int k, bool f32)
{
    FeatureTensor ft;
    ft.k = k;
    ft.norm_factor = r.f64();
    ft.data.resize(size_t(2 * k * k));
    for (double &v : ft.data)
        v = f32 ? double(r.f32()) : r.f64();
    return ft;
}

void write_manifest(const Dataset &ds, const std::string &path, bool f32, uint32_t crc)
{
    std::ostringstream os;
    os << "# dataset manifest (generated alongside " << path << ")\n";
    os << "[array]\n";
    os << "elements = " << ds.cfg.num_elements << "\n";
    os << "subarray_size = " << ds.cfg.subarray_size << "\n";
    os << "subarray_overlap = " << ds.cfg.subarray_overlap << "\n";
    os << "subarrays = " << ds.cfg.num_subarrays << "\n";
    os << "element_spacing = " << ds.cfg.element_spacing << "\n";
    os << "wavelength = " << ds.cfg.wavelength << "\n";
    os << "region_half_width_deg = " << ds.cfg.region_half_width_deg << "\n";
    os << "grid_step_deg = " << ds.cfg.grid_step_deg << "\n";
    os << "[dataset]\n";
    os << "recipe = " << ds.spec.describe() << "\n";
    os << "w_seed = " << ds.w_seed << "\n";
    os << "samples = " << ds.samples.size() << "\n";
    os << "payload = " << (f32 ? "f32" : "f64") << "\n";
    char buf[16];
    std::snprintf(buf, sizeof(buf), "0x%08X", crc);
    os << "crc32 = " << buf << "\n";
    const std::string text = os.str();
    std::vector<uint8_t> bytes(text.begin(), text.end());
    write_file(path + ".manifest", bytes);
}

} // namespace

void save_dataset(const Dataset &ds, const std::string &path, bool f32_payload)
{
    const int k = ds.cfg.num_subarrays;
    const int l = ds.spec.grid.size();

    ByteWriter w;
    w.bytes("OSAD", 4);
    w.u16(dataset_format_version);
    w.u16(uint16_t(k));
    w.u32(uint32_t(l));
    w.u64(ds.samples.size());
    w.u8(f32_payload ? 1 : 0);

    w.i32(ds.cfg.num_elements);
    w.i32(ds.cfg.subarray_size);
    w.i32(ds.cfg.subarray_overlap);
    w.i32(ds.cfg.num_subarrays);
    w.f64(ds.cfg.element_spacing);
    w.f64(ds.cfg.wavelength);
    w.f64(ds.cfg.region_half_width_deg);
    w.f64(ds.cfg.grid_step_deg);

    w.f64(ds.spec.grid.half_width_deg);
    w.f64(ds.spec.grid.step_deg);
    w.u32(uint32_t(ds.spec.snr_list_db.size()));
    for (double s : ds.spec.snr_list_db)
        w.f64(s);
    w.f64(ds.spec.snr_range_db.first);
    w.f64(ds.spec.snr_range_db.second);
    w.i32(ds.spec.num_snapshots);
    w.i32(ds.spec.reps_per_angle);
    w.i32(ds.spec.num_pairs);
    w.f64(ds.spec.pair_min_sep_deg);
    w.u64(ds.spec.master_seed);
    w.u8(ds.spec.redraw_beamformer ? 1 : 0);
    w.u64(ds.w_seed);

    for (const Sample &s : ds.samples)
    {
        if (s.noisy.k != k || s.clean.k != k || int(s.label.z.size()) != l)
            throw std::invalid_argument("sample shape does not match the dataset header");
        write_tensor(w, s.noisy, f32_payload);
        write_tensor(w, s.clean, f32_payload);
        // packed label bits, LSB-first
        for (int byte = 0; byte < (l + 7) / 8; ++byte)
        {
            uint8_t b = 0;
            for (int bit = 0; bit < 8; ++bit)
            {
                const int idx = byte * 8 + bit;
                if (idx < l && s.label.z[size_t(idx)])
                    b |= uint8_t(1u << bit);
            }
            w.u8(b);
        }
        w.u8(s.label.snapped ? 1 : 0);
        w.f64(s.meta.snr_db);
        w.f64(s.meta.signal_power);
        w.f64(s.meta.noise_power);
        w.u32(uint32_t(s.meta.num_snapshots));
        w.u64(s.meta.seed);
        w.u64(s.w_seed);
        w.u16(uint16_t(s.meta.thetas_deg.size()));
        for (double t : s.meta.thetas_deg)
            w.f64(t);
    }

    uint32_t crc = crc32(w.data().data(), w.size());
    w.u32(crc);
    write_file(path, w.data());
    write_manifest(ds, path, f32_payload, crc);
}

Dataset load_dataset(const std::string &path)
{
    std::vector<uint8_t> bytes = read_file(path);
    if (bytes.size() < 21)
        throw std::runtime_error("dataset file too short: " + path);
    uint32_t stored = 0;
    for (int i = 0; i < 4; ++i)
        stored |= uint32_t(bytes[bytes.size() - 4 + size_t(i)]) << (8 * i);
    if (crc32(bytes.data(), bytes.size() - 4) != stored)
        throw std::runtime_error("dataset checksum failure: " + path);

    ByteReader r(bytes.data(), bytes.size() - 4);
    if (std::string(reinterpret_cast<const char *>(r.take(4)), 4) != "OSAD")
        throw std::runtime_error("bad dataset magic: " + path);
    if (r.u16() != dataset_format_version)
        throw std::runtime_error("unsupported dataset version: " + path);
    const int k = r.u16();
    const int l = int(r.u32());
    const uint64_t count = r.u64();
    const bool f32 = r.u8() != 0;

    Dataset ds;
    ds.cfg.num_elements = r.i32();
    ds.cfg.subarray_size = r.i32();
    ds.cfg.subarray_overlap = r.i32();
    ds.cfg.num_subarrays = r.i32();
    ds.cfg.element_spacing = r.f64();
    ds.cfg.wavelength = r.f64();
    ds.cfg.region_half_width_deg = r.f64();
    ds.cfg.grid_step_deg = r.f64();

    ds.spec.grid.half_width_deg = r.f64();
    ds.spec.grid.step_deg = r.f64();
    ds.spec.snr_list_db.resize(r.u32());
    for (double &s : ds.spec.snr_list_db)
        s = r.f64();
    ds.spec.snr_range_db.first = r.f64();
    ds.spec.snr_range_db.second = r.f64();
    ds.spec.num_snapshots = r.i32();
    ds.spec.reps_per_angle = r.i32();
    ds.spec.num_pairs = r.i32();
    ds.spec.pair_min_sep_deg = r.f64();
    ds.spec.master_seed = r.u64();
    ds.spec.redraw_beamformer = r.u8() != 0;
    ds.w_seed = r.u64();

    if (ds.cfg.num_subarrays != k)
        throw std::runtime_error("dataset header K does not match the stored config");
    if (ds.spec.grid.size() != l)
        throw std::runtime_error("dataset header L does not match the stored grid");

    ds.samples.resize(count);
    for (Sample &s : ds.samples)
    {
        s.noisy = read_tensor(r, k, f32);
        s.clean = read_tensor(r, k, f32);
        s.label.grid = ds.spec.grid;
        s.label.z.assign(size_t(l), 0);
        for (int byte = 0; byte < (l + 7) / 8; ++byte)
        {
            const uint8_t b = r.u8();
            for (int bit = 0; bit < 8; ++bit)
            {
                const int idx = byte * 8 + bit;
                if (idx < l)
                    s.label.z[size_t(idx)] = (b >> bit) & 1u;
            }
        }
        s.label.snapped = r.u8() != 0;
        s.meta.snr_db = r.f64();
        s.meta.signal_power = r.f64();
        s.meta.noise_power = r.f64();
        s.meta.num_snapshots = int(r.u32());
        s.meta.seed = r.u64();
        s.w_seed = r.u64();
        s.meta.thetas_deg.resize(r.u16());
        for (double &t : s.meta.thetas_deg)
            t = r.f64();
    }
    if (r.remaining() != 0)
        throw std::runtime_error("dataset has trailing bytes: " + path);
    return ds;
}

} // namespace osa
