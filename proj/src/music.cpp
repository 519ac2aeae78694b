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

#include "osa/music.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

namespace osa
{

// Inverse Hermitian square root via eigendecomposition; requires full column
// rank of W.
static CMat inverse_sqrt(const CMat &gram)
{
    Eigen::SelfAdjointEigenSolver<CMat> eig(gram);
    if (eig.info() != Eigen::Success)
        throw std::runtime_error("eigendecomposition of W^H W failed");
    double lam_max = eig.eigenvalues().maxCoeff();
    if (eig.eigenvalues().minCoeff() <= 1e-12 * lam_max)
        throw std::runtime_error("W^H W is numerically singular; cannot whiten");
    RVec inv_sqrt = eig.eigenvalues().cwiseSqrt().cwiseInverse();
    return eig.eigenvectors() * inv_sqrt.asDiagonal() * eig.eigenvectors().adjoint();
}

static void check_inputs(const CMat &cov, const ArrayConfig &cfg, const MusicConfig &mcfg)
{
    const int k = cfg.num_subarrays;
    if (cov.rows() != k || cov.cols() != k)
        throw std::invalid_argument("covariance must be num_subarrays x num_subarrays");
    if (mcfg.num_sources < 0 || mcfg.num_sources >= k)
        throw std::invalid_argument("num_sources must satisfy 0 <= Q < num_subarrays");
}

RVec music_spectrum(const CMat &cov, const BeamformerMatrix &bf, const ArrayConfig &cfg,
                    const MusicConfig &mcfg)
{
    check_inputs(cov, cfg, mcfg);
    const int k = cfg.num_subarrays;
    const int noise_dim = k - mcfg.num_sources;

    CMat whitener;
    CMat work = cov;
    if (mcfg.whiten)
    {
        whitener = inverse_sqrt(bf.w.adjoint() * bf.w);
        work = whitener * cov * whitener;
        work = 0.5 * (work + work.adjoint().eval());
    }

    // Ascending eigenvalues; Eigen's ordering breaks exact ties by index,
    // which fixes the subspace boundary deterministically.
    Eigen::SelfAdjointEigenSolver<CMat> eig(work);
    if (eig.info() != Eigen::Success)
        throw std::runtime_error("eigendecomposition of the covariance failed");
    CMat noise_basis = eig.eigenvectors().leftCols(noise_dim);

    const int grid = cfg.grid_size();
    RVec spectrum(grid);
    for (int l = 0; l < grid; ++l)
    {
        CVec steer = bf.w.adjoint() * steering_vector(cfg.grid_angle_deg(l), cfg);
        if (mcfg.whiten)
            steer = whitener * steer;
        double total = steer.squaredNorm();
        double proj = (noise_basis.adjoint() * steer).squaredNorm();
        spectrum(l) = total / std::max(proj, 1e-300);
    }
    double peak = spectrum.maxCoeff();
    if (peak > 0.0)
        spectrum /= peak;
    return spectrum;
}

std::vector<double> music_estimate(const CMat &cov, const BeamformerMatrix &bf,
                                   const ArrayConfig &cfg, const MusicConfig &mcfg)
{
    if (mcfg.num_sources < 1)
        throw std::invalid_argument("estimation needs num_sources >= 1");
    RVec spectrum = music_spectrum(cov, bf, cfg, mcfg);
    const int grid = int(spectrum.size());

    auto is_local_max = [&](int l)
    {
        bool left = (l == 0) || spectrum(l) > spectrum(l - 1);
        bool right = (l == grid - 1) || spectrum(l) > spectrum(l + 1);
        return left && right;
    };

    // Indices sorted by descending spectrum value, ties toward lower index
    std::vector<int> order(size_t(grid), 0);
    for (int l = 0; l < grid; ++l)
        order[size_t(l)] = l;
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return spectrum(a) > spectrum(b); });

    std::vector<int> chosen;
    for (int idx : order)
    {
        if (int(chosen.size()) >= mcfg.num_sources)
            break;
        if (is_local_max(idx))
            chosen.push_back(idx);
    }
    // Fallback: fill from the highest remaining values
    for (int idx : order)
    {
        if (int(chosen.size()) >= mcfg.num_sources)
            break;
        if (std::find(chosen.begin(), chosen.end(), idx) == chosen.end())
            chosen.push_back(idx);
    }

    std::vector<double> estimates;
    estimates.reserve(chosen.size());
    for (int idx : chosen)
        estimates.push_back(cfg.grid_angle_deg(idx));
    std::sort(estimates.begin(), estimates.end());
    return estimates;
}

} // namespace osa
