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

#ifndef OSA_MUSIC_HPP
#define OSA_MUSIC_HPP

#include "osa/array_model.hpp"

#include <vector>

namespace osa
{

// Subspace search over the config's angle grid. With overlapped subarrays the
// post-combining noise covariance is sigma_v^2 W^H W, which is not white;
// whiten=true (the default) applies (W^H W)^(-1/2) to both the covariance and
// the virtual steering vectors before the subspace split.
struct MusicConfig
{
    int num_sources = 1; // 0 is allowed for spectrum inspection only
    bool whiten = true;
};

// Normalized pseudo-spectrum over the grid, max value 1. Each grid steering
// vector is scaled to unit norm before projection, so an isotropic
// (noise-only, whitened, num_sources = 0) covariance gives an exactly flat
// spectrum.
RVec music_spectrum(const CMat &cov, const BeamformerMatrix &bf, const ArrayConfig &cfg,
                    const MusicConfig &mcfg);

// Angles of the num_sources largest strict local maxima of the spectrum
// (grid endpoints qualify with their single neighbor); falls back to the
// largest remaining values when fewer maxima exist. Sorted ascending.
std::vector<double> music_estimate(const CMat &cov, const BeamformerMatrix &bf,
                                   const ArrayConfig &cfg, const MusicConfig &mcfg);

} // namespace osa

#endif
