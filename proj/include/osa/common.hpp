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

#ifndef OSA_COMMON_HPP
#define OSA_COMMON_HPP

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace osa
{

using cxd = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

constexpr double pi = 3.141592653589793238462643383279502884;

inline double deg2rad(double deg) { return deg * (pi / 180.0); }
inline double rad2deg(double rad) { return rad * (180.0 / pi); }

// Largest absolute deviation from Hermitian symmetry, used by invariant checks
inline double hermitian_defect(const CMat &m)
{
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

} // namespace osa

#endif
