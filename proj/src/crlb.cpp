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

#include "osa/crlb.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

namespace osa
{

CVec steering_derivative(double theta_deg, const ArrayConfig &cfg)
{
    CVec a = steering_vector(theta_deg, cfg);
    const double scale =
        2.0 * pi / cfg.wavelength * cfg.element_spacing * std::cos(deg2rad(theta_deg));
    CVec d(cfg.num_elements);
    for (int m = 0; m < cfg.num_elements; ++m)
        d(m) = cxd(0.0, scale * m) * a(m);
    return d;
}

// Columns d_q .* a(theta_q); the q-th column is the only nonzero column of
// the per-source derivative matrix.
static CMat derivative_matrix(const ArrayConfig &cfg, const std::vector<double> &thetas_deg)
{
    CMat d(cfg.num_elements, Eigen::Index(thetas_deg.size()));
    for (size_t q = 0; q < thetas_deg.size(); ++q)
        d.col(Eigen::Index(q)) = steering_derivative(thetas_deg[q], cfg);
    return d;
}

CMat partial_covariance(int source_index, const ArrayConfig &cfg, const BeamformerMatrix &bf,
                        const std::vector<double> &thetas_deg, double signal_power)
{
    const int num_sources = int(thetas_deg.size());
    if (source_index < 1 || source_index > num_sources)
        throw std::domain_error("source index " + std::to_string(source_index) + " outside [1, " +
                                std::to_string(num_sources) + "]");
    if (signal_power == 0.0)
        return CMat::Zero(cfg.num_subarrays, cfg.num_subarrays);

    CMat virt = bf.w.adjoint() * steering_matrix(thetas_deg, cfg).a;              // K x Q
    CVec dvirt = bf.w.adjoint() * steering_derivative(thetas_deg[size_t(source_index - 1)], cfg);
    // rank-2 Hermitian update: sigma_s^2 (W^H da_q) a_vq^H + h.c.
    CMat x = signal_power * (dvirt * virt.col(source_index - 1).adjoint());
    return x + x.adjoint();
}

FisherInformation fisher_matrix(const ArrayConfig &cfg, const BeamformerMatrix &bf,
                                const std::vector<double> &thetas_deg, double signal_power,
                                double noise_power)
{
    if (thetas_deg.empty())
        throw std::invalid_argument("fisher_matrix needs at least one source");
    if (!(noise_power > 0.0))
        throw std::invalid_argument("noise_power must be positive for an invertible covariance");
    const int num_sources = int(thetas_deg.size());
    const int k = cfg.num_subarrays;

    CMat virt = bf.w.adjoint() * steering_matrix(thetas_deg, cfg).a; // A_v = W^H A
    CMat c = noise_power * (bf.w.adjoint() * bf.w);
    if (signal_power > 0.0)
        c += signal_power * (virt * virt.adjoint());
    c = 0.5 * (c + c.adjoint().eval());

    Eigen::LLT<CMat> llt(c);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("covariance matrix is not positive definite");
    CMat cinv = llt.solve(CMat::Identity(k, k));

    // Element form, Fisher trace identity per source pair
    std::vector<CMat> partials;
    partials.reserve(size_t(num_sources));
    for (int q = 1; q <= num_sources; ++q)
        partials.push_back(partial_covariance(q, cfg, bf, thetas_deg, signal_power));

    RMat f_element(num_sources, num_sources);
    for (int p = 0; p < num_sources; ++p)
        for (int q = 0; q < num_sources; ++q)
            f_element(p, q) = (cinv * partials[size_t(p)] * cinv * partials[size_t(q)])
                                  .trace()
                                  .real();

    // Assembled Hadamard-product form over the stacked derivative columns
    CMat dmat = bf.w.adjoint() * derivative_matrix(cfg, thetas_deg); // K x Q == W^H D
    CMat g = signal_power * (virt.adjoint() * cinv * dmat);          // C_s A_v^H C^-1 W^H D
    CMat h1 = signal_power * signal_power * (virt.adjoint() * cinv * virt);
    CMat h2 = dmat.adjoint() * cinv * dmat;
    RMat f_assembled =
        2.0 * (g.cwiseProduct(g.transpose()) + h1.cwiseProduct(h2.transpose())).real();

    double denom = std::max(f_element.cwiseAbs().maxCoeff(), 1e-300);
    double rel = (f_element - f_assembled).cwiseAbs().maxCoeff() / denom;
    if (rel > 1e-8)
    {
        std::ostringstream msg;
        msg << "Fisher matrix cross-check failed: element and assembled forms differ by "
            << rel << " relative";
        throw std::runtime_error(msg.str());
    }

    FisherInformation fim;
    fim.f = 0.5 * (f_element + f_element.transpose().eval());
    fim.cfg = cfg;
    fim.thetas_deg = thetas_deg;
    fim.signal_power = signal_power;
    fim.noise_power = noise_power;
    fim.w_seed = bf.seed;
    return fim;
}

CrlbResult crlb(const FisherInformation &fim, int num_snapshots)
{
    if (num_snapshots < 1)
        throw std::invalid_argument("num_snapshots must be >= 1");

    Eigen::SelfAdjointEigenSolver<RMat> eig(fim.f);
    if (eig.info() != Eigen::Success)
        throw std::runtime_error("eigendecomposition of the Fisher matrix failed");
    double lam_min = eig.eigenvalues().minCoeff();
    double lam_max = eig.eigenvalues().maxCoeff();
    double cond = (lam_min > 0.0) ? lam_max / lam_min : std::numeric_limits<double>::infinity();

    auto unidentifiable = [&](const std::string &why)
    {
        std::ostringstream msg;
        msg << "unidentifiable configuration: " << why << " for thetas [";
        for (size_t i = 0; i < fim.thetas_deg.size(); ++i)
            msg << (i ? ", " : "") << fim.thetas_deg[i];
        msg << "] deg, " << fim.cfg.num_subarrays << " subarrays, overlap "
            << fim.cfg.subarray_overlap << ", W seed " << fim.w_seed;
        throw std::runtime_error(msg.str());
    };
    if (!(lam_min > 0.0) || cond > 1e12)
        unidentifiable("cond(F) = " + std::to_string(cond));

    RMat inv_rad2 = eig.eigenvectors() *
                    eig.eigenvalues().cwiseInverse().asDiagonal() *
                    eig.eigenvectors().transpose();
    const double to_deg2 = (180.0 / pi) * (180.0 / pi);

    CrlbResult res;
    res.matrix_deg2 = inv_rad2 * (to_deg2 / double(num_snapshots));
    res.per_source_deg2 = res.matrix_deg2.diagonal();
    res.num_snapshots = num_snapshots;
    res.condition = cond;
    // A variance bound wider than the whole angular domain carries no
    // information (the endfire cos(theta) = 0 case lands here: F is tiny but
    // perfectly conditioned).
    if (res.per_source_deg2.maxCoeff() > 180.0 * 180.0)
        unidentifiable("vacuous bound " + std::to_string(res.per_source_deg2.maxCoeff()) +
                       " deg^2");
    return res;
}

} // namespace osa
