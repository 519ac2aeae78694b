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

#ifndef OSA_NN_LOSSES_HPP
#define OSA_NN_LOSSES_HPP

#include "osa/nn/tensor.hpp"

#include <cmath>

namespace osa::nn
{

template <typename T> struct LossResult
{
    double value = 0.0;
    Tensor<T> grad; // d value / d prediction
};

// Mean over the batch of squared Frobenius norms: (1/B) sum_i ||p_i - t_i||^2.
// Gradient: 2 (p - t) / B.
template <typename T> LossResult<T> mse_loss(const Tensor<T> &pred, const Tensor<T> &target)
{
    check_same_shape(pred, target, "mse_loss");
    const int batch = pred.dim(0);
    LossResult<T> res;
    res.grad = Tensor<T>(pred.shape);
    double sum = 0.0;
    const double inv_b = 1.0 / double(batch);
    for (int64_t i = 0; i < pred.numel(); ++i)
    {
        const double d = double(pred[i]) - double(target[i]);
        sum += d * d;
        res.grad[i] = T(2.0 * d * inv_b);
    }
    res.value = sum * inv_b;
    return res;
}

// Binary cross-entropy averaged over batch and labels; predictions are
// clamped to [eps, 1-eps] with eps = 1e-7 before the logs.
template <typename T> LossResult<T> bce_loss(const Tensor<T> &pred, const Tensor<T> &target)
{
    check_same_shape(pred, target, "bce_loss");
    const int batch = pred.dim(0);
    const int64_t labels = pred.numel() / batch;
    constexpr double eps = 1e-7;

    LossResult<T> res;
    res.grad = Tensor<T>(pred.shape);
    double sum = 0.0;
    const double inv = 1.0 / (double(batch) * double(labels));
    for (int64_t i = 0; i < pred.numel(); ++i)
    {
        double p = double(pred[i]);
        p = p < eps ? eps : (p > 1.0 - eps ? 1.0 - eps : p);
        const double z = double(target[i]);
        sum -= z * std::log(p) + (1.0 - z) * std::log(1.0 - p);
        res.grad[i] = T((p - z) / (p * (1.0 - p)) * inv);
    }
    res.value = sum * inv;
    return res;
}

} // namespace osa::nn

#endif
