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

#ifndef OSA_NN_TENSOR_HPP
#define OSA_NN_TENSOR_HPP

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace osa::nn
{

// Dense row-major tensor. Convolution code interprets 4-d shapes as
// (batch, channels, height, width); dense layers use (batch, features).
template <typename T> struct Tensor
{
    std::vector<int> shape;
    std::vector<T> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)), data(size_t(count(shape)), T(0)) {}

    static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }

    static int64_t count(const std::vector<int> &s)
    {
        int64_t n = 1;
        for (int d : s)
        {
            if (d < 0)
                throw std::invalid_argument("negative tensor dimension");
            n *= d;
        }
        return n;
    }

    int64_t numel() const { return int64_t(data.size()); }
    int rank() const { return int(shape.size()); }
    int dim(int i) const { return shape[size_t(i)]; }

    T *ptr() { return data.data(); }
    const T *ptr() const { return data.data(); }

    T &operator[](int64_t i) { return data[size_t(i)]; }
    const T &operator[](int64_t i) const { return data[size_t(i)]; }

    // 4-d accessor (n, c, h, w)
    T &at(int n, int c, int h, int w)
    {
        return data[size_t(((int64_t(n) * shape[1] + c) * shape[2] + h) * shape[3] + w)];
    }
    const T &at(int n, int c, int h, int w) const
    {
        return data[size_t(((int64_t(n) * shape[1] + c) * shape[2] + h) * shape[3] + w)];
    }

    void fill(T v) { std::fill(data.begin(), data.end(), v); }

    Tensor reshaped(std::vector<int> s) const
    {
        if (count(s) != numel())
            throw std::invalid_argument("reshape changes element count");
        Tensor out;
        out.shape = std::move(s);
        out.data = data;
        return out;
    }

    bool same_shape(const Tensor &other) const { return shape == other.shape; }

    std::string shape_string() const
    {
        std::string s = "(";
        for (size_t i = 0; i < shape.size(); ++i)
            s += (i ? "," : "") + std::to_string(shape[i]);
        return s + ")";
    }
};

template <typename T> void check_same_shape(const Tensor<T> &a, const Tensor<T> &b, const char *where)
{
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(where) + ": shape mismatch " + a.shape_string() +
                                    " vs " + b.shape_string());
}

} // namespace osa::nn

#endif
