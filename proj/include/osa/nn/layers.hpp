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

#ifndef OSA_NN_LAYERS_HPP
#define OSA_NN_LAYERS_HPP

#include "osa/nn/tensor.hpp"
#include "osa/rng.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <memory>

namespace osa::nn
{

template <typename T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T> using MatCM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T> using MapRM = Eigen::Map<MatRM<T>>;
template <typename T> using ConstMapRM = Eigen::Map<const MatRM<T>>;

enum class LayerKind : uint8_t
{
    conv2d = 1,
    transposed_conv2d = 2,
    batchnorm = 3,
    relu = 4,
    sigmoid = 5,
    dense = 6,
    dropout = 7,
    flatten = 8,
};

// Serializable description of one layer; unused fields stay zero.
struct LayerSpec
{
    LayerKind kind = LayerKind::relu;
    int in_channels = 0;
    int out_channels = 0;
    int kernel = 0;
    int stride = 1;
    int padding = 0;
    int in_features = 0;
    int out_features = 0;
    double rate = 0.0;     // dropout
    double epsilon = 0.0;  // batchnorm
    double momentum = 0.0; // batchnorm running-stat update
};

inline int conv_out_dim(int in, int kernel, int stride, int padding)
{
    int span = in + 2 * padding - kernel;
    if (span < 0 || span % stride != 0)
        throw std::invalid_argument("convolution geometry does not tile the input");
    return span / stride + 1;
}

inline int tconv_out_dim(int in, int kernel, int stride, int padding)
{
    int out = (in - 1) * stride - 2 * padding + kernel;
    if (out < 1)
        throw std::invalid_argument("transposed convolution output collapses to nothing");
    return out;
}

// Patch-gathering for GEMM-based convolution. Column j = ((n*OH+oh)*OW+ow)
// holds the receptive field of output pixel (oh, ow) of sample n, rows
// ordered ((c*k + kh)*k + kw). Out-of-bounds taps read zero.
template <typename T>
MatCM<T> im2col(const Tensor<T> &x, int kernel, int stride, int padding, int &out_h, int &out_w)
{
    const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    out_h = conv_out_dim(h, kernel, stride, padding);
    out_w = conv_out_dim(w, kernel, stride, padding);
    const int rows = c * kernel * kernel;
    MatCM<T> cols = MatCM<T>::Zero(rows, Eigen::Index(int64_t(n) * out_h * out_w));
    for (int ni = 0; ni < n; ++ni)
        for (int oh = 0; oh < out_h; ++oh)
            for (int ow = 0; ow < out_w; ++ow)
            {
                const Eigen::Index col = (Eigen::Index(ni) * out_h + oh) * out_w + ow;
                T *dst = cols.data() + col * rows;
                for (int ci = 0; ci < c; ++ci)
                    for (int kh = 0; kh < kernel; ++kh)
                    {
                        const int ih = oh * stride + kh - padding;
                        T *row_dst = dst + (ci * kernel + kh) * kernel;
                        if (ih < 0 || ih >= h)
                            continue;
                        for (int kw = 0; kw < kernel; ++kw)
                        {
                            const int iw = ow * stride + kw - padding;
                            if (iw >= 0 && iw < w)
                                row_dst[kw] = x.at(ni, ci, ih, iw);
                        }
                    }
            }
    return cols;
}

// Exact adjoint of im2col: scatter-adds columns back into an image tensor.
template <typename T>
Tensor<T> col2im(const MatCM<T> &cols, int n, int c, int h, int w, int kernel, int stride,
                 int padding)
{
    const int out_h = conv_out_dim(h, kernel, stride, padding);
    const int out_w = conv_out_dim(w, kernel, stride, padding);
    Tensor<T> img({n, c, h, w});
    for (int ni = 0; ni < n; ++ni)
        for (int oh = 0; oh < out_h; ++oh)
            for (int ow = 0; ow < out_w; ++ow)
            {
                const Eigen::Index col = (Eigen::Index(ni) * out_h + oh) * out_w + ow;
                const T *src = cols.data() + col * cols.rows();
                for (int ci = 0; ci < c; ++ci)
                    for (int kh = 0; kh < kernel; ++kh)
                    {
                        const int ih = oh * stride + kh - padding;
                        const T *row_src = src + (ci * kernel + kh) * kernel;
                        if (ih < 0 || ih >= h)
                            continue;
                        for (int kw = 0; kw < kernel; ++kw)
                        {
                            const int iw = ow * stride + kw - padding;
                            if (iw >= 0 && iw < w)
                                img.at(ni, ci, ih, iw) += row_src[kw];
                        }
                    }
            }
    return img;
}

template <typename T> class Layer
{
  public:
    virtual ~Layer() = default;
    // Training-path forward; caches whatever backward needs.
    virtual Tensor<T> forward(const Tensor<T> &x, bool train) = 0;
    // Gradient of the loss w.r.t. this layer's input; fills parameter grads.
    virtual Tensor<T> backward(const Tensor<T> &grad_out) = 0;
    // Cache-free evaluation path; safe to call concurrently.
    virtual Tensor<T> infer(const Tensor<T> &x) const = 0;
    virtual LayerSpec spec() const = 0;
    virtual std::vector<int> output_shape(const std::vector<int> &in) const { return in; }
    virtual std::vector<Tensor<T> *> parameters() { return {}; }
    virtual std::vector<Tensor<T> *> gradients() { return {}; }
    // Non-trainable persistent state (batchnorm running statistics)
    virtual std::vector<Tensor<T> *> state() { return {}; }
    virtual void init_params(uint64_t) {}
    virtual void reset_rng(uint64_t) {}
};

template <typename T> class Conv2d : public Layer<T>
{
  public:
    Conv2d(int in_channels, int out_channels, int kernel, int stride = 1, int padding = 0)
        : in_(in_channels), out_(out_channels), kernel_(kernel), stride_(stride), pad_(padding),
          weight_({out_channels, in_channels, kernel, kernel}), bias_({out_channels}),
          weight_grad_(weight_.shape), bias_grad_(bias_.shape)
    {
        if (in_channels < 1 || out_channels < 1 || kernel < 1 || stride < 1 || padding < 0)
            throw std::invalid_argument("bad conv2d geometry");
    }

    static int same_padding(int kernel)
    {
        if (kernel % 2 == 0)
            throw std::invalid_argument("same-padding needs an odd kernel");
        return (kernel - 1) / 2;
    }

    Tensor<T> forward(const Tensor<T> &x, bool train) override
    {
        if (!train)
            return infer(x);
        input_ = x;
        return run(x);
    }

    Tensor<T> infer(const Tensor<T> &x) const override { return run(x); }

    Tensor<T> backward(const Tensor<T> &grad_out) override
    {
        const int n = input_.dim(0);
        int oh = 0, ow = 0;
        MatCM<T> cols = im2col(input_, kernel_, stride_, pad_, oh, ow);
        const Eigen::Index spatial = Eigen::Index(oh) * ow;

        // gather grad_out into (out_, n*spatial)
        MatCM<T> gmat(out_, Eigen::Index(n) * spatial);
        for (int ni = 0; ni < n; ++ni)
            gmat.middleCols(ni * spatial, spatial) =
                ConstMapRM<T>(grad_out.ptr() + int64_t(ni) * out_ * spatial, out_, spatial);

        MapRM<T> wgrad(weight_grad_.ptr(), out_, in_ * kernel_ * kernel_);
        wgrad = gmat * cols.transpose();
        MapRM<T> bgrad(bias_grad_.ptr(), out_, 1);
        bgrad = gmat.rowwise().sum();

        ConstMapRM<T> wmat(weight_.ptr(), out_, in_ * kernel_ * kernel_);
        MatCM<T> grad_cols = wmat.transpose() * gmat;
        return col2im(grad_cols, n, in_, input_.dim(2), input_.dim(3), kernel_, stride_, pad_);
    }

    LayerSpec spec() const override
    {
        LayerSpec s;
        s.kind = LayerKind::conv2d;
        s.in_channels = in_;
        s.out_channels = out_;
        s.kernel = kernel_;
        s.stride = stride_;
        s.padding = pad_;
        return s;
    }

    std::vector<int> output_shape(const std::vector<int> &in) const override
    {
        if (in.size() != 4 || in[1] != in_)
            throw std::invalid_argument("conv2d: expected (N," + std::to_string(in_) + ",H,W)");
        return {in[0], out_, conv_out_dim(in[2], kernel_, stride_, pad_),
                conv_out_dim(in[3], kernel_, stride_, pad_)};
    }

    std::vector<Tensor<T> *> parameters() override { return {&weight_, &bias_}; }
    std::vector<Tensor<T> *> gradients() override { return {&weight_grad_, &bias_grad_}; }

    void init_params(uint64_t seed) override
    {
        Rng rng(seed);
        const double stddev = std::sqrt(2.0 / (double(in_) * kernel_ * kernel_));
        for (auto &v : weight_.data)
            v = T(rng.normal() * stddev);
        bias_.fill(T(0));
    }

    Tensor<T> &weight() { return weight_; }
    Tensor<T> &bias() { return bias_; }

  private:
    Tensor<T> run(const Tensor<T> &x) const
    {
        if (x.rank() != 4 || x.dim(1) != in_)
            throw std::invalid_argument("conv2d: expected (N," + std::to_string(in_) + ",H,W), got " +
                                        x.shape_string());
        int oh = 0, ow = 0;
        MatCM<T> cols = im2col(x, kernel_, stride_, pad_, oh, ow);
        const int n = x.dim(0);
        const Eigen::Index spatial = Eigen::Index(oh) * ow;

        ConstMapRM<T> wmat(weight_.ptr(), out_, in_ * kernel_ * kernel_);
        MatCM<T> omat = wmat * cols;

        Tensor<T> out({n, out_, oh, ow});
        for (int ni = 0; ni < n; ++ni)
            MapRM<T>(out.ptr() + int64_t(ni) * out_ * spatial, out_, spatial) =
                omat.middleCols(ni * spatial, spatial);
        const T *b = bias_.ptr();
        for (int ni = 0; ni < n; ++ni)
            for (int co = 0; co < out_; ++co)
            {
                T *p = out.ptr() + (int64_t(ni) * out_ + co) * spatial;
                for (Eigen::Index i = 0; i < spatial; ++i)
                    p[i] += b[co];
            }
        return out;
    }

    int in_, out_, kernel_, stride_, pad_;
    Tensor<T> weight_, bias_, weight_grad_, bias_grad_;
    Tensor<T> input_;
};

// Adjoint of Conv2d with the same kernel/stride/padding: its forward map is
// exactly the input-gradient map of the matching convolution, which makes the
// decoder restore whatever spatial shape the encoder consumed.
template <typename T> class TransposedConv2d : public Layer<T>
{
  public:
    TransposedConv2d(int in_channels, int out_channels, int kernel, int stride = 1, int padding = 0)
        : in_(in_channels), out_(out_channels), kernel_(kernel), stride_(stride), pad_(padding),
          weight_({in_channels, out_channels, kernel, kernel}), bias_({out_channels}),
          weight_grad_(weight_.shape), bias_grad_(bias_.shape)
    {
        if (in_channels < 1 || out_channels < 1 || kernel < 1 || stride < 1 || padding < 0)
            throw std::invalid_argument("bad transposed_conv2d geometry");
    }

    Tensor<T> forward(const Tensor<T> &x, bool train) override
    {
        if (!train)
            return infer(x);
        input_ = x;
        return run(x);
    }

    Tensor<T> infer(const Tensor<T> &x) const override { return run(x); }

    Tensor<T> backward(const Tensor<T> &grad_out) override
    {
        const int n = input_.dim(0);
        const int ih = input_.dim(2), iw = input_.dim(3);
        const Eigen::Index spatial = Eigen::Index(ih) * iw;

        int oh = 0, ow = 0;
        MatCM<T> grad_cols = im2col(grad_out, kernel_, stride_, pad_, oh, ow);
        if (oh != ih || ow != iw)
            throw std::invalid_argument("transposed_conv2d backward: stale cache");

        MatCM<T> xmat(in_, Eigen::Index(n) * spatial);
        for (int ni = 0; ni < n; ++ni)
            xmat.middleCols(ni * spatial, spatial) =
                ConstMapRM<T>(input_.ptr() + int64_t(ni) * in_ * spatial, in_, spatial);

        MapRM<T> wgrad(weight_grad_.ptr(), in_, out_ * kernel_ * kernel_);
        wgrad = xmat * grad_cols.transpose();

        const int gh = grad_out.dim(2), gw = grad_out.dim(3);
        MapRM<T> bgrad(bias_grad_.ptr(), out_, 1);
        bgrad.setZero();
        for (int ni = 0; ni < n; ++ni)
            bgrad += ConstMapRM<T>(grad_out.ptr() + int64_t(ni) * out_ * gh * gw, out_,
                                   Eigen::Index(gh) * gw)
                         .rowwise()
                         .sum();

        ConstMapRM<T> wmat(weight_.ptr(), in_, out_ * kernel_ * kernel_);
        MatCM<T> grad_xmat = wmat * grad_cols;
        Tensor<T> grad_in({n, in_, ih, iw});
        for (int ni = 0; ni < n; ++ni)
            MapRM<T>(grad_in.ptr() + int64_t(ni) * in_ * spatial, in_, spatial) =
                grad_xmat.middleCols(ni * spatial, spatial);
        return grad_in;
    }

    LayerSpec spec() const override
    {
        LayerSpec s;
        s.kind = LayerKind::transposed_conv2d;
        s.in_channels = in_;
        s.out_channels = out_;
        s.kernel = kernel_;
        s.stride = stride_;
        s.padding = pad_;
        return s;
    }

    std::vector<int> output_shape(const std::vector<int> &in) const override
    {
        if (in.size() != 4 || in[1] != in_)
            throw std::invalid_argument("transposed_conv2d: expected (N," + std::to_string(in_) +
                                        ",H,W)");
        return {in[0], out_, tconv_out_dim(in[2], kernel_, stride_, pad_),
                tconv_out_dim(in[3], kernel_, stride_, pad_)};
    }

    std::vector<Tensor<T> *> parameters() override { return {&weight_, &bias_}; }
    std::vector<Tensor<T> *> gradients() override { return {&weight_grad_, &bias_grad_}; }

    void init_params(uint64_t seed) override
    {
        Rng rng(seed);
        const double stddev = std::sqrt(2.0 / (double(in_) * kernel_ * kernel_));
        for (auto &v : weight_.data)
            v = T(rng.normal() * stddev);
        bias_.fill(T(0));
    }

    Tensor<T> &weight() { return weight_; }

  private:
    Tensor<T> run(const Tensor<T> &x) const
    {
        if (x.rank() != 4 || x.dim(1) != in_)
            throw std::invalid_argument("transposed_conv2d: expected (N," + std::to_string(in_) +
                                        ",H,W), got " + x.shape_string());
        const int n = x.dim(0), ih = x.dim(2), iw = x.dim(3);
        const int oh = tconv_out_dim(ih, kernel_, stride_, pad_);
        const int ow = tconv_out_dim(iw, kernel_, stride_, pad_);
        const Eigen::Index spatial = Eigen::Index(ih) * iw;

        MatCM<T> xmat(in_, Eigen::Index(n) * spatial);
        for (int ni = 0; ni < n; ++ni)
            xmat.middleCols(ni * spatial, spatial) =
                ConstMapRM<T>(x.ptr() + int64_t(ni) * in_ * spatial, in_, spatial);

        ConstMapRM<T> wmat(weight_.ptr(), in_, out_ * kernel_ * kernel_);
        MatCM<T> cols = wmat.transpose() * xmat;
        Tensor<T> out = col2im(cols, n, out_, oh, ow, kernel_, stride_, pad_);

        const T *b = bias_.ptr();
        const Eigen::Index ospatial = Eigen::Index(oh) * ow;
        for (int ni = 0; ni < n; ++ni)
            for (int co = 0; co < out_; ++co)
            {
                T *p = out.ptr() + (int64_t(ni) * out_ + co) * ospatial;
                for (Eigen::Index i = 0; i < ospatial; ++i)
                    p[i] += b[co];
            }
        return out;
    }

    int in_, out_, kernel_, stride_, pad_;
    Tensor<T> weight_, bias_, weight_grad_, bias_grad_;
    Tensor<T> input_;
};

template <typename T> class BatchNorm2d : public Layer<T>
{
  public:
    explicit BatchNorm2d(int channels, double epsilon = 1e-5, double momentum = 0.9)
        : channels_(channels), eps_(epsilon), momentum_(momentum), gamma_({channels}),
          beta_({channels}), gamma_grad_({channels}), beta_grad_({channels}),
          running_mean_({channels}), running_var_({channels})
    {
        gamma_.fill(T(1));
        running_var_.fill(T(1));
    }

    Tensor<T> forward(const Tensor<T> &x, bool train) override
    {
        if (!train)
            return infer(x);
        check(x);
        const int n = x.dim(0), h = x.dim(2), w = x.dim(3);
        if (n < 2)
            throw std::invalid_argument("batchnorm training needs batch size >= 2");
        const int64_t per_channel = int64_t(n) * h * w;

        xhat_ = Tensor<T>(x.shape);
        inv_std_.assign(size_t(channels_), 0.0);
        Tensor<T> out(x.shape);
        for (int c = 0; c < channels_; ++c)
        {
            double mean = 0.0, var = 0.0;
            for_channel(x, c, [&](const T &v) { mean += double(v); });
            mean /= double(per_channel);
            for_channel(x, c, [&](const T &v) { var += (double(v) - mean) * (double(v) - mean); });
            var /= double(per_channel);

            const double inv = 1.0 / std::sqrt(var + eps_);
            inv_std_[size_t(c)] = inv;
            running_mean_[c] = T(momentum_ * double(running_mean_[c]) + (1.0 - momentum_) * mean);
            running_var_[c] = T(momentum_ * double(running_var_[c]) + (1.0 - momentum_) * var);

            const double g = double(gamma_[c]), b = double(beta_[c]);
            transform_channel(x, xhat_, out, c, [&](double v, double &xh) {
                xh = (v - mean) * inv;
                return g * xh + b;
            });
        }
        return out;
    }

    Tensor<T> infer(const Tensor<T> &x) const override
    {
        check(x);
        Tensor<T> out(x.shape);
        const int n = x.dim(0), h = x.dim(2), w = x.dim(3);
        const int64_t hw = int64_t(h) * w;
        for (int ni = 0; ni < n; ++ni)
            for (int c = 0; c < channels_; ++c)
            {
                const double inv = 1.0 / std::sqrt(double(running_var_[c]) + eps_);
                const double g = double(gamma_[c]), b = double(beta_[c]);
                const double m = double(running_mean_[c]);
                const T *src = x.ptr() + (int64_t(ni) * channels_ + c) * hw;
                T *dst = out.ptr() + (int64_t(ni) * channels_ + c) * hw;
                for (int64_t i = 0; i < hw; ++i)
                    dst[i] = T(g * (double(src[i]) - m) * inv + b);
            }
        return out;
    }

    Tensor<T> backward(const Tensor<T> &grad_out) override
    {
        check_same_shape(grad_out, xhat_, "batchnorm backward");
        const int n = grad_out.dim(0), h = grad_out.dim(2), w = grad_out.dim(3);
        const int64_t per_channel = int64_t(n) * h * w;
        Tensor<T> grad_in(grad_out.shape);
        for (int c = 0; c < channels_; ++c)
        {
            double sum_g = 0.0, sum_gx = 0.0;
            for_channel_pair(grad_out, xhat_, c, [&](const T &g, const T &xh) {
                sum_g += double(g);
                sum_gx += double(g) * double(xh);
            });
            gamma_grad_[c] = T(sum_gx);
            beta_grad_[c] = T(sum_g);

            const double gmean = sum_g / double(per_channel);
            const double gxmean = sum_gx / double(per_channel);
            const double scale = double(gamma_[c]) * inv_std_[size_t(c)];
            const int64_t hw = int64_t(h) * w;
            for (int ni = 0; ni < n; ++ni)
            {
                const T *gp = grad_out.ptr() + (int64_t(ni) * channels_ + c) * hw;
                const T *xp = xhat_.ptr() + (int64_t(ni) * channels_ + c) * hw;
                T *dp = grad_in.ptr() + (int64_t(ni) * channels_ + c) * hw;
                for (int64_t i = 0; i < hw; ++i)
                    dp[i] = T(scale * (double(gp[i]) - gmean - double(xp[i]) * gxmean));
            }
        }
        return grad_in;
    }

    LayerSpec spec() const override
    {
        LayerSpec s;
        s.kind = LayerKind::batchnorm;
        s.in_channels = channels_;
        s.out_channels = channels_;
        s.epsilon = eps_;
        s.momentum = momentum_;
        return s;
    }

    std::vector<Tensor<T> *> parameters() override { return {&gamma_, &beta_}; }
    std::vector<Tensor<T> *> gradients() override { return {&gamma_grad_, &beta_grad_}; }
    std::vector<Tensor<T> *> state() override { return {&running_mean_, &running_var_}; }

  private:
    void check(const Tensor<T> &x) const
    {
        if (x.rank() != 4 || x.dim(1) != channels_)
            throw std::invalid_argument("batchnorm: expected (N," + std::to_string(channels_) +
                                        ",H,W), got " + x.shape_string());
    }

    template <typename F> void for_channel(const Tensor<T> &x, int c, F f) const
    {
        const int n = x.dim(0);
        const int64_t hw = int64_t(x.dim(2)) * x.dim(3);
        for (int ni = 0; ni < n; ++ni)
        {
            const T *p = x.ptr() + (int64_t(ni) * channels_ + c) * hw;
            for (int64_t i = 0; i < hw; ++i)
                f(p[i]);
        }
    }

    template <typename F>
    void for_channel_pair(const Tensor<T> &a, const Tensor<T> &b, int c, F f) const
    {
        const int n = a.dim(0);
        const int64_t hw = int64_t(a.dim(2)) * a.dim(3);
        for (int ni = 0; ni < n; ++ni)
        {
            const T *pa = a.ptr() + (int64_t(ni) * channels_ + c) * hw;
            const T *pb = b.ptr() + (int64_t(ni) * channels_ + c) * hw;
            for (int64_t i = 0; i < hw; ++i)
                f(pa[i], pb[i]);
        }
    }

    template <typename F>
    void transform_channel(const Tensor<T> &x, Tensor<T> &xhat, Tensor<T> &out, int c, F f) const
    {
        const int n = x.dim(0);
        const int64_t hw = int64_t(x.dim(2)) * x.dim(3);
        for (int ni = 0; ni < n; ++ni)
        {
            const T *src = x.ptr() + (int64_t(ni) * channels_ + c) * hw;
            T *xh = xhat.ptr() + (int64_t(ni) * channels_ + c) * hw;
            T *dst = out.ptr() + (int64_t(ni) * channels_ + c) * hw;
            for (int64_t i = 0; i < hw; ++i)
            {
                double h = 0.0;
                dst[i] = T(f(double(src[i]), h));
                xh[i] = T(h);
            }
        }
    }

    int channels_;
    double eps_, momentum_;
    Tensor<T> gamma_, beta_, gamma_grad_, beta_grad_;
    Tensor<T> running_mean_, running_var_;
    Tensor<T> xhat_;
    std::vector<double> inv_std_;
};

template <typename T> class ReLU : public Layer<T>
{
  public:
    Tensor<T> forward(const Tensor<T> &x, bool train) override
    {
        if (!train)
            return infer(x);
        input_ = x;
        return infer(x);
    }
    Tensor<T> infer(const Tensor<T> &x) const override
    {
        Tensor<T> out(x.shape);
        for (int64_t i = 0; i < x.numel(); ++i)
            out[i] = x[i] > T(0) ? x[i] : T(0);
        return out;
    }
    Tensor<T> backward(const Tensor<T> &grad_out) override
    {
        check_same_shape(grad_out, input_, "relu backward");
        Tensor<T> grad(grad_out.shape);
        for (int64_t i = 0; i < grad.numel(); ++i)
            grad[i] = input_[i] > T(0) ? grad_out[i] : T(0);
        return grad;
    }
    LayerSpec spec() const override
    {
        LayerSpec s;
        s.kind = LayerKind::relu;
        return s;
    }

  private:
    Tensor<T> input_;
};

template <typename T> class Sigmoid : public Layer<T>
{
  public:
    Tensor<T> forward(const Tensor<T> &x, bool train) override
    {
        Tensor<T> out = infer(x);
        if (train)
            output_ = out;
        return out;
    }
    Tensor<T> infer(const Tensor<T> &x) const override
    {
        Tensor<T> out(x.shape);
        for (int64_t i = 0; i < x.numel(); ++i)
            out[i] = T(1) / (T(1) + std::exp(-x[i]));
        return out;
    }
    Tensor<T> backward(const Tensor<T> &grad_out) override
    {
        check_same_shape(grad_out, output_, "sigmoid backward");
        Tensor<T> grad(grad_out.shape);
        for (int64_t i = 0; i < grad.numel(); ++i)
            grad[i] = grad_out[i] * output_[i] * (T(1) - output_[i]);
        return grad;
    }
    LayerSpec spec() const override
    {
        LayerSpec s;
        s.kind = LayerKind::sigmoid;
        return s;
    }

  private:
    Tensor<T> output_;
};

template <typename T> class Dense : public Layer<T>
{
  public:
    Dense(int in_features, int out_features)
        : in_(in_features), out_(out_features), weight_({out_features, in_features}),
          bias_({out_features}), weight_grad_(weight_.shape), bias_grad_(bias_.shape)
    {
        if (in_features < 1 || out_features < 1)
            throw std::invalid_argument("bad dense geometry");
    }

    Tensor<T> forward(const Tensor<T> &x, bool train) override
    {
        if (!train)
            return infer(x);
        input_ = x;
        return infer(x);
    }

    Tensor<T> infer(const Tensor<T> &x) const override
    {
        if (x.rank() != 2 || x.dim(1) != in_)
            throw std::invalid_argument("dense: expected (N," + std::to_string(in_) + "), got " +
                                        x.shape_string());
        const int n = x.dim(0);
        Tensor<T> out({n, out_});
        ConstMapRM<T> xm(x.ptr(), n, in_);
        ConstMapRM<T> wm(weight_.ptr(), out_, in_);
        MapRM<T> om(out.ptr(), n, out_);
        om.noalias() = xm * wm.transpose();
        ConstMapRM<T> bm(bias_.ptr(), 1, out_);
        om.rowwise() += bm.row(0);
        return out;
    }

    Tensor<T> backward(const Tensor<T> &grad_out) override
    {
        const int n = input_.dim(0);
        ConstMapRM<T> gm(grad_out.ptr(), n, out_);
        ConstMapRM<T> xm(input_.ptr(), n, in_);
        ConstMapRM<T> wm(weight_.ptr(), out_, in_);

        MapRM<T> wg(weight_grad_.ptr(), out_, in_);
        wg.noalias() = gm.transpose() * xm;
        MapRM<T> bg(bias_grad_.ptr(), 1, out_);
        bg = gm.colwise().sum();

        Tensor<T> grad_in({n, in_});
        MapRM<T> gi(grad_in.ptr(), n, in_);
        gi.noalias() = gm * wm;
        return grad_in;
    }

    LayerSpec spec() const override
    {
        LayerSpec s;
        s.kind = LayerKind::dense;
        s.in_features = in_;
        s.out_features = out_;
        return s;
    }

    std::vector<int> output_shape(const std::vector<int> &in) const override
    {
        if (in.size() != 2 || in[1] != in_)
            throw std::invalid_argument("dense: bad input shape");
        return {in[0], out_};
    }

    std::vector<Tensor<T> *> parameters() override { return {&weight_, &bias_}; }
    std::vector<Tensor<T> *> gradients() override { return {&weight_grad_, &bias_grad_}; }

    void init_params(uint64_t seed) override
    {
        Rng rng(seed);
        const double stddev = std::sqrt(2.0 / double(in_));
        for (auto &v : weight_.data)
            v = T(rng.normal() * stddev);
        bias_.fill(T(0));
    }

    Tensor<T> &weight() { return weight_; }
    Tensor<T> &bias() { return bias_; }

  private:
    int in_, out_;
    Tensor<T> weight_, bias_, weight_grad_, bias_grad_;
    Tensor<T> input_;
};

// Inverted dropout: training scales survivors by 1/(1-rate) so evaluation is
// the identity.
template <typename T> class Dropout : public Layer<T>
{
  public:
    explicit Dropout(double rate, uint64_t seed = 0) : rate_(rate), rng_(seed)
    {
        if (rate < 0.0 || rate >= 1.0)
            throw std::invalid_argument("dropout rate must lie in [0, 1)");
    }

    Tensor<T> forward(const Tensor<T> &x, bool train) override
    {
        if (!train || rate_ == 0.0)
        {
            mask_ = Tensor<T>();
            if (train)
            {
                mask_ = Tensor<T>(x.shape);
                mask_.fill(T(1));
            }
            return x;
        }
        mask_ = Tensor<T>(x.shape);
        const T keep_scale = T(1.0 / (1.0 - rate_));
        Tensor<T> out(x.shape);
        for (int64_t i = 0; i < x.numel(); ++i)
        {
            const bool keep = rng_.uniform() >= rate_;
            mask_[i] = keep ? keep_scale : T(0);
            out[i] = x[i] * mask_[i];
        }
        return out;
    }

    Tensor<T> infer(const Tensor<T> &x) const override { return x; }

    Tensor<T> backward(const Tensor<T> &grad_out) override
    {
        check_same_shape(grad_out, mask_, "dropout backward");
        Tensor<T> grad(grad_out.shape);
        for (int64_t i = 0; i < grad.numel(); ++i)
            grad[i] = grad_out[i] * mask_[i];
        return grad;
    }

    LayerSpec spec() const override
    {
        LayerSpec s;
        s.kind = LayerKind::dropout;
        s.rate = rate_;
        return s;
    }

    void reset_rng(uint64_t seed) override { rng_ = Rng(seed); }

  private:
    double rate_;
    Rng rng_;
    Tensor<T> mask_;
};

template <typename T> class Flatten : public Layer<T>
{
  public:
    Tensor<T> forward(const Tensor<T> &x, bool train) override
    {
        if (train)
            saved_shape_ = x.shape;
        return infer(x);
    }
    Tensor<T> infer(const Tensor<T> &x) const override
    {
        if (x.rank() < 2)
            throw std::invalid_argument("flatten: need a batch dimension");
        return x.reshaped({x.dim(0), int(x.numel() / x.dim(0))});
    }
    Tensor<T> backward(const Tensor<T> &grad_out) override
    {
        return grad_out.reshaped(saved_shape_);
    }
    LayerSpec spec() const override
    {
        LayerSpec s;
        s.kind = LayerKind::flatten;
        return s;
    }
    std::vector<int> output_shape(const std::vector<int> &in) const override
    {
        int64_t rest = 1;
        for (size_t i = 1; i < in.size(); ++i)
            rest *= in[i];
        return {in[0], int(rest)};
    }

  private:
    std::vector<int> saved_shape_;
};

} // namespace osa::nn

#endif
