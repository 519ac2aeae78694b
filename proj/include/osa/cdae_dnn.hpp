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

#ifndef OSA_CDAE_DNN_HPP
#define OSA_CDAE_DNN_HPP

#include "osa/dataset.hpp"
#include "osa/nn/losses.hpp"
#include "osa/nn/model.hpp"

#include <algorithm>
#include <functional>
#include <memory>

namespace osa
{

// Denoising autoencoder: encoder blocks of conv+batchnorm+relu, decoder of
// mirrored transposed convolutions. Stride 1 with same padding keeps every
// intermediate plane at K x K, which satisfies the encoder/decoder size
// symmetry without output-shape bookkeeping. The final decoder stage is a
// plain transposed convolution (no batchnorm, identity activation): the
// regression target has signed real/imaginary channels, so a ReLU output
// stage cannot represent it.
struct CdaeArch
{
    std::vector<int> channels = {16, 32, 64}; // encoder feature maps per block
    int kernel = 3;

    int depth() const { return int(channels.size()); }
};

// Classifier head: flatten to 2K^2, hidden dense+relu+dropout stack, then a
// dense output of grid width L under a sigmoid.
struct FcArch
{
    std::vector<int> widths = {2048, 4096, 2048};
    double dropout_rate = 0.2;
};

struct TrainHyper
{
    int batch_size = 1000;
    int epochs = 30;
    double learning_rate = 0.1;
    uint64_t seed = 1;
    double validation_fraction = 0.1;

    // Publication-scale settings (batch 1000, 30 epochs, SGD lr 0.1)
    static TrainHyper paper_scale() { return TrainHyper{}; }
    // Desk-scale settings for small datasets
    static TrainHyper toy_scale()
    {
        TrainHyper h;
        h.batch_size = 64;
        h.epochs = 100;
        h.learning_rate = 0.05;
        return h;
    }
};

struct TrainReport
{
    std::vector<double> epoch_loss; // one entry per completed epoch
    TrainHyper hyper;
    double final_validation_loss = 0.0;
    double denoise_ratio_median = 0.0; // CDAE only: ||R_hat - R|| / ||R_noisy - R||
    bool diverged = false;
};

struct PredictResult
{
    std::vector<double> probabilities; // length L
    std::vector<double> thetas_deg;    // Q estimates, ascending
    bool ambiguous = false;            // tie at the selection boundary
};

template <typename T> nn::Sequential<T> build_cdae(const CdaeArch &arch, int k, uint64_t seed)
{
    if (arch.channels.empty())
        throw std::invalid_argument("cdae needs at least one encoder block");
    const int pad = nn::Conv2d<T>::same_padding(arch.kernel);

    nn::Sequential<T> model;
    int in_ch = 2;
    for (int h = 0; h < arch.depth(); ++h)
    {
        model.template emplace<nn::Conv2d<T>>(in_ch, arch.channels[size_t(h)], arch.kernel, 1, pad);
        model.template emplace<nn::BatchNorm2d<T>>(arch.channels[size_t(h)]);
        model.template emplace<nn::ReLU<T>>();
        in_ch = arch.channels[size_t(h)];
    }
    for (int h = arch.depth() - 1; h >= 1; --h)
    {
        model.template emplace<nn::TransposedConv2d<T>>(arch.channels[size_t(h)],
                                                        arch.channels[size_t(h - 1)], arch.kernel,
                                                        1, pad);
        model.template emplace<nn::BatchNorm2d<T>>(arch.channels[size_t(h - 1)]);
        model.template emplace<nn::ReLU<T>>();
    }
    model.template emplace<nn::TransposedConv2d<T>>(arch.channels[0], 2, arch.kernel, 1, pad);

    std::vector<int> out = model.output_shape({1, 2, k, k});
    if (out != std::vector<int>{1, 2, k, k})
        throw std::invalid_argument("cdae shape algebra failure: decoder does not restore the input shape");

    model.init_params(seed);
    model.reset_rng(Rng::derive(seed, 7));
    return model;
}

template <typename T>
nn::Sequential<T> build_fc(const FcArch &arch, int k, int grid_size, uint64_t seed)
{
    nn::Sequential<T> model;
    model.template emplace<nn::Flatten<T>>();
    int in = 2 * k * k;
    for (int width : arch.widths)
    {
        model.template emplace<nn::Dense<T>>(in, width);
        model.template emplace<nn::ReLU<T>>();
        model.template emplace<nn::Dropout<T>>(arch.dropout_rate);
        in = width;
    }
    model.template emplace<nn::Dense<T>>(in, grid_size);
    model.template emplace<nn::Sigmoid<T>>();

    model.output_shape({1, 2, k, k}); // throws on inconsistent widths
    model.init_params(seed);
    model.reset_rng(Rng::derive(seed, 7));
    return model;
}

namespace detail
{

template <typename T>
nn::Tensor<T> features_to_tensor(const std::vector<const FeatureTensor *> &features)
{
    const int b = int(features.size());
    const int k = features[0]->k;
    nn::Tensor<T> out({b, 2, k, k});
    for (int i = 0; i < b; ++i)
    {
        const auto &src = features[size_t(i)]->data;
        T *dst = out.ptr() + int64_t(i) * 2 * k * k;
        for (size_t j = 0; j < src.size(); ++j)
            dst[j] = T(src[j]);
    }
    return out;
}

template <typename T>
nn::Tensor<T> labels_to_tensor(const std::vector<const LabelVector *> &labels)
{
    const int b = int(labels.size());
    const int l = int(labels[0]->z.size());
    nn::Tensor<T> out({b, l});
    for (int i = 0; i < b; ++i)
        for (int j = 0; j < l; ++j)
            out[int64_t(i) * l + j] = T(labels[size_t(i)]->z[size_t(j)]);
    return out;
}

// Deterministic train/validation split from the hyperparameter seed
struct Split
{
    std::vector<int> train;
    std::vector<int> val;
};

inline Split split_indices(int n, double validation_fraction, uint64_t seed)
{
    std::vector<int> idx(size_t(n), 0);
    for (int i = 0; i < n; ++i)
        idx[size_t(i)] = i;
    Rng rng(Rng::derive(seed, 17));
    rng.shuffle(idx);
    int val_count = int(std::lround(validation_fraction * n));
    val_count = std::clamp(val_count, 0, n > 1 ? n - 1 : 0);
    Split s;
    s.val.assign(idx.end() - val_count, idx.end());
    s.train.assign(idx.begin(), idx.end() - val_count);
    return s;
}

inline double frobenius_distance(const std::vector<double> &a, const std::vector<double> &b)
{
    double sum = 0.0;
    for (size_t i = 0; i < a.size(); ++i)
        sum += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(sum);
}

} // namespace detail

// Minimizes the batch-mean squared Frobenius distance between the denoised
// output and the clean covariance features. Deterministic under hyper.seed;
// learning_rate == 0 runs the loop without updates (useful for tests).
template <typename T>
TrainReport train_cdae(nn::Sequential<T> &model, const Dataset &ds, const TrainHyper &hyper)
{
    if (ds.samples.empty())
        throw std::invalid_argument("empty dataset");
    TrainReport report;
    report.hyper = hyper;

    detail::Split split = detail::split_indices(int(ds.samples.size()),
                                                hyper.validation_fraction, hyper.seed);
    if (split.train.empty())
        throw std::invalid_argument("no training samples after the validation split");
    const int batch = std::max(1, std::min(hyper.batch_size, int(split.train.size())));

    auto params = model.parameters();
    auto grads = model.gradients();
    Rng shuffle_rng(Rng::derive(hyper.seed, 23));

    for (int epoch = 0; epoch < hyper.epochs; ++epoch)
    {
        shuffle_rng.shuffle(split.train);
        double loss_sum = 0.0;
        int64_t seen = 0;
        for (size_t start = 0; start < split.train.size(); start += size_t(batch))
        {
            const size_t end = std::min(start + size_t(batch), split.train.size());
            std::vector<const FeatureTensor *> noisy, clean;
            for (size_t i = start; i < end; ++i)
            {
                noisy.push_back(&ds.samples[size_t(split.train[i])].noisy);
                clean.push_back(&ds.samples[size_t(split.train[i])].clean);
            }
            nn::Tensor<T> x = detail::features_to_tensor<T>(noisy);
            nn::Tensor<T> t = detail::features_to_tensor<T>(clean);

            nn::Tensor<T> out = model.forward(x, true);
            auto loss = nn::mse_loss(out, t);
            if (!std::isfinite(loss.value))
            {
                report.diverged = true;
                report.epoch_loss.push_back(loss.value);
                return report;
            }
            model.backward(loss.grad);
            if (hyper.learning_rate > 0.0)
                nn::sgd_step(params, grads, hyper.learning_rate);
            loss_sum += loss.value * double(end - start);
            seen += int64_t(end - start);
        }
        report.epoch_loss.push_back(loss_sum / double(seen));
    }

    // Validation: MSE and the per-sample denoising ratio on held-out data
    const auto &val = split.val.empty() ? split.train : split.val;
    std::vector<double> ratios;
    double val_loss = 0.0;
    for (int idx : val)
    {
        const Sample &s = ds.samples[size_t(idx)];
        nn::Tensor<T> x = detail::features_to_tensor<T>({&s.noisy});
        nn::Tensor<T> out = model.infer(x);
        std::vector<double> denoised(out.data.begin(), out.data.end());
        const double num = detail::frobenius_distance(denoised, s.clean.data);
        const double den = detail::frobenius_distance(s.noisy.data, s.clean.data);
        if (den > 0.0)
            ratios.push_back(num / den);
        val_loss += num * num;
    }
    report.final_validation_loss = val_loss / double(val.size());
    if (!ratios.empty())
    {
        std::sort(ratios.begin(), ratios.end());
        report.denoise_ratio_median = ratios[ratios.size() / 2];
    }
    return report;
}

// Single eval-mode pass through the autoencoder; preserves the norm factor.
template <typename T>
FeatureTensor denoise(const nn::Sequential<T> &model, const FeatureTensor &noisy)
{
    nn::Tensor<T> x = detail::features_to_tensor<T>({&noisy});
    nn::Tensor<T> out = model.infer(x);
    FeatureTensor ft;
    ft.k = noisy.k;
    ft.norm_factor = noisy.norm_factor;
    ft.data.assign(out.data.begin(), out.data.end());
    return ft;
}

// Trains the classifier head on denoised features; the autoencoder stays
// frozen, so its outputs are computed once up front.
template <typename T>
TrainReport train_fc(nn::Sequential<T> &fc, const nn::Sequential<T> &cdae, const Dataset &ds,
                     const TrainHyper &hyper)
{
    if (ds.samples.empty())
        throw std::invalid_argument("empty dataset");
    TrainReport report;
    report.hyper = hyper;

    const int n = int(ds.samples.size());
    const int k = ds.samples[0].noisy.k;

    // Frozen-CDAE pass over the whole dataset, in chunks
    std::vector<std::vector<T>> denoised;
    denoised.resize(size_t(n));
    const int chunk = 256;
    for (int start = 0; start < n; start += chunk)
    {
        const int end = std::min(start + chunk, n);
        std::vector<const FeatureTensor *> feats;
        for (int i = start; i < end; ++i)
            feats.push_back(&ds.samples[size_t(i)].noisy);
        nn::Tensor<T> out = cdae.infer(detail::features_to_tensor<T>(feats));
        const int64_t stride = 2LL * k * k;
        for (int i = start; i < end; ++i)
        {
            const T *p = out.ptr() + int64_t(i - start) * stride;
            denoised[size_t(i)].assign(p, p + stride);
        }
    }

    detail::Split split = detail::split_indices(n, hyper.validation_fraction, hyper.seed);
    if (split.train.empty())
        throw std::invalid_argument("no training samples after the validation split");
    const int batch = std::max(1, std::min(hyper.batch_size, int(split.train.size())));

    auto gather = [&](const std::vector<int> &idx, size_t start, size_t end, nn::Tensor<T> &x,
                      nn::Tensor<T> &t)
    {
        const int b = int(end - start);
        x = nn::Tensor<T>({b, 2, k, k});
        std::vector<const LabelVector *> labels;
        for (size_t i = start; i < end; ++i)
        {
            const auto &src = denoised[size_t(idx[i])];
            std::copy(src.begin(), src.end(), x.ptr() + int64_t(i - start) * 2 * k * k);
            labels.push_back(&ds.samples[size_t(idx[i])].label);
        }
        t = detail::labels_to_tensor<T>(labels);
    };

    auto params = fc.parameters();
    auto grads = fc.gradients();
    Rng shuffle_rng(Rng::derive(hyper.seed, 23));

    for (int epoch = 0; epoch < hyper.epochs; ++epoch)
    {
        shuffle_rng.shuffle(split.train);
        double loss_sum = 0.0;
        int64_t seen = 0;
        for (size_t start = 0; start < split.train.size(); start += size_t(batch))
        {
            const size_t end = std::min(start + size_t(batch), split.train.size());
            nn::Tensor<T> x, t;
            gather(split.train, start, end, x, t);
            nn::Tensor<T> out = fc.forward(x, true);
            auto loss = nn::bce_loss(out, t);
            if (!std::isfinite(loss.value))
            {
                report.diverged = true;
                report.epoch_loss.push_back(loss.value);
                return report;
            }
            fc.backward(loss.grad);
            if (hyper.learning_rate > 0.0)
                nn::sgd_step(params, grads, hyper.learning_rate);
            loss_sum += loss.value * double(end - start);
            seen += int64_t(end - start);
        }
        report.epoch_loss.push_back(loss_sum / double(seen));
    }

    const auto &val = split.val.empty() ? split.train : split.val;
    nn::Tensor<T> x, t;
    gather(val, 0, val.size(), x, t);
    report.final_validation_loss = nn::bce_loss(fc.infer(x), t).value;
    return report;
}

// Full inference chain: normalize the covariance, denoise, classify, pick the
// Q most probable grid angles. Ties at the selection boundary resolve toward
// the lower grid index and set the ambiguity flag.
template <typename T>
PredictResult predict(const nn::Sequential<T> &cdae, const nn::Sequential<T> &fc,
                      const CovarianceEstimate &cov, int num_sources, const AngleGrid &grid)
{
    if (num_sources < 1)
        throw std::invalid_argument("prediction needs num_sources >= 1");
    if (num_sources > grid.size())
        throw std::invalid_argument("more sources than grid points");

    FeatureTensor noisy = to_feature_tensor(cov);
    nn::Tensor<T> x = detail::features_to_tensor<T>({&noisy});
    nn::Tensor<T> z = fc.infer(cdae.infer(x));

    const int l = z.dim(1);
    PredictResult res;
    res.probabilities.resize(size_t(l));
    for (int i = 0; i < l; ++i)
        res.probabilities[size_t(i)] = double(z[i]);

    std::vector<int> order(size_t(l), 0);
    for (int i = 0; i < l; ++i)
        order[size_t(i)] = i;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b)
                     { return res.probabilities[size_t(a)] > res.probabilities[size_t(b)]; });

    if (num_sources < l &&
        res.probabilities[size_t(order[size_t(num_sources) - 1])] ==
            res.probabilities[size_t(order[size_t(num_sources)])])
        res.ambiguous = true;

    for (int q = 0; q < num_sources; ++q)
        res.thetas_deg.push_back(grid.angle_deg(order[size_t(q)]));
    std::sort(res.thetas_deg.begin(), res.thetas_deg.end());
    return res;
}

// Type-erased estimator handle so the benchmark harness does not care about
// the training precision.
struct CdaeDnnEstimator
{
    std::function<PredictResult(const CovarianceEstimate &, int)> fn;

    PredictResult operator()(const CovarianceEstimate &cov, int num_sources) const
    {
        return fn(cov, num_sources);
    }
};

template <typename T>
CdaeDnnEstimator make_cdae_dnn_estimator(std::shared_ptr<const nn::Sequential<T>> cdae,
                                         std::shared_ptr<const nn::Sequential<T>> fc,
                                         AngleGrid grid)
{
    CdaeDnnEstimator est;
    est.fn = [cdae, fc, grid](const CovarianceEstimate &cov, int num_sources)
    { return predict(*cdae, *fc, cov, num_sources, grid); };
    return est;
}

} // namespace osa

#endif
