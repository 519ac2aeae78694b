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

#ifndef OSA_NN_MODEL_HPP
#define OSA_NN_MODEL_HPP

#include "osa/binio.hpp"
#include "osa/nn/layers.hpp"

#include <functional>
#include <memory>

namespace osa::nn
{

template <typename T> class Sequential
{
  public:
    Sequential() = default;
    Sequential(Sequential &&) = default;
    Sequential &operator=(Sequential &&) = default;

    template <typename L, typename... Args> L &emplace(Args &&...args)
    {
        auto layer = std::make_unique<L>(std::forward<Args>(args)...);
        L &ref = *layer;
        layers_.push_back(std::move(layer));
        return ref;
    }

    void push(std::unique_ptr<Layer<T>> layer) { layers_.push_back(std::move(layer)); }

    size_t size() const { return layers_.size(); }
    Layer<T> &layer(size_t i) { return *layers_[i]; }
    const Layer<T> &layer(size_t i) const { return *layers_[i]; }

    Tensor<T> forward(const Tensor<T> &x, bool train)
    {
        Tensor<T> cur = x;
        for (auto &l : layers_)
            cur = l->forward(cur, train);
        return cur;
    }

    Tensor<T> backward(const Tensor<T> &grad_out)
    {
        Tensor<T> cur = grad_out;
        for (auto it = layers_.rbegin(); it != layers_.rend(); ++it)
            cur = (*it)->backward(cur);
        return cur;
    }

    // Evaluation path: running statistics, no dropout, no caching. Safe to
    // share one model across threads.
    Tensor<T> infer(const Tensor<T> &x) const
    {
        Tensor<T> cur = x;
        for (const auto &l : layers_)
            cur = l->infer(cur);
        return cur;
    }

    std::vector<Tensor<T> *> parameters()
    {
        std::vector<Tensor<T> *> out;
        for (auto &l : layers_)
            for (auto *t : l->parameters())
                out.push_back(t);
        return out;
    }

    std::vector<Tensor<T> *> gradients()
    {
        std::vector<Tensor<T> *> out;
        for (auto &l : layers_)
            for (auto *t : l->gradients())
                out.push_back(t);
        return out;
    }

    std::vector<Tensor<T> *> state()
    {
        std::vector<Tensor<T> *> out;
        for (auto &l : layers_)
            for (auto *t : l->state())
                out.push_back(t);
        return out;
    }

    void init_params(uint64_t seed)
    {
        for (size_t i = 0; i < layers_.size(); ++i)
            layers_[i]->init_params(Rng::derive(seed, i));
    }

    void reset_rng(uint64_t seed)
    {
        for (size_t i = 0; i < layers_.size(); ++i)
            layers_[i]->reset_rng(Rng::derive(seed, i));
    }

    // Validates the shape algebra and returns the output shape.
    std::vector<int> output_shape(std::vector<int> in) const
    {
        for (const auto &l : layers_)
            in = l->output_shape(in);
        return in;
    }

    std::vector<LayerSpec> specs() const
    {
        std::vector<LayerSpec> out;
        out.reserve(layers_.size());
        for (const auto &l : layers_)
            out.push_back(l->spec());
        return out;
    }

  private:
    std::vector<std::unique_ptr<Layer<T>>> layers_;
};

// Plain SGD: theta <- theta - lr * grad, elementwise over matched tensors.
template <typename T>
void sgd_step(const std::vector<Tensor<T> *> &params, const std::vector<Tensor<T> *> &grads,
              double lr)
{
    if (!(lr > 0.0))
        throw std::invalid_argument("learning rate must be positive");
    if (params.size() != grads.size())
        throw std::invalid_argument("parameter/gradient list size mismatch");
    for (size_t i = 0; i < params.size(); ++i)
    {
        Tensor<T> &p = *params[i];
        const Tensor<T> &g = *grads[i];
        check_same_shape(p, g, "sgd_step");
        for (int64_t j = 0; j < p.numel(); ++j)
            p[j] -= T(lr) * g[j];
    }
}

template <typename T> std::unique_ptr<Layer<T>> make_layer(const LayerSpec &s)
{
    switch (s.kind)
    {
    case LayerKind::conv2d:
        return std::make_unique<Conv2d<T>>(s.in_channels, s.out_channels, s.kernel, s.stride,
                                           s.padding);
    case LayerKind::transposed_conv2d:
        return std::make_unique<TransposedConv2d<T>>(s.in_channels, s.out_channels, s.kernel,
                                                     s.stride, s.padding);
    case LayerKind::batchnorm:
        return std::make_unique<BatchNorm2d<T>>(s.in_channels, s.epsilon, s.momentum);
    case LayerKind::relu:
        return std::make_unique<ReLU<T>>();
    case LayerKind::sigmoid:
        return std::make_unique<Sigmoid<T>>();
    case LayerKind::dense:
        return std::make_unique<Dense<T>>(s.in_features, s.out_features);
    case LayerKind::dropout:
        return std::make_unique<Dropout<T>>(s.rate);
    case LayerKind::flatten:
        return std::make_unique<Flatten<T>>();
    }
    throw std::runtime_error("unknown layer kind");
}

// Checkpoint format: "OSAM" | u16 version | u16 layer count, then per layer
// the LayerSpec followed by its parameter and state tensors as little-endian
// f32, and a trailing CRC-32 over all preceding bytes.
inline constexpr uint16_t model_format_version = 1;

template <typename T> void save_model(Sequential<T> &model, const std::string &path)
{
    ByteWriter w;
    w.bytes("OSAM", 4);
    w.u16(model_format_version);
    w.u16(uint16_t(model.size()));
    for (size_t i = 0; i < model.size(); ++i)
    {
        Layer<T> &l = model.layer(i);
        const LayerSpec s = l.spec();
        w.u8(uint8_t(s.kind));
        w.i32(s.in_channels);
        w.i32(s.out_channels);
        w.i32(s.kernel);
        w.i32(s.stride);
        w.i32(s.padding);
        w.i32(s.in_features);
        w.i32(s.out_features);
        w.f64(s.rate);
        w.f64(s.epsilon);
        w.f64(s.momentum);

        std::vector<Tensor<T> *> tensors = l.parameters();
        for (auto *t : l.state())
            tensors.push_back(t);
        w.u32(uint32_t(tensors.size()));
        for (auto *t : tensors)
        {
            w.u8(uint8_t(t->shape.size()));
            for (int d : t->shape)
                w.i32(d);
            for (int64_t j = 0; j < t->numel(); ++j)
                w.f32(float((*t)[j]));
        }
    }
    uint32_t crc = crc32(w.data().data(), w.size());
    w.u32(crc);
    write_file(path, w.data());
}

template <typename T> Sequential<T> load_model(const std::string &path)
{
    std::vector<uint8_t> bytes = read_file(path);
    if (bytes.size() < 12)
        throw std::runtime_error("checkpoint too short: " + path);
    uint32_t stored = 0;
    for (int i = 0; i < 4; ++i)
        stored |= uint32_t(bytes[bytes.size() - 4 + size_t(i)]) << (8 * i);
    if (crc32(bytes.data(), bytes.size() - 4) != stored)
        throw std::runtime_error("checkpoint checksum failure: " + path);

    ByteReader r(bytes.data(), bytes.size() - 4);
    if (std::string(reinterpret_cast<const char *>(r.take(4)), 4) != "OSAM")
        throw std::runtime_error("bad checkpoint magic: " + path);
    if (r.u16() != model_format_version)
        throw std::runtime_error("unsupported checkpoint version: " + path);
    const uint16_t layer_count = r.u16();

    Sequential<T> model;
    for (uint16_t i = 0; i < layer_count; ++i)
    {
        LayerSpec s;
        s.kind = LayerKind(r.u8());
        s.in_channels = r.i32();
        s.out_channels = r.i32();
        s.kernel = r.i32();
        s.stride = r.i32();
        s.padding = r.i32();
        s.in_features = r.i32();
        s.out_features = r.i32();
        s.rate = r.f64();
        s.epsilon = r.f64();
        s.momentum = r.f64();

        auto layer = make_layer<T>(s);
        std::vector<Tensor<T> *> tensors = layer->parameters();
        for (auto *t : layer->state())
            tensors.push_back(t);
        const uint32_t count = r.u32();
        if (count != tensors.size())
            throw std::runtime_error("checkpoint tensor count mismatch in layer " +
                                     std::to_string(i));
        for (auto *t : tensors)
        {
            const uint8_t ndim = r.u8();
            std::vector<int> shape(ndim);
            for (auto &d : shape)
                d = r.i32();
            if (shape != t->shape)
                throw std::runtime_error("checkpoint tensor shape mismatch in layer " +
                                         std::to_string(i));
            for (int64_t j = 0; j < t->numel(); ++j)
                (*t)[j] = T(r.f32());
        }
        model.push(std::move(layer));
    }
    return model;
}

struct GradCheckEntry
{
    std::string tensor;
    double max_rel_error = 0.0;
    int coords_checked = 0;
};

struct GradCheckReport
{
    double max_rel_error = 0.0;
    int coords_checked = 0;
    std::vector<GradCheckEntry> per_tensor;
    bool passed(double tolerance) const { return max_rel_error < tolerance; }
};

// Central-difference verification of every parameter tensor against the
// analytic backward pass. Dropout streams are re-seeded before each forward
// so stochastic masks are identical across the perturbed evaluations.
// Intended for double precision.
template <typename T, typename LossFn>
GradCheckReport grad_check(Sequential<T> &model, LossFn loss, const Tensor<T> &input,
                           const Tensor<T> &target, int max_coords_per_tensor = 24,
                           double step = 1e-5, uint64_t seed = 12345)
{
    const uint64_t stream_seed = Rng::derive(seed, 999);
    auto eval = [&]() -> double
    {
        model.reset_rng(stream_seed);
        Tensor<T> out = model.forward(input, true);
        return loss(out, target).value;
    };

    model.reset_rng(stream_seed);
    Tensor<T> out = model.forward(input, true);
    auto base = loss(out, target);
    model.backward(base.grad);

    std::vector<Tensor<T> *> params = model.parameters();
    std::vector<Tensor<T> *> grads = model.gradients();
    std::vector<Tensor<T>> analytic;
    analytic.reserve(grads.size());
    for (auto *g : grads)
        analytic.push_back(*g);

    GradCheckReport report;
    Rng rng(seed);
    for (size_t ti = 0; ti < params.size(); ++ti)
    {
        Tensor<T> &p = *params[ti];
        GradCheckEntry entry;
        entry.tensor = "tensor" + std::to_string(ti) + p.shape_string();

        std::vector<int64_t> coords;
        if (p.numel() <= max_coords_per_tensor)
        {
            for (int64_t j = 0; j < p.numel(); ++j)
                coords.push_back(j);
        }
        else
        {
            for (int c = 0; c < max_coords_per_tensor; ++c)
                coords.push_back(int64_t(rng.uniform_index(uint64_t(p.numel()))));
        }

        for (int64_t j : coords)
        {
            const T saved = p[j];
            p[j] = saved + T(step);
            const double up = eval();
            p[j] = saved - T(step);
            const double down = eval();
            p[j] = saved;

            const double fd = (up - down) / (2.0 * step);
            const double an = double(analytic[ti][j]);
            const double rel = std::abs(fd - an) / std::max(std::abs(fd) + std::abs(an), 1e-6);
            entry.max_rel_error = std::max(entry.max_rel_error, rel);
            ++entry.coords_checked;
        }
        report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
        report.coords_checked += entry.coords_checked;
        report.per_tensor.push_back(std::move(entry));
    }

    // restore analytic gradients for the caller
    for (size_t ti = 0; ti < grads.size(); ++ti)
        *grads[ti] = analytic[ti];
    return report;
}

} // namespace osa::nn

#endif
