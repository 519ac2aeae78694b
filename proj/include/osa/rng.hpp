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

#ifndef OSA_RNG_HPP
#define OSA_RNG_HPP

#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

namespace osa
{

// Deterministic, platform-independent generator. Core is splitmix64
// (Steele/Lea/Flood mixing constants); Gaussians come from Box-Muller so the
// byte stream does not depend on any standard-library distribution. Child
// streams are derived by hashing (seed, index) pairs, which keeps
// Monte-Carlo trials and dataset samples independently seeded from one
// recorded master seed.
class Rng
{
  public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64()
    {
        state_ += 0x9E3779B97F4A7C15ULL;
        uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1), 53-bit resolution
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in (0, 1], safe as a log() argument
    double uniform_pos() { return double((next_u64() >> 11) + 1) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n)
    uint64_t uniform_index(uint64_t n) { return next_u64() % n; }

    // Two independent standard normals (Box-Muller)
    void normal_pair(double &z0, double &z1)
    {
        double u1 = uniform_pos();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        z0 = r * std::cos(2.0 * pi_ * u2);
        z1 = r * std::sin(2.0 * pi_ * u2);
    }

    double normal()
    {
        if (have_spare_)
        {
            have_spare_ = false;
            return spare_;
        }
        double z0, z1;
        normal_pair(z0, z1);
        spare_ = z1;
        have_spare_ = true;
        return z0;
    }

    // Circularly-symmetric complex Gaussian with E|x|^2 = variance;
    // real and imaginary parts are independent N(0, variance/2)
    std::complex<double> complex_normal(double variance)
    {
        double z0, z1;
        normal_pair(z0, z1);
        double s = std::sqrt(variance * 0.5);
        return {s * z0, s * z1};
    }

    // Fisher-Yates
    template <typename T> void shuffle(std::vector<T> &v)
    {
        for (size_t i = v.size(); i > 1; --i)
        {
            size_t j = size_t(uniform_index(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Stateless child-seed derivation: one splitmix64 step over a mixed
    // (seed, index) pair. Nests cleanly for multi-level stream trees.
    static uint64_t derive(uint64_t seed, uint64_t index)
    {
        uint64_t z = seed ^ (0x9E3779B97F4A7C15ULL * (index + 1));
        z += 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

  private:
    static constexpr double pi_ = 3.141592653589793238462643383279502884;
    uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace osa

#endif
