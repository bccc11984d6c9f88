#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "mmfbo/common.hpp"
#include "mmfbo/rng.hpp"

namespace mmfbo {

namespace detail {

// Primitive polynomial degrees, encoded inner coefficients and initial
// direction values (Joe & Kuo) for coordinates 2..16. Coordinate 1 is the
// van der Corput sequence in base 2.
struct SobolPoly {
    int s;
    std::uint32_t a;
    std::array<std::uint32_t, 6> m;
};

inline constexpr std::array<SobolPoly, 15> kSobolPolys = {{
    {1, 0, {1, 0, 0, 0, 0, 0}},
    {2, 1, {1, 3, 0, 0, 0, 0}},
    {3, 1, {1, 3, 1, 0, 0, 0}},
    {3, 2, {1, 1, 1, 0, 0, 0}},
    {4, 1, {1, 1, 3, 3, 0, 0}},
    {4, 4, {1, 3, 5, 13, 0, 0}},
    {5, 2, {1, 1, 5, 5, 17, 0}},
    {5, 4, {1, 1, 5, 5, 5, 0}},
    {5, 7, {1, 1, 7, 11, 19, 0}},
    {5, 11, {1, 1, 5, 1, 1, 0}},
    {5, 13, {1, 1, 1, 3, 11, 0}},
    {5, 14, {1, 3, 5, 5, 31, 0}},
    {6, 1, {1, 3, 3, 9, 7, 49}},
    {6, 13, {1, 1, 1, 15, 21, 21}},
    {6, 16, {1, 3, 1, 13, 27, 49}},
}};

}  // namespace detail

// Gray-code Sobol sequence, up to 16 dimensions, 32 bits of resolution.
// An optional seed applies a random digital shift (XOR scramble), which
// decorrelates replicated pools while preserving low discrepancy.
class SobolSequence {
public:
    static constexpr std::size_t kMaxDim = 16;
    static constexpr int kBits = 32;

    explicit SobolSequence(std::size_t dim, std::uint64_t scramble_seed = 0)
        : dim_(dim), state_(dim, 0), shift_(dim, 0), dirs_(dim) {
        if (dim < 1 || dim > kMaxDim)
            throw DomainError("SobolSequence: dimension must be in [1, 16]");
        for (std::size_t d = 0; d < dim_; ++d) init_direction(d);
        if (scramble_seed != 0) {
            Rng rng(mix64(scramble_seed, 0x536f626f6cULL));
            for (std::size_t d = 0; d < dim_; ++d)
                shift_[d] = static_cast<std::uint32_t>(rng.next_u64() >> 32);
        }
    }

    std::size_t dimension() const { return dim_; }

    // Next point in [0,1)^dim.
    std::vector<double> next() {
        if (index_ > 0) {
            std::uint64_t c = 0;
            std::uint64_t v = index_ - 1;
            while (v & 1) {
                v >>= 1;
                ++c;
            }
            for (std::size_t d = 0; d < dim_; ++d) state_[d] ^= dirs_[d][c];
        }
        ++index_;
        std::vector<double> x(dim_);
        for (std::size_t d = 0; d < dim_; ++d)
            x[d] = static_cast<double>(state_[d] ^ shift_[d]) * 0x1.0p-32;
        return x;
    }

    std::vector<std::vector<double>> take(std::size_t n) {
        std::vector<std::vector<double>> out;
        out.reserve(n);
        for (std::size_t i = 0; i < n; ++i) out.push_back(next());
        return out;
    }

private:
    void init_direction(std::size_t d) {
        auto& v = dirs_[d];
        if (d == 0) {
            for (int j = 0; j < kBits; ++j) v[j] = 1u << (kBits - 1 - j);
            return;
        }
        const auto& p = detail::kSobolPolys[d - 1];
        for (int j = 0; j < p.s; ++j) v[j] = p.m[j] << (kBits - 1 - j);
        for (int j = p.s; j < kBits; ++j) {
            v[j] = v[j - p.s] ^ (v[j - p.s] >> p.s);
            for (int k = 1; k < p.s; ++k)
                if ((p.a >> (p.s - 1 - k)) & 1u) v[j] ^= v[j - k];
        }
    }

    std::size_t dim_;
    std::uint64_t index_ = 0;
    std::vector<std::uint32_t> state_;
    std::vector<std::uint32_t> shift_;
    std::vector<std::array<std::uint32_t, kBits>> dirs_;
};

// n stratified points in [0,1)^dim, one per row.
inline std::vector<std::vector<double>> latin_hypercube(std::size_t n, std::size_t dim,
                                                        std::uint64_t seed) {
    if (n == 0 || dim == 0) throw DomainError("latin_hypercube: n and dim must be positive");
    Rng rng(mix64(seed, 0x4c4853ULL));
    std::vector<std::vector<double>> pts(n, std::vector<double>(dim));
    std::vector<std::size_t> perm(n);
    for (std::size_t d = 0; d < dim; ++d) {
        for (std::size_t i = 0; i < n; ++i) perm[i] = i;
        rng.shuffle(perm);
        for (std::size_t i = 0; i < n; ++i)
            pts[i][d] = (static_cast<double>(perm[i]) + rng.uniform01()) / static_cast<double>(n);
    }
    return pts;
}

}  // namespace mmfbo
