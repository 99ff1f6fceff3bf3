#include "switchstab/sobol_sequence.hpp"

#include <array>
#include <bit>
#include <vector>

#include <fmt/format.h>

#include "switchstab/error.hpp"

namespace switchstab {

namespace {

constexpr int kBits = 32;

struct Primitive {
  int degree;
  unsigned a;
  std::array<unsigned, 6> m;
};

// new-joe-kuo-6.21201, dimensions 2..16.
constexpr Primitive kPrimitives[] = {
    {1, 0, {1}},
    {2, 1, {1, 3}},
    {3, 1, {1, 3, 1}},
    {3, 2, {1, 1, 1}},
    {4, 1, {1, 1, 3, 3}},
    {4, 4, {1, 3, 5, 13}},
    {5, 2, {1, 1, 5, 5, 17}},
    {5, 4, {1, 1, 5, 5, 5}},
    {5, 7, {1, 1, 7, 11, 19}},
    {5, 11, {1, 1, 5, 1, 1}},
    {5, 13, {1, 1, 1, 3, 11}},
    {5, 14, {1, 3, 5, 5, 31}},
    {6, 1, {1, 3, 3, 9, 7, 49}},
    {6, 13, {1, 1, 1, 15, 21, 21}},
    {6, 16, {1, 3, 1, 13, 27, 49}},
};

using Directions = std::array<std::uint32_t, kBits>;

Directions directions(int d) {
  Directions v{};
  if (d == 0) {
    for (int i = 0; i < kBits; ++i) v[i] = 1u << (kBits - 1 - i);
    return v;
  }
  const Primitive& pr = kPrimitives[d - 1];
  const int s = pr.degree;
  for (int i = 0; i < s; ++i) v[i] = pr.m[i] << (kBits - 1 - i);
  for (int i = s; i < kBits; ++i) {
    std::uint32_t x = v[i - s] ^ (v[i - s] >> s);
    for (int k = 1; k < s; ++k)
      if ((pr.a >> (s - 1 - k)) & 1u) x ^= v[i - k];
    v[i] = x;
  }
  return v;
}

}  // namespace

Eigen::MatrixXd sobol_sequence(int dim, std::int64_t count, std::int64_t skip) {
  if (dim > kMaxSobolDimension)
    throw Error(ErrorCode::DimensionUnsupported, fmt::format("Sobol' dimension {} exceeds {}", dim, kMaxSobolDimension));
  if (dim < 1 || count < 1 || skip < 0)
    throw Error(ErrorCode::InvalidArgument, "Sobol' sequence needs dim >= 1, count >= 1, skip >= 0");
  if (skip + count > (std::int64_t{1} << kBits))
    throw Error(ErrorCode::InvalidArgument, "Sobol' index range exceeds 2^32");

  std::vector<Directions> v(dim);
  for (int d = 0; d < dim; ++d) v[d] = directions(d);

  constexpr double kScale = 1.0 / 4294967296.0;
  Eigen::MatrixXd out(count, dim);
  std::vector<std::uint32_t> x(dim, 0);
  // Gray-code index of point n is n ^ (n >> 1); jump straight to it.
  const auto first = static_cast<std::uint32_t>(skip);
  const std::uint32_t gray = first ^ (first >> 1);
  for (int b = 0; b < kBits; ++b)
    if ((gray >> b) & 1u)
      for (int d = 0; d < dim; ++d) x[d] ^= v[d][b];

  for (std::int64_t r = 0; r < count; ++r) {
    for (int d = 0; d < dim; ++d) out(r, d) = x[d] * kScale;
    const auto n = static_cast<std::uint32_t>(skip + r);
    const int c = std::countr_one(n);
    if (c < kBits)
      for (int d = 0; d < dim; ++d) x[d] ^= v[d][c];
  }
  return out;
}

}  // namespace switchstab
