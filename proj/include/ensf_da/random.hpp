#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include <Eigen/Core>
#include <boost/random/normal_distribution.hpp>

namespace ensf_da {

using Engine = std::mt19937_64;

/// Purpose tags keep substreams for different consumers apart even when
/// they share a base seed and indices.
enum class StreamTag : std::uint64_t {
  ensf = 1,
  enkf = 2,
  predict = 3,
  truth = 4,
  observation = 5,
  initial = 6,
  bench = 7,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for an independent substream identified by (base, tag, indices...).
inline std::uint64_t derive_seed(std::uint64_t base, StreamTag tag,
                                 std::initializer_list<std::uint64_t> indices = {}) {
  std::uint64_t h = splitmix64(base ^ splitmix64(static_cast<std::uint64_t>(tag)));
  for (std::uint64_t i : indices) h = splitmix64(h ^ splitmix64(i + 0x632be59bd9b4e019ULL));
  return h;
}

inline Engine substream(std::uint64_t base, StreamTag tag,
                        std::initializer_list<std::uint64_t> indices = {}) {
  return Engine(derive_seed(base, tag, indices));
}

/// Standard normal sampler (ziggurat).
using StandardNormal = boost::random::normal_distribution<double>;

template <typename Derived>
void fill_standard_normal(Eigen::MatrixBase<Derived>& out, Engine& engine) {
  StandardNormal normal;
  for (Eigen::Index j = 0; j < out.cols(); ++j)
    for (Eigen::Index i = 0; i < out.rows(); ++i) out(i, j) = normal(engine);
}

inline Eigen::VectorXd standard_normal_vector(Eigen::Index n, Engine& engine) {
  Eigen::VectorXd v(n);
  fill_standard_normal(v, engine);
  return v;
}

}  // namespace ensf_da
