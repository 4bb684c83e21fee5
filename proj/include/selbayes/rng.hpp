#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace selbayes {

// Counter-based seed split: child k of a root seed is splitmix64(root + (k+1)*golden).
// Nesting derive_seed gives independent streams per round, per method, per chain.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream);

// Portable generator: mt19937_64 (fully specified by the standard), 53-bit uniforms
// and Box-Muller normals, so draws do not depend on the standard library vendor.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  Eigen::VectorXd normal_vector(Eigen::Index n);
  std::uint64_t next_u64() { return engine_(); }
  // Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace selbayes
