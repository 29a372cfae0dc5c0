#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "json.hpp"

#include "involute/linalg.hpp"

namespace involute {

// Zero band for the membership dot products.
inline constexpr double kMembershipTolerance = 1e-9;

enum class PartitionLabel { S0, SPlus, SMinus };

const char* to_string(PartitionLabel label);
PartitionLabel swapped(PartitionLabel label);

// An involution A with parity p (and optionally an affine offset μ with
// A·μ = −μ). The constructor validates and caches the diagonalization; the
// object is immutable afterwards.
class InvolutorySpec {
 public:
  InvolutorySpec(Matrix a, int parity, std::optional<Vector> mu = std::nullopt);

  static InvolutorySpec inversion(std::size_t n, int parity);

  const Matrix& matrix() const noexcept { return a_; }
  int parity() const noexcept { return parity_; }
  const std::optional<Vector>& mu() const noexcept { return mu_; }
  const InvolutoryDiagonalization& diagonalization() const noexcept { return diag_; }
  std::size_t dim() const noexcept { return a_.rows(); }
  bool affine() const noexcept { return mu_.has_value(); }

  // Affine shift μ/2 (zero vector for linear specs).
  Vector shift() const;
  // T(x) = A·x + μ.
  Vector apply(std::span<const double> x) const;

 private:
  Matrix a_;
  int parity_;
  std::optional<Vector> mu_;
  InvolutoryDiagonalization diag_;
};

struct AffineReduction {
  Matrix A;
  Vector shift;
};

// With X′ = X − μ/2 the affine involution T(X) = AX + μ acts as T′(X′) = AX′.
AffineReduction affine_to_linear(const Matrix& a, std::span<const double> mu);

// Reverse scan over the last gamma rows of P⁻¹; true iff v ∈ S₀ ∪ S₊.
bool vector_in_pid(std::span<const double> v, const Matrix& pinv, std::size_t gamma,
                   std::size_t n);

struct Membership {
  PartitionLabel label = PartitionLabel::S0;
  // Some row was skipped because its dot product fell inside the zero band.
  bool on_boundary = false;
};

// Classification in the linear coordinates of the spec (affine specs are
// shifted by μ/2 first).
Membership classify_traced(std::span<const double> v, const InvolutorySpec& spec);
PartitionLabel classify(std::span<const double> v, const InvolutorySpec& spec);

struct Reparameterized {
  Vector x;
  int sign = 1;
};

// Maps S₋ points to their image under the involution, carrying the parity
// as the output sign. S₀ and S₊ points pass through with sign +1.
Reparameterized reparam_point(std::span<const double> x, const InvolutorySpec& spec);

struct Dataset {
  std::vector<Vector> inputs;
  std::vector<double> targets;
};

Dataset reparam_dataset(const Dataset& data, const InvolutorySpec& spec);

// Independent involutions acting on disjoint coordinate ranges.
struct InvarianceBlock {
  std::size_t offset = 0;
  InvolutorySpec spec;
};

class BlockInvarianceSpec {
 public:
  BlockInvarianceSpec(std::size_t dim, std::vector<InvarianceBlock> blocks);

  // One single-coordinate sign flip per listed dimension.
  static BlockInvarianceSpec sign_flips(std::size_t dim, std::span<const std::size_t> dims,
                                        std::span<const int> parities);

  std::size_t dim() const noexcept { return dim_; }
  const std::vector<InvarianceBlock>& blocks() const noexcept { return blocks_; }
  std::size_t size() const noexcept { return blocks_.size(); }

 private:
  std::size_t dim_;
  std::vector<InvarianceBlock> blocks_;
};

Reparameterized reparam_multi(std::span<const double> x, const BlockInvarianceSpec& spec);

// reparam_multi plus which blocks were moved out of S₋; the Jacobian of
// x ↦ x′ is block diagonal with A_i on mapped blocks and I elsewhere.
struct MultiReparam {
  Reparameterized point;
  std::vector<bool> mapped;
  bool on_boundary = false;
};
MultiReparam reparam_multi_traced(std::span<const double> x, const BlockInvarianceSpec& spec);

using Evaluator = std::function<double(std::span<const double>)>;
using GradientEvaluator = std::function<Vector(std::span<const double>)>;

Evaluator wrap_inference(Evaluator model, InvolutorySpec spec);
Evaluator wrap_inference(Evaluator model, BlockInvarianceSpec spec);

// Gradient of the wrapped evaluator: sign·Aᵀ·∇model(A·x) on S₋, ∇model(x)
// otherwise. boundary_hits, when given, counts evaluations where a
// membership row fell inside the zero band.
GradientEvaluator wrap_input_gradient(GradientEvaluator model, InvolutorySpec spec,
                                      std::size_t* boundary_hits = nullptr);
GradientEvaluator wrap_input_gradient(GradientEvaluator model, BlockInvarianceSpec spec,
                                      std::size_t* boundary_hits = nullptr);

void to_json(nlohmann::json& j, const InvolutorySpec& spec);
InvolutorySpec involutory_spec_from_json(const nlohmann::json& j);
void to_json(nlohmann::json& j, const BlockInvarianceSpec& spec);
BlockInvarianceSpec block_spec_from_json(const nlohmann::json& j);

}  // namespace involute
