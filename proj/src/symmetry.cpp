#include "involute/symmetry.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "involute/error.hpp"

namespace involute {

namespace {

void check_parity(int parity) {
  if (parity != 1 && parity != -1) {
    throw ConfigError("parity must be +1 or -1, got " + std::to_string(parity));
  }
}

void check_offset(const Matrix& a, std::span<const double> mu) {
  if (mu.size() != a.rows()) {
    throw DimensionMismatch("offset length " + std::to_string(mu.size()) +
                            " does not match matrix dimension " + std::to_string(a.rows()));
  }
  Vector residual = matvec(a, mu);
  for (std::size_t i = 0; i < residual.size(); ++i) residual[i] += mu[i];
  if (max_abs(residual) > kInvolutoryTolerance) {
    throw IncompatibleOffset("affine offset must satisfy A·mu = -mu");
  }
}

Vector subtract(std::span<const double> a, std::span<const double> b) {
  Vector out(a.begin(), a.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  return out;
}

// Scan rows n−1 … n−γ of P⁻¹ (zero-based) and report the first decisive
// sign.
Membership scan_membership(std::span<const double> v, const Matrix& pinv, std::size_t gamma,
                           std::size_t n) {
  if (pinv.rows() != n || pinv.cols() != n || v.size() != n || gamma > n) {
    throw DimensionMismatch("membership: inconsistent shapes");
  }
  Membership m;
  for (std::size_t k = 0; k < gamma; ++k) {
    const double e = dot(pinv.row(n - 1 - k), v);
    if (e > kMembershipTolerance) {
      m.label = PartitionLabel::SPlus;
      return m;
    }
    if (e < -kMembershipTolerance) {
      m.label = PartitionLabel::SMinus;
      return m;
    }
    m.on_boundary = true;
  }
  m.label = PartitionLabel::S0;
  return m;
}

}  // namespace

const char* to_string(PartitionLabel label) {
  switch (label) {
    case PartitionLabel::S0:
      return "S0";
    case PartitionLabel::SPlus:
      return "S+";
    case PartitionLabel::SMinus:
      return "S-";
  }
  return "?";
}

PartitionLabel swapped(PartitionLabel label) {
  switch (label) {
    case PartitionLabel::SPlus:
      return PartitionLabel::SMinus;
    case PartitionLabel::SMinus:
      return PartitionLabel::SPlus;
    default:
      return label;
  }
}

InvolutorySpec::InvolutorySpec(Matrix a, int parity, std::optional<Vector> mu)
    : a_(std::move(a)), parity_(parity), mu_(std::move(mu)) {
  check_parity(parity_);
  diag_ = diagonalize_involutory(a_);
  if (mu_) check_offset(a_, *mu_);
}

InvolutorySpec InvolutorySpec::inversion(std::size_t n, int parity) {
  return InvolutorySpec(-1.0 * Matrix::identity(n), parity);
}

Vector InvolutorySpec::shift() const {
  Vector s(dim(), 0.0);
  if (mu_) {
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = (*mu_)[i] / 2.0;
  }
  return s;
}

Vector InvolutorySpec::apply(std::span<const double> x) const {
  Vector y = matvec(a_, x);
  if (mu_) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += (*mu_)[i];
  }
  return y;
}

AffineReduction affine_to_linear(const Matrix& a, std::span<const double> mu) {
  if (!a.square() || !check_involutory(a)) {
    throw NotInvolutory("affine_to_linear: matrix is not involutory");
  }
  check_offset(a, mu);
  AffineReduction r{a, Vector(mu.begin(), mu.end())};
  for (double& s : r.shift) s /= 2.0;
  return r;
}

bool vector_in_pid(std::span<const double> v, const Matrix& pinv, std::size_t gamma,
                   std::size_t n) {
  return scan_membership(v, pinv, gamma, n).label != PartitionLabel::SMinus;
}

Membership classify_traced(std::span<const double> v, const InvolutorySpec& spec) {
  const auto& d = spec.diagonalization();
  if (spec.affine()) {
    const Vector centered = subtract(v, spec.shift());
    return scan_membership(centered, d.Pinv, d.gamma, d.n);
  }
  return scan_membership(v, d.Pinv, d.gamma, d.n);
}

PartitionLabel classify(std::span<const double> v, const InvolutorySpec& spec) {
  return classify_traced(v, spec).label;
}

Reparameterized reparam_point(std::span<const double> x, const InvolutorySpec& spec) {
  if (classify(x, spec) == PartitionLabel::SMinus) {
    return {spec.apply(x), spec.parity()};
  }
  return {Vector(x.begin(), x.end()), 1};
}

Dataset reparam_dataset(const Dataset& data, const InvolutorySpec& spec) {
  if (data.inputs.size() != data.targets.size()) {
    throw DimensionMismatch("reparam_dataset: inputs and targets differ in length");
  }
  Dataset out;
  out.inputs.reserve(data.inputs.size());
  out.targets.reserve(data.targets.size());
  for (std::size_t i = 0; i < data.inputs.size(); ++i) {
    auto r = reparam_point(data.inputs[i], spec);
    out.inputs.push_back(std::move(r.x));
    out.targets.push_back(r.sign * data.targets[i]);
  }
  return out;
}

BlockInvarianceSpec::BlockInvarianceSpec(std::size_t dim, std::vector<InvarianceBlock> blocks)
    : dim_(dim), blocks_(std::move(blocks)) {
  std::vector<bool> used(dim_, false);
  for (const auto& b : blocks_) {
    if (b.offset + b.spec.dim() > dim_) {
      throw ConfigError("invariance block exceeds input dimension");
    }
    for (std::size_t i = b.offset; i < b.offset + b.spec.dim(); ++i) {
      if (used[i]) throw ConfigError("invariance blocks overlap at dimension " + std::to_string(i));
      used[i] = true;
    }
  }
}

BlockInvarianceSpec BlockInvarianceSpec::sign_flips(std::size_t dim,
                                                    std::span<const std::size_t> dims,
                                                    std::span<const int> parities) {
  if (dims.size() != parities.size()) {
    throw ConfigError("sign_flips: one parity per flipped dimension is required");
  }
  std::vector<InvarianceBlock> blocks;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    blocks.push_back({dims[i], InvolutorySpec::inversion(1, parities[i])});
  }
  return BlockInvarianceSpec(dim, std::move(blocks));
}

MultiReparam reparam_multi_traced(std::span<const double> x, const BlockInvarianceSpec& spec) {
  if (x.size() != spec.dim()) {
    throw DimensionMismatch("reparam_multi: input length " + std::to_string(x.size()) +
                            " does not match " + std::to_string(spec.dim()));
  }
  MultiReparam out;
  out.point.x.assign(x.begin(), x.end());
  out.mapped.assign(spec.size(), false);
  for (std::size_t k = 0; k < spec.size(); ++k) {
    const auto& block = spec.blocks()[k];
    const auto sub = x.subspan(block.offset, block.spec.dim());
    const Membership m = classify_traced(sub, block.spec);
    out.on_boundary = out.on_boundary || m.on_boundary;
    if (m.label != PartitionLabel::SMinus) continue;
    const Vector image = block.spec.apply(sub);
    std::copy(image.begin(), image.end(), out.point.x.begin() + block.offset);
    out.point.sign *= block.spec.parity();
    out.mapped[k] = true;
  }
  return out;
}

Reparameterized reparam_multi(std::span<const double> x, const BlockInvarianceSpec& spec) {
  return reparam_multi_traced(x, spec).point;
}

Evaluator wrap_inference(Evaluator model, InvolutorySpec spec) {
  return [model = std::move(model), spec = std::move(spec)](std::span<const double> x) {
    const auto r = reparam_point(x, spec);
    return r.sign * model(r.x);
  };
}

Evaluator wrap_inference(Evaluator model, BlockInvarianceSpec spec) {
  return [model = std::move(model), spec = std::move(spec)](std::span<const double> x) {
    const auto r = reparam_multi(x, spec);
    return r.sign * model(r.x);
  };
}

GradientEvaluator wrap_input_gradient(GradientEvaluator model, InvolutorySpec spec,
                                      std::size_t* boundary_hits) {
  return [model = std::move(model), spec = std::move(spec),
          boundary_hits](std::span<const double> x) {
    const Membership m = classify_traced(x, spec);
    if (m.on_boundary && boundary_hits) ++*boundary_hits;
    if (m.label != PartitionLabel::SMinus) return model(x);
    Vector g = matvec_transposed(spec.matrix(), model(spec.apply(x)));
    if (spec.parity() < 0) {
      for (double& v : g) v = -v;
    }
    return g;
  };
}

GradientEvaluator wrap_input_gradient(GradientEvaluator model, BlockInvarianceSpec spec,
                                      std::size_t* boundary_hits) {
  return [model = std::move(model), spec = std::move(spec),
          boundary_hits](std::span<const double> x) {
    const MultiReparam r = reparam_multi_traced(x, spec);
    if (r.on_boundary && boundary_hits) ++*boundary_hits;
    Vector g = model(r.point.x);
    for (std::size_t k = 0; k < spec.size(); ++k) {
      if (!r.mapped[k]) continue;
      const auto& block = spec.blocks()[k];
      const std::span<const double> sub(g.data() + block.offset, block.spec.dim());
      const Vector pulled = matvec_transposed(block.spec.matrix(), sub);
      std::copy(pulled.begin(), pulled.end(), g.begin() + block.offset);
    }
    if (r.point.sign < 0) {
      for (double& v : g) v = -v;
    }
    return g;
  };
}

void to_json(nlohmann::json& j, const InvolutorySpec& spec) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t r = 0; r < spec.dim(); ++r) {
    const auto row = spec.matrix().row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  j = nlohmann::json{{"A", rows}, {"parity", spec.parity()}};
  if (spec.mu()) {
    j["mu"] = *spec.mu();
  } else {
    j["mu"] = nullptr;
  }
}

InvolutorySpec involutory_spec_from_json(const nlohmann::json& j) {
  try {
    const auto rows = j.at("A").get<std::vector<std::vector<double>>>();
    const std::size_t n = rows.size();
    std::vector<double> data;
    for (const auto& r : rows) {
      if (r.size() != n) throw ConfigError("spec matrix A must be square");
      data.insert(data.end(), r.begin(), r.end());
    }
    const int parity = j.value("parity", 1);
    std::optional<Vector> mu;
    if (j.contains("mu") && !j.at("mu").is_null()) mu = j.at("mu").get<Vector>();
    return InvolutorySpec(Matrix(n, n, std::move(data)), parity, std::move(mu));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid involutory spec: ") + e.what());
  }
}

void to_json(nlohmann::json& j, const BlockInvarianceSpec& spec) {
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : spec.blocks()) {
    nlohmann::json s;
    to_json(s, b.spec);
    s["offset"] = b.offset;
    blocks.push_back(std::move(s));
  }
  j = nlohmann::json{{"dim", spec.dim()}, {"blocks", blocks}};
}

BlockInvarianceSpec block_spec_from_json(const nlohmann::json& j) {
  try {
    std::vector<InvarianceBlock> blocks;
    for (const auto& b : j.at("blocks")) {
      blocks.push_back({b.at("offset").get<std::size_t>(), involutory_spec_from_json(b)});
    }
    return BlockInvarianceSpec(j.at("dim").get<std::size_t>(), std::move(blocks));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid block spec: ") + e.what());
  }
}

}  // namespace involute
