#include "involute/arch.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

#include "involute/error.hpp"

namespace involute {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_scalar_output(const Mlp& net, const char* what) {
  if (net.output_dim() != 1) {
    throw DimensionMismatch(std::string(what) + " requires a scalar-output network");
  }
}

// Parameters of a trunk + linear head, flattened as [trunk | w | b].
Vector head_parameters(const Mlp& trunk, const Vector& w, double b) {
  Vector p = trunk.parameters();
  p.insert(p.end(), w.begin(), w.end());
  p.push_back(b);
  return p;
}

void set_head_parameters(std::span<const double> p, Mlp& trunk, Vector& w, double& b) {
  const std::size_t nt = trunk.param_count();
  if (p.size() != nt + w.size() + 1) throw DimensionMismatch("hub parameter length mismatch");
  trunk.set_parameters(p.first(nt));
  std::copy(p.begin() + static_cast<std::ptrdiff_t>(nt),
            p.begin() + static_cast<std::ptrdiff_t>(nt + w.size()), w.begin());
  b = p.back();
}

void check_head(const Mlp& trunk, const Vector& w, std::size_t input_dim) {
  if (w.size() != trunk.output_dim()) {
    throw DimensionMismatch("head width " + std::to_string(w.size()) +
                            " does not match trunk output " +
                            std::to_string(trunk.output_dim()));
  }
  if (trunk.input_dim() != input_dim) {
    throw DimensionMismatch("trunk input width does not match the symmetry dimension");
  }
}

// x with every block whose bit is set in mask replaced by its image.
Vector apply_blocks(std::span<const double> x, const BlockInvarianceSpec& blocks,
                    std::size_t mask) {
  Vector out(x.begin(), x.end());
  for (std::size_t j = 0; j < blocks.size(); ++j) {
    if (!(mask & (std::size_t{1} << j))) continue;
    const auto& b = blocks.blocks()[j];
    const Vector image = b.spec.apply(x.subspan(b.offset, b.spec.dim()));
    std::copy(image.begin(), image.end(), out.begin() + static_cast<std::ptrdiff_t>(b.offset));
  }
  return out;
}

bool all_even(const BlockInvarianceSpec& blocks) {
  return std::all_of(blocks.blocks().begin(), blocks.blocks().end(),
                     [](const InvarianceBlock& b) { return b.spec.parity() > 0; });
}

void check_hub_blocks(const BlockInvarianceSpec& blocks) {
  if (blocks.size() > kMaxHubBlocks) {
    throw ConfigError("hub superposition over " + std::to_string(blocks.size()) +
                      " blocks exceeds the limit of " + std::to_string(kMaxHubBlocks));
  }
}

// Butterfly reduction over block bits: at level j every pair (s, s | 2^j)
// with bit j clear becomes lo + p_j·hi. A flip of block j swaps the operands
// of each level-j pair, so the result is reproduced bit for bit.
Vector hub_reduce(std::vector<Vector> terms, const BlockInvarianceSpec& blocks) {
  const std::size_t count = terms.size();
  for (std::size_t j = 0; j < blocks.size(); ++j) {
    const std::size_t bit = std::size_t{1} << j;
    const double p = blocks.blocks()[j].spec.parity();
    for (std::size_t s = 0; s < count; ++s) {
      if (s & bit) continue;
      Vector& lo = terms[s];
      const Vector& hi = terms[s | bit];
      for (std::size_t i = 0; i < lo.size(); ++i) lo[i] = lo[i] + p * hi[i];
    }
  }
  return std::move(terms[0]);
}

double mask_coefficient(std::size_t mask, const BlockInvarianceSpec& blocks) {
  double c = 1.0;
  for (std::size_t j = 0; j < blocks.size(); ++j) {
    if (mask & (std::size_t{1} << j)) c *= blocks.blocks()[j].spec.parity();
  }
  return c;
}

}  // namespace

const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::vn: return "vn";
    case ModelKind::hln: return "hln";
    case ModelKind::san: return "san";
    case ModelKind::iptn: return "iptn";
    case ModelKind::hub_multi: return "hub-multi";
  }
  return "?";
}

ModelKind model_kind_from_string(std::string_view name) {
  for (ModelKind k : {ModelKind::vn, ModelKind::hln, ModelKind::san, ModelKind::iptn,
                      ModelKind::hub_multi}) {
    if (name == to_string(k)) return k;
  }
  throw ConfigError("unknown model kind '" + std::string(name) + "'");
}

// --- VN ---------------------------------------------------------------------

double VanillaNetwork::forward(std::span<const double> x, PassCounter& counter) const {
  ++counter.trunk_evals;
  return net.forward_scalar(x);
}

double VanillaNetwork::forward_backward(std::span<const double> x, PassCounter& counter,
                                        std::span<double> grad) const {
  ++counter.trunk_evals;
  ForwardCache cache;
  const double out = net.forward(x, &cache)[0];
  const double one = 1.0;
  backward(net, cache, std::span<const double>(&one, 1), grad);
  return out;
}

// --- HLN --------------------------------------------------------------------

HubNetwork::HubNetwork(Mlp trunk_, Vector head_w_, double head_b_, InvolutorySpec spec_)
    : trunk(std::move(trunk_)), head_w(std::move(head_w_)), head_b(head_b_),
      spec(std::move(spec_)) {
  check_head(trunk, head_w, spec.dim());
}

double HubNetwork::forward(std::span<const double> x, PassCounter& counter) const {
  counter.trunk_evals += 2;
  const Vector h = trunk.forward(x);
  const Vector h_image = trunk.forward(spec.apply(x));
  const double p = spec.parity();
  Vector hub(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) hub[i] = h[i] + p * h_image[i];
  const double bias = spec.parity() > 0 ? 2.0 * head_b : 0.0;
  return dot(head_w, hub) + bias;
}

double HubNetwork::forward_backward(std::span<const double> x, PassCounter& counter,
                                    std::span<double> grad) const {
  counter.trunk_evals += 2;
  ForwardCache c_x, c_image;
  const Vector h = trunk.forward(x, &c_x);
  const Vector h_image = trunk.forward(spec.apply(x), &c_image);
  const double p = spec.parity();
  Vector hub(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) hub[i] = h[i] + p * h_image[i];
  const double bias_scale = p > 0 ? 2.0 : 0.0;

  const std::size_t nt = trunk.param_count();
  auto trunk_grad = grad.first(nt);
  backward(trunk, c_x, head_w, trunk_grad);
  Vector scaled(head_w.size());
  for (std::size_t i = 0; i < scaled.size(); ++i) scaled[i] = p * head_w[i];
  backward(trunk, c_image, scaled, trunk_grad);
  for (std::size_t i = 0; i < hub.size(); ++i) grad[nt + i] += hub[i];
  grad[nt + hub.size()] += bias_scale;
  return dot(head_w, hub) + bias_scale * head_b;
}

std::size_t HubNetwork::param_count() const { return trunk.param_count() + head_w.size() + 1; }
Vector HubNetwork::parameters() const { return head_parameters(trunk, head_w, head_b); }
void HubNetwork::set_parameters(std::span<const double> p) {
  set_head_parameters(p, trunk, head_w, head_b);
}

double hln_forward(const HubNetwork& h, std::span<const double> x, PassCounter& counter) {
  return h.forward(x, counter);
}

// --- hub over several blocks --------------------------------------------------

HubMultiNetwork::HubMultiNetwork(Mlp trunk_, Vector head_w_, double head_b_,
                                 BlockInvarianceSpec blocks_)
    : trunk(std::move(trunk_)), head_w(std::move(head_w_)), head_b(head_b_),
      blocks(std::move(blocks_)) {
  check_head(trunk, head_w, blocks.dim());
  check_hub_blocks(blocks);
}

double HubMultiNetwork::forward(std::span<const double> x, PassCounter& counter) const {
  return hub_multi_forward(trunk, head_w, head_b, blocks, x, counter);
}

double HubMultiNetwork::forward_backward(std::span<const double> x, PassCounter& counter,
                                         std::span<double> grad) const {
  const std::size_t count = std::size_t{1} << blocks.size();
  counter.trunk_evals += count;
  std::vector<ForwardCache> caches(count);
  std::vector<Vector> terms(count);
  for (std::size_t s = 0; s < count; ++s) {
    terms[s] = trunk.forward(apply_blocks(x, blocks, s), &caches[s]);
  }
  const Vector hub = hub_reduce(std::move(terms), blocks);
  const double bias_scale = all_even(blocks) ? static_cast<double>(count) : 0.0;

  const std::size_t nt = trunk.param_count();
  auto trunk_grad = grad.first(nt);
  Vector upstream(head_w.size());
  for (std::size_t s = 0; s < count; ++s) {
    const double c = mask_coefficient(s, blocks);
    for (std::size_t i = 0; i < upstream.size(); ++i) upstream[i] = c * head_w[i];
    backward(trunk, caches[s], upstream, trunk_grad);
  }
  for (std::size_t i = 0; i < hub.size(); ++i) grad[nt + i] += hub[i];
  grad[nt + hub.size()] += bias_scale;
  return dot(head_w, hub) + bias_scale * head_b;
}

std::size_t HubMultiNetwork::param_count() const {
  return trunk.param_count() + head_w.size() + 1;
}
Vector HubMultiNetwork::parameters() const { return head_parameters(trunk, head_w, head_b); }
void HubMultiNetwork::set_parameters(std::span<const double> p) {
  set_head_parameters(p, trunk, head_w, head_b);
}

double hub_multi_forward(const Mlp& trunk, std::span<const double> head_w, double head_b,
                         const BlockInvarianceSpec& blocks, std::span<const double> x,
                         PassCounter& counter) {
  check_hub_blocks(blocks);
  const std::size_t count = std::size_t{1} << blocks.size();
  counter.trunk_evals += count;
  std::vector<Vector> terms(count);
  for (std::size_t s = 0; s < count; ++s) terms[s] = trunk.forward(apply_blocks(x, blocks, s));
  const Vector hub = hub_reduce(std::move(terms), blocks);
  const double bias_scale = all_even(blocks) ? static_cast<double>(count) : 0.0;
  return dot(head_w, hub) + bias_scale * head_b;
}

// --- SAN --------------------------------------------------------------------

SANetwork::SANetwork(Mlp net_, InvolutorySpec spec_) : net(std::move(net_)), spec(std::move(spec_)) {
  if (spec.parity() != 1) {
    throw UnsupportedParity("symmetrized activations are defined for even parity only");
  }
  if (net.depth() < 2) throw ConfigError("SAN needs at least one hidden layer");
  require_scalar_output(net, "SAN");
  if (net.input_dim() != spec.dim()) {
    throw DimensionMismatch("SAN input width does not match the symmetry dimension");
  }
}

Vector SANetwork::first_layer(std::span<const double> x) const {
  const DenseLayer& l = net.layer(0);
  Vector z = matvec(l.W, x);
  Vector z_image = matvec(l.W, spec.apply(x));
  Vector a(z.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = activate(l.act, z[i] + l.b[i]) + activate(l.act, z_image[i] + l.b[i]);
  }
  return a;
}

double SANetwork::forward(std::span<const double> x, PassCounter& counter) const {
  counter.first_layer_evals += 2;
  ++counter.trunk_evals;
  return net.forward(first_layer(x), nullptr, 1)[0];
}

double SANetwork::forward_backward(std::span<const double> x, PassCounter& counter,
                                   std::span<double> grad) const {
  counter.first_layer_evals += 2;
  ++counter.trunk_evals;
  const DenseLayer& l = net.layer(0);
  const Vector x_image = spec.apply(x);
  Vector z = matvec(l.W, x);
  Vector z_image = matvec(l.W, x_image);
  Vector a(z.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    z[i] += l.b[i];
    z_image[i] += l.b[i];
    a[i] = activate(l.act, z[i]) + activate(l.act, z_image[i]);
  }
  ForwardCache cache;
  const double out = net.forward(a, &cache, 1)[0];
  const double one = 1.0;
  const Vector da = backward(net, cache, std::span<const double>(&one, 1), grad);

  for (std::size_t r = 0; r < l.out(); ++r) {
    const double d = da[r] * activate_derivative(l.act, z[r]);
    const double d_image = da[r] * activate_derivative(l.act, z_image[r]);
    double* gw = grad.data() + r * l.in();
    for (std::size_t c = 0; c < l.in(); ++c) gw[c] += d * x[c] + d_image * x_image[c];
    grad[l.W.data().size() + r] += d + d_image;
  }
  return out;
}

Vector SANetwork::input_gradient(std::span<const double> x) const {
  const DenseLayer& l = net.layer(0);
  const Vector x_image = spec.apply(x);
  Vector z = matvec(l.W, x);
  Vector z_image = matvec(l.W, x_image);
  Vector a(z.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    z[i] += l.b[i];
    z_image[i] += l.b[i];
    a[i] = activate(l.act, z[i]) + activate(l.act, z_image[i]);
  }
  ForwardCache cache;
  net.forward(a, &cache, 1);
  Vector scratch(net.param_count(), 0.0);
  const double one = 1.0;
  const Vector da = backward(net, cache, std::span<const double>(&one, 1), scratch);
  Vector d(l.out()), d_image(l.out());
  for (std::size_t r = 0; r < l.out(); ++r) {
    d[r] = da[r] * activate_derivative(l.act, z[r]);
    d_image[r] = da[r] * activate_derivative(l.act, z_image[r]);
  }
  Vector g = matvec_transposed(l.W, d);
  const Vector g_image = matvec_transposed(spec.matrix(), matvec_transposed(l.W, d_image));
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += g_image[i];
  return g;
}

double san_forward(const SANetwork& s, std::span<const double> x, PassCounter& counter) {
  return s.forward(x, counter);
}

// --- IPTN -------------------------------------------------------------------

Reparameterized IptNetwork::reparam(std::span<const double> x) const {
  return std::visit(overloaded{
                        [&](const InvolutorySpec& s) { return reparam_point(x, s); },
                        [&](const BlockInvarianceSpec& s) { return reparam_multi(x, s); },
                    },
                    symmetry);
}

double IptNetwork::forward(std::span<const double> x, PassCounter& counter) const {
  ++counter.trunk_evals;
  const auto r = reparam(x);
  return r.sign * net.forward_scalar(r.x);
}

double IptNetwork::forward_backward(std::span<const double> x, PassCounter& counter,
                                    std::span<double> grad) const {
  ++counter.trunk_evals;
  const auto r = reparam(x);
  ForwardCache cache;
  const double out = net.forward(r.x, &cache)[0];
  const double sign = r.sign;
  backward(net, cache, std::span<const double>(&sign, 1), grad);
  return sign * out;
}

double iptn_forward(const Mlp& net, const InvolutorySpec& spec, std::span<const double> x,
                    PassCounter& counter) {
  ++counter.trunk_evals;
  const auto r = reparam_point(x, spec);
  return r.sign * net.forward_scalar(r.x);
}

// --- SymmetricModel ---------------------------------------------------------

ModelKind SymmetricModel::kind() const {
  return std::visit(overloaded{
                        [](const VanillaNetwork&) { return ModelKind::vn; },
                        [](const HubNetwork&) { return ModelKind::hln; },
                        [](const SANetwork&) { return ModelKind::san; },
                        [](const IptNetwork&) { return ModelKind::iptn; },
                        [](const HubMultiNetwork&) { return ModelKind::hub_multi; },
                    },
                    model_);
}

std::size_t SymmetricModel::input_dim() const {
  return std::visit(overloaded{
                        [](const VanillaNetwork& m) { return m.net.input_dim(); },
                        [](const HubNetwork& m) { return m.trunk.input_dim(); },
                        [](const SANetwork& m) { return m.net.input_dim(); },
                        [](const IptNetwork& m) { return m.net.input_dim(); },
                        [](const HubMultiNetwork& m) { return m.trunk.input_dim(); },
                    },
                    model_);
}

double SymmetricModel::forward(std::span<const double> x, PassCounter& counter) const {
  return std::visit([&](const auto& m) { return m.forward(x, counter); }, model_);
}

double SymmetricModel::forward_backward(std::span<const double> x, PassCounter& counter,
                                        std::span<double> grad) const {
  return std::visit([&](const auto& m) { return m.forward_backward(x, counter, grad); },
                    model_);
}

std::size_t SymmetricModel::param_count() const {
  return std::visit([](const auto& m) { return m.param_count(); }, model_);
}

Vector SymmetricModel::parameters() const {
  return std::visit([](const auto& m) { return m.parameters(); }, model_);
}

void SymmetricModel::set_parameters(std::span<const double> p) {
  std::visit([&](auto& m) { m.set_parameters(p); }, model_);
}

Evaluator SymmetricModel::evaluator() const {
  return [self = *this](std::span<const double> x) {
    PassCounter ignored;
    return self.forward(x, ignored);
  };
}

SymmetricModel build_model(const ModelOptions& o, const Symmetry& symmetry) {
  std::vector<std::size_t> trunk_widths{o.input_dim};
  trunk_widths.insert(trunk_widths.end(), o.hidden.begin(), o.hidden.end());
  std::vector<std::size_t> full_widths = trunk_widths;
  full_widths.push_back(1);
  if (o.hidden.empty()) throw ConfigError("at least one hidden layer is required");

  const auto single = [&]() -> const InvolutorySpec& {
    if (const auto* s = std::get_if<InvolutorySpec>(&symmetry)) return *s;
    throw ConfigError(std::string(to_string(o.kind)) + " needs a single involutory spec");
  };
  const auto head = [&] {
    const Matrix w = init_xavier(1, o.hidden.back(), o.seed + 0x5eedULL);
    return Vector(w.data().begin(), w.data().end());
  };

  switch (o.kind) {
    case ModelKind::vn:
      return SymmetricModel(VanillaNetwork{
          Mlp::xavier(full_widths, o.activation, ActivationKind::identity, o.seed)});
    case ModelKind::hln:
      return SymmetricModel(HubNetwork(Mlp::xavier(trunk_widths, o.activation, o.activation, o.seed),
                                       head(), 0.0, single()));
    case ModelKind::san: {
      Mlp net = Mlp::xavier(full_widths, o.activation, ActivationKind::identity, o.seed);
      net.layer(0).act = o.san_activation;
      return SymmetricModel(SANetwork(std::move(net), single()));
    }
    case ModelKind::iptn:
      return SymmetricModel(IptNetwork{
          Mlp::xavier(full_widths, o.activation, ActivationKind::identity, o.seed), symmetry});
    case ModelKind::hub_multi: {
      BlockInvarianceSpec blocks = std::holds_alternative<BlockInvarianceSpec>(symmetry)
                                       ? std::get<BlockInvarianceSpec>(symmetry)
                                       : BlockInvarianceSpec(o.input_dim, {{0, single()}});
      return SymmetricModel(
          HubMultiNetwork(Mlp::xavier(trunk_widths, o.activation, o.activation, o.seed), head(),
                          0.0, std::move(blocks)));
    }
  }
  throw ConfigError("unsupported model kind");
}

namespace {

Dataset to_principal_domain(const SymmetricModel& model, const Dataset& data) {
  const auto* ipt = std::get_if<IptNetwork>(&model.variant());
  if (!ipt) return data;
  if (const auto* s = std::get_if<InvolutorySpec>(&ipt->symmetry)) return reparam_dataset(data, *s);
  const auto& blocks = std::get<BlockInvarianceSpec>(ipt->symmetry);
  Dataset out;
  for (std::size_t i = 0; i < data.inputs.size(); ++i) {
    auto r = reparam_multi(data.inputs[i], blocks);
    out.inputs.push_back(std::move(r.x));
    out.targets.push_back(r.sign * data.targets[i]);
  }
  return out;
}

}  // namespace

void fit_mse(SymmetricModel& model, const Dataset& raw, std::size_t epochs, double lr,
             PassCounter& counter,
             const std::function<void(const EpochStats&, const SymmetricModel&)>& on_epoch) {
  if (raw.inputs.empty() || raw.inputs.size() != raw.targets.size()) {
    throw ConfigError("training set must be nonempty with one target per input");
  }
  const Dataset data = to_principal_domain(model, raw);
  const std::size_t n = model.param_count();
  const double m = static_cast<double>(data.inputs.size());
  AdamState adam(n, lr);
  Vector params = model.parameters();
  Vector grad(n), sample(n);

  for (std::size_t epoch = 1; epoch <= epochs; ++epoch) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double loss = 0.0;
    for (std::size_t i = 0; i < data.inputs.size(); ++i) {
      std::fill(sample.begin(), sample.end(), 0.0);
      const double out = model.forward_backward(data.inputs[i], counter, sample);
      const double residual = out - data.targets[i];
      loss += residual * residual;
      const double scale = 2.0 * residual / m;
      for (std::size_t k = 0; k < n; ++k) grad[k] += scale * sample[k];
    }
    if (on_epoch) on_epoch(EpochStats{epoch, loss / m}, model);
    adam_step(adam, params, grad);
    model.set_parameters(params);
  }
}

double dataset_mse(const SymmetricModel& model, const Dataset& data, PassCounter& counter) {
  Vector pred;
  pred.reserve(data.inputs.size());
  for (const auto& x : data.inputs) pred.push_back(model.forward(x, counter));
  return mse_loss(pred, data.targets);
}

// --- serialization ----------------------------------------------------------

namespace {

nlohmann::json symmetry_json(const Symmetry& s) {
  nlohmann::json j;
  std::visit([&](const auto& spec) { to_json(j, spec); }, s);
  return j;
}

}  // namespace

void to_json(nlohmann::json& j, const SymmetricModel& model) {
  j = nlohmann::json{{"kind", to_string(model.kind())}};
  std::visit(overloaded{
                 [&](const VanillaNetwork& m) { j["network"] = m.net; },
                 [&](const HubNetwork& m) {
                   j["network"] = m.trunk;
                   j["head"] = {{"w", m.head_w}, {"b", m.head_b}};
                   j["spec"] = symmetry_json(m.spec);
                 },
                 [&](const SANetwork& m) {
                   j["network"] = m.net;
                   j["spec"] = symmetry_json(m.spec);
                 },
                 [&](const IptNetwork& m) {
                   j["network"] = m.net;
                   if (std::holds_alternative<InvolutorySpec>(m.symmetry)) {
                     j["spec"] = symmetry_json(m.symmetry);
                   } else {
                     j["blocks"] = symmetry_json(m.symmetry);
                   }
                 },
                 [&](const HubMultiNetwork& m) {
                   j["network"] = m.trunk;
                   j["head"] = {{"w", m.head_w}, {"b", m.head_b}};
                   j["blocks"] = symmetry_json(m.blocks);
                 },
             },
             model.variant());
}

SymmetricModel model_from_json(const nlohmann::json& j) {
  try {
    const ModelKind kind = model_kind_from_string(j.at("kind").get<std::string>());
    Mlp net = mlp_from_json(j.at("network"));
    switch (kind) {
      case ModelKind::vn:
        return SymmetricModel(VanillaNetwork{std::move(net)});
      case ModelKind::hln:
        return SymmetricModel(HubNetwork(std::move(net), j.at("head").at("w").get<Vector>(),
                                         j.at("head").at("b").get<double>(),
                                         involutory_spec_from_json(j.at("spec"))));
      case ModelKind::san:
        return SymmetricModel(SANetwork(std::move(net), involutory_spec_from_json(j.at("spec"))));
      case ModelKind::iptn:
        if (j.contains("blocks")) {
          return SymmetricModel(IptNetwork{std::move(net), block_spec_from_json(j.at("blocks"))});
        }
        return SymmetricModel(IptNetwork{std::move(net), involutory_spec_from_json(j.at("spec"))});
      case ModelKind::hub_multi:
        return SymmetricModel(HubMultiNetwork(std::move(net), j.at("head").at("w").get<Vector>(),
                                              j.at("head").at("b").get<double>(),
                                              block_spec_from_json(j.at("blocks"))));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("invalid model JSON: ") + e.what());
  }
  throw FormatError("invalid model JSON");
}

// --- activation audit -------------------------------------------------------

double audit_residual(ActivationKind kind, double b, const AuditOptions& o) {
  const auto residual_at = [&](double z) {
    if (o.parity > 0) {
      const double base = activate(kind, b);
      return std::abs((activate(kind, b + z) - base) + (activate(kind, b - z) - base));
    }
    return std::abs(activate(kind, b + z) - activate(kind, b - z));
  };
  double worst = 0.0;
  const std::size_t n = std::max<std::size_t>(o.z_points, 2);
  for (std::size_t i = 0; i < n; ++i) {
    const double z = -o.z_max + 2.0 * o.z_max * static_cast<double>(i) / static_cast<double>(n - 1);
    worst = std::max(worst, residual_at(z));
  }
  // A bounded z grid cannot see past |b|; probe beyond it as well.
  worst = std::max(worst, residual_at(std::abs(b) + o.z_max));
  return worst;
}

UnsafePointReport audit_activation(ActivationKind kind, const AuditOptions& o) {
  if (!(o.b_step > 0.0) || o.b_max < o.b_min || o.z_points == 0 || !(o.tol > 0.0)) {
    throw ConfigError("audit grids must be nonempty with positive step and tolerance");
  }
  if (o.parity != 1 && o.parity != -1) throw ConfigError("audit parity must be +1 or -1");

  // Integer multiples of the step keep 0 and ±k·step exactly representable.
  const auto k_lo = static_cast<long long>(std::ceil(o.b_min / o.b_step - 1e-9));
  const auto k_hi = static_cast<long long>(std::floor(o.b_max / o.b_step + 1e-9));
  std::vector<double> bs, rs;
  for (long long k = k_lo; k <= k_hi; ++k) {
    const double b = static_cast<double>(k) * o.b_step;
    bs.push_back(b);
    rs.push_back(audit_residual(kind, b, o));
  }

  UnsafePointReport report;
  report.kind = kind;
  report.parity = o.parity;
  std::ostringstream grid;
  grid << "b in [" << o.b_min << ", " << o.b_max << "] step " << o.b_step << "; z: "
       << o.z_points << " points in [" << -o.z_max << ", " << o.z_max << "]; tol " << o.tol;
  report.search_grid = grid.str();

  for (std::size_t i = 0; i < bs.size(); ++i) {
    if (rs[i] <= o.tol) {
      report.unsafe_biases.push_back(bs[i]);
      continue;
    }
    // Unsafe points that fall between grid nodes show up as local minima of
    // the residual; refine those by golden-section search.
    if (i == 0 || i + 1 == bs.size()) continue;
    if (!(rs[i] <= rs[i - 1] && rs[i] <= rs[i + 1])) continue;
    if (rs[i - 1] <= o.tol || rs[i + 1] <= o.tol) continue;
    double lo = bs[i - 1], hi = bs[i + 1];
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = hi - g * (hi - lo), d = lo + g * (hi - lo);
    double fc = audit_residual(kind, c, o), fd = audit_residual(kind, d, o);
    for (int it = 0; it < 80 && hi - lo > 1e-15; ++it) {
      if (fc <= fd) {
        hi = d;
        d = c;
        fd = fc;
        c = hi - g * (hi - lo);
        fc = audit_residual(kind, c, o);
      } else {
        lo = c;
        c = d;
        fc = fd;
        d = lo + g * (hi - lo);
        fd = audit_residual(kind, d, o);
      }
    }
    const double best = fc <= fd ? c : d;
    if (audit_residual(kind, best, o) <= o.tol) report.unsafe_biases.push_back(best);
  }
  return report;
}

// --- no-expressivity --------------------------------------------------------

ExpressivityProbe demonstrate_no_expressivity(std::size_t width, std::uint64_t seed,
                                              ActivationKind kind, double bias,
                                              std::size_t input_dim) {
  const std::vector<std::size_t> widths{input_dim, width, 1};
  Mlp net = Mlp::xavier(widths, kind, ActivationKind::identity, seed);
  for (double& b : net.layer(0).b) b = bias;
  const SANetwork san(std::move(net), InvolutorySpec::inversion(input_dim, 1));
  const DenseLayer& first = san.net.layer(0);

  std::mt19937_64 rng(seed + 1);
  std::uniform_real_distribution<double> uni(-3.0, 3.0);
  ExpressivityProbe probe;
  const double h = 1e-5;
  for (int trial = 0; trial < 16; ++trial) {
    Vector x(input_dim);
    for (double& v : x) v = uni(rng);
    const Vector x_image = san.spec.apply(x);
    for (std::size_t i = 0; i < width; ++i) {
      const auto w = first.W.row(i);
      const double bi = first.b[i];
      const double d = activate_derivative(first.act, dot(w, x) + bi);
      const double d_image = activate_derivative(first.act, dot(w, x_image) + bi);
      // ∂a_i/∂w = σ′(wᵀx+b)x + σ′(wᵀAx+b)Ax, ∂a_i/∂x = σ′(wᵀx+b)w + σ′(wᵀAx+b)Aᵀw.
      const Vector w_pulled = matvec_transposed(san.spec.matrix(), w);
      for (std::size_t c = 0; c < input_dim; ++c) {
        probe.max_weight_grad =
            std::max(probe.max_weight_grad, std::abs(d * x[c] + d_image * x_image[c]));
        probe.max_input_grad =
            std::max(probe.max_input_grad, std::abs(d * w[c] + d_image * w_pulled[c]));
      }
      const auto node = [&](std::span<const double> wv, std::span<const double> xv) {
        const Vector xv_image = san.spec.apply(xv);
        return activate(first.act, dot(wv, xv) + bi) + activate(first.act, dot(wv, xv_image) + bi);
      };
      const Vector wv(w.begin(), w.end());
      const Vector gw = finite_diff_grad([&](std::span<const double> p) { return node(p, x); }, wv, h);
      const Vector gx = finite_diff_grad([&](std::span<const double> p) { return node(wv, p); }, x, h);
      probe.max_weight_grad_fd = std::max(probe.max_weight_grad_fd, max_abs(gw));
      probe.max_input_grad_fd = std::max(probe.max_input_grad_fd, max_abs(gx));
    }
  }
  return probe;
}

}  // namespace involute
