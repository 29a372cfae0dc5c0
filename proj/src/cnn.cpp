#include "involute/cnn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <random>
#include <regex>
#include <string>
#include <utility>

#include "involute/error.hpp"

namespace involute {

namespace {

void add_correlation(const Matrix& input, const Matrix& upstream, Matrix& filter_grad) {
  // ∂/∂f[a][b] of Σ_ij up[i][j]·(f∗in)[i][j] = Σ_ij up[i][j]·in[i+a][j+b].
  for (std::size_t a = 0; a < filter_grad.rows(); ++a) {
    for (std::size_t b = 0; b < filter_grad.cols(); ++b) {
      double s = 0.0;
      for (std::size_t i = 0; i < upstream.rows(); ++i) {
        for (std::size_t j = 0; j < upstream.cols(); ++j) s += upstream(i, j) * input(i + a, j + b);
      }
      filter_grad(a, b) += s;
    }
  }
}

std::uint32_t lo32(std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); }
std::uint32_t hi32(std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); }

}  // namespace

Image::Image(std::size_t h, std::size_t w, std::vector<double> px)
    : height(h), width(w), pixels(std::move(px)) {
  if (pixels.size() != h * w) throw DimensionMismatch("image pixel count does not match shape");
  for (double v : pixels) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error("image pixels must lie in [0, 1]");
  }
}

void ConvSpec::validate() const {
  if (kernel_size < 3 || kernel_size % 2 == 0) {
    throw ConfigError("kernel size must be odd and at least 3");
  }
  if (num_filters == 0) throw ConfigError("at least one filter is required");
}

Matrix conv2d_valid(const Matrix& input, const Matrix& filter) {
  if (filter.rows() > input.rows() || filter.cols() > input.cols()) {
    throw DimensionMismatch("filter " + std::to_string(filter.rows()) + "x" +
                            std::to_string(filter.cols()) + " larger than input " +
                            std::to_string(input.rows()) + "x" + std::to_string(input.cols()));
  }
  const std::size_t oh = input.rows() - filter.rows() + 1;
  const std::size_t ow = input.cols() - filter.cols() + 1;
  Matrix out(oh, ow);
  for (std::size_t i = 0; i < oh; ++i) {
    for (std::size_t j = 0; j < ow; ++j) {
      double s = 0.0;
      for (std::size_t a = 0; a < filter.rows(); ++a) {
        for (std::size_t b = 0; b < filter.cols(); ++b) s += filter(a, b) * input(i + a, j + b);
      }
      out(i, j) = s;
    }
  }
  return out;
}

Matrix conv2d_valid(const Image& img, const Matrix& filter) {
  return conv2d_valid(img.as_matrix(), filter);
}

Matrix flip_matrix(const Matrix& m, FlipAxis axis) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (axis == FlipAxis::horizontal) {
        out(r, c) = m(r, m.cols() - 1 - c);
      } else {
        out(r, c) = m(m.rows() - 1 - r, c);
      }
    }
  }
  return out;
}

Image flip_image(const Image& img, FlipAxis axis) {
  const Matrix f = flip_matrix(img.as_matrix(), axis);
  return Image(img.height, img.width, f.data());
}

std::vector<Matrix> invariant_conv_forward(const Image& img, const ConvSpec& spec,
                                           std::span<const Matrix> filters, ActivationKind act,
                                           std::span<const double> biases) {
  if (!biases.empty() && biases.size() != filters.size()) {
    throw DimensionMismatch("one bias per filter is required");
  }
  const Matrix in = img.as_matrix();
  const Matrix in_flipped = flip_matrix(in, spec.flip_axis);
  std::vector<Matrix> maps;
  maps.reserve(filters.size());
  for (std::size_t f = 0; f < filters.size(); ++f) {
    const double b = biases.empty() ? 0.0 : biases[f];
    Matrix u = conv2d_valid(in, filters[f]);
    if (spec.invariant) {
      const Matrix u_flipped = conv2d_valid(in_flipped, filters[f]);
      for (std::size_t i = 0; i < u.data().size(); ++i) {
        u.data()[i] = activate(act, u.data()[i] + b) + activate(act, u_flipped.data()[i] + b);
      }
    } else {
      for (double& v : u.data()) v = activate(act, v + b);
    }
    maps.push_back(std::move(u));
  }
  return maps;
}

Matrix max_pool2(const Matrix& m) {
  const std::size_t ph = m.rows() / 2, pw = m.cols() / 2;
  if (ph == 0 || pw == 0) throw DimensionMismatch("feature map too small for 2x2 pooling");
  Matrix out(ph, pw);
  for (std::size_t i = 0; i < ph; ++i) {
    for (std::size_t j = 0; j < pw; ++j) {
      out(i, j) = std::max(std::max(m(2 * i, 2 * j), m(2 * i, 2 * j + 1)),
                           std::max(m(2 * i + 1, 2 * j), m(2 * i + 1, 2 * j + 1)));
    }
  }
  return out;
}

// --- SmallCnn ---------------------------------------------------------------

struct SmallCnn::Cache {
  Matrix input;
  Matrix input_flipped;
  std::vector<Matrix> pre;          // f∗img + b
  std::vector<Matrix> pre_flipped;  // f∗flip(img) + b
  std::vector<Matrix> maps;
  ForwardCache head;
};

namespace {

std::size_t pooled_size(const ConvSpec& conv, std::size_t h, std::size_t w) {
  if (h < conv.kernel_size || w < conv.kernel_size) {
    throw DimensionMismatch("image smaller than the convolution kernel");
  }
  const std::size_t oh = h - conv.kernel_size + 1, ow = w - conv.kernel_size + 1;
  if (oh < 2 || ow < 2) throw DimensionMismatch("feature map too small for 2x2 pooling");
  return conv.num_filters * (oh / 2) * (ow / 2);
}

}  // namespace

SmallCnn::SmallCnn(ConvSpec conv, std::size_t height, std::size_t width, std::size_t hidden,
                   std::size_t classes, ActivationKind act, std::uint64_t seed)
    : conv_(conv), height_(height), width_(width), act_(act) {
  conv_.validate();
  if (classes < 2) throw ConfigError("a classifier needs at least two classes");
  std::mt19937_64 rng(seed);
  const std::size_t kk = conv_.kernel_size * conv_.kernel_size;
  const Matrix all = init_xavier(conv_.num_filters, kk, rng);
  for (std::size_t f = 0; f < conv_.num_filters; ++f) {
    const auto row = all.row(f);
    filters_.emplace_back(conv_.kernel_size, conv_.kernel_size,
                          std::vector<double>(row.begin(), row.end()));
  }
  conv_bias_.assign(conv_.num_filters, 0.0);
  const std::vector<std::size_t> widths{pooled_size(conv_, height, width), hidden, classes};
  head_ = Mlp::xavier(widths, act, ActivationKind::identity, rng());
}

SmallCnn::SmallCnn(ConvSpec conv, std::size_t height, std::size_t width, std::vector<Matrix> filters,
                   Vector conv_bias, ActivationKind act, Mlp head)
    : conv_(conv), height_(height), width_(width), act_(act), filters_(std::move(filters)),
      conv_bias_(std::move(conv_bias)), head_(std::move(head)) {
  conv_.validate();
  if (filters_.size() != conv_.num_filters || conv_bias_.size() != conv_.num_filters) {
    throw DimensionMismatch("filter count does not match the conv spec");
  }
  for (const auto& f : filters_) {
    if (f.rows() != conv_.kernel_size || f.cols() != conv_.kernel_size) {
      throw DimensionMismatch("filter shape does not match the conv spec");
    }
  }
  if (head_.input_dim() != pooled_size(conv_, height_, width_)) {
    throw DimensionMismatch("dense head width does not match the pooled feature size");
  }
}

Vector SmallCnn::forward(const Image& img, Cache* cache) const {
  if (img.height != height_ || img.width != width_) {
    throw DimensionMismatch("image shape does not match the network");
  }
  const Matrix in = img.as_matrix();
  const Matrix in_flipped = conv_.invariant ? flip_matrix(in, conv_.flip_axis) : Matrix();
  Vector flat;
  std::vector<Matrix> pre, pre_flipped, maps;
  for (std::size_t f = 0; f < filters_.size(); ++f) {
    Matrix u = conv2d_valid(in, filters_[f]);
    for (double& v : u.data()) v += conv_bias_[f];
    Matrix map(u.rows(), u.cols());
    if (conv_.invariant) {
      Matrix u2 = conv2d_valid(in_flipped, filters_[f]);
      for (double& v : u2.data()) v += conv_bias_[f];
      for (std::size_t i = 0; i < u.data().size(); ++i) {
        map.data()[i] = activate(act_, u.data()[i]) + activate(act_, u2.data()[i]);
      }
      if (cache) pre_flipped.push_back(std::move(u2));
    } else {
      for (std::size_t i = 0; i < u.data().size(); ++i) map.data()[i] = activate(act_, u.data()[i]);
    }
    const Matrix pooled = max_pool2(map);
    flat.insert(flat.end(), pooled.data().begin(), pooled.data().end());
    if (cache) {
      pre.push_back(std::move(u));
      maps.push_back(std::move(map));
    }
  }
  if (!cache) return head_.forward(flat);
  cache->input = in;
  cache->input_flipped = in_flipped;
  cache->pre = std::move(pre);
  cache->pre_flipped = std::move(pre_flipped);
  cache->maps = std::move(maps);
  return head_.forward(flat, &cache->head);
}

Vector SmallCnn::logits(const Image& img) const { return forward(img, nullptr); }

std::size_t SmallCnn::predict(const Image& img) const {
  const Vector z = logits(img);
  return static_cast<std::size_t>(std::distance(z.begin(), std::max_element(z.begin(), z.end())));
}

double SmallCnn::loss_and_gradient(const Image& img, std::size_t label, std::span<double> grad,
                                   double scale) const {
  if (label >= class_count()) throw ConfigError("label out of range");
  if (grad.size() != param_count()) throw DimensionMismatch("gradient buffer length mismatch");
  Cache cache;
  const Vector z = forward(img, &cache);
  const double zmax = *std::max_element(z.begin(), z.end());
  double denom = 0.0;
  for (double v : z) denom += std::exp(v - zmax);
  Vector dz(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) {
    dz[k] = scale * (std::exp(z[k] - zmax) / denom - (k == label ? 1.0 : 0.0));
  }
  const double loss = -(z[label] - zmax - std::log(denom));

  const std::size_t kk = conv_.kernel_size * conv_.kernel_size;
  const std::size_t conv_params = filters_.size() * (kk + 1);
  const Vector dflat = backward(head_, cache.head, dz, grad.subspan(conv_params));

  std::size_t offset = 0;
  for (std::size_t f = 0; f < filters_.size(); ++f) {
    const Matrix& map = cache.maps[f];
    const std::size_t ph = map.rows() / 2, pw = map.cols() / 2;
    // Route each pooled gradient to the first maximal element of its window.
    Matrix dmap(map.rows(), map.cols());
    for (std::size_t i = 0; i < ph; ++i) {
      for (std::size_t j = 0; j < pw; ++j) {
        std::size_t bi = 2 * i, bj = 2 * j;
        for (std::size_t a = 0; a < 2; ++a) {
          for (std::size_t b = 0; b < 2; ++b) {
            if (map(2 * i + a, 2 * j + b) > map(bi, bj)) {
              bi = 2 * i + a;
              bj = 2 * j + b;
            }
          }
        }
        dmap(bi, bj) += dflat[offset + i * pw + j];
      }
    }
    offset += ph * pw;

    Matrix du(map.rows(), map.cols());
    for (std::size_t i = 0; i < du.data().size(); ++i) {
      du.data()[i] = dmap.data()[i] * activate_derivative(act_, cache.pre[f].data()[i]);
    }
    Matrix fgrad(conv_.kernel_size, conv_.kernel_size);
    add_correlation(cache.input, du, fgrad);
    double bgrad = 0.0;
    for (double v : du.data()) bgrad += v;
    if (conv_.invariant) {
      Matrix du2(map.rows(), map.cols());
      for (std::size_t i = 0; i < du2.data().size(); ++i) {
        du2.data()[i] = dmap.data()[i] * activate_derivative(act_, cache.pre_flipped[f].data()[i]);
      }
      add_correlation(cache.input_flipped, du2, fgrad);
      for (double v : du2.data()) bgrad += v;
    }
    for (std::size_t i = 0; i < kk; ++i) grad[f * kk + i] += fgrad.data()[i];
    grad[filters_.size() * kk + f] += bgrad;
  }
  return scale * loss;
}

std::size_t SmallCnn::param_count() const {
  const std::size_t kk = conv_.kernel_size * conv_.kernel_size;
  return filters_.size() * (kk + 1) + head_.param_count();
}

Vector SmallCnn::parameters() const {
  Vector p;
  for (const auto& f : filters_) p.insert(p.end(), f.data().begin(), f.data().end());
  p.insert(p.end(), conv_bias_.begin(), conv_bias_.end());
  const Vector h = head_.parameters();
  p.insert(p.end(), h.begin(), h.end());
  return p;
}

void SmallCnn::set_parameters(std::span<const double> p) {
  if (p.size() != param_count()) throw DimensionMismatch("CNN parameter length mismatch");
  std::size_t k = 0;
  for (auto& f : filters_) {
    for (double& v : f.data()) v = p[k++];
  }
  for (double& b : conv_bias_) b = p[k++];
  head_.set_parameters(p.subspan(k));
}

// --- training ---------------------------------------------------------------

double accuracy(const SmallCnn& model, const LabelledImages& data) {
  if (data.images.empty()) throw Error("accuracy: empty dataset");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.images.size(); ++i) {
    if (model.predict(data.images[i]) == data.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.images.size());
}

double cnn_flip_violation(const SmallCnn& model, std::span<const Image> images, FlipAxis axis) {
  const std::function<std::size_t(const Image&)> classify = [&](const Image& img) {
    return model.predict(img);
  };
  const std::function<Image(const Image&)> flip = [axis](const Image& img) {
    return flip_image(img, axis);
  };
  return flip_violation(classify, images, flip);
}

CnnTrainResult cnn_train(const LabelledImages& data, const CnnTrainConfig& cfg) {
  if (data.images.empty() || data.images.size() != data.labels.size()) {
    throw ConfigError("training set must be nonempty with one label per image");
  }
  const std::size_t classes = *std::max_element(data.labels.begin(), data.labels.end()) + 1;
  const Image& first = data.images.front();
  CnnTrainResult result{
      SmallCnn(cfg.conv, first.height, first.width, cfg.hidden, std::max<std::size_t>(classes, 2),
               cfg.activation, cfg.seed),
      {}, {}, false};
  result.single_class = std::all_of(data.labels.begin(), data.labels.end(),
                                    [&](std::size_t l) { return l == data.labels.front(); });

  SmallCnn& model = result.model;
  const std::size_t n = model.param_count();
  AdamState adam(n, cfg.lr);
  Vector params = model.parameters();
  Vector grad(n);
  std::mt19937_64 aug_rng(cfg.seed + 0xa5a5ULL);
  std::bernoulli_distribution coin(0.5);
  const double m = static_cast<double>(data.images.size());
  std::uint64_t passes = 0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double loss = 0.0;
    for (std::size_t i = 0; i < data.images.size(); ++i) {
      const bool flip = cfg.augment && coin(aug_rng);
      const Image& img = data.images[i];
      if (flip) {
        loss += model.loss_and_gradient(flip_image(img, cfg.conv.flip_axis), data.labels[i], grad,
                                        1.0 / m);
      } else {
        loss += model.loss_and_gradient(img, data.labels[i], grad, 1.0 / m);
      }
      ++passes;
    }
    const double violation = cnn_flip_violation(model, data.images, cfg.conv.flip_axis);
    passes += 2 * data.images.size();
    result.records.push_back(RunRecord{epoch, loss, violation, passes, 0.0});
    adam_step(adam, params, grad);
    model.set_parameters(params);
    result.accuracy.push_back(accuracy(model, data));
  }
  return result;
}

// --- PGM --------------------------------------------------------------------

namespace {

// Next header token, skipping whitespace and '#' comments.
std::string pgm_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  if (tok.empty()) throw TruncatedFile("PGM header ended early");
  return tok;
}

std::size_t pgm_number(std::istream& in, const char* what) {
  const std::string tok = pgm_token(in);
  if (tok.find_first_not_of("0123456789") != std::string::npos) {
    throw FormatError(std::string("PGM ") + what + " is not a number: " + tok);
  }
  return std::stoul(tok);
}

}  // namespace

Image load_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (in.gcount() != 2 || magic[0] != 'P' || magic[1] != '5') {
    throw FormatError(path.string() + ": not a binary PGM (expected P5)");
  }
  const std::size_t width = pgm_number(in, "width");
  const std::size_t height = pgm_number(in, "height");
  const std::size_t maxval = pgm_number(in, "maxval");
  if (maxval == 0 || maxval > 65535) throw FormatError("PGM maxval must lie in [1, 65535]");
  if (width == 0 || height == 0) throw FormatError("PGM dimensions must be positive");

  const std::size_t bytes = maxval < 256 ? 1 : 2;
  std::vector<unsigned char> raw(width * height * bytes);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
    throw TruncatedFile(path.string() + ": pixel payload is truncated");
  }
  std::vector<double> px(width * height);
  for (std::size_t i = 0; i < px.size(); ++i) {
    const std::size_t v = bytes == 1 ? raw[i] : (std::size_t{raw[2 * i]} << 8) | raw[2 * i + 1];
    if (v > maxval) throw FormatError("PGM sample exceeds maxval");
    px[i] = static_cast<double>(v) / static_cast<double>(maxval);
  }
  return Image(height, width, std::move(px));
}

void save_pgm(const std::filesystem::path& path, const Image& img, unsigned maxval) {
  if (maxval == 0 || maxval > 65535) throw FormatError("PGM maxval must lie in [1, 65535]");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << "P5\n" << img.width << ' ' << img.height << '\n' << maxval << '\n';
  for (double v : img.pixels) {
    const auto s = static_cast<unsigned>(std::lround(v * maxval));
    if (maxval < 256) {
      out.put(static_cast<char>(s));
    } else {
      out.put(static_cast<char>(s >> 8));
      out.put(static_cast<char>(s & 0xff));
    }
  }
}

LabelledImages load_pgm_directory(const std::filesystem::path& dir) {
  const std::regex name(R"(subject(\d+)\..*)");
  std::vector<std::pair<std::filesystem::path, std::size_t>> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::smatch match;
    const std::string fname = entry.path().filename().string();
    if (std::regex_match(fname, match, name)) files.emplace_back(entry.path(), std::stoul(match[1]));
  }
  if (files.empty()) throw ConfigError("no subjectNN.* files in " + dir.string());
  std::sort(files.begin(), files.end());
  std::map<std::size_t, std::size_t> dense;
  for (const auto& f : files) dense.emplace(f.second, 0);
  std::size_t next = 0;
  for (auto& [subject, label] : dense) label = next++;

  LabelledImages out;
  for (const auto& [path, subject] : files) {
    Image img = load_pgm(path);
    if (!out.images.empty() &&
        (img.height != out.images.front().height || img.width != out.images.front().width)) {
      throw FormatError(path.string() + ": image size differs from the rest of the dataset");
    }
    out.images.push_back(std::move(img));
    out.labels.push_back(dense.at(subject));
  }
  return out;
}

// --- synthetic data ---------------------------------------------------------

LabelledImages synth_symmetric_dataset(std::size_t classes, std::size_t per_class,
                                       std::size_t height, std::size_t width,
                                       std::uint64_t seed, const SynthOptions& o) {
  if (classes < 2) throw ConfigError("synthetic dataset needs at least two classes");
  std::mt19937_64 template_rng(seed);
  std::seed_seq sample_seq{lo32(seed), hi32(seed), lo32(o.sample_seed), hi32(o.sample_seed), 7u};
  std::mt19937_64 sample_rng(sample_seq);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);

  const auto symmetrize = [&](const Matrix& m) {
    const Matrix f = flip_matrix(m, o.axis);
    Matrix s(m.rows(), m.cols());
    for (std::size_t i = 0; i < s.data().size(); ++i) s.data()[i] = (m.data()[i] + f.data()[i]) / 2.0;
    return s;
  };

  std::vector<Matrix> templates;
  for (std::size_t c = 0; c < classes; ++c) {
    Matrix t(height, width);
    for (double& v : t.data()) v = 0.2 + 0.6 * uni(template_rng);
    templates.push_back(symmetrize(t));
  }

  LabelledImages out;
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t s = 0; s < per_class; ++s) {
      Matrix n(height, width);
      for (double& v : n.data()) v = o.noise_std * noise(sample_rng);
      const Matrix sym = symmetrize(n);
      std::vector<double> px(height * width);
      for (std::size_t i = 0; i < px.size(); ++i) {
        double v = templates[c].data()[i] + sym.data()[i];
        if (o.asymmetric_noise > 0.0) v += o.asymmetric_noise * noise(sample_rng);
        px[i] = std::clamp(v, 0.0, 1.0);
      }
      out.images.emplace_back(height, width, std::move(px));
      out.labels.push_back(c);
    }
  }
  return out;
}

// --- serialization ----------------------------------------------------------

void to_json(nlohmann::json& j, const SmallCnn& model) {
  nlohmann::json filters = nlohmann::json::array();
  for (const auto& f : model.filters()) filters.push_back(f.data());
  j = nlohmann::json{{"kind", model.conv().invariant ? "ikcnn" : "vcnn"},
                     {"conv",
                      {{"kernel_size", model.conv().kernel_size},
                       {"num_filters", model.conv().num_filters},
                       {"invariant", model.conv().invariant},
                       {"flip_axis", to_string(model.conv().flip_axis)}}},
                     {"height", model.height()},
                     {"width", model.width()},
                     {"activation", to_string(model.activation())},
                     {"filters", filters},
                     {"conv_bias", model.conv_bias()},
                     {"head", model.head()}};
}

SmallCnn cnn_from_json(const nlohmann::json& j) {
  try {
    ConvSpec conv;
    const auto& c = j.at("conv");
    conv.kernel_size = c.at("kernel_size").get<std::size_t>();
    conv.num_filters = c.at("num_filters").get<std::size_t>();
    conv.invariant = c.at("invariant").get<bool>();
    conv.flip_axis = flip_axis_from_string(c.at("flip_axis").get<std::string>());
    std::vector<Matrix> filters;
    for (const auto& f : j.at("filters")) {
      filters.emplace_back(conv.kernel_size, conv.kernel_size, f.get<std::vector<double>>());
    }
    return SmallCnn(conv, j.at("height").get<std::size_t>(), j.at("width").get<std::size_t>(),
                    std::move(filters), j.at("conv_bias").get<Vector>(),
                    activation_from_string(j.at("activation").get<std::string>()),
                    mlp_from_json(j.at("head")));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("invalid CNN JSON: ") + e.what());
  }
}

}  // namespace involute
