#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "json.hpp"

#include "involute/linalg.hpp"
#include "involute/metrics.hpp"
#include "involute/nn.hpp"

namespace involute {

// Single-channel image, row-major, pixels in [0, 1].
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> pixels;

  Image() = default;
  Image(std::size_t height, std::size_t width, std::vector<double> pixels);

  double operator()(std::size_t r, std::size_t c) const { return pixels[r * width + c]; }
  Matrix as_matrix() const { return Matrix(height, width, pixels); }

  friend bool operator==(const Image&, const Image&) = default;
};

struct ConvSpec {
  std::size_t kernel_size = 3;
  std::size_t num_filters = 8;
  bool invariant = false;
  FlipAxis flip_axis = FlipAxis::horizontal;

  void validate() const;
};

// Valid (unpadded) cross-correlation with stride 1.
Matrix conv2d_valid(const Matrix& input, const Matrix& filter);
Matrix conv2d_valid(const Image& img, const Matrix& filter);

Matrix flip_matrix(const Matrix& m, FlipAxis axis);
Image flip_image(const Image& img, FlipAxis axis);

// Per filter: σ(f∗img + b) + σ(f∗flip(img) + b) when spec.invariant, else
// σ(f∗img + b). biases may be empty (all zero).
std::vector<Matrix> invariant_conv_forward(const Image& img, const ConvSpec& spec,
                                           std::span<const Matrix> filters, ActivationKind act,
                                           std::span<const double> biases = {});

// 2×2 max pooling with stride 2 (trailing odd row/column dropped).
Matrix max_pool2(const Matrix& m);

// conv → 2×2 max-pool → dense hidden → logits.
class SmallCnn {
 public:
  SmallCnn(ConvSpec conv, std::size_t height, std::size_t width, std::size_t hidden,
           std::size_t classes, ActivationKind act, std::uint64_t seed);
  SmallCnn(ConvSpec conv, std::size_t height, std::size_t width, std::vector<Matrix> filters,
           Vector conv_bias, ActivationKind act, Mlp head);

  const ConvSpec& conv() const noexcept { return conv_; }
  std::size_t class_count() const { return head_.output_dim(); }
  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  ActivationKind activation() const noexcept { return act_; }
  const std::vector<Matrix>& filters() const noexcept { return filters_; }
  const Vector& conv_bias() const noexcept { return conv_bias_; }
  const Mlp& head() const noexcept { return head_; }

  Vector logits(const Image& img) const;
  std::size_t predict(const Image& img) const;

  // Softmax cross-entropy of one labelled image; adds ∂loss/∂θ · scale into grad.
  double loss_and_gradient(const Image& img, std::size_t label, std::span<double> grad,
                           double scale = 1.0) const;

  std::size_t param_count() const;
  Vector parameters() const;
  void set_parameters(std::span<const double> p);

 private:
  struct Cache;
  Vector forward(const Image& img, Cache* cache) const;

  ConvSpec conv_;
  std::size_t height_;
  std::size_t width_;
  ActivationKind act_;
  std::vector<Matrix> filters_;
  Vector conv_bias_;
  Mlp head_;
};

struct LabelledImages {
  std::vector<Image> images;
  std::vector<std::size_t> labels;
};

struct CnnTrainConfig {
  ConvSpec conv;
  std::size_t hidden = 32;
  std::size_t epochs = 200;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  // Flip each image with probability 1/2 every epoch.
  bool augment = false;
  ActivationKind activation = ActivationKind::tanh;
};

struct CnnTrainResult {
  SmallCnn model;
  // train_loss is the mean cross-entropy, violation the flip violation.
  std::vector<RunRecord> records;
  std::vector<double> accuracy;
  bool single_class = false;
};

CnnTrainResult cnn_train(const LabelledImages& data, const CnnTrainConfig& config);

double accuracy(const SmallCnn& model, const LabelledImages& data);
double cnn_flip_violation(const SmallCnn& model, std::span<const Image> images, FlipAxis axis);

// Binary PGM ("P5"), 8- or 16-bit samples.
Image load_pgm(const std::filesystem::path& path);
void save_pgm(const std::filesystem::path& path, const Image& img, unsigned maxval = 255);

// Files named subjectNN.* in dir; labels are the distinct NN values in
// ascending order.
LabelledImages load_pgm_directory(const std::filesystem::path& dir);

struct SynthOptions {
  FlipAxis axis = FlipAxis::horizontal;
  double noise_std = 0.1;
  // Unsymmetrized noise added on top (0 keeps every image exactly symmetric).
  double asymmetric_noise = 0.0;
  // Seed for the per-sample noise; templates always come from `seed`.
  std::uint64_t sample_seed = 0;
};

LabelledImages synth_symmetric_dataset(std::size_t classes, std::size_t per_class,
                                       std::size_t height, std::size_t width,
                                       std::uint64_t seed, const SynthOptions& options = {});

void to_json(nlohmann::json& j, const SmallCnn& model);
SmallCnn cnn_from_json(const nlohmann::json& j);

}  // namespace involute
