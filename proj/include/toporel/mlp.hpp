#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "toporel/activation.hpp"
#include "toporel/common.hpp"

namespace toporel {

// Plain fully connected network. layers[0..latent_layer) is the encoder phi,
// layers[latent_layer..) is the head gamma. For absolute models consecutive
// layer dimensions chain; in relative modes the head input width is the
// anchor count, so the chain deliberately breaks at the latent boundary and
// only encode()/head() apply.
struct MLPWeights {
  struct Layer {
    Matrix weight;  // out x in
    Vector bias;    // out
  };

  std::vector<Layer> layers;
  Activation activation = Activation::gelu;
  int latent_layer = 1;  // 1 <= latent_layer < layers.size()

  int num_layers() const { return static_cast<int>(layers.size()); }
  int input_dim() const { return static_cast<int>(layers.front().weight.cols()); }
  int output_dim() const { return static_cast<int>(layers.back().weight.rows()); }
  int latent_dim() const { return static_cast<int>(layers[latent_layer - 1].weight.rows()); }
  int head_input_dim() const { return static_cast<int>(layers[latent_layer].weight.cols()); }
};

// Glorot-uniform weights, zero biases, deterministic from the seed.
MLPWeights init_mlp(const std::vector<int>& layer_sizes, Activation activation,
                    std::uint64_t seed);
// Same, but the head input width may differ from the encoder output width
// (relative modes: the head consumes anchor-count-many similarities).
MLPWeights init_mlp_split(const std::vector<int>& encoder_sizes,
                          const std::vector<int>& head_sizes, Activation activation,
                          std::uint64_t seed);

struct ForwardCache {
  Matrix input;
  std::vector<Matrix> pre;   // affine outputs per layer
  std::vector<Matrix> post;  // activated outputs (last layer of a full pass: logits)
  int first_layer = 0;
  bool activate_last = false;
};

// Full pass: affine+activation chain, final layer affine only.
Matrix forward(const MLPWeights& w, const Matrix& x, ForwardCache* cache = nullptr);
// Encoder: layers [0, latent_layer), activation applied to every layer.
Matrix encode(const MLPWeights& w, const Matrix& x, ForwardCache* cache = nullptr);
// Head: layers [latent_layer, l), final layer affine only.
Matrix head(const MLPWeights& w, const Matrix& z, ForwardCache* cache = nullptr);

struct Gradients {
  std::vector<MLPWeights::Layer> layers;  // same shapes as the weights
};

Gradients zero_gradients(const MLPWeights& w);

// Reverse pass over the layer range recorded in `cache`. Fills the matching
// entries of `grads` and returns the gradient with respect to the range
// input. `extra_latent_grad`, when given to a full-pass backward, is added to
// the gradient flowing into the latent activation (the injection point for
// pre-relative regularization).
Matrix backward_range(const MLPWeights& w, const ForwardCache& cache, const Matrix& doutput,
                      Gradients& grads);
Gradients backward(const MLPWeights& w, const ForwardCache& cache, const Matrix& dlogits,
                   const Matrix* extra_latent_grad = nullptr);

// Mean over the batch of -log softmax(logits)[label]; gradient is
// (softmax - onehot) / batch, log-sum-exp stabilized.
std::pair<double, Matrix> softmax_cross_entropy(const Matrix& logits,
                                                const std::vector<int>& labels);

// Max over samples and output coordinates of |f(x, w_a) - f(x, w_b)|.
double verify_network_invariance(const MLPWeights& w_a, const MLPWeights& w_b,
                                 const LatentBatch& samples);

// Versioned binary format: magic "MLPW", u32 version, architecture header,
// activation tag, latent layer, little-endian real64 weight data in layer
// order; running stats appended when present.
void save_mlp_weights(const std::string& path, const MLPWeights& w,
                      const Vector* running_mean = nullptr, const Vector* running_std = nullptr);
MLPWeights load_mlp_weights(const std::string& path, Vector* running_mean = nullptr,
                            Vector* running_std = nullptr, bool* has_running = nullptr);

}  // namespace toporel
