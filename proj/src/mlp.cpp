#include "toporel/mlp.hpp"

#include <cmath>
#include <cstring>
#include <random>

#include "toporel/fsutil.hpp"

namespace toporel {

namespace {

MLPWeights::Layer init_layer(int in, int out, Rng& rng) {
  const double a = std::sqrt(6.0 / (in + out));
  std::uniform_real_distribution<double> uniform(-a, a);
  MLPWeights::Layer layer;
  layer.weight = Matrix(out, in);
  for (Eigen::Index r = 0; r < out; ++r) {
    for (Eigen::Index c = 0; c < in; ++c) layer.weight(r, c) = uniform(rng);
  }
  layer.bias = Vector::Zero(out);
  return layer;
}

void check_sizes(const std::vector<int>& sizes, const char* what) {
  if (sizes.size() < 2) {
    throw BadArchitecture(std::string(what) + ": need at least one layer");
  }
  for (int s : sizes) {
    if (s < 1) throw BadArchitecture(std::string(what) + ": widths must be positive");
  }
}

Matrix forward_layers(const MLPWeights& w, const Matrix& x, int first, int last,
                      bool activate_last, ForwardCache* cache) {
  if (x.cols() != w.layers[first].weight.cols()) {
    throw DimensionMismatch("forward: input width " + std::to_string(x.cols()) +
                            " vs layer width " + std::to_string(w.layers[first].weight.cols()));
  }
  if (cache) {
    cache->input = x;
    cache->pre.clear();
    cache->post.clear();
    cache->first_layer = first;
    cache->activate_last = activate_last;
  }
  Matrix cur = x;
  for (int i = first; i < last; ++i) {
    const auto& layer = w.layers[i];
    if (cur.cols() != layer.weight.cols()) {
      throw DimensionMismatch("forward: layer " + std::to_string(i) + " expects width " +
                              std::to_string(layer.weight.cols()));
    }
    Matrix pre = cur * layer.weight.transpose();
    pre.rowwise() += layer.bias.transpose();
    const bool activate = (i + 1 < last) || activate_last;
    Matrix post = activate ? activation_apply(w.activation, pre) : pre;
    if (cache) {
      cache->pre.push_back(pre);
      cache->post.push_back(post);
    }
    cur = std::move(post);
  }
  return cur;
}

}  // namespace

MLPWeights init_mlp(const std::vector<int>& layer_sizes, Activation activation,
                    std::uint64_t seed) {
  if (layer_sizes.size() < 3) {
    throw BadArchitecture("init_mlp: need at least 2 layers");
  }
  check_sizes(layer_sizes, "init_mlp");
  MLPWeights w;
  w.activation = activation;
  Rng rng(seed);
  for (std::size_t i = 0; i + 1 < layer_sizes.size(); ++i) {
    w.layers.push_back(init_layer(layer_sizes[i], layer_sizes[i + 1], rng));
  }
  w.latent_layer = w.num_layers() - 1;  // single-layer head by default
  return w;
}

MLPWeights init_mlp_split(const std::vector<int>& encoder_sizes,
                          const std::vector<int>& head_sizes, Activation activation,
                          std::uint64_t seed) {
  check_sizes(encoder_sizes, "init_mlp_split: encoder");
  check_sizes(head_sizes, "init_mlp_split: head");
  MLPWeights w;
  w.activation = activation;
  Rng rng(seed);
  for (std::size_t i = 0; i + 1 < encoder_sizes.size(); ++i) {
    w.layers.push_back(init_layer(encoder_sizes[i], encoder_sizes[i + 1], rng));
  }
  w.latent_layer = w.num_layers();
  for (std::size_t i = 0; i + 1 < head_sizes.size(); ++i) {
    w.layers.push_back(init_layer(head_sizes[i], head_sizes[i + 1], rng));
  }
  return w;
}

Matrix forward(const MLPWeights& w, const Matrix& x, ForwardCache* cache) {
  return forward_layers(w, x, 0, w.num_layers(), false, cache);
}

Matrix encode(const MLPWeights& w, const Matrix& x, ForwardCache* cache) {
  return forward_layers(w, x, 0, w.latent_layer, true, cache);
}

Matrix head(const MLPWeights& w, const Matrix& z, ForwardCache* cache) {
  return forward_layers(w, z, w.latent_layer, w.num_layers(), false, cache);
}

Gradients zero_gradients(const MLPWeights& w) {
  Gradients g;
  g.layers.reserve(w.layers.size());
  for (const auto& layer : w.layers) {
    g.layers.push_back({Matrix::Zero(layer.weight.rows(), layer.weight.cols()),
                        Vector::Zero(layer.bias.size())});
  }
  return g;
}

Matrix backward_range(const MLPWeights& w, const ForwardCache& cache, const Matrix& doutput,
                      Gradients& grads) {
  const int count = static_cast<int>(cache.pre.size());
  if (count == 0 || cache.first_layer + count > w.num_layers() ||
      grads.layers.size() != w.layers.size()) {
    throw CacheMismatch("backward_range: cache does not match weights");
  }
  if (doutput.rows() != cache.post.back().rows() || doutput.cols() != cache.post.back().cols()) {
    throw CacheMismatch("backward_range: gradient shape does not match cached output");
  }
  Matrix d = doutput;
  for (int idx = count - 1; idx >= 0; --idx) {
    const int layer = cache.first_layer + idx;
    const bool activated = (idx + 1 < count) || cache.activate_last;
    Matrix dpre =
        activated ? d.cwiseProduct(activation_derivative(w.activation, cache.pre[idx])) : d;
    const Matrix& input = idx == 0 ? cache.input : cache.post[idx - 1];
    grads.layers[layer].weight += dpre.transpose() * input;
    grads.layers[layer].bias += dpre.colwise().sum().transpose();
    d = dpre * w.layers[layer].weight;
  }
  return d;
}

Gradients backward(const MLPWeights& w, const ForwardCache& cache, const Matrix& dlogits,
                   const Matrix* extra_latent_grad) {
  if (cache.first_layer != 0 || static_cast<int>(cache.pre.size()) != w.num_layers() ||
      cache.activate_last) {
    throw CacheMismatch("backward: cache is not a full forward pass");
  }
  if (dlogits.rows() != cache.post.back().rows() || dlogits.cols() != cache.post.back().cols()) {
    throw CacheMismatch("backward: dlogits shape does not match cached logits");
  }
  Gradients grads = zero_gradients(w);
  const int l = w.num_layers();
  Matrix d = dlogits;
  for (int idx = l - 1; idx >= 0; --idx) {
    const bool activated = idx + 1 < l;
    Matrix dpre =
        activated ? d.cwiseProduct(activation_derivative(w.activation, cache.pre[idx])) : d;
    const Matrix& input = idx == 0 ? cache.input : cache.post[idx - 1];
    grads.layers[idx].weight += dpre.transpose() * input;
    grads.layers[idx].bias += dpre.colwise().sum().transpose();
    d = dpre * w.layers[idx].weight;
    if (extra_latent_grad && idx == w.latent_layer) {
      // d now holds the gradient w.r.t. the latent activation phi_m.
      if (extra_latent_grad->rows() != d.rows() || extra_latent_grad->cols() != d.cols()) {
        throw CacheMismatch("backward: extra latent gradient shape mismatch");
      }
      d += *extra_latent_grad;
    }
  }
  return grads;
}

std::pair<double, Matrix> softmax_cross_entropy(const Matrix& logits,
                                                const std::vector<int>& labels) {
  const Eigen::Index n = logits.rows();
  const Eigen::Index classes = logits.cols();
  if (static_cast<Eigen::Index>(labels.size()) != n) {
    throw LengthMismatch("softmax_cross_entropy: " + std::to_string(labels.size()) +
                         " labels for " + std::to_string(n) + " rows");
  }
  double loss = 0.0;
  Matrix dlogits(n, classes);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const int label = labels[static_cast<std::size_t>(r)];
    if (label < 0 || label >= classes) {
      throw LabelOutOfRange("softmax_cross_entropy: label " + std::to_string(label) +
                            " outside [0, " + std::to_string(classes) + ")");
    }
    const double m = logits.row(r).maxCoeff();
    double sum = 0.0;
    for (Eigen::Index c = 0; c < classes; ++c) sum += std::exp(logits(r, c) - m);
    const double lse = m + std::log(sum);
    loss += lse - logits(r, label);
    for (Eigen::Index c = 0; c < classes; ++c) {
      dlogits(r, c) = std::exp(logits(r, c) - lse) * inv_n;
    }
    dlogits(r, label) -= inv_n;
  }
  return {loss * inv_n, dlogits};
}

double verify_network_invariance(const MLPWeights& w_a, const MLPWeights& w_b,
                                 const LatentBatch& samples) {
  if (w_a.num_layers() != w_b.num_layers() || w_a.activation != w_b.activation ||
      w_a.latent_layer != w_b.latent_layer) {
    throw ArchitectureMismatch("verify_network_invariance: different architectures");
  }
  for (int i = 0; i < w_a.num_layers(); ++i) {
    if (w_a.layers[i].weight.rows() != w_b.layers[i].weight.rows() ||
        w_a.layers[i].weight.cols() != w_b.layers[i].weight.cols()) {
      throw ArchitectureMismatch("verify_network_invariance: layer " + std::to_string(i) +
                                 " shape differs");
    }
  }
  const Matrix out_a = forward(w_a, samples);
  const Matrix out_b = forward(w_b, samples);
  return (out_a - out_b).cwiseAbs().maxCoeff();
}

namespace {

void put_u32(std::string& buf, std::uint32_t v) {
  buf.append(reinterpret_cast<const char*>(&v), sizeof(v));
}

void put_doubles(std::string& buf, const double* data, std::size_t count) {
  buf.append(reinterpret_cast<const char*>(data), count * sizeof(double));
}

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;

  std::uint32_t u32() {
    if (pos + 4 > buf.size()) throw IoError("MLPW file truncated");
    std::uint32_t v;
    std::memcpy(&v, buf.data() + pos, 4);
    pos += 4;
    return v;
  }

  std::uint8_t u8() {
    if (pos + 1 > buf.size()) throw IoError("MLPW file truncated");
    return static_cast<std::uint8_t>(buf[pos++]);
  }

  void doubles(double* out, std::size_t count) {
    if (pos + count * sizeof(double) > buf.size()) throw IoError("MLPW file truncated");
    std::memcpy(out, buf.data() + pos, count * sizeof(double));
    pos += count * sizeof(double);
  }
};

}  // namespace

void save_mlp_weights(const std::string& path, const MLPWeights& w, const Vector* running_mean,
                      const Vector* running_std) {
  std::string buf;
  buf.append("MLPW", 4);
  put_u32(buf, 1);  // version
  put_u32(buf, static_cast<std::uint32_t>(w.num_layers()));
  put_u32(buf, static_cast<std::uint32_t>(w.activation));
  put_u32(buf, static_cast<std::uint32_t>(w.latent_layer));
  for (const auto& layer : w.layers) {
    put_u32(buf, static_cast<std::uint32_t>(layer.weight.rows()));
    put_u32(buf, static_cast<std::uint32_t>(layer.weight.cols()));
  }
  for (const auto& layer : w.layers) {
    put_doubles(buf, layer.weight.data(), static_cast<std::size_t>(layer.weight.size()));
    put_doubles(buf, layer.bias.data(), static_cast<std::size_t>(layer.bias.size()));
  }
  const bool has_running = running_mean != nullptr && running_std != nullptr;
  buf.push_back(has_running ? 1 : 0);
  if (has_running) {
    put_u32(buf, static_cast<std::uint32_t>(running_mean->size()));
    put_doubles(buf, running_mean->data(), static_cast<std::size_t>(running_mean->size()));
    put_doubles(buf, running_std->data(), static_cast<std::size_t>(running_std->size()));
  }
  atomic_write_file(path, buf);
}

MLPWeights load_mlp_weights(const std::string& path, Vector* running_mean, Vector* running_std,
                            bool* has_running) {
  const std::string buf = read_file(path);
  if (buf.size() < 4 || buf.compare(0, 4, "MLPW") != 0) {
    throw IoError("'" + path + "' is not an MLPW file");
  }
  Reader r{buf, 4};
  const std::uint32_t version = r.u32();
  if (version != 1) throw IoError("unsupported MLPW version " + std::to_string(version));
  const std::uint32_t n_layers = r.u32();
  MLPWeights w;
  w.activation = static_cast<Activation>(r.u32());
  w.latent_layer = static_cast<int>(r.u32());
  std::vector<std::pair<std::uint32_t, std::uint32_t>> shapes(n_layers);
  for (auto& s : shapes) {
    s.first = r.u32();
    s.second = r.u32();
  }
  for (const auto& [rows, cols] : shapes) {
    MLPWeights::Layer layer;
    layer.weight = Matrix(rows, cols);
    layer.bias = Vector(rows);
    r.doubles(layer.weight.data(), static_cast<std::size_t>(rows) * cols);
    r.doubles(layer.bias.data(), rows);
    w.layers.push_back(std::move(layer));
  }
  const bool present = r.u8() != 0;
  if (has_running) *has_running = present;
  if (present) {
    const std::uint32_t m = r.u32();
    Vector mean(m), std_dev(m);
    r.doubles(mean.data(), m);
    r.doubles(std_dev.data(), m);
    if (running_mean) *running_mean = std::move(mean);
    if (running_std) *running_std = std::move(std_dev);
  }
  if (w.latent_layer < 1 || w.latent_layer >= w.num_layers()) {
    throw IoError("'" + path + "': invalid latent layer index");
  }
  return w;
}

}  // namespace toporel
