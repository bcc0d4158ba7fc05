#ifndef LASIL_DIFFCORE_HPP
#define LASIL_DIFFCORE_HPP

#include "lasil/rng.hpp"
#include "lasil/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lasil::diff {

inline constexpr double kLeakySlope = 0.01;
inline constexpr double kLogVarMin = -10.0;
inline constexpr double kLogVarMax = 10.0;

struct ParamId {
  int index = -1;
};

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Named dense parameters with gradient buffers and Adam moments.
class ParamStore {
 public:
  ParamId add(const std::string& name, Matrix init);
  /// Uniform in +-sqrt(6 / (fan_in + fan_out)).
  ParamId add_glorot(const std::string& name, int rows, int cols, const CounterRng& rng);
  ParamId add_zeros(const std::string& name, int rows, int cols);

  std::optional<ParamId> find(const std::string& name) const;
  std::size_t size() const { return entries_.size(); }
  const std::string& name(ParamId id) const { return entries_[id.index].name; }

  Matrix& value(ParamId id) { return entries_[id.index].value; }
  const Matrix& value(ParamId id) const { return entries_[id.index].value; }
  Matrix& grad(ParamId id) { return entries_[id.index].grad; }
  const Matrix& grad(ParamId id) const { return entries_[id.index].grad; }
  std::int64_t step_count(ParamId id) const { return entries_[id.index].steps; }

  void zero_grad();
  /// One bias-corrected Adam update of every parameter.
  void adam_step(const AdamConfig& config);
  /// Largest absolute gradient entry; NaN propagates.
  double grad_max_abs() const;

  /// Flatten values or gradients, in insertion order.
  std::vector<double> flat_values() const;
  std::vector<double> flat_grads() const;
  void set_flat_values(std::span<const double> values);

  struct Entry {
    std::string name;
    Matrix value;
    Matrix grad;
    Matrix m;
    Matrix v;
    std::int64_t steps = 0;
  };
  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }

 private:
  std::vector<Entry> entries_;
};

/// Binary checkpoint holding parameters and optimiser state of several
/// stores; names must be unique across stores.
void save_checkpoint(const std::filesystem::path& path, std::initializer_list<const ParamStore*> stores);
void load_checkpoint(const std::filesystem::path& path, std::initializer_list<ParamStore*> stores);

/// Out-edges grouped by source node (CSR layout).
struct EdgeList {
  std::span<const int> offsets;  ///< size nodes + 1
  std::span<const int> targets;  ///< size edges
  const Matrix* features = nullptr;  ///< edges x feature_dim
};

struct Var {
  int id = -1;
};

/// Reverse-mode tape. Operations are recorded in creation order, which is a
/// topological order; backward() walks it once in reverse.
class Tape {
 public:
  Var constant(Matrix value);
  /// Leaf whose gradient can be read back with grad().
  Var leaf(Matrix value);
  /// Parameter leaf; backward() accumulates into the store's gradient.
  Var param(ParamStore& store, ParamId id);
  /// Parameter read by reference without gradient tracking.
  Var frozen(const ParamStore& store, ParamId id);

  const Matrix& value(Var v) const;
  /// Gradient of the last backward() with respect to `v` (zeros if unused).
  Matrix grad(Var v) const;

  Var matmul(Var a, Var b);
  /// x W + b, with b a 1 x out row broadcast over rows.
  Var linear(Var x, Var W, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var scale(Var a, double s);
  Var leaky_relu(Var a, double slope = kLeakySlope);
  Var exp(Var a);
  Var clamp(Var a, double lo, double hi);
  Var concat_cols(Var a, Var b);
  Var slice_cols(Var a, int begin, int count);
  /// Row-wise constant scaling by a 1 x cols vector.
  Var scale_cols(Var a, const RowVector& s);
  Var sum(Var a);

  /// Edge-enhanced graph attention layer:
  ///   a_ij = softmax_j act(w . [h_i | e_ij | h_j]),  h'_i = act(sum_j a_ij W^T [h_i | e_ij | h_j])
  /// with W of shape (2 d_in + d_e) x d_out and w of shape (2 d_in + d_e) x 1.
  Var egat(Var h, const EdgeList& edges, Var W, Var w, double slope = kLeakySlope);

  /// Sum over masked entries of the diagonal-Gaussian negative log density;
  /// `mask` is elementwise (same shape as x) or empty for all ones.
  Var gaussian_nll(const Matrix& x, Var mu, Var logvar, const Matrix& mask = {});
  /// Sum over rows of KL(N(mu, exp(logvar)) || N(0, I)); optional row weights.
  Var kl_standard_normal(Var mu, Var logvar, const RowVector& row_weights = {});
  /// mu + exp(logvar / 2) * noise
  Var reparameterize(Var mu, Var logvar, const Matrix& noise);

  /// Seeds d(loss)/d(loss) = 1 and propagates; loss must be 1 x 1.
  void backward(Var loss);

  /// Attention weights of the most recent egat() call, one per edge.
  const std::vector<double>& last_attention() const { return last_attention_; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    const Matrix* ref = nullptr;
    Matrix grad;
    bool needs_grad = false;
    std::function<void()> backward;
    ParamStore* store = nullptr;
    ParamId param;
  };

  Var push(Matrix value, bool needs_grad);
  const Matrix& val(int id) const { return nodes_[id].ref ? *nodes_[id].ref : nodes_[id].value; }
  Matrix& grad_buffer(int id);
  bool needs(Var v) const { return nodes_[v.id].needs_grad; }

  std::vector<Node> nodes_;
  std::vector<double> last_attention_;
};

// Closed forms used by tests, metrics and the losses above.

/// log N(x; mu, diag(var))
double gaussian_logpdf(std::span<const double> x, std::span<const double> mu, std::span<const double> var);
/// KL(N(mu, diag(exp(logvar))) || N(0, I))
double kl_diag_normal(std::span<const double> mu, std::span<const double> logvar);

inline double leaky_relu(double x, double slope = kLeakySlope) { return x > 0.0 ? x : slope * x; }

}  // namespace lasil::diff

#endif  // LASIL_DIFFCORE_HPP
