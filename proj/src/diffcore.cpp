#include "lasil/diffcore.hpp"

#include "lasil/error.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numbers>

namespace lasil::diff {

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) h = (h ^ c) * 1099511628211ull;
  return h;
}

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

}  // namespace

// ---------------------------------------------------------------- ParamStore

ParamId ParamStore::add(const std::string& name, Matrix init) {
  if (find(name)) throw ConfigError("duplicate parameter name " + name);
  Entry e;
  e.name = name;
  e.grad = Matrix::Zero(init.rows(), init.cols());
  e.m = e.grad;
  e.v = e.grad;
  e.value = std::move(init);
  entries_.push_back(std::move(e));
  return {static_cast<int>(entries_.size()) - 1};
}

ParamId ParamStore::add_glorot(const std::string& name, int rows, int cols, const CounterRng& rng) {
  const double bound = std::sqrt(6.0 / (rows + cols));
  Matrix init(rows, cols);
  const std::uint64_t key = fnv1a(name);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      init(i, j) = bound * (2.0 * rng.uniform({tag(RngStream::kInit), key, static_cast<std::uint64_t>(i) * cols + j}) - 1.0);
  return add(name, std::move(init));
}

ParamId ParamStore::add_zeros(const std::string& name, int rows, int cols) { return add(name, Matrix::Zero(rows, cols)); }

std::optional<ParamId> ParamStore::find(const std::string& name) const {
  for (std::size_t i = 0; i < entries_.size(); ++i)
    if (entries_[i].name == name) return ParamId{static_cast<int>(i)};
  return std::nullopt;
}

void ParamStore::zero_grad() {
  for (auto& e : entries_) e.grad.setZero();
}

void ParamStore::adam_step(const AdamConfig& c) {
  for (auto& e : entries_) {
    ++e.steps;
    e.m = c.beta1 * e.m + (1.0 - c.beta1) * e.grad;
    e.v = c.beta2 * e.v + (1.0 - c.beta2) * e.grad.cwiseAbs2();
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(e.steps));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(e.steps));
    e.value.array() -= c.lr * (e.m.array() / bc1) / ((e.v.array() / bc2).sqrt() + c.eps);
  }
}

double ParamStore::grad_max_abs() const {
  double m = 0.0;
  for (const auto& e : entries_) {
    if (!e.grad.allFinite()) return std::numeric_limits<double>::quiet_NaN();
    if (e.grad.size() > 0) m = std::max(m, e.grad.cwiseAbs().maxCoeff());
  }
  return m;
}

std::vector<double> ParamStore::flat_values() const {
  std::vector<double> out;
  for (const auto& e : entries_) out.insert(out.end(), e.value.data(), e.value.data() + e.value.size());
  return out;
}

std::vector<double> ParamStore::flat_grads() const {
  std::vector<double> out;
  for (const auto& e : entries_) out.insert(out.end(), e.grad.data(), e.grad.data() + e.grad.size());
  return out;
}

void ParamStore::set_flat_values(std::span<const double> values) {
  std::size_t k = 0;
  for (auto& e : entries_) {
    if (k + static_cast<std::size_t>(e.value.size()) > values.size()) throw ConfigError("set_flat_values: size mismatch");
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(k), e.value.size(), e.value.data());
    k += static_cast<std::size_t>(e.value.size());
  }
}

// ---------------------------------------------------------------- checkpoints

namespace {

constexpr char kMagic[8] = {'L', 'A', 'S', 'I', 'L', 'C', 'K', '1'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw DataError("checkpoint truncated");
  return v;
}

void put_matrix(std::ofstream& out, const Matrix& m) {
  out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(sizeof(double) * m.size()));
}

void get_matrix(std::ifstream& in, Matrix& m) {
  in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(sizeof(double) * m.size()));
  if (!in) throw DataError("checkpoint truncated");
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, std::initializer_list<const ParamStore*> stores) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kVersion);
  std::uint32_t count = 0;
  for (const auto* s : stores) count += static_cast<std::uint32_t>(s->size());
  put<std::uint32_t>(out, count);
  for (const auto* s : stores) {
    for (const auto& e : s->entries()) {
      put<std::uint32_t>(out, static_cast<std::uint32_t>(e.name.size()));
      out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
      put<std::int64_t>(out, e.value.rows());
      put<std::int64_t>(out, e.value.cols());
      put<std::int64_t>(out, e.steps);
      put_matrix(out, e.value);
      put_matrix(out, e.m);
      put_matrix(out, e.v);
    }
  }
}

void load_checkpoint(const std::filesystem::path& path, std::initializer_list<ParamStore*> stores) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw DataError(path.string() + ": not a checkpoint");
  if (get<std::uint32_t>(in) != kVersion) throw DataError(path.string() + ": unsupported checkpoint version");
  const auto count = get<std::uint32_t>(in);
  std::map<std::string, ParamStore::Entry*> targets;
  for (auto* s : stores)
    for (auto& e : s->entries()) targets[e.name] = &e;
  std::size_t loaded = 0;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name(get<std::uint32_t>(in), '\0');
    in.read(name.data(), static_cast<std::streamsize>(name.size()));
    const auto rows = get<std::int64_t>(in), cols = get<std::int64_t>(in), steps = get<std::int64_t>(in);
    Matrix value(rows, cols), m(rows, cols), v(rows, cols);
    get_matrix(in, value);
    get_matrix(in, m);
    get_matrix(in, v);
    auto it = targets.find(name);
    if (it == targets.end()) continue;
    auto& e = *it->second;
    if (e.value.rows() != rows || e.value.cols() != cols)
      throw DataError("checkpoint parameter " + name + " has a different shape");
    e.value = std::move(value);
    e.m = std::move(m);
    e.v = std::move(v);
    e.steps = steps;
    ++loaded;
  }
  if (loaded != targets.size()) throw DataError(path.string() + ": checkpoint lacks some model parameters");
}

// ---------------------------------------------------------------- Tape

Var Tape::push(Matrix value, bool needs_grad) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  nodes_.push_back(std::move(n));
  return {static_cast<int>(nodes_.size()) - 1};
}

Var Tape::constant(Matrix value) { return push(std::move(value), false); }

Var Tape::leaf(Matrix value) { return push(std::move(value), true); }

Var Tape::param(ParamStore& store, ParamId id) {
  Node n;
  n.ref = &store.value(id);
  n.needs_grad = true;
  n.store = &store;
  n.param = id;
  nodes_.push_back(std::move(n));
  return {static_cast<int>(nodes_.size()) - 1};
}

Var Tape::frozen(const ParamStore& store, ParamId id) {
  Node n;
  n.ref = &store.value(id);
  nodes_.push_back(std::move(n));
  return {static_cast<int>(nodes_.size()) - 1};
}

const Matrix& Tape::value(Var v) const { return val(v.id); }

Matrix Tape::grad(Var v) const {
  const auto& n = nodes_[v.id];
  if (n.grad.size() == 0) return Matrix::Zero(val(v.id).rows(), val(v.id).cols());
  return n.grad;
}

Matrix& Tape::grad_buffer(int id) {
  auto& n = nodes_[id];
  if (n.grad.size() == 0) n.grad = Matrix::Zero(val(id).rows(), val(id).cols());
  return n.grad;
}

Var Tape::matmul(Var a, Var b) {
  if (value(a).cols() != value(b).rows()) throw ConfigError("matmul: shape mismatch");
  Matrix out = value(a) * value(b);
  Var r = push(std::move(out), needs(a) || needs(b));
  nodes_[r.id].backward = [this, a, b, r] {
    const Matrix& g = nodes_[r.id].grad;
    if (needs(a)) grad_buffer(a.id).noalias() += g * val(b.id).transpose();
    if (needs(b)) grad_buffer(b.id).noalias() += val(a.id).transpose() * g;
  };
  return r;
}

Var Tape::linear(Var x, Var W, Var b) {
  if (value(x).cols() != value(W).rows() || value(b).rows() != 1 || value(b).cols() != value(W).cols())
    throw ConfigError("linear: shape mismatch");
  Matrix out = value(x) * value(W);
  out.rowwise() += value(b).row(0);
  Var r = push(std::move(out), needs(x) || needs(W) || needs(b));
  nodes_[r.id].backward = [this, x, W, b, r] {
    const Matrix& g = nodes_[r.id].grad;
    if (needs(x)) grad_buffer(x.id).noalias() += g * val(W.id).transpose();
    if (needs(W)) grad_buffer(W.id).noalias() += val(x.id).transpose() * g;
    if (needs(b)) grad_buffer(b.id) += g.colwise().sum();
  };
  return r;
}

Var Tape::add(Var a, Var b) {
  if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols()) throw ConfigError("add: shape mismatch");
  Var r = push(value(a) + value(b), needs(a) || needs(b));
  nodes_[r.id].backward = [this, a, b, r] {
    if (needs(a)) grad_buffer(a.id) += nodes_[r.id].grad;
    if (needs(b)) grad_buffer(b.id) += nodes_[r.id].grad;
  };
  return r;
}

Var Tape::sub(Var a, Var b) {
  if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols()) throw ConfigError("sub: shape mismatch");
  Var r = push(value(a) - value(b), needs(a) || needs(b));
  nodes_[r.id].backward = [this, a, b, r] {
    if (needs(a)) grad_buffer(a.id) += nodes_[r.id].grad;
    if (needs(b)) grad_buffer(b.id) -= nodes_[r.id].grad;
  };
  return r;
}

Var Tape::scale(Var a, double s) {
  Var r = push(value(a) * s, needs(a));
  nodes_[r.id].backward = [this, a, r, s] {
    if (needs(a)) grad_buffer(a.id) += nodes_[r.id].grad * s;
  };
  return r;
}

Var Tape::leaky_relu(Var a, double slope) {
  Matrix out = value(a).unaryExpr([slope](double x) { return diff::leaky_relu(x, slope); });
  Var r = push(std::move(out), needs(a));
  nodes_[r.id].backward = [this, a, r, slope] {
    if (!needs(a)) return;
    grad_buffer(a.id).array() +=
        nodes_[r.id].grad.array() * val(a.id).array().unaryExpr([slope](double x) { return x > 0.0 ? 1.0 : slope; });
  };
  return r;
}

Var Tape::exp(Var a) {
  Var r = push(value(a).array().exp().matrix(), needs(a));
  nodes_[r.id].backward = [this, a, r] {
    if (needs(a)) grad_buffer(a.id).array() += nodes_[r.id].grad.array() * val(r.id).array();
  };
  return r;
}

Var Tape::clamp(Var a, double lo, double hi) {
  Var r = push(value(a).cwiseMax(lo).cwiseMin(hi), needs(a));
  nodes_[r.id].backward = [this, a, r, lo, hi] {
    if (!needs(a)) return;
    grad_buffer(a.id).array() += nodes_[r.id].grad.array() *
                                 val(a.id).array().unaryExpr([lo, hi](double x) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
  };
  return r;
}

Var Tape::concat_cols(Var a, Var b) {
  if (value(a).rows() != value(b).rows()) throw ConfigError("concat_cols: row mismatch");
  Matrix out(value(a).rows(), value(a).cols() + value(b).cols());
  out << value(a), value(b);
  Var r = push(std::move(out), needs(a) || needs(b));
  nodes_[r.id].backward = [this, a, b, r] {
    const Matrix& g = nodes_[r.id].grad;
    const auto ca = val(a.id).cols();
    if (needs(a)) grad_buffer(a.id) += g.leftCols(ca);
    if (needs(b)) grad_buffer(b.id) += g.rightCols(g.cols() - ca);
  };
  return r;
}

Var Tape::slice_cols(Var a, int begin, int count) {
  if (begin < 0 || begin + count > value(a).cols()) throw ConfigError("slice_cols: out of range");
  Var r = push(value(a).middleCols(begin, count), needs(a));
  nodes_[r.id].backward = [this, a, r, begin, count] {
    if (needs(a)) grad_buffer(a.id).middleCols(begin, count) += nodes_[r.id].grad;
  };
  return r;
}

Var Tape::scale_cols(Var a, const RowVector& s) {
  if (s.size() != value(a).cols()) throw ConfigError("scale_cols: size mismatch");
  Matrix out = value(a).array().rowwise() * s.array();
  Var r = push(std::move(out), needs(a));
  nodes_[r.id].backward = [this, a, r, s] {
    if (needs(a)) grad_buffer(a.id).array() += nodes_[r.id].grad.array().rowwise() * s.array();
  };
  return r;
}

Var Tape::sum(Var a) {
  Matrix out(1, 1);
  out(0, 0) = value(a).sum();
  Var r = push(std::move(out), needs(a));
  nodes_[r.id].backward = [this, a, r] {
    if (needs(a)) grad_buffer(a.id).array() += nodes_[r.id].grad(0, 0);
  };
  return r;
}

Var Tape::egat(Var hv, const EdgeList& edges, Var Wv, Var wv, double slope) {
  const Matrix& H = value(hv);
  const Matrix& W = value(Wv);
  const Matrix& w = value(wv);
  const Matrix& F = *edges.features;
  const Eigen::Index n = H.rows(), din = H.cols(), de = F.cols();
  if (W.rows() != 2 * din + de || w.rows() != 2 * din + de || w.cols() != 1)
    throw ConfigError("egat: weight shape mismatch");
  if (static_cast<Eigen::Index>(edges.offsets.size()) != n + 1 ||
      static_cast<Eigen::Index>(edges.targets.size()) != F.rows())
    throw ConfigError("egat: edge list does not match node count");
  for (Eigen::Index i = 0; i < n; ++i)
    if (edges.offsets[i + 1] <= edges.offsets[i]) throw ConfigError("egat: empty neighbour set");

  auto act = [slope](double x) { return x > 0.0 ? x : slope * x; };
  auto dact = [slope](double x) { return x > 0.0 ? 1.0 : slope; };

  // W^T [h_i | e | h_j] = Wa^T h_i + We^T e + Wb^T h_j, computed per node.
  Matrix A = H * W.topRows(din);
  Matrix B = H * W.bottomRows(din);
  const Eigen::VectorXd sa = H * w.topRows(din).col(0);
  const Eigen::VectorXd sb = H * w.bottomRows(din).col(0);
  const Eigen::VectorXd fe = F * w.middleRows(din, de).col(0);

  const auto E = static_cast<std::size_t>(F.rows());
  std::vector<double> raw(E), alpha(E);
  Matrix Fbar = Matrix::Zero(n, de);
  Matrix pre = A;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int k0 = edges.offsets[i], k1 = edges.offsets[i + 1];
    double mx = -std::numeric_limits<double>::infinity();
    for (int k = k0; k < k1; ++k) {
      raw[k] = sa(i) + fe(k) + sb(edges.targets[k]);
      mx = std::max(mx, act(raw[k]));
    }
    double z = 0.0;
    for (int k = k0; k < k1; ++k) z += alpha[k] = std::exp(act(raw[k]) - mx);
    for (int k = k0; k < k1; ++k) {
      alpha[k] /= z;
      Fbar.row(i) += alpha[k] * F.row(k);
      pre.row(i) += alpha[k] * B.row(edges.targets[k]);
    }
  }
  pre.noalias() += Fbar * W.middleRows(din, de);
  Matrix out = pre.unaryExpr(act);
  last_attention_ = alpha;

  Var r = push(std::move(out), needs(hv) || needs(Wv) || needs(wv));
  std::vector<int> offsets(edges.offsets.begin(), edges.offsets.end());
  std::vector<int> targets(edges.targets.begin(), edges.targets.end());
  nodes_[r.id].backward = [this, hv, Wv, wv, r, F, offsets = std::move(offsets), targets = std::move(targets),
                           raw = std::move(raw), alpha = std::move(alpha), A = std::move(A), B = std::move(B),
                           Fbar = std::move(Fbar), pre = std::move(pre), din, de, dact] {
    const Matrix& H = val(hv.id);
    const Matrix& W = val(Wv.id);
    const Matrix& w = val(wv.id);
    const Eigen::Index n = H.rows();
    const Matrix dPre = nodes_[r.id].grad.array() * pre.unaryExpr(dact).array();

    const Matrix G = dPre * W.middleRows(din, de).transpose();  // n x de
    const Eigen::VectorXd P = (dPre.array() * A.array()).rowwise().sum();
    Matrix dB = Matrix::Zero(n, B.cols());
    Eigen::VectorXd dsa = Eigen::VectorXd::Zero(n), dsb = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd dwe = Eigen::VectorXd::Zero(de);
    std::vector<double> dalpha(raw.size());
    for (Eigen::Index i = 0; i < n; ++i) {
      const int k0 = offsets[i], k1 = offsets[i + 1];
      double weighted = 0.0;
      for (int k = k0; k < k1; ++k) {
        const int j = targets[k];
        dalpha[k] = P(i) + G.row(i).dot(F.row(k)) + dPre.row(i).dot(B.row(j));
        weighted += alpha[k] * dalpha[k];
        dB.row(j) += alpha[k] * dPre.row(i);
      }
      for (int k = k0; k < k1; ++k) {
        const double draw = alpha[k] * (dalpha[k] - weighted) * dact(raw[k]);
        dsa(i) += draw;
        dsb(targets[k]) += draw;
        dwe += draw * F.row(k).transpose();
      }
    }
    if (needs(hv)) {
      Matrix& dH = grad_buffer(hv.id);
      dH.noalias() += dPre * W.topRows(din).transpose();
      dH.noalias() += dB * W.bottomRows(din).transpose();
      dH.noalias() += dsa * w.topRows(din).col(0).transpose();
      dH.noalias() += dsb * w.bottomRows(din).col(0).transpose();
    }
    if (needs(Wv)) {
      Matrix& dW = grad_buffer(Wv.id);
      dW.topRows(din).noalias() += H.transpose() * dPre;
      dW.middleRows(din, de).noalias() += Fbar.transpose() * dPre;
      dW.bottomRows(din).noalias() += H.transpose() * dB;
    }
    if (needs(wv)) {
      Matrix& dw = grad_buffer(wv.id);
      dw.topRows(din).col(0).noalias() += H.transpose() * dsa;
      dw.middleRows(din, de).col(0) += dwe;
      dw.bottomRows(din).col(0).noalias() += H.transpose() * dsb;
    }
  };
  return r;
}

Var Tape::gaussian_nll(const Matrix& x, Var mu, Var logvar, const Matrix& mask) {
  const Matrix& m = value(mu);
  const Matrix& lv = value(logvar);
  if (x.rows() != m.rows() || x.cols() != m.cols() || lv.rows() != m.rows() || lv.cols() != m.cols())
    throw ConfigError("gaussian_nll: shape mismatch");
  if (mask.size() != 0 && (mask.rows() != x.rows() || mask.cols() != x.cols()))
    throw ConfigError("gaussian_nll: mask shape mismatch");
  const Matrix weight = mask.size() == 0 ? Matrix::Ones(x.rows(), x.cols()) : mask;
  const Matrix diff = x - m;
  const Matrix inv_var = (-lv.array()).exp().matrix();
  const Matrix terms = 0.5 * (kLog2Pi + lv.array() + diff.array().square() * inv_var.array());
  Matrix out(1, 1);
  out(0, 0) = (terms.array() * weight.array()).sum();
  Var r = push(std::move(out), needs(mu) || needs(logvar));
  nodes_[r.id].backward = [this, mu, logvar, r, weight, diff, inv_var] {
    const double g = nodes_[r.id].grad(0, 0);
    if (needs(mu)) grad_buffer(mu.id).array() -= g * weight.array() * diff.array() * inv_var.array();
    if (needs(logvar))
      grad_buffer(logvar.id).array() += g * weight.array() * (0.5 - 0.5 * diff.array().square() * inv_var.array());
  };
  return r;
}

Var Tape::kl_standard_normal(Var mu, Var logvar, const RowVector& row_weights) {
  const Matrix& m = value(mu);
  const Matrix& lv = value(logvar);
  if (lv.rows() != m.rows() || lv.cols() != m.cols()) throw ConfigError("kl_standard_normal: shape mismatch");
  const Eigen::VectorXd weights =
      row_weights.size() == 0 ? Eigen::VectorXd::Ones(m.rows()) : Eigen::VectorXd(row_weights.transpose());
  if (weights.size() != m.rows()) throw ConfigError("kl_standard_normal: weight size mismatch");
  const Matrix per = 0.5 * (m.array().square() + lv.array().exp() - lv.array() - 1.0);
  Matrix out(1, 1);
  out(0, 0) = (per.rowwise().sum().array() * weights.array()).sum();
  Var r = push(std::move(out), needs(mu) || needs(logvar));
  nodes_[r.id].backward = [this, mu, logvar, r, weights] {
    const double g = nodes_[r.id].grad(0, 0);
    if (needs(mu)) grad_buffer(mu.id).array() += g * (val(mu.id).array().colwise() * weights.array());
    if (needs(logvar))
      grad_buffer(logvar.id).array() += g * ((0.5 * (val(logvar.id).array().exp() - 1.0)).colwise() * weights.array());
  };
  return r;
}

Var Tape::reparameterize(Var mu, Var logvar, const Matrix& noise) {
  const Matrix& m = value(mu);
  const Matrix& lv = value(logvar);
  if (noise.rows() != m.rows() || noise.cols() != m.cols() || lv.rows() != m.rows() || lv.cols() != m.cols())
    throw ConfigError("reparameterize: shape mismatch");
  const Matrix scaled = (0.5 * lv.array()).exp() * noise.array();
  Var r = push(m + scaled, needs(mu) || needs(logvar));
  nodes_[r.id].backward = [this, mu, logvar, r, scaled] {
    const Matrix& g = nodes_[r.id].grad;
    if (needs(mu)) grad_buffer(mu.id) += g;
    if (needs(logvar)) grad_buffer(logvar.id).array() += 0.5 * g.array() * scaled.array();
  };
  return r;
}

void Tape::backward(Var loss) {
  if (value(loss).size() != 1) throw ConfigError("backward: loss must be scalar");
  for (auto& n : nodes_) n.grad.resize(0, 0);
  grad_buffer(loss.id)(0, 0) = 1.0;
  for (int id = loss.id; id >= 0; --id) {
    auto& n = nodes_[id];
    if (n.grad.size() == 0 || !n.needs_grad) continue;
    if (n.backward) n.backward();
    if (n.store != nullptr) n.store->grad(n.param) += n.grad;
  }
}

// ---------------------------------------------------------------- closed forms

double gaussian_logpdf(std::span<const double> x, std::span<const double> mu, std::span<const double> var) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - mu[i];
    s += -0.5 * (kLog2Pi + std::log(var[i]) + d * d / var[i]);
  }
  return s;
}

double kl_diag_normal(std::span<const double> mu, std::span<const double> logvar) {
  double s = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) s += 0.5 * (mu[i] * mu[i] + std::exp(logvar[i]) - logvar[i] - 1.0);
  return s;
}

}  // namespace lasil::diff
