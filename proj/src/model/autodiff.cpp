#include "treebert/autodiff.hpp"

#include "treebert/errors.hpp"

#include <cmath>
#include <limits>
#include <memory>

namespace treebert::ad {

Parameter& ParameterStore::add(std::string name, Matrix init, bool decay) {
  if (find(name)) throw Error("duplicate parameter '" + name + "'");
  Parameter& p = params_.emplace_back();
  p.name = std::move(name);
  p.value = std::move(init);
  p.decay = decay;
  p.zero_grad();
  return p;
}

Parameter* ParameterStore::find(std::string_view name) {
  for (auto& p : params_)
    if (p.name == name) return &p;
  return nullptr;
}

const Parameter* ParameterStore::find(std::string_view name) const {
  for (const auto& p : params_)
    if (p.name == name) return &p;
  return nullptr;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

Eigen::Index ParameterStore::scalar_count() const {
  Eigen::Index n = 0;
  for (const auto& p : params_) n += p.size();
  return n;
}

namespace {

void check(bool ok, const char* what) {
  if (!ok) throw ShapeMismatch(what);
}

}  // namespace

Var Graph::push(Matrix value, bool requires_grad) {
  Node& n = nodes_.emplace_back();
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Graph::constant(Matrix value) { return push(std::move(value), false); }

Var Graph::param(Parameter& p) {
  Node& n = nodes_.emplace_back();
  n.param = &p;
  n.requires_grad = true;
  return Var{static_cast<int>(nodes_.size()) - 1};
}

const Matrix& Graph::value(Var v) const {
  const Node& n = node(v);
  return n.param ? n.param->value : n.value;
}

Matrix& Graph::grad(Var v) {
  Node& n = node(v);
  if (n.param) {
    if (n.param->grad.rows() != n.param->value.rows() || n.param->grad.cols() != n.param->value.cols())
      n.param->zero_grad();
    return n.param->grad;
  }
  if (n.grad.size() == 0) n.grad.setZero(n.value.rows(), n.value.cols());
  return n.grad;
}

Var Graph::matmul(Var a, Var b) {
  check(value(a).cols() == value(b).rows(), "matmul: inner dimensions differ");
  Var out = push(value(a) * value(b), needs(a) || needs(b));
  if (needs(out)) {
    node(out).backward = [this, a, b, out] {
      const Matrix& g = grad(out);
      if (needs(a)) grad(a).noalias() += g * value(b).transpose();
      if (needs(b)) grad(b).noalias() += value(a).transpose() * g;
    };
  }
  return out;
}

Var Graph::matmul_nt(Var a, Var b) {
  check(value(a).cols() == value(b).cols(), "matmul_nt: column counts differ");
  Var out = push(value(a) * value(b).transpose(), needs(a) || needs(b));
  if (needs(out)) {
    node(out).backward = [this, a, b, out] {
      const Matrix& g = grad(out);
      if (needs(a)) grad(a).noalias() += g * value(b);
      if (needs(b)) grad(b).noalias() += g.transpose() * value(a);
    };
  }
  return out;
}

Var Graph::add(Var a, Var b) {
  check(value(a).rows() == value(b).rows() && value(a).cols() == value(b).cols(), "add: shapes differ");
  Var out = push(value(a) + value(b), needs(a) || needs(b));
  if (needs(out)) {
    node(out).backward = [this, a, b, out] {
      if (needs(a)) grad(a) += grad(out);
      if (needs(b)) grad(b) += grad(out);
    };
  }
  return out;
}

Var Graph::add_row(Var a, Var bias) {
  check(value(bias).rows() == 1 && value(bias).cols() == value(a).cols(), "add_row: bias must be 1 x cols");
  Matrix result = value(a);
  result.rowwise() += value(bias).row(0);
  Var out = push(std::move(result), needs(a) || needs(bias));
  if (needs(out)) {
    node(out).backward = [this, a, bias, out] {
      if (needs(a)) grad(a) += grad(out);
      if (needs(bias)) grad(bias) += grad(out).colwise().sum();
    };
  }
  return out;
}

Var Graph::scale(Var a, double s) {
  Var out = push(value(a) * s, needs(a));
  if (needs(out)) node(out).backward = [this, a, out, s] { grad(a) += grad(out) * s; };
  return out;
}

Var Graph::combine(Var a, double wa, Var b, double wb) {
  check(value(a).rows() == value(b).rows() && value(a).cols() == value(b).cols(), "combine: shapes differ");
  Var out = push(wa * value(a) + wb * value(b), needs(a) || needs(b));
  if (needs(out)) {
    node(out).backward = [this, a, b, out, wa, wb] {
      if (needs(a)) grad(a) += wa * grad(out);
      if (needs(b)) grad(b) += wb * grad(out);
    };
  }
  return out;
}

Var Graph::gelu(Var a) {
  const Matrix& x = value(a);
  Matrix y = x.unaryExpr([](double t) { return 0.5 * t * (1.0 + std::erf(t * M_SQRT1_2)); });
  Var out = push(std::move(y), needs(a));
  if (needs(out)) {
    node(out).backward = [this, a, out] {
      const Matrix& x = value(a);
      const Matrix d = x.unaryExpr([](double t) {
        return 0.5 * (1.0 + std::erf(t * M_SQRT1_2)) + t * std::exp(-0.5 * t * t) * 0.5 * M_2_SQRTPI * M_SQRT1_2;
      });
      grad(a) += grad(out).cwiseProduct(d);
    };
  }
  return out;
}

Var Graph::layer_norm(Var x, Var gain, Var bias, double eps) {
  const Matrix& in = value(x);
  const Eigen::Index n = in.cols();
  check(value(gain).rows() == 1 && value(gain).cols() == n && value(bias).cols() == n, "layer_norm: parameter width");
  auto xhat = std::make_shared<Matrix>(in.rows(), n);
  auto inv_std = std::make_shared<Eigen::VectorXd>(in.rows());
  for (Eigen::Index r = 0; r < in.rows(); ++r) {
    const double mean = in.row(r).mean();
    const double var = (in.row(r).array() - mean).square().mean();
    (*inv_std)(r) = 1.0 / std::sqrt(var + eps);
    xhat->row(r) = (in.row(r).array() - mean) * (*inv_std)(r);
  }
  Matrix y = xhat->array().rowwise() * value(gain).row(0).array();
  y.rowwise() += value(bias).row(0);
  Var out = push(std::move(y), needs(x) || needs(gain) || needs(bias));
  if (needs(out)) {
    node(out).backward = [this, x, gain, bias, out, xhat, inv_std] {
      const Matrix& g = grad(out);
      if (needs(gain)) grad(gain) += g.cwiseProduct(*xhat).colwise().sum();
      if (needs(bias)) grad(bias) += g.colwise().sum();
      if (needs(x)) {
        const auto n = static_cast<double>(g.cols());
        const Matrix dxhat = g.array().rowwise() * value(gain).row(0).array();
        Matrix& gx = grad(x);
        for (Eigen::Index r = 0; r < g.rows(); ++r) {
          const double sum = dxhat.row(r).sum();
          const double dot = dxhat.row(r).dot(xhat->row(r));
          gx.row(r).array() +=
              ((*inv_std)(r) / n) * (n * dxhat.row(r).array() - sum - xhat->row(r).array() * dot);
        }
      }
    };
  }
  return out;
}

Var Graph::dropout(Var a, double p, Rng& rng) {
  if (p <= 0.0) return a;
  const Matrix& x = value(a);
  auto mask = std::make_shared<Matrix>(x.rows(), x.cols());
  const double keep = 1.0 / (1.0 - p);
  for (Eigen::Index i = 0; i < mask->size(); ++i) mask->data()[i] = rng.uniform() < p ? 0.0 : keep;
  Var out = push(x.cwiseProduct(*mask), needs(a));
  if (needs(out)) node(out).backward = [this, a, out, mask] { grad(a) += grad(out).cwiseProduct(*mask); };
  return out;
}

Var Graph::reshape(Var a, Eigen::Index rows, Eigen::Index cols) {
  const Matrix& x = value(a);
  check(rows * cols == x.size(), "reshape: element count differs");
  Matrix y = Eigen::Map<const Matrix>(x.data(), rows, cols);
  Var out = push(std::move(y), needs(a));
  if (needs(out)) {
    node(out).backward = [this, a, out] {
      Matrix& ga = grad(a);
      Eigen::Map<Matrix>(ga.data(), grad(out).rows(), grad(out).cols()) += grad(out);
    };
  }
  return out;
}

Var Graph::slice_rows(Var a, Eigen::Index begin, Eigen::Index count) {
  check(begin >= 0 && count >= 0 && begin + count <= value(a).rows(), "slice_rows: out of range");
  Var out = push(value(a).middleRows(begin, count), needs(a));
  if (needs(out)) {
    node(out).backward = [this, a, out, begin, count] { grad(a).middleRows(begin, count) += grad(out); };
  }
  return out;
}

Var Graph::embedding_bag(Var table, const std::vector<std::vector<int>>& bags) {
  const Matrix& t = value(table);
  Matrix y = Matrix::Zero(static_cast<Eigen::Index>(bags.size()), t.cols());
  for (std::size_t r = 0; r < bags.size(); ++r)
    for (int idx : bags[r]) {
      check(idx >= 0 && idx < t.rows(), "embedding_bag: index out of range");
      y.row(static_cast<Eigen::Index>(r)) += t.row(idx);
    }
  Var out = push(std::move(y), needs(table));
  if (needs(out)) {
    node(out).backward = [this, table, out, bags] {
      Matrix& gt = grad(table);
      const Matrix& g = grad(out);
      for (std::size_t r = 0; r < bags.size(); ++r)
        for (int idx : bags[r]) gt.row(idx) += g.row(static_cast<Eigen::Index>(r));
    };
  }
  return out;
}

Var Graph::attention(Var q, Var k, Var v, int heads, const AttentionMask& mask) {
  const Matrix& Q = value(q);
  const Matrix& K = value(k);
  const Matrix& V = value(v);
  const Eigen::Index d = Q.cols();
  check(heads > 0 && d % heads == 0, "attention: width not divisible by heads");
  check(K.cols() == d && V.cols() == d && K.rows() == V.rows(), "attention: key/value shapes");
  check(mask.key_valid.empty() || static_cast<Eigen::Index>(mask.key_valid.size()) == K.rows(),
        "attention: key mask length");
  check(!mask.causal || Q.rows() == K.rows(), "attention: causal mask needs square scores");

  const Eigen::Index n = Q.rows();
  const Eigen::Index m = K.rows();
  const Eigen::Index dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  auto probs = std::make_shared<std::vector<Matrix>>();
  Matrix result(n, d);
  for (int h = 0; h < heads; ++h) {
    Matrix s = (Q.middleCols(h * dh, dh) * K.middleCols(h * dh, dh).transpose()) * scale;
    for (Eigen::Index i = 0; i < n; ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < m; ++j) {
        const bool ok = (mask.key_valid.empty() || mask.key_valid[static_cast<std::size_t>(j)]) &&
                        (!mask.causal || j <= i);
        if (!ok) s(i, j) = -std::numeric_limits<double>::infinity();
        else mx = std::max(mx, s(i, j));
      }
      if (!std::isfinite(mx)) {
        s.row(i).setZero();
        continue;
      }
      double sum = 0.0;
      for (Eigen::Index j = 0; j < m; ++j) {
        s(i, j) = std::isinf(s(i, j)) ? 0.0 : std::exp(s(i, j) - mx);
        sum += s(i, j);
      }
      s.row(i) /= sum;
    }
    result.middleCols(h * dh, dh).noalias() = s * V.middleCols(h * dh, dh);
    probs->push_back(std::move(s));
  }
  last_attention_ = *probs;
  Var out = push(std::move(result), needs(q) || needs(k) || needs(v));
  if (needs(out)) {
    node(out).backward = [this, q, k, v, out, probs, heads, dh, scale] {
      const Matrix& g = grad(out);
      const Matrix& Q = value(q);
      const Matrix& K = value(k);
      const Matrix& V = value(v);
      for (int h = 0; h < heads; ++h) {
        const Matrix& P = (*probs)[static_cast<std::size_t>(h)];
        const auto gh = g.middleCols(h * dh, dh);
        if (needs(v)) grad(v).middleCols(h * dh, dh).noalias() += P.transpose() * gh;
        if (!needs(q) && !needs(k)) continue;
        const Matrix dP = gh * V.middleCols(h * dh, dh).transpose();
        Matrix dS = P.cwiseProduct(dP);
        const Eigen::VectorXd rowdot = dS.rowwise().sum();
        dS -= P.cwiseProduct(rowdot.replicate(1, P.cols()));
        dS *= scale;
        if (needs(q)) grad(q).middleCols(h * dh, dh).noalias() += dS * K.middleCols(h * dh, dh);
        if (needs(k)) grad(k).middleCols(h * dh, dh).noalias() += dS.transpose() * Q.middleCols(h * dh, dh);
      }
    };
  }
  return out;
}

Var Graph::cross_entropy(Var logits, std::span<const int> targets, int ignore) {
  const Matrix& x = value(logits);
  check(static_cast<Eigen::Index>(targets.size()) == x.rows(), "cross_entropy: one target per row");
  auto softmax = std::make_shared<Matrix>(x.rows(), x.cols());
  double total = 0.0;
  int count = 0;
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mx = x.row(r).maxCoeff();
    softmax->row(r) = (x.row(r).array() - mx).exp();
    const double sum = softmax->row(r).sum();
    softmax->row(r) /= sum;
    const int t = targets[static_cast<std::size_t>(r)];
    if (t == ignore) continue;
    check(t >= 0 && t < x.cols(), "cross_entropy: target out of range");
    total += mx + std::log(sum) - x(r, t);
    ++count;
  }
  Matrix loss(1, 1);
  loss(0, 0) = count ? total / count : 0.0;
  Var out = push(std::move(loss), needs(logits));
  if (needs(out) && count) {
    std::vector<int> tgt(targets.begin(), targets.end());
    node(out).backward = [this, logits, out, softmax, tgt = std::move(tgt), ignore, count] {
      const double g = grad(out)(0, 0) / count;
      Matrix& gl = grad(logits);
      for (Eigen::Index r = 0; r < gl.rows(); ++r) {
        const int t = tgt[static_cast<std::size_t>(r)];
        if (t == ignore) continue;
        gl.row(r) += g * softmax->row(r);
        gl(r, t) -= g;
      }
    };
  }
  return out;
}

Var Graph::bce_with_logit(Var z, double y) {
  check(value(z).rows() == 1 && value(z).cols() == 1, "bce_with_logit: expects a 1 x 1 logit");
  const double x = value(z)(0, 0);
  Matrix loss(1, 1);
  loss(0, 0) = std::max(x, 0.0) - x * y + std::log1p(std::exp(-std::abs(x)));
  Var out = push(std::move(loss), needs(z));
  if (needs(out)) {
    node(out).backward = [this, z, out, y] {
      const double x = value(z)(0, 0);
      const double s = 1.0 / (1.0 + std::exp(-x));
      grad(z)(0, 0) += grad(out)(0, 0) * (s - y);
    };
  }
  return out;
}

void Graph::backward(Var loss) {
  check(value(loss).size() == 1, "backward: loss must be a scalar");
  if (!needs(loss)) return;
  grad(loss)(0, 0) += 1.0;
  for (auto i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.requires_grad || !n.backward || n.grad.size() == 0) continue;
    n.backward();
  }
}

}  // namespace treebert::ad
