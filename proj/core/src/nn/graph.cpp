#include "microweather/nn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mw::nn {

Matrix& Node::grad_buffer() {
  if (grad.empty() && !value.empty()) grad.resize(value.rows(), value.cols(), 0.0);
  return grad;
}

Var Graph::constant(Matrix value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  return Var(std::move(n), this);
}

Var Graph::input(Matrix value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  if (record_) {
    n->requires_grad = true;
    tape_.push_back(n);
  }
  return Var(std::move(n), this);
}

Var Graph::param(const ParameterStore& store, const std::string& name) {
  if (auto it = params_.find(name); it != params_.end()) return it->second;
  Var v = input(store.at(name));
  params_.emplace(name, v);
  return v;
}

Var Graph::make(Matrix value, std::span<const Var> parents, std::function<void(Node&)> backward) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  if (record_) {
    const bool needs = std::any_of(parents.begin(), parents.end(), [](const Var& p) { return p.requires_grad(); });
    if (needs) {
      n->requires_grad = true;
      n->backward = std::move(backward);
      for (const auto& p : parents) n->parents.push_back(p.shared());
      tape_.push_back(n);
    }
  }
  return Var(std::move(n), this);
}

void Graph::backward(const Var& loss, double seed) {
  if (loss.rows() != 1 || loss.cols() != 1) throw std::invalid_argument("backward: loss must be 1x1");
  if (!loss.requires_grad()) return;
  loss.node()->grad_buffer()(0, 0) += seed;
  for (auto it = tape_.rbegin(); it != tape_.rend(); ++it) {
    Node& n = **it;
    if (n.backward && !n.grad.empty()) n.backward(n);
  }
}

Gradients Graph::parameter_gradients() const {
  Gradients out;
  for (const auto& [name, v] : params_) {
    const Matrix& g = v.grad();
    out.emplace(name, g.empty() ? Matrix(v.rows(), v.cols(), 0.0) : g);
  }
  return out;
}

namespace {

Graph* graph_of(const Var& a) {
  if (!a) throw std::invalid_argument("op on empty Var");
  return a.graph();
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                                std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                                std::to_string(b.cols()));
  }
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  Matrix out;
  gemm(a.value(), b.value(), out);
  Node* pa = a.node();
  Node* pb = b.node();
  return graph_of(a)->make(std::move(out), {a, b}, [pa, pb](Node& self) {
    if (pa->requires_grad) gemm_bt(self.grad, pb->value, pa->grad_buffer(), true);
    if (pb->requires_grad) gemm_at(pa->value, self.grad, pb->grad_buffer(), true);
  });
}

Var matmul_bt(const Var& a, const Var& b) {
  Matrix out;
  gemm_bt(a.value(), b.value(), out);
  Node* pa = a.node();
  Node* pb = b.node();
  return graph_of(a)->make(std::move(out), {a, b}, [pa, pb](Node& self) {
    // C = A B^T: dA = dC B, dB = dC^T A
    if (pa->requires_grad) gemm(self.grad, pb->value, pa->grad_buffer(), true);
    if (pb->requires_grad) gemm_at(self.grad, pa->value, pb->grad_buffer(), true);
  });
}

Var add(const Var& a, const Var& b) {
  require_same_shape(a.value(), b.value(), "add");
  Matrix out = a.value();
  axpy(1.0, b.value(), out);
  Node* pa = a.node();
  Node* pb = b.node();
  return graph_of(a)->make(std::move(out), {a, b}, [pa, pb](Node& self) {
    if (pa->requires_grad) axpy(1.0, self.grad, pa->grad_buffer());
    if (pb->requires_grad) axpy(1.0, self.grad, pb->grad_buffer());
  });
}

Var add_row(const Var& a, const Var& row) {
  const Matrix& r = row.value();
  if (r.rows() != 1 || r.cols() != a.cols()) throw std::invalid_argument("add_row: bias must be 1 x cols");
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.rows(); ++i) {
    double* o = out.row(i);
    for (std::size_t j = 0; j < out.cols(); ++j) o[j] += r(0, j);
  }
  Node* pa = a.node();
  Node* pr = row.node();
  return graph_of(a)->make(std::move(out), {a, row}, [pa, pr](Node& self) {
    if (pa->requires_grad) axpy(1.0, self.grad, pa->grad_buffer());
    if (pr->requires_grad) {
      Matrix& g = pr->grad_buffer();
      for (std::size_t i = 0; i < self.grad.rows(); ++i) {
        const double* s = self.grad.row(i);
        for (std::size_t j = 0; j < self.grad.cols(); ++j) g(0, j) += s[j];
      }
    }
  });
}

Var scale(const Var& a, double s) {
  Matrix out = a.value();
  for (double& x : out.values()) x *= s;
  Node* pa = a.node();
  return graph_of(a)->make(std::move(out), {a}, [pa, s](Node& self) { axpy(s, self.grad, pa->grad_buffer()); });
}

Var mul_const(const Var& a, const Matrix& m) {
  require_same_shape(a.value(), m, "mul_const");
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= m.data()[i];
  Node* pa = a.node();
  return graph_of(a)->make(std::move(out), {a}, [pa, m](Node& self) {
    double* g = pa->grad_buffer().data();
    for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad.data()[i] * m.data()[i];
  });
}

Var relu(const Var& a) {
  if (auto* probe = graph_of(a)->relu_probe()) {
    for (double x : a.value().values()) probe->push_back(x > 0.0 ? 1 : 0);
  }
  Matrix out = a.value();
  for (double& x : out.values()) x = x > 0.0 ? x : 0.0;
  Node* pa = a.node();
  return graph_of(a)->make(std::move(out), {a}, [pa](Node& self) {
    Matrix& g = pa->grad_buffer();
    const double* in = pa->value.data();
    const double* gs = self.grad.data();
    double* gd = g.data();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (in[i] > 0.0) gd[i] += gs[i];
    }
  });
}

Var sin(const Var& a) {
  Matrix out = a.value();
  for (double& x : out.values()) x = std::sin(x);
  Node* pa = a.node();
  return graph_of(a)->make(std::move(out), {a}, [pa](Node& self) {
    Matrix& g = pa->grad_buffer();
    const double* in = pa->value.data();
    const double* gs = self.grad.data();
    double* gd = g.data();
    for (std::size_t i = 0; i < g.size(); ++i) gd[i] += gs[i] * std::cos(in[i]);
  });
}

Var linear(const Var& a, const Var& w, const Var& bias) { return add_row(matmul(a, w), bias); }

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  const std::size_t rows = parts[0].rows();
  std::size_t cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) throw std::invalid_argument("concat_cols: row count mismatch");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::vector<Node*> nodes;
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const auto& p : parts) {
    for (std::size_t i = 0; i < rows; ++i) {
      std::copy_n(p.value().row(i), p.cols(), out.row(i) + off);
    }
    nodes.push_back(p.node());
    offsets.push_back(off);
    off += p.cols();
  }
  Graph* g = graph_of(parts[0]);
  const bool needs = g->recording() && std::any_of(parts.begin(), parts.end(), [](const Var& p) { return p.requires_grad(); });
  if (!needs) return g->constant(std::move(out));
  return g->make(std::move(out), parts, [nodes, offsets](Node& self) {
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      Node* p = nodes[k];
      if (!p->requires_grad) continue;
      Matrix& gp = p->grad_buffer();
      for (std::size_t i = 0; i < gp.rows(); ++i) {
        const double* s = self.grad.row(i) + offsets[k];
        double* d = gp.row(i);
        for (std::size_t j = 0; j < gp.cols(); ++j) d[j] += s[j];
      }
    }
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
  const std::size_t cols = parts[0].cols();
  std::size_t rows = 0;
  for (const auto& p : parts) {
    if (p.cols() != cols) throw std::invalid_argument("concat_rows: column count mismatch");
    rows += p.rows();
  }
  Matrix out(rows, cols);
  std::vector<Node*> nodes;
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const auto& p : parts) {
    std::copy_n(p.value().data(), p.value().size(), out.row(off));
    nodes.push_back(p.node());
    offsets.push_back(off);
    off += p.rows();
  }
  Graph* g = graph_of(parts[0]);
  const bool needs = g->recording() && std::any_of(parts.begin(), parts.end(), [](const Var& p) { return p.requires_grad(); });
  if (!needs) return g->constant(std::move(out));
  return g->make(std::move(out), parts, [nodes, offsets](Node& self) {
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      Node* p = nodes[k];
      if (!p->requires_grad) continue;
      Matrix& gp = p->grad_buffer();
      const double* s = self.grad.row(offsets[k]);
      double* d = gp.data();
      for (std::size_t i = 0; i < gp.size(); ++i) d[i] += s[i];
    }
  });
}

Var slice_cols(const Var& a, std::size_t start, std::size_t width) {
  if (start + width > a.cols()) throw std::invalid_argument("slice_cols: out of range");
  Matrix out(a.rows(), width);
  for (std::size_t i = 0; i < a.rows(); ++i) std::copy_n(a.value().row(i) + start, width, out.row(i));
  Node* pa = a.node();
  return graph_of(a)->make(std::move(out), {a}, [pa, start, width](Node& self) {
    Matrix& g = pa->grad_buffer();
    for (std::size_t i = 0; i < g.rows(); ++i) {
      const double* s = self.grad.row(i);
      double* d = g.row(i) + start;
      for (std::size_t j = 0; j < width; ++j) d[j] += s[j];
    }
  });
}

Var gather_rows(const Var& a, std::vector<std::size_t> indices) {
  Matrix out(indices.size(), a.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= a.rows()) throw std::out_of_range("gather_rows: index out of range");
    std::copy_n(a.value().row(indices[i]), a.cols(), out.row(i));
  }
  Node* pa = a.node();
  return graph_of(a)->make(std::move(out), {a}, [pa, idx = std::move(indices)](Node& self) {
    Matrix& g = pa->grad_buffer();
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const double* s = self.grad.row(i);
      double* d = g.row(idx[i]);
      for (std::size_t j = 0; j < g.cols(); ++j) d[j] += s[j];
    }
  });
}

Var masked_softmax(const Var& scores, std::shared_ptr<const std::vector<unsigned char>> mask) {
  const Matrix& s = scores.value();
  if (!mask || mask->size() != s.size()) throw std::invalid_argument("masked_softmax: mask shape mismatch");
  Matrix out(s.rows(), s.cols(), 0.0);
  const unsigned char* m = mask->data();
  for (std::size_t i = 0; i < s.rows(); ++i) {
    const double* si = s.row(i);
    const unsigned char* mi = m + i * s.cols();
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < s.cols(); ++j) {
      if (mi[j]) mx = std::max(mx, si[j]);
    }
    if (mx == -std::numeric_limits<double>::infinity()) {
      throw std::domain_error("masked_softmax: row " + std::to_string(i) + " has no allowed entries");
    }
    double* oi = out.row(i);
    double total = 0.0;
    for (std::size_t j = 0; j < s.cols(); ++j) {
      if (mi[j]) {
        oi[j] = std::exp(si[j] - mx);
        total += oi[j];
      }
    }
    const double inv = 1.0 / total;
    for (std::size_t j = 0; j < s.cols(); ++j) oi[j] *= inv;
  }
  Node* ps = scores.node();
  return graph_of(scores)->make(std::move(out), {scores}, [ps, mask](Node& self) {
    Matrix& g = ps->grad_buffer();
    const Matrix& p = self.value;
    for (std::size_t i = 0; i < p.rows(); ++i) {
      const double* pi = p.row(i);
      const double* gi = self.grad.row(i);
      double dot = 0.0;
      for (std::size_t j = 0; j < p.cols(); ++j) dot += pi[j] * gi[j];
      double* d = g.row(i);
      for (std::size_t j = 0; j < p.cols(); ++j) d[j] += pi[j] * (gi[j] - dot);
    }
  });
}

Var layer_norm(const Var& a, const Var& gain, const Var& bias, double eps) {
  const Matrix& x = a.value();
  const std::size_t n = x.cols();
  if (gain.rows() != 1 || gain.cols() != n || bias.rows() != 1 || bias.cols() != n) {
    throw std::invalid_argument("layer_norm: gain/bias must be 1 x cols");
  }
  Matrix xhat(x.rows(), n);
  std::vector<double> inv_sigma(x.rows());
  Matrix out(x.rows(), n);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double* xi = x.row(i);
    double mean = 0.0;
    for (std::size_t j = 0; j < n; ++j) mean += xi[j];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (xi[j] - mean) * (xi[j] - mean);
    var /= static_cast<double>(n);
    inv_sigma[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) {
      xhat(i, j) = (xi[j] - mean) * inv_sigma[i];
      out(i, j) = xhat(i, j) * gain.value()(0, j) + bias.value()(0, j);
    }
  }
  Node* pa = a.node();
  Node* pg = gain.node();
  Node* pb = bias.node();
  return graph_of(a)->make(std::move(out), {a, gain, bias},
                           [pa, pg, pb, xhat = std::move(xhat), inv_sigma = std::move(inv_sigma), n](Node& self) {
                             const Matrix& dy = self.grad;
                             if (pg->requires_grad || pb->requires_grad) {
                               for (std::size_t i = 0; i < dy.rows(); ++i) {
                                 for (std::size_t j = 0; j < n; ++j) {
                                   if (pg->requires_grad) pg->grad_buffer()(0, j) += dy(i, j) * xhat(i, j);
                                   if (pb->requires_grad) pb->grad_buffer()(0, j) += dy(i, j);
                                 }
                               }
                             }
                             if (!pa->requires_grad) return;
                             Matrix& dx = pa->grad_buffer();
                             const double inv_n = 1.0 / static_cast<double>(n);
                             for (std::size_t i = 0; i < dy.rows(); ++i) {
                               double mean_dxh = 0.0;
                               double mean_dxh_xh = 0.0;
                               for (std::size_t j = 0; j < n; ++j) {
                                 const double dxh = dy(i, j) * pg->value(0, j);
                                 mean_dxh += dxh;
                                 mean_dxh_xh += dxh * xhat(i, j);
                               }
                               mean_dxh *= inv_n;
                               mean_dxh_xh *= inv_n;
                               for (std::size_t j = 0; j < n; ++j) {
                                 const double dxh = dy(i, j) * pg->value(0, j);
                                 dx(i, j) += inv_sigma[i] * (dxh - mean_dxh - xhat(i, j) * mean_dxh_xh);
                               }
                             }
                           });
}

Var weighted_mse(const Var& pred, const Matrix& target, const Matrix& weight) {
  require_same_shape(pred.value(), target, "weighted_mse");
  require_same_shape(pred.value(), weight, "weighted_mse");
  double wsum = 0.0;
  double acc = 0.0;
  const double* p = pred.value().data();
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double w = weight.data()[i];
    if (w == 0.0) continue;
    const double d = p[i] - target.data()[i];
    acc += w * d * d;
    wsum += w;
  }
  if (wsum == 0.0) throw std::domain_error("weighted_mse: no weighted entries");
  Matrix out(1, 1, acc / wsum);
  Node* pp = pred.node();
  return graph_of(pred)->make(std::move(out), {pred}, [pp, target, weight, wsum](Node& self) {
    const double seed = self.grad(0, 0);
    Matrix& g = pp->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double w = weight.data()[i];
      if (w == 0.0) continue;
      g.data()[i] += seed * 2.0 * w * (pp->value.data()[i] - target.data()[i]) / wsum;
    }
  });
}

Var sum_all(const Var& a) {
  double s = 0.0;
  for (double x : a.value().values()) s += x;
  Node* pa = a.node();
  return graph_of(a)->make(Matrix(1, 1, s), {a}, [pa](Node& self) {
    const double seed = self.grad(0, 0);
    for (double& g : pa->grad_buffer().values()) g += seed;
  });
}

Var upsample_blocks(const Var& x, const Var& kernel, const Var& bias, std::size_t bands, std::size_t side,
                    std::size_t factor) {
  const Matrix& in = x.value();
  if (in.cols() != side * side || in.rows() % bands != 0) throw std::invalid_argument("upsample_blocks: bad input shape");
  if (kernel.rows() != bands || kernel.cols() != factor * factor || bias.rows() != 1 || bias.cols() != bands) {
    throw std::invalid_argument("upsample_blocks: bad kernel/bias shape");
  }
  const std::size_t out_side = side * factor;
  Matrix out(in.rows(), out_side * out_side);
  const Matrix& k = kernel.value();
  const Matrix& b = bias.value();
  for (std::size_t r = 0; r < in.rows(); ++r) {
    const std::size_t band = r % bands;
    const double* src = in.row(r);
    double* dst = out.row(r);
    for (std::size_t i = 0; i < side; ++i) {
      for (std::size_t j = 0; j < side; ++j) {
        const double v = src[i * side + j];
        for (std::size_t a = 0; a < factor; ++a) {
          for (std::size_t c = 0; c < factor; ++c) {
            dst[(i * factor + a) * out_side + j * factor + c] = v * k(band, a * factor + c) + b(0, band);
          }
        }
      }
    }
  }
  Node* px = x.node();
  Node* pk = kernel.node();
  Node* pb = bias.node();
  return graph_of(x)->make(std::move(out), {x, kernel, bias}, [=](Node& self) {
    for (std::size_t r = 0; r < self.grad.rows(); ++r) {
      const std::size_t band = r % bands;
      const double* dout = self.grad.row(r);
      const double* src = px->value.row(r);
      for (std::size_t i = 0; i < side; ++i) {
        for (std::size_t j = 0; j < side; ++j) {
          double dx = 0.0;
          for (std::size_t a = 0; a < factor; ++a) {
            for (std::size_t c = 0; c < factor; ++c) {
              const double d = dout[(i * factor + a) * out_side + j * factor + c];
              dx += d * pk->value(band, a * factor + c);
              if (pk->requires_grad) pk->grad_buffer()(band, a * factor + c) += d * src[i * side + j];
              if (pb->requires_grad) pb->grad_buffer()(0, band) += d;
            }
          }
          if (px->requires_grad) px->grad_buffer()(r, i * side + j) += dx;
        }
      }
    }
  });
}

Var depthwise_conv3x3(const Var& x, const Var& kernel, const Var& bias, std::size_t bands, std::size_t side) {
  const Matrix& in = x.value();
  if (in.cols() != side * side || in.rows() % bands != 0) throw std::invalid_argument("depthwise_conv3x3: bad input shape");
  if (kernel.rows() != bands || kernel.cols() != 9 || bias.rows() != 1 || bias.cols() != bands) {
    throw std::invalid_argument("depthwise_conv3x3: bad kernel/bias shape");
  }
  const auto s = static_cast<std::ptrdiff_t>(side);
  Matrix out(in.rows(), in.cols());
  const Matrix& k = kernel.value();
  for (std::size_t r = 0; r < in.rows(); ++r) {
    const std::size_t band = r % bands;
    const double* src = in.row(r);
    double* dst = out.row(r);
    for (std::ptrdiff_t y = 0; y < s; ++y) {
      for (std::ptrdiff_t xx = 0; xx < s; ++xx) {
        double acc = bias.value()(0, band);
        for (std::ptrdiff_t dy = -1; dy <= 1; ++dy) {
          const std::ptrdiff_t yy = y + dy;
          if (yy < 0 || yy >= s) continue;
          for (std::ptrdiff_t dx = -1; dx <= 1; ++dx) {
            const std::ptrdiff_t xs = xx + dx;
            if (xs < 0 || xs >= s) continue;
            acc += k(band, static_cast<std::size_t>((dy + 1) * 3 + (dx + 1))) * src[yy * s + xs];
          }
        }
        dst[y * s + xx] = acc;
      }
    }
  }
  Node* px = x.node();
  Node* pk = kernel.node();
  Node* pb = bias.node();
  return graph_of(x)->make(std::move(out), {x, kernel, bias}, [=](Node& self) {
    for (std::size_t r = 0; r < self.grad.rows(); ++r) {
      const std::size_t band = r % bands;
      const double* dout = self.grad.row(r);
      const double* src = px->value.row(r);
      double* dsrc = px->requires_grad ? px->grad_buffer().row(r) : nullptr;
      for (std::ptrdiff_t y = 0; y < s; ++y) {
        for (std::ptrdiff_t xx = 0; xx < s; ++xx) {
          const double d = dout[y * s + xx];
          if (d == 0.0) continue;
          if (pb->requires_grad) pb->grad_buffer()(0, band) += d;
          for (std::ptrdiff_t dy = -1; dy <= 1; ++dy) {
            const std::ptrdiff_t yy = y + dy;
            if (yy < 0 || yy >= s) continue;
            for (std::ptrdiff_t dx = -1; dx <= 1; ++dx) {
              const std::ptrdiff_t xs = xx + dx;
              if (xs < 0 || xs >= s) continue;
              const auto ki = static_cast<std::size_t>((dy + 1) * 3 + (dx + 1));
              if (dsrc) dsrc[yy * s + xs] += d * pk->value(band, ki);
              if (pk->requires_grad) pk->grad_buffer()(band, ki) += d * src[yy * s + xs];
            }
          }
        }
      }
    }
  });
}

Var pointwise_conv(const Var& x, const Var& weight, const Var& bias, std::size_t bands) {
  const Matrix& in = x.value();
  const Matrix& w = weight.value();
  if (in.rows() % bands != 0 || w.cols() != bands || bias.rows() != 1 || bias.cols() != w.rows()) {
    throw std::invalid_argument("pointwise_conv: bad shapes");
  }
  const std::size_t locs = in.rows() / bands;
  const std::size_t channels = w.rows();
  const std::size_t px = in.cols();
  Matrix out(locs * channels, px);
  for (std::size_t l = 0; l < locs; ++l) {
    for (std::size_t c = 0; c < channels; ++c) {
      double* dst = out.row(l * channels + c);
      std::fill_n(dst, px, bias.value()(0, c));
      for (std::size_t b = 0; b < bands; ++b) {
        const double wcb = w(c, b);
        const double* src = in.row(l * bands + b);
        for (std::size_t p = 0; p < px; ++p) dst[p] += wcb * src[p];
      }
    }
  }
  Node* pxn = x.node();
  Node* pw = weight.node();
  Node* pb = bias.node();
  return graph_of(x)->make(std::move(out), {x, weight, bias}, [=](Node& self) {
    for (std::size_t l = 0; l < locs; ++l) {
      for (std::size_t c = 0; c < channels; ++c) {
        const double* dout = self.grad.row(l * channels + c);
        if (pb->requires_grad) {
          double s = 0.0;
          for (std::size_t p = 0; p < px; ++p) s += dout[p];
          pb->grad_buffer()(0, c) += s;
        }
        for (std::size_t b = 0; b < bands; ++b) {
          const double* src = pxn->value.row(l * bands + b);
          if (pw->requires_grad) {
            double s = 0.0;
            for (std::size_t p = 0; p < px; ++p) s += dout[p] * src[p];
            pw->grad_buffer()(c, b) += s;
          }
          if (pxn->requires_grad) {
            const double wcb = pw->value(c, b);
            double* dsrc = pxn->grad_buffer().row(l * bands + b);
            for (std::size_t p = 0; p < px; ++p) dsrc[p] += wcb * dout[p];
          }
        }
      }
    }
  });
}

Var spatial_mean(const Var& x, std::size_t channels) {
  const Matrix& in = x.value();
  if (in.rows() % channels != 0) throw std::invalid_argument("spatial_mean: bad shape");
  const std::size_t locs = in.rows() / channels;
  const double inv = 1.0 / static_cast<double>(in.cols());
  Matrix out(locs, channels);
  for (std::size_t r = 0; r < in.rows(); ++r) {
    double s = 0.0;
    for (std::size_t p = 0; p < in.cols(); ++p) s += in(r, p);
    out(r / channels, r % channels) = s * inv;
  }
  Node* px = x.node();
  return graph_of(x)->make(std::move(out), {x}, [px, channels, inv](Node& self) {
    Matrix& g = px->grad_buffer();
    for (std::size_t r = 0; r < g.rows(); ++r) {
      const double d = self.grad(r / channels, r % channels) * inv;
      double* dst = g.row(r);
      for (std::size_t p = 0; p < g.cols(); ++p) dst[p] += d;
    }
  });
}

Var center_pixels(const Var& x, std::size_t bands, std::size_t side) {
  const Matrix& in = x.value();
  if (in.cols() != side * side || in.rows() % bands != 0) throw std::invalid_argument("center_pixels: bad shape");
  const std::size_t locs = in.rows() / bands;
  const std::size_t idx = (side / 2) * side + side / 2;
  Matrix out(locs, bands);
  for (std::size_t r = 0; r < in.rows(); ++r) out(r / bands, r % bands) = in(r, idx);
  Node* px = x.node();
  return graph_of(x)->make(std::move(out), {x}, [px, bands, idx](Node& self) {
    Matrix& g = px->grad_buffer();
    for (std::size_t r = 0; r < g.rows(); ++r) g(r, idx) += self.grad(r / bands, r % bands);
  });
}

}  // namespace mw::nn
