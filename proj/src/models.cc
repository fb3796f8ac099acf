// Copyright 2026 The MIDR Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "midr/models.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <list>
#include <numeric>
#include <random>
#include <unordered_map>

#include <Eigen/Sparse>

#include "midr/errors.h"

namespace midr {

const char *model_name(ModelKind k) {
  switch (k) {
    case ModelKind::kSvmSota: return "SVM_SOTA";
    case ModelKind::kSvmDef: return "SVM_def";
    case ModelKind::kGbm: return "GBM";
    case ModelKind::kRf: return "RF";
    default: return "VC";
  }
}

ModelKind parse_model(std::string_view name) {
  for (ModelKind k : all_models())
    if (name == model_name(k)) return k;
  throw ConfigError("unknown model '" + std::string(name) + "'");
}

std::vector<ModelKind> all_models() {
  return {ModelKind::kSvmSota, ModelKind::kSvmDef, ModelKind::kGbm, ModelKind::kRf,
          ModelKind::kVc};
}

namespace {

void check_two_classes(const Eigen::MatrixXd &x, const std::vector<int> &y) {
  if (static_cast<std::size_t>(x.rows()) != y.size())
    throw TrainingError("feature rows and labels differ in length");
  bool pos = false, neg = false;
  for (int v : y) (v ? pos : neg) = true;
  if (!pos || !neg) throw TrainingError("training set has a single class");
}

// ---------------------------------------------------------------------------
// SVM

using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// RBF distances ignore a per-column shift; subtracting the column median
// turns the standardized indicator columns back into sparse ones.
Eigen::RowVectorXd column_medians(const Eigen::MatrixXd &x) {
  Eigen::RowVectorXd m = Eigen::RowVectorXd::Zero(x.cols());
  if (x.rows() == 0) return m;
  std::vector<double> v;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    v.assign(x.col(j).data(), x.col(j).data() + x.rows());
    auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    m(j) = *mid;
  }
  return m;
}

SparseRows shifted(const Eigen::MatrixXd &x, const Eigen::RowVectorXd &shift) {
  std::vector<Eigen::Triplet<double>> nz;
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      double v = x(i, j) - shift(j);
      if (v != 0) nz.emplace_back(static_cast<int>(i), static_cast<int>(j), v);
    }
  SparseRows m(x.rows(), x.cols());
  m.setFromTriplets(nz.begin(), nz.end());
  return m;
}

Eigen::VectorXd row_norms(const SparseRows &m) {
  Eigen::VectorXd out(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i) out(i) = m.row(i).squaredNorm();
  return out;
}

// a * b^T. Columns dense in either operand go through a dense product,
// the rest through their nonzeros.
Eigen::MatrixXd cross_dots(const SparseRows &a, const SparseRows &b) {
  const Eigen::Index d = a.cols();
  Eigen::SparseMatrix<double> ac = a, bc = b;
  std::vector<Eigen::Index> dense;
  for (Eigen::Index j = 0; j < d; ++j) {
    auto na = ac.outerIndexPtr()[j + 1] - ac.outerIndexPtr()[j];
    auto nb = bc.outerIndexPtr()[j + 1] - bc.outerIndexPtr()[j];
    if (4 * na > a.rows() && 4 * nb > b.rows()) dense.push_back(j);
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(a.rows(), b.rows());
  if (!dense.empty()) {
    Eigen::MatrixXd da = Eigen::MatrixXd::Zero(a.rows(), static_cast<Eigen::Index>(dense.size()));
    Eigen::MatrixXd db = Eigen::MatrixXd::Zero(b.rows(), static_cast<Eigen::Index>(dense.size()));
    for (std::size_t k = 0; k < dense.size(); ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      for (Eigen::SparseMatrix<double>::InnerIterator it(ac, dense[k]); it; ++it) da(it.row(), kk) = it.value();
      for (Eigen::SparseMatrix<double>::InnerIterator it(bc, dense[k]); it; ++it) db(it.row(), kk) = it.value();
    }
    out.noalias() = da * db.transpose();
  }
  std::size_t next_dense = 0;
  for (Eigen::Index j = 0; j < d; ++j) {
    if (next_dense < dense.size() && dense[next_dense] == j) {
      ++next_dense;
      continue;
    }
    for (Eigen::SparseMatrix<double>::InnerIterator ib(bc, j); ib; ++ib)
      for (Eigen::SparseMatrix<double>::InnerIterator ia(ac, j); ia; ++ia)
        out(ia.row(), ib.row()) += ia.value() * ib.value();
  }
  return out;
}

class KernelCache {
 public:
  KernelCache(const Eigen::MatrixXd &x, double gamma, std::size_t cache_mb)
      : x_(shifted(x, column_medians(x))), gamma_(gamma), sq_(row_norms(x_)) {
    std::size_t row_bytes = std::max<std::size_t>(1, x.rows()) * sizeof(float);
    capacity_ = std::max<std::size_t>(2, cache_mb * 1024 * 1024 / row_bytes);
    if (capacity_ >= static_cast<std::size_t>(x.rows())) {
      // everything fits: one product instead of a row at a time
      const Eigen::Index l = x.rows();
      Eigen::MatrixXd dots = cross_dots(x_, x_);
      full_.resize(l, l);
      for (Eigen::Index i = 0; i < l; ++i)
        for (Eigen::Index k = 0; k < l; ++k)
          full_(k, i) = static_cast<float>(std::exp(-gamma_ * std::max(0.0, sq_(i) + sq_(k) - 2 * dots(k, i))));
    }
  }

  const float *row(int i) {
    if (full_.size() > 0) return full_.col(i).data();
    auto it = rows_.find(i);
    if (it != rows_.end()) {
      lru_.splice(lru_.begin(), lru_, it->second.second);
      return it->second.first.data();
    }
    if (rows_.size() >= capacity_) {
      rows_.erase(lru_.back());
      lru_.pop_back();
    }
    Eigen::VectorXd xi = Eigen::RowVectorXd(x_.row(i)).transpose();
    Eigen::VectorXd dots = x_ * xi;
    std::vector<float> r(static_cast<std::size_t>(x_.rows()));
    for (Eigen::Index k = 0; k < x_.rows(); ++k)
      r[k] = static_cast<float>(std::exp(-gamma_ * std::max(0.0, sq_(i) + sq_(k) - 2 * dots(k))));
    lru_.push_front(i);
    auto &slot = rows_[i];
    slot.first = std::move(r);
    slot.second = lru_.begin();
    return slot.first.data();
  }

 private:
  SparseRows x_;
  double gamma_;
  Eigen::VectorXd sq_;
  std::size_t capacity_;
  Eigen::MatrixXf full_;
  std::list<int> lru_;
  std::unordered_map<int, std::pair<std::vector<float>, std::list<int>::iterator>> rows_;
};

struct SvmSolution {
  std::vector<double> alpha;
  double rho = 0;
};

// Dual C-SVC by SMO with second order working set selection.
SvmSolution solve_svm(const Eigen::MatrixXd &x, const std::vector<int> &y, double gamma, double c,
                      double eps, std::size_t cache_mb) {
  const int l = static_cast<int>(x.rows());
  constexpr double kTau = 1e-12;
  KernelCache kernel(x, gamma, cache_mb);
  std::vector<double> alpha(l, 0.0), grad(l, -1.0);
  auto upper = [&](int t) { return alpha[t] >= c; };
  auto lower = [&](int t) { return alpha[t] <= 0; };
  const long max_iter = std::max<long>(10000000, 100L * l);
  for (long iter = 0; iter < max_iter; ++iter) {
    double gmax = -std::numeric_limits<double>::infinity();
    int i = -1;
    for (int t = 0; t < l; ++t) {
      if (y[t] == 1) {
        if (!upper(t) && -grad[t] >= gmax) gmax = -grad[t], i = t;
      } else if (!lower(t) && grad[t] >= gmax) {
        gmax = grad[t], i = t;
      }
    }
    if (i < 0) break;
    const float *qi = kernel.row(i);
    double gmax2 = -std::numeric_limits<double>::infinity();
    double best = std::numeric_limits<double>::infinity();
    int j = -1;
    for (int t = 0; t < l; ++t) {
      double kit = qi[t];
      if (y[t] == 1) {
        if (lower(t)) continue;
        double diff = gmax + grad[t];
        gmax2 = std::max(gmax2, grad[t]);
        if (diff > 0) {
          double quad = 2.0 - 2.0 * kit;  // K_ii + K_tt = 2 for RBF
          double obj = -diff * diff / (quad > 0 ? quad : kTau);
          if (obj <= best) best = obj, j = t;
        }
      } else {
        if (upper(t)) continue;
        double diff = gmax - grad[t];
        gmax2 = std::max(gmax2, -grad[t]);
        if (diff > 0) {
          double quad = 2.0 - 2.0 * kit;
          double obj = -diff * diff / (quad > 0 ? quad : kTau);
          if (obj <= best) best = obj, j = t;
        }
      }
    }
    if (gmax + gmax2 < eps || j < 0) break;

    const float *qj = kernel.row(j);
    qi = kernel.row(i);
    double qij = y[i] * y[j] * static_cast<double>(qi[j]);
    double old_i = alpha[i], old_j = alpha[j];
    double &ai = alpha[i], &aj = alpha[j];
    if (y[i] != y[j]) {
      double quad = 2.0 + 2.0 * qij;
      if (quad <= 0) quad = kTau;
      double delta = (-grad[i] - grad[j]) / quad;
      double diff = ai - aj;
      ai += delta;
      aj += delta;
      if (diff > 0) {
        if (aj < 0) aj = 0, ai = diff;
      } else if (ai < 0) {
        ai = 0, aj = -diff;
      }
      if (diff > 0) {
        if (ai > c) ai = c, aj = c - diff;
      } else if (aj > c) {
        aj = c, ai = c + diff;
      }
    } else {
      double quad = 2.0 - 2.0 * qij;
      if (quad <= 0) quad = kTau;
      double delta = (grad[i] - grad[j]) / quad;
      double sum = ai + aj;
      ai -= delta;
      aj += delta;
      if (sum > c) {
        if (ai > c) ai = c, aj = sum - c;
      } else if (aj < 0) {
        aj = 0, ai = sum;
      }
      if (sum > c) {
        if (aj > c) aj = c, ai = sum - c;
      } else if (ai < 0) {
        ai = 0, aj = sum;
      }
    }
    double di = ai - old_i, dj = aj - old_j;
    for (int t = 0; t < l; ++t)
      grad[t] += y[t] * (y[i] * static_cast<double>(qi[t]) * di + y[j] * static_cast<double>(qj[t]) * dj);
  }

  double ub = std::numeric_limits<double>::infinity(), lb = -ub, sum_free = 0;
  int n_free = 0;
  for (int t = 0; t < l; ++t) {
    double yg = y[t] * grad[t];
    if (upper(t)) {
      if (y[t] == -1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (lower(t)) {
      if (y[t] == 1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  SvmSolution s;
  s.rho = n_free > 0 ? sum_free / n_free : (ub + lb) / 2;
  s.alpha = std::move(alpha);
  return s;
}

Eigen::VectorXd rbf_decision(const Eigen::MatrixXd &support, const Eigen::VectorXd &coef,
                             double rho, double gamma, const Eigen::MatrixXd &x) {
  Eigen::VectorXd out(x.rows());
  if (support.rows() == 0) {
    out.setConstant(-rho);
    return out;
  }
  const Eigen::RowVectorXd shift = column_medians(support);
  SparseRows sv = shifted(support, shift), xs = shifted(x, shift);
  Eigen::VectorXd ssq = row_norms(sv), xsq = row_norms(xs);
  Eigen::MatrixXd dots = cross_dots(xs, sv);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    double f = 0;
    for (Eigen::Index s = 0; s < support.rows(); ++s)
      f += coef(s) * std::exp(-gamma * std::max(0.0, xsq(r) + ssq(s) - 2 * dots(r, s)));
    out(r) = f - rho;
  }
  return out;
}

struct FittedSvm {
  Eigen::MatrixXd support;
  Eigen::VectorXd coef;
  double rho = 0;
};

FittedSvm fit_svm(const Eigen::MatrixXd &x, const std::vector<int> &labels01, double gamma,
                  const SvmParams &p) {
  std::vector<int> y(labels01.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = labels01[i] ? 1 : -1;
  SvmSolution s = solve_svm(x, y, gamma, p.c, p.tolerance, p.cache_mb);
  std::vector<Eigen::Index> sv;
  for (std::size_t i = 0; i < s.alpha.size(); ++i)
    if (s.alpha[i] > 0) sv.push_back(static_cast<Eigen::Index>(i));
  FittedSvm f;
  f.support.resize(static_cast<Eigen::Index>(sv.size()), x.cols());
  f.coef.resize(static_cast<Eigen::Index>(sv.size()));
  for (std::size_t k = 0; k < sv.size(); ++k) {
    f.support.row(k) = x.row(sv[k]);
    f.coef(k) = s.alpha[sv[k]] * y[sv[k]];
  }
  f.rho = s.rho;
  return f;
}

// Platt's sigmoid fit on decision values (Newton with backtracking).
std::pair<double, double> sigmoid_train(const std::vector<double> &dec, const std::vector<int> &y) {
  double prior1 = 0, prior0 = 0;
  for (int v : y) (v ? prior1 : prior0) += 1;
  const int max_iter = 100;
  const double min_step = 1e-10, sigma = 1e-12, eps = 1e-5;
  double hi = (prior1 + 1) / (prior1 + 2), lo = 1 / (prior0 + 2);
  std::vector<double> t(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) t[i] = y[i] ? hi : lo;
  double a = 0, b = std::log((prior0 + 1) / (prior1 + 1));
  auto objective = [&](double aa, double bb) {
    double f = 0;
    for (std::size_t i = 0; i < dec.size(); ++i) {
      double z = dec[i] * aa + bb;
      f += z >= 0 ? t[i] * z + std::log1p(std::exp(-z)) : (t[i] - 1) * z + std::log1p(std::exp(z));
    }
    return f;
  };
  double fval = objective(a, b);
  for (int iter = 0; iter < max_iter; ++iter) {
    double h11 = sigma, h22 = sigma, h21 = 0, g1 = 0, g2 = 0;
    for (std::size_t i = 0; i < dec.size(); ++i) {
      double z = dec[i] * a + b, p, q;
      if (z >= 0) {
        p = std::exp(-z) / (1 + std::exp(-z));
        q = 1 / (1 + std::exp(-z));
      } else {
        p = 1 / (1 + std::exp(z));
        q = std::exp(z) / (1 + std::exp(z));
      }
      double d2 = p * q;
      h11 += dec[i] * dec[i] * d2;
      h22 += d2;
      h21 += dec[i] * d2;
      double d1 = t[i] - p;
      g1 += dec[i] * d1;
      g2 += d1;
    }
    if (std::abs(g1) < eps && std::abs(g2) < eps) break;
    double det = h11 * h22 - h21 * h21;
    double da = -(h22 * g1 - h21 * g2) / det;
    double db = -(-h21 * g1 + h11 * g2) / det;
    double gd = g1 * da + g2 * db;
    double step = 1;
    while (step >= min_step) {
      double na = a + step * da, nb = b + step * db;
      double nf = objective(na, nb);
      if (nf < fval + 0.0001 * step * gd) {
        a = na, b = nb, fval = nf;
        break;
      }
      step /= 2;
    }
    if (step < min_step) break;
  }
  return {a, b};
}

double sigmoid_predict(double dec, double a, double b) {
  double z = dec * a + b;
  return z >= 0 ? std::exp(-z) / (1 + std::exp(-z)) : 1 / (1 + std::exp(z));
}

// ---------------------------------------------------------------------------
// Trees

struct Binned {
  Eigen::Index n = 0, d = 0;
  std::vector<std::vector<double>> cuts;
  std::vector<std::uint8_t> bins;  // column major
  // per column: the most common bin and the rows outside it
  std::vector<std::uint8_t> mode;
  std::vector<std::vector<std::pair<int, std::uint8_t>>> others;

  std::uint8_t at(Eigen::Index i, Eigen::Index j) const { return bins[j * n + i]; }
};

Binned bin_features(const Eigen::MatrixXd &x) {
  Binned b;
  b.n = x.rows();
  b.d = x.cols();
  b.cuts.resize(b.d);
  b.mode.assign(static_cast<std::size_t>(b.d), 0);
  b.others.resize(b.d);
  b.bins.assign(static_cast<std::size_t>(b.n * b.d), 0);
  std::vector<double> v;
  for (Eigen::Index j = 0; j < b.d; ++j) {
    v.assign(x.col(j).data(), x.col(j).data() + b.n);
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    if (v.size() > 256) {
      std::vector<double> q;
      for (std::size_t k = 0; k < 256; ++k) q.push_back(v[k * (v.size() - 1) / 255]);
      q.erase(std::unique(q.begin(), q.end()), q.end());
      v = std::move(q);
    }
    auto &cuts = b.cuts[j];
    for (std::size_t k = 0; k + 1 < v.size(); ++k) cuts.push_back((v[k] + v[k + 1]) / 2);
    for (Eigen::Index i = 0; i < b.n; ++i)
      b.bins[j * b.n + i] = static_cast<std::uint8_t>(
          std::lower_bound(cuts.begin(), cuts.end(), x(i, j)) - cuts.begin());
    std::vector<int> count(cuts.size() + 1, 0);
    for (Eigen::Index i = 0; i < b.n; ++i) ++count[b.bins[j * b.n + i]];
    b.mode[j] = static_cast<std::uint8_t>(std::max_element(count.begin(), count.end()) - count.begin());
    for (Eigen::Index i = 0; i < b.n; ++i)
      if (b.bins[j * b.n + i] != b.mode[j]) b.others[j].emplace_back(static_cast<int>(i), b.bins[j * b.n + i]);
  }
  return b;
}

// Grows a tree that maximizes sum over children of S^2 / W, which is both
// the squared error reduction and (for 0/1 targets) the Gini reduction.
class TreeBuilder {
 public:
  TreeBuilder(const Binned &b, const std::vector<double> &w, const std::vector<double> &t,
              int max_depth, int max_features, std::mt19937_64 *rng)
      : b_(b), w_(w), t_(t), max_depth_(max_depth), max_features_(max_features), rng_(rng),
        stamp_(static_cast<std::size_t>(b.n), -1) {}

  Tree build(std::vector<int> samples, std::vector<int> *leaf_of) {
    tree_ = Tree{};
    std::fill(stamp_.begin(), stamp_.end(), -1);
    leaf_of_ = leaf_of;
    grow(samples, 0);
    return std::move(tree_);
  }

 private:
  int grow(std::vector<int> &samples, int depth) {
    int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    double W = 0, S = 0;
    for (int s : samples) W += w_[s], S += w_[s] * t_[s];
    tree_.nodes[id].value = W > 0 ? S / W : 0;

    int best_f = -1, best_k = -1;
    double best_gain = 1e-12;
    if (depth < max_depth_ && samples.size() >= 2 && W > 0) {
      std::vector<int> features(static_cast<std::size_t>(b_.d));
      std::iota(features.begin(), features.end(), 0);
      if (max_features_ > 0 && max_features_ < b_.d) {
        for (int k = 0; k < max_features_; ++k) {
          std::uniform_int_distribution<int> pick(k, static_cast<int>(b_.d) - 1);
          std::swap(features[k], features[pick(*rng_)]);
        }
        features.resize(max_features_);
      }
      const double parent = S * S / W;
      double hw[256], hs[256];
      int hc[256];
      bool stamped = false;
      for (int f : features) {
        const int nb = static_cast<int>(b_.cuts[f].size()) + 1;
        if (nb < 2) continue;
        std::fill(hw, hw + nb, 0.0);
        std::fill(hs, hs + nb, 0.0);
        std::fill(hc, hc + nb, 0);
        const auto &others = b_.others[f];
        if (others.size() < samples.size()) {
          if (!stamped) {
            for (int s : samples) stamp_[s] = id;
            stamped = true;
          }
          double ow = 0, os = 0;
          int oc = 0;
          for (const auto &[s, k] : others) {
            if (stamp_[s] != id) continue;
            hw[k] += w_[s];
            hs[k] += w_[s] * t_[s];
            ++hc[k];
            ow += w_[s], os += w_[s] * t_[s], ++oc;
          }
          const int m = b_.mode[f];
          hc[m] = static_cast<int>(samples.size()) - oc;
          hw[m] = hc[m] ? W - ow : 0.0;
          hs[m] = hc[m] ? S - os : 0.0;
        } else {
          for (int s : samples) {
            int k = b_.at(s, f);
            hw[k] += w_[s];
            hs[k] += w_[s] * t_[s];
            ++hc[k];
          }
        }
        double wl = 0, sl = 0;
        int cl = 0;
        const int total = static_cast<int>(samples.size());
        for (int k = 0; k + 1 < nb; ++k) {
          wl += hw[k], sl += hs[k], cl += hc[k];
          if (cl == 0) continue;
          if (cl == total) break;
          double wr = W - wl, sr = S - sl;
          if (wl <= 0 || wr <= 0) continue;
          double gain = sl * sl / wl + sr * sr / wr - parent;
          if (gain > best_gain) best_gain = gain, best_f = f, best_k = k;
        }
      }
    }
    if (best_f < 0) {
      if (leaf_of_)
        for (int s : samples) (*leaf_of_)[s] = id;
      return id;
    }
    std::vector<int> left, right;
    for (int s : samples) (b_.at(s, best_f) <= best_k ? left : right).push_back(s);
    samples.clear();
    samples.shrink_to_fit();
    tree_.nodes[id].feature = best_f;
    tree_.nodes[id].threshold = b_.cuts[best_f][best_k];
    int l = grow(left, depth + 1);
    int r = grow(right, depth + 1);
    tree_.nodes[id].left = l;
    tree_.nodes[id].right = r;
    return id;
  }

  const Binned &b_;
  const std::vector<double> &w_;
  const std::vector<double> &t_;
  int max_depth_;
  int max_features_;
  std::mt19937_64 *rng_;
  std::vector<int> stamp_;
  Tree tree_;
  std::vector<int> *leaf_of_ = nullptr;
};

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

void SvmClassifier::fit(const Eigen::MatrixXd &x, const std::vector<int> &y) {
  check_two_classes(x, y);
  gamma_ = params_.gamma ? *params_.gamma : 1.0 / static_cast<double>(std::max<Eigen::Index>(1, x.cols()));
  FittedSvm full = fit_svm(x, y, gamma_, params_);
  support_ = std::move(full.support);
  coef_ = std::move(full.coef);
  rho_ = full.rho;

  // decision values from internal cross-validation feed the sigmoid
  const int l = static_cast<int>(x.rows());
  const int folds = std::clamp(params_.platt_folds, 2, l);
  std::vector<int> perm(l);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(params_.seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<double> dec(l, 0.0);
  for (int f = 0; f < folds; ++f) {
    int begin = f * l / folds, end = (f + 1) * l / folds;
    std::vector<int> train;
    for (int k = 0; k < l; ++k)
      if (k < begin || k >= end) train.push_back(perm[k]);
    Eigen::MatrixXd xt(static_cast<Eigen::Index>(train.size()), x.cols());
    std::vector<int> yt(train.size());
    int pos = 0;
    for (std::size_t k = 0; k < train.size(); ++k) {
      xt.row(static_cast<Eigen::Index>(k)) = x.row(train[k]);
      yt[k] = y[train[k]];
      pos += yt[k];
    }
    const int neg = static_cast<int>(train.size()) - pos;
    if (pos == 0 || neg == 0) {
      for (int k = begin; k < end; ++k) dec[perm[k]] = pos > 0 ? 1.0 : (neg > 0 ? -1.0 : 0.0);
      continue;
    }
    FittedSvm sub = fit_svm(xt, yt, gamma_, params_);
    Eigen::MatrixXd xv(end - begin, x.cols());
    for (int k = begin; k < end; ++k) xv.row(k - begin) = x.row(perm[k]);
    Eigen::VectorXd dv = rbf_decision(sub.support, sub.coef, sub.rho, gamma_, xv);
    for (int k = begin; k < end; ++k) dec[perm[k]] = dv(k - begin);
  }
  std::tie(a_, b_) = sigmoid_train(dec, y);
}

Eigen::VectorXd SvmClassifier::decision_function(const Eigen::MatrixXd &x) const {
  return rbf_decision(support_, coef_, rho_, gamma_, x);
}

Eigen::VectorXd SvmClassifier::predict_proba(const Eigen::MatrixXd &x) const {
  Eigen::VectorXd d = decision_function(x);
  for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = sigmoid_predict(d(i), a_, b_);
  return d;
}

double Tree::predict(const double *row, Eigen::Index stride) const {
  int n = 0;
  while (nodes[n].feature >= 0)
    n = row[nodes[n].feature * stride] <= nodes[n].threshold ? nodes[n].left : nodes[n].right;
  return nodes[n].value;
}

void GbmClassifier::fit(const Eigen::MatrixXd &x, const std::vector<int> &y) {
  check_two_classes(x, y);
  const int n = static_cast<int>(x.rows());
  Binned b = bin_features(x);
  double pos = std::accumulate(y.begin(), y.end(), 0.0);
  init_ = std::log(pos / (n - pos));
  std::vector<double> f(n, init_), r(n), w(n, 1.0);
  std::vector<int> all(n), leaf_of(n);
  std::iota(all.begin(), all.end(), 0);
  trees_.clear();
  for (int m = 0; m < params_.n_estimators; ++m) {
    for (int i = 0; i < n; ++i) r[i] = y[i] - logistic(f[i]);
    TreeBuilder builder(b, w, r, params_.max_depth, 0, nullptr);
    Tree tree = builder.build(all, &leaf_of);
    std::vector<double> num(tree.nodes.size(), 0.0), den(tree.nodes.size(), 0.0);
    for (int i = 0; i < n; ++i) {
      double p = logistic(f[i]);
      num[leaf_of[i]] += r[i];
      den[leaf_of[i]] += p * (1 - p);
    }
    for (std::size_t k = 0; k < tree.nodes.size(); ++k)
      if (tree.nodes[k].feature < 0)
        tree.nodes[k].value = std::abs(den[k]) < 1e-150 ? 0.0 : num[k] / den[k];
    for (int i = 0; i < n; ++i) f[i] += params_.learning_rate * tree.nodes[leaf_of[i]].value;
    trees_.push_back(std::move(tree));
  }
}

Eigen::VectorXd GbmClassifier::predict_proba(const Eigen::MatrixXd &x) const {
  Eigen::VectorXd out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double f = init_;
    for (const auto &t : trees_) f += params_.learning_rate * t.predict(x.data() + i, x.rows());
    out(i) = logistic(f);
  }
  return out;
}

void RfClassifier::fit(const Eigen::MatrixXd &x, const std::vector<int> &y) {
  check_two_classes(x, y);
  const int n = static_cast<int>(x.rows());
  Binned b = bin_features(x);
  std::vector<double> t(y.begin(), y.end());
  const int max_features = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(x.cols()))));
  std::mt19937_64 rng(params_.seed);
  trees_.clear();
  for (int m = 0; m < params_.n_estimators; ++m) {
    std::vector<double> w(n, 0.0);
    std::uniform_int_distribution<int> draw(0, n - 1);
    for (int k = 0; k < n; ++k) w[draw(rng)] += 1.0;
    std::vector<int> in_bag;
    for (int i = 0; i < n; ++i)
      if (w[i] > 0) in_bag.push_back(i);
    TreeBuilder builder(b, w, t, params_.max_depth, max_features, &rng);
    trees_.push_back(builder.build(std::move(in_bag), nullptr));
  }
}

Eigen::VectorXd RfClassifier::predict_proba(const Eigen::MatrixXd &x) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (const auto &t : trees_) out(i) += t.predict(x.data() + i, x.rows());
    if (!trees_.empty()) out(i) /= static_cast<double>(trees_.size());
  }
  return out;
}

void VotingClassifier::fit(const Eigen::MatrixXd &x, const std::vector<int> &y) {
  check_two_classes(x, y);
  for (auto &m : members_) m->fit(x, y);
}

Eigen::VectorXd VotingClassifier::predict_proba(const Eigen::MatrixXd &x) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(x.rows());
  for (const auto &m : members_) out += m->predict_proba(x);
  if (!members_.empty()) out /= static_cast<double>(members_.size());
  return out;
}

std::unique_ptr<Classifier> make_classifier(const ModelConfig &config) {
  SvmParams sota;
  sota.gamma = 0.0186;
  sota.seed = config.seed;
  switch (config.kind) {
    case ModelKind::kSvmSota:
      return std::make_unique<SvmClassifier>(sota);
    case ModelKind::kSvmDef: {
      SvmParams def;
      def.seed = config.seed;
      return std::make_unique<SvmClassifier>(def);
    }
    case ModelKind::kGbm:
      return std::make_unique<GbmClassifier>();
    case ModelKind::kRf: {
      RfParams rf;
      rf.seed = config.seed;
      return std::make_unique<RfClassifier>(rf);
    }
    default: {
      std::vector<std::unique_ptr<Classifier>> members;
      members.push_back(make_classifier({ModelKind::kGbm, config.seed}));
      members.push_back(make_classifier({ModelKind::kRf, config.seed}));
      members.push_back(make_classifier({ModelKind::kSvmSota, config.seed}));
      return std::make_unique<VotingClassifier>(std::move(members));
    }
  }
}

}  // namespace midr
