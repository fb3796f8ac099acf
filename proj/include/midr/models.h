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

// Binary classifiers returning probability of the positive class: RBF SVM
// with Platt scaling, gradient boosting, random forest and a soft vote.

#ifndef MIDR_MODELS_H_
#define MIDR_MODELS_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace midr {

enum class ModelKind { kSvmSota, kSvmDef, kGbm, kRf, kVc };

const char *model_name(ModelKind k);
ModelKind parse_model(std::string_view name);
std::vector<ModelKind> all_models();

struct ModelConfig {
  ModelKind kind = ModelKind::kSvmSota;
  std::uint64_t seed = 0;
};

class Classifier {
 public:
  virtual ~Classifier() = default;
  // y holds 0/1 labels. Throws TrainingError when only one class is present.
  virtual void fit(const Eigen::MatrixXd &x, const std::vector<int> &y) = 0;
  virtual Eigen::VectorXd predict_proba(const Eigen::MatrixXd &x) const = 0;
};

struct SvmParams {
  std::optional<double> gamma;  // unset: 1 / n_features
  double c = 1.0;
  double tolerance = 1e-3;
  int platt_folds = 5;
  std::uint64_t seed = 0;
  std::size_t cache_mb = 256;
};

class SvmClassifier : public Classifier {
 public:
  explicit SvmClassifier(SvmParams params = {}) : params_(params) {}
  void fit(const Eigen::MatrixXd &x, const std::vector<int> &y) override;
  Eigen::VectorXd predict_proba(const Eigen::MatrixXd &x) const override;
  Eigen::VectorXd decision_function(const Eigen::MatrixXd &x) const;
  double gamma() const { return gamma_; }
  double platt_a() const { return a_; }
  double platt_b() const { return b_; }

 private:
  SvmParams params_;
  double gamma_ = 0;
  Eigen::MatrixXd support_;
  Eigen::VectorXd coef_;  // alpha_i * y_i
  double rho_ = 0;
  double a_ = 0, b_ = 0;
};

// Depth-limited CART tree on binned features.
struct TreeNode {
  int feature = -1;  // -1 for a leaf
  double threshold = 0;  // go left when x <= threshold
  int left = -1, right = -1;
  double value = 0;
};

struct Tree {
  std::vector<TreeNode> nodes;
  double predict(const double *row, Eigen::Index stride) const;
};

struct GbmParams {
  int n_estimators = 100;
  int max_depth = 3;
  double learning_rate = 0.1;
};

class GbmClassifier : public Classifier {
 public:
  explicit GbmClassifier(GbmParams params = {}) : params_(params) {}
  void fit(const Eigen::MatrixXd &x, const std::vector<int> &y) override;
  Eigen::VectorXd predict_proba(const Eigen::MatrixXd &x) const override;

 private:
  GbmParams params_;
  double init_ = 0;
  std::vector<Tree> trees_;
};

struct RfParams {
  int n_estimators = 100;
  int max_depth = 3;
  std::uint64_t seed = 0;
};

class RfClassifier : public Classifier {
 public:
  explicit RfClassifier(RfParams params = {}) : params_(params) {}
  void fit(const Eigen::MatrixXd &x, const std::vector<int> &y) override;
  Eigen::VectorXd predict_proba(const Eigen::MatrixXd &x) const override;

 private:
  RfParams params_;
  std::vector<Tree> trees_;
};

class VotingClassifier : public Classifier {
 public:
  explicit VotingClassifier(std::vector<std::unique_ptr<Classifier>> members)
      : members_(std::move(members)) {}
  void fit(const Eigen::MatrixXd &x, const std::vector<int> &y) override;
  Eigen::VectorXd predict_proba(const Eigen::MatrixXd &x) const override;
  const std::vector<std::unique_ptr<Classifier>> &members() const { return members_; }

 private:
  std::vector<std::unique_ptr<Classifier>> members_;
};

std::unique_ptr<Classifier> make_classifier(const ModelConfig &config);

}  // namespace midr

#endif  // MIDR_MODELS_H_
