#include "midr/models.h"

#include <fstream>
#include <random>

#include "doctest.h"
#include "json.hpp"
#include "midr/errors.h"
#include "test_util.h"

using namespace midr;
using nlohmann::json;

namespace {

Eigen::MatrixXd matrix(const json &rows) {
  Eigen::MatrixXd m(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j].get<double>();
  return m;
}

json oracle() { return json::parse(read_test_file("model_oracle.json")); }

// Ten points split by x0 + x1 > 0.
void separable(Eigen::MatrixXd &x, std::vector<int> &y) {
  x.resize(10, 2);
  x << -2, -1, -1.5, -0.5, -1, -1, -0.5, -1.5, -0.2, -0.3,  //
      0.3, 0.4, 0.5, 1.5, 1, 1, 1.5, 0.5, 2, 1;
  y = {0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
}

double accuracy(const Eigen::VectorXd &p, const std::vector<int> &y) {
  int ok = 0;
  for (std::size_t i = 0; i < y.size(); ++i) ok += (p(i) > 0.5) == (y[i] == 1);
  return static_cast<double>(ok) / static_cast<double>(y.size());
}

}  // namespace

TEST_CASE("model names") {
  CHECK(all_models().size() == 5);
  for (ModelKind k : all_models()) CHECK(parse_model(model_name(k)) == k);
  CHECK_THROWS_AS(parse_model("LogReg"), ConfigError);
}

TEST_CASE("SVM decision values match the reference solver") {
  json o = oracle();
  Eigen::MatrixXd x = matrix(o["x"]), xt = matrix(o["x_test"]);
  std::vector<int> y = o["y"].get<std::vector<int>>();
  struct Case {
    const char *key;
    std::optional<double> gamma;
  };
  for (Case c : {Case{"svm_sota", 0.0186}, Case{"svm_def", std::nullopt}, Case{"svm_wide", 0.5}}) {
    SvmParams p;
    p.gamma = c.gamma;
    SvmClassifier svm(p);
    svm.fit(x, y);
    Eigen::VectorXd d = svm.decision_function(xt);
    auto expected = o[std::string(c.key) + "_decision"].get<std::vector<double>>();
    for (std::size_t i = 0; i < expected.size(); ++i) CHECK(d(i) == doctest::Approx(expected[i]).epsilon(0.01));
  }
}

TEST_CASE("SVM_def uses gamma = 1 / n_features") {
  Eigen::MatrixXd x;
  std::vector<int> y;
  separable(x, y);
  auto svm = make_classifier({ModelKind::kSvmDef, 1});
  svm->fit(x, y);
  CHECK(dynamic_cast<SvmClassifier &>(*svm).gamma() == 0.5);
  auto sota = make_classifier({ModelKind::kSvmSota, 1});
  sota->fit(x, y);
  CHECK(dynamic_cast<SvmClassifier &>(*sota).gamma() == 0.0186);
}

TEST_CASE("SVM probabilities are calibrated into [0, 1]") {
  json o = oracle();
  Eigen::MatrixXd x = matrix(o["x"]);
  std::vector<int> y = o["y"].get<std::vector<int>>();
  SvmParams p;
  p.gamma = 0.5;
  SvmClassifier svm(p);
  svm.fit(x, y);
  CHECK(svm.platt_a() < 0);
  Eigen::VectorXd pr = svm.predict_proba(x), d = svm.decision_function(x);
  for (Eigen::Index i = 0; i < pr.size(); ++i) CHECK((pr(i) >= 0 && pr(i) <= 1));
  // monotone in the decision value
  for (Eigen::Index i = 0; i < pr.size(); ++i)
    for (Eigen::Index j = 0; j < pr.size(); ++j)
      if (d(i) < d(j)) CHECK(pr(i) <= pr(j));
  CHECK(accuracy(pr, y) > 0.8);
  SvmClassifier again(p);
  again.fit(x, y);
  CHECK(again.predict_proba(x) == pr);
}

// Five stages: later ones hit equal-gain splits that the reference breaks
// by a random feature order.
TEST_CASE("GBM matches the reference implementation") {
  json o = oracle();
  Eigen::MatrixXd x = matrix(o["x"]);
  std::vector<int> y = o["y"].get<std::vector<int>>();
  GbmParams params;
  params.n_estimators = 5;
  GbmClassifier gbm(params);
  gbm.fit(x, y);
  Eigen::VectorXd p = gbm.predict_proba(x);
  auto expected = o["gbm5_train_proba"].get<std::vector<double>>();
  for (std::size_t i = 0; i < expected.size(); ++i) CHECK(p(i) == doctest::Approx(expected[i]).epsilon(1e-6));
}

TEST_CASE("GBM fits a separable toy set") {
  Eigen::MatrixXd x;
  std::vector<int> y;
  separable(x, y);
  GbmClassifier gbm;
  gbm.fit(x, y);
  CHECK(accuracy(gbm.predict_proba(x), y) == 1.0);
}

TEST_CASE("random forest") {
  json o = oracle();
  Eigen::MatrixXd x = matrix(o["x"]);
  std::vector<int> y = o["y"].get<std::vector<int>>();
  RfClassifier a({100, 3, 9}), b({100, 3, 9});
  a.fit(x, y);
  b.fit(x, y);
  Eigen::VectorXd pa = a.predict_proba(x);
  CHECK(pa == b.predict_proba(x));
  for (Eigen::Index i = 0; i < pa.size(); ++i) CHECK((pa(i) >= 0 && pa(i) <= 1));
  CHECK(accuracy(pa, y) > 0.7);
  Eigen::MatrixXd s;
  std::vector<int> sy;
  separable(s, sy);
  RfClassifier rf;
  rf.fit(s, sy);
  CHECK(accuracy(rf.predict_proba(s), sy) == 1.0);
}

TEST_CASE("soft vote is the mean of its members") {
  json o = oracle();
  Eigen::MatrixXd x = matrix(o["x"]), xt = matrix(o["x_test"]);
  std::vector<int> y = o["y"].get<std::vector<int>>();
  auto vc = make_classifier({ModelKind::kVc, 3});
  vc->fit(x, y);
  auto &members = dynamic_cast<VotingClassifier &>(*vc).members();
  REQUIRE(members.size() == 3);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(xt.rows());
  for (const auto &m : members) mean += m->predict_proba(xt);
  mean /= 3.0;
  Eigen::VectorXd p = vc->predict_proba(xt);
  for (Eigen::Index i = 0; i < p.size(); ++i) CHECK(p(i) == doctest::Approx(mean(i)).epsilon(1e-12));

  // members trained alone with the same seed give the same probabilities
  for (auto [idx, kind] : {std::pair{0, ModelKind::kGbm}, std::pair{1, ModelKind::kRf},
                           std::pair{2, ModelKind::kSvmSota}}) {
    auto alone = make_classifier({kind, 3});
    alone->fit(x, y);
    CHECK(alone->predict_proba(xt) == members[idx]->predict_proba(xt));
  }
}

TEST_CASE("single-class training sets are rejected") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(6, 3);
  std::vector<int> y(6, 1);
  for (ModelKind k : all_models()) CHECK_THROWS_AS(make_classifier({k, 0})->fit(x, y), TrainingError);
}
