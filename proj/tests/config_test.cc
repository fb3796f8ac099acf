#include "midr/config.h"

#include "doctest.h"
#include "midr/errors.h"

using namespace midr;

TEST_CASE("defaults without a file") {
  MidrConfig c = load_config("");
  CHECK(c.run.seed == 42);
  CHECK(c.run.folds == 5);
  CHECK(c.run.threshold == 0.5);
  CHECK(c.run.backend.name == "stub");
  CHECK(c.digest.empty());
}

TEST_CASE("sections and keys") {
  MidrConfig c = parse_config(R"(; comment
[dataset]
digest = sha256-128
half_width = 150
keep_numeric = yes

[experiment]
seed = 7
folds = 3
threshold = 0.25
reduction = mean
workers = 4

[features]
text_representation = counts
groups = P,B,I

[backend]
name = reference
dim = 96
)");
  CHECK(c.digest_algorithm == "sha256-128");
  CHECK(c.half_width == 150);
  CHECK(c.keep_numeric);
  CHECK(c.run.seed == 7);
  CHECK(c.run.folds == 3);
  CHECK(c.run.threshold == 0.25);
  CHECK(c.run.reduction == Reduction::kMean);
  CHECK(c.run.workers == 4);
  CHECK(c.run.text_representation == TextRepresentation::kCounts);
  CHECK(c.run.groups == std::set<char>{'P', 'B', 'I'});
  CHECK(c.run.backend.name == "reference");
  CHECK(c.run.backend.dim == 96);
}

TEST_CASE("bad configs are configuration errors") {
  CHECK_THROWS_AS(parse_config("[experiment]\nseed = x\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[experiment]\nsede = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[nothing]\na = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[features]\ngroups = PQ\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[experiment]\nreduction = median\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[experiment]\nfolds = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[experiment\nseed = 1\n"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/midr.cfg"), ConfigError);
}

TEST_CASE("grid factor lists expand in a fixed order") {
  auto g = parse_grid("[grid]\nmodel = SVM_SOTA, SVM_def, GBM, RF, VC\n");
  CHECK(g == full_grid());

  g = parse_grid(R"([grid]
strategy = NNAN
sampling_factor = 1, 2
pca = none, 50
word_vectors = no
model = SVM_SOTA, GBM
)");
  REQUIRE(g.size() == 8);
  CHECK(g[0].key() == "NNAN-sf1-pca0-wv0-SVM_SOTA");
  CHECK(g[1].key() == "NNAN-sf1-pca0-wv0-GBM");
  CHECK(g[2].key() == "NNAN-sf1-pca50-wv0-SVM_SOTA");
  CHECK(g[7].key() == "NNAN-sf2-pca50-wv0-GBM");
}

TEST_CASE("enumerated grid configs") {
  auto g = parse_grid(R"([config sota]
strategy = NNAN
model = SVM_SOTA

[config gbm]
strategy = NC
sampling_factor = 4
pca = 100
word_vectors = yes
model = GBM

[config again]
strategy = NNAN
model = SVM_SOTA
)");
  REQUIRE(g.size() == 2);
  CHECK(g[0].key() == "NNAN-sf1-pca0-wv0-SVM_SOTA");
  CHECK(g[1].key() == "NC-sf4-pca100-wv1-GBM");
  CHECK_THROWS_AS(parse_grid("[config x]\nmodel = GBM\n"), ConfigError);
  CHECK_THROWS_AS(parse_grid("[config x]\nstrategy = NP\nmodel = GBM\n"), ConfigError);
  CHECK_THROWS_AS(parse_grid("[grid]\nmodel = SVM\n"), ConfigError);
  CHECK_THROWS_AS(parse_grid("[grid]\nsampling_factor = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse_grid(""), ConfigError);
}
