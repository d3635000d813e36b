// Copyright 2026 The hybridrec Authors
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

#include "doctest.h"
#include "hybridrec/imagepipe.h"
#include "hybridrec/synthgen.h"
#include "testutil.h"

using namespace hybridrec;

namespace {

const std::vector<Eigen::Index> kToyWidths = {6, 5, 5, 4, 4, 3, 3, 2};

double cosine(const Vec& a, const Vec& b) { return a.dot(b) / (a.norm() * b.norm()); }

WordVectors toy_vectors() {
  Mat v(3, 2);
  v << 1, 0, 0, 1, 2, 2;
  return WordVectors({"red", "bike", "fast"}, v);
}

struct Trained {
  SynthData data;
  WordVectors wv;
  MlpFitResult fit;
};

const Trained& trained() {
  static const Trained t = [] {
    Trained r;
    SynthConfig c;
    c.n_users = 10;
    c.n_items = 300;
    c.days = 1;
    r.data = generate(c);
    std::vector<std::vector<std::string>> corpus;
    for (const auto& ad : r.data.ads) corpus.push_back(ad_tokens(ad));
    Word2VecOptions wo;
    wo.seed = 2;
    r.wv = word2vec_fit(corpus, wo);
    MlpOptions mo;
    mo.seed = 3;
    r.fit = mlp_fit(build_image_training_set(r.data.ads, r.data.images, r.wv), mo);
    return r;
  }();
  return t;
}

}  // namespace

TEST_CASE("title targets") {
  const auto wv = toy_vectors();
  Ad ad{"i", "c", "s", "p", 0, true, "", ""};
  ad.title = "bike bike bike bike bike";
  CHECK(*title_target(ad, wv) == wv.vector(1));
  ad.title = "Red unknown FAST";
  CHECK(title_target(ad, wv)->isApprox(Vec((wv.vector(0) + wv.vector(2)) / 2)));
  ad.title = "nothing known here";
  CHECK_FALSE(title_target(ad, wv).has_value());
  ad.title = "red red red red red bike bike";  // only the first five count
  CHECK(*title_target(ad, wv) == wv.vector(0));
  ad.title = "zzz red";
  ad.description = "bike bike bike";  // description is not used
  CHECK(*title_target(ad, wv) == wv.vector(0));
}

TEST_CASE("projector has exactly seven layers") {
  Rng rng(1);
  CHECK_NOTHROW(ImageProjector(kToyWidths, rng));
  CHECK_THROWS_AS(ImageProjector(std::vector<Eigen::Index>{6, 5, 5, 4, 4, 3, 2}, rng), Error);
  CHECK_THROWS_AS(ImageProjector(std::vector<Eigen::Index>{6, 5, 5, 4, 4, 3, 3, 3, 2}, rng), Error);
  const auto w = ImageProjector::standard_widths();
  CHECK(w == std::vector<Eigen::Index>{2048, 1024, 512, 256, 256, 128, 128, 100});
  const ImageProjector full(w, rng);
  CHECK(full.stack().depth() == 7);
  CHECK(full.in() == 2048);
  CHECK(full.out() == 100);
  for (std::size_t i = 0; i + 1 < 7; ++i) CHECK(full.stack().layers()[i].activation == nn::Activation::kRelu);
  CHECK(full.stack().layers()[6].activation == nn::Activation::kLinear);
}

TEST_CASE("projector gradients match finite differences") {
  Rng rng(2);
  ImageProjector proj(kToyWidths, rng);
  for (auto* p : proj.parameters()) *p = testutil::random_mat(rng, p->rows(), p->cols(), 0.6);
  proj.set_standardization(testutil::random_mat(rng, 6, 1), Vec::Constant(6, 1.5));
  const Mat x = testutil::random_mat(rng, 6, 4);
  const Mat y = testutil::random_mat(rng, 2, 4);
  auto grads = nn::zeros_like(std::as_const(proj).parameters());
  proj.loss_and_grad(x, y, &grads);
  CHECK(testutil::max_gradient_error(proj.parameters(), grads, [&] { return proj.loss_and_grad(x, y, nullptr); }) <
        1e-3);
}

TEST_CASE("loss is the mean squared error over samples and dimensions") {
  Rng rng(3);
  ImageProjector proj(kToyWidths, rng);
  const Mat x = testutil::random_mat(rng, 6, 5);
  const Mat y = testutil::random_mat(rng, 2, 5);
  const double expected = (proj.forward(x) - y).squaredNorm() / 10.0;
  CHECK(proj.loss_and_grad(x, y, nullptr) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("constant targets are learned") {
  Rng rng(4);
  ImageTrainingSet set;
  set.features = testutil::random_mat(rng, 6, 64);
  set.targets = Mat::Constant(2, 64, 0.7);
  set.targets.row(1).setConstant(-1.2);
  MlpOptions o;
  o.widths = kToyWidths;
  o.epochs = 60;
  o.seed = 1;
  const auto fit = mlp_fit(set, o);
  CHECK(fit.mse_history.back() <= 0.1 * fit.mse_history.front());
  const Vec pred = fit.model.forward(testutil::random_mat(rng, 6, 1)).col(0);
  CHECK(std::abs(pred[0] - 0.7) < 0.2);
  CHECK(std::abs(pred[1] + 1.2) < 0.2);
}

TEST_CASE("mlp_fit validation") {
  Rng rng(5);
  MlpOptions o;
  o.widths = kToyWidths;
  ImageTrainingSet empty;
  empty.features.resize(6, 0);
  empty.targets.resize(2, 0);
  CHECK_THROWS_AS(mlp_fit(empty, o), Error);
  ImageTrainingSet wrong;
  wrong.features = testutil::random_mat(rng, 5, 3);
  wrong.targets = testutil::random_mat(rng, 2, 3);
  CHECK_THROWS_AS(mlp_fit(wrong, o), Error);
}

TEST_CASE("projector training on synthetic images") {
  const auto& t = trained();
  const auto& h = t.fit.mse_history;
  REQUIRE(h.size() == 21);
  CHECK(h.back() <= 0.5 * h.front());
  for (std::size_t i = 0; i + 2 < h.size(); ++i) CHECK(h[i + 2] <= h[i]);
}

TEST_CASE("image embeddings") {
  const auto& t = trained();
  const auto& proj = t.fit.model;
  const Vec f0 = t.data.images.row_d(0);
  const Vec e0 = image_embed(f0, proj);
  CHECK(e0.size() == 100);
  CHECK(image_embed(f0, proj) == e0);
  CHECK(e0.allFinite());

  Vec bad = f0;
  bad[7] = std::nan("");
  CHECK_THROWS_AS(image_embed(bad, proj), Error);

  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    Vec delta = testutil::random_mat(rng, f0.size(), 1).col(0);
    delta *= 1e-6 / delta.norm();
    CHECK((image_embed(f0 + delta, proj) - e0).norm() <= 1e-3);
  }

  double same = 0, cross = 0;
  int ns = 0, nc = 0;
  const auto table = image_embed_all(t.data.images, proj);
  CHECK(table.size() == t.data.images.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      const double c = cosine(table.row(i), table.row(j));
      if (t.data.truth.item_subcat[i] == t.data.truth.item_subcat[j]) {
        same += c;
        ++ns;
      } else {
        cross += c;
        ++nc;
      }
    }
  }
  CHECK(same / ns > cross / nc);

  testutil::TempDir dir("proj");
  proj.save(dir.path());
  const auto back = ImageProjector::load(dir.path());
  CHECK((image_embed(f0, back) - e0).norm() < 1e-3);
}
