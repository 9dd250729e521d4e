#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <memory>
#include <utility>
#include <vector>

#include "midispace/checkpoint.hpp"
#include "midispace/events.hpp"
#include "midispace/latent.hpp"
#include "midispace/model.hpp"
#include "midispace/rng.hpp"
#include "midispace/train.hpp"

#include "support/generators.hpp"

using namespace midispace;

namespace {

TokenSeq melody_track(int root) {
  std::vector<QuantizedNote> notes;
  const int degrees[4] = {0, 4, 7, 12};
  for (int k = 0; k < 4; ++k) notes.push_back({root + degrees[k], k * 24, 20, 5});
  return encode_track(notes, 0);
}

Measure thin_measure(int i) {
  Measure m;
  m.tracks[0] = melody_track(60 + i);
  for (int s = 1; s < kNumTrackSlots; ++s) m.tracks[s] = missing_track();
  m.chords = {static_cast<std::uint8_t>(1 + i), static_cast<std::uint8_t>(1 + i)};
  return m;
}

Measure rich_measure(int i) {
  Measure m = thin_measure(i);
  const std::vector<QuantizedNote> bass{{36 + i, 0, 96, 4}};
  const std::vector<QuantizedNote> pad{{52 + i, 0, 48, 3}, {55 + i, 48, 48, 3}};
  m.tracks[1] = encode_track(bass, 33);
  m.tracks[2] = encode_track(pad, 48);
  return m;
}

}  // namespace

// One desk-scale model is trained to memorize an eight-measure corpus, then
// every latent workflow is exercised against it. Training dominates the
// runtime, so the checks share the run instead of retraining per case.
TEST_CASE("a trained model supports the latent workflows") {
  std::vector<Measure> thin, rich, all;
  for (int i = 0; i < 4; ++i) {
    thin.push_back(thin_measure(i));
    rich.push_back(rich_measure(i));
    all.push_back(thin.back());
    all.push_back(rich.back());
  }

  ModelConfig mc;
  mc.seed = 11;
  Model model(mc);
  TrainConfig tc;
  tc.seed = 21;
  tc.batch_size = 8;
  Trainer trainer(model, tc);

  double first_total = 0.0, last_total = 0.0;
  for (int s = 0; s < 800; ++s) {
    const StepMetrics m = trainer.train_step(all);
    if (s == 0) first_total = m.total;
    last_total = m.total;
  }
  CHECK(last_total < first_total / 5.0);
  CHECK(teacher_forced_accuracy(model, all).ratio() >= 0.95);

  // memorized measures come back verbatim from their posterior means
  int reconstructed = 0;
  Rng unused(1);
  for (const auto& x : all) {
    const Measure y = model.sample_decode(model.encode_values(x).mu, x.chords, 0.0, unused);
    if (y.tracks == x.tracks) ++reconstructed;
  }
  CHECK(reconstructed >= 7);

  // the rich-minus-thin direction adds tracks when applied to a thin measure
  const AttributeVector v = attribute_vector(model, rich, thin, "accompanied");
  CHECK(v.n_with == 4);
  CHECK(v.n_without == 4);
  Rng rng_base(501), rng_steer(502);
  double base_mean = 0.0, steered_mean = 0.0;
  for (int trial = 0; trial < 15; ++trial) {
    base_mean += track_count(apply_attribute(model, thin[0], v, 0.0, 0.2, rng_base));
    steered_mean += track_count(apply_attribute(model, thin[0], v, 1.0, 0.2, rng_steer));
  }
  base_mean /= 15.0;
  steered_mean /= 15.0;
  CHECK(steered_mean - base_mean >= 1.5);

  // interpolation stays on the data manifold near the endpoints and hands
  // the chord conditioning over at the midpoint
  Rng irng(9);
  const auto path = interpolate_measures(model, thin[0], rich[2], 5, 0.0, irng);
  REQUIRE(path.size() == 5);
  CHECK(path[0].tracks == thin[0].tracks);
  for (int i = 0; i < 5; ++i) CHECK(path[i].chords == (i <= 2 ? thin[0] : rich[2]).chords);
}

TEST_CASE("training resumes from a checkpoint") {
  const std::vector<Measure> batch = testing::fixture_measures(2, 77);

  ModelConfig mc;
  mc.seed = 3;
  TrainConfig tc;
  tc.seed = 5;
  tc.batch_size = 2;

  Model m1(mc);
  Trainer t1(m1, tc);
  double presave_first = 0.0;
  for (int s = 0; s < 6; ++s) {
    const StepMetrics m = t1.train_step(batch);
    if (s == 0) presave_first = m.total;
  }

  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "midispace_resume_test";
  fs::create_directories(dir);
  const std::string path = (dir / "mid.ckpt").string();
  save_checkpoint_file(path, m1, t1.step(), &t1.optimizer_state());

  // two independent resumptions agree with each other bit for bit
  auto resume = [&](std::uint64_t model_seed) {
    ModelConfig rc = mc;
    rc.seed = model_seed;
    auto model = std::make_unique<Model>(rc);
    auto tr = std::make_unique<Trainer>(*model, tc);
    const long at = load_checkpoint_file(path, *model, &tr->optimizer_state());
    tr->set_step(at);
    return std::pair{std::move(model), std::move(tr)};
  };
  auto [m2, t2] = resume(900);
  auto [m3, t3] = resume(901);
  CHECK(t2->optimizer_state().t == 6);

  double resumed_last = 0.0;
  for (int s = 0; s < 4; ++s) {
    const StepMetrics a = t2->train_step(batch);
    const StepMetrics b = t3->train_step(batch);
    if (s == 0) {
      CHECK(a.step == 6);
      CHECK(a.lr == learning_rate(tc, 6));
    }
    CHECK(a.total == b.total);
    CHECK(a.recon == b.recon);
    resumed_last = a.total;
  }
  for (std::size_t i = 0; i < m2->params().size(); ++i)
    CHECK(m2->params()[i].value == m3->params()[i].value);

  // descent picks up where the first run left off
  CHECK(resumed_last < presave_first);
  fs::remove_all(dir);
}

TEST_CASE("the shuffled training loop with augmentation converges") {
  const std::vector<Measure> dataset = testing::fixture_measures(6, 40);
  ModelConfig mc;
  mc.seed = 8;
  Model model(mc);
  TrainConfig tc;
  tc.seed = 14;
  tc.batch_size = 4;
  tc.augment = true;
  Trainer trainer(model, tc);

  std::vector<double> totals;
  trainer.train(dataset, 60, [&](const StepMetrics& m) { totals.push_back(m.total); });
  REQUIRE(totals.size() == 60);
  for (double t : totals) CHECK(std::isfinite(t));
  double head = 0.0, tail = 0.0;
  for (int i = 0; i < 10; ++i) {
    head += totals[i];
    tail += totals[50 + i];
  }
  CHECK(tail < head);
}
