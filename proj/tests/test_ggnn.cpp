#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "fixtures.hpp"
#include "grad_check.hpp"
#include "qzero/checkpoint.hpp"
#include "qzero/ggnn.hpp"

using namespace qzero;
using namespace qzero::fixtures;

namespace {

GgnnConfig small_config(double weight_decay = 0.0) {
  GgnnConfig cfg;
  cfg.hidden_size = 8;
  cfg.passes = 2;
  cfg.mlp_hidden = 8;
  cfg.weight_decay = weight_decay;
  cfg.learning_rate = 1e-3;
  return cfg;
}

// Two variables, one clause: a 5-node graph.
Qbf five_node_qbf() {
  return parse_qdimacs("p cnf 2 1\ne 1 0\na 2 0\n1 2 0\n");
}

TrainingExample example_for(const Qbf& q, std::uint64_t seed) {
  Rng rng(seed);
  TrainingExample ex;
  ex.graph = encode(q);
  const double p0 = rng.real01();
  ex.target_policy = {p0, 1.0 - p0};
  ex.target_value = rng.chance(0.5) ? 1.0 : -1.0;
  return ex;
}

double max_abs_diff(const GgnnParams& a, const GgnnParams& b) {
  std::vector<const GgnnParams::Mat*> bs;
  b.for_each_tensor(
      [&](const char*, const GgnnParams::Mat& m) { bs.push_back(&m); });
  double worst = 0.0;
  std::size_t i = 0;
  a.for_each_tensor([&](const char*, const GgnnParams::Mat& m) {
    worst = std::max(worst, (m - *bs[i++]).cwiseAbs().maxCoeff());
  });
  return worst;
}

}  // namespace

TEST_CASE("init_params is seeded and bounded") {
  const GgnnConfig cfg = small_config();
  const GgnnParams a = init_params(cfg, 3);
  const GgnnParams b = init_params(cfg, 3);
  CHECK(max_abs_diff(a, b) == 0.0);
  const GgnnParams c = init_params(cfg, 4);
  CHECK(max_abs_diff(a, c) > 0.0);

  a.for_each_tensor([&](const char*, const GgnnParams::Mat& m) {
    if (m.cols() == 1) {
      CHECK(m.cwiseAbs().maxCoeff() == 0.0);  // biases
    } else {
      const double bound = std::sqrt(6.0 / static_cast<double>(m.cols()));
      CHECK(m.cwiseAbs().maxCoeff() <= bound);
      CHECK(m.cwiseAbs().maxCoeff() > 0.0);
    }
  });
}

TEST_CASE("forward produces a distribution and a bounded value") {
  const GgnnParams p = init_params(small_config(), 0);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Qbf q = random_qbf(3, 2, seed);
    if (q.decided()) continue;
    const PolicyValue pv = forward(p, encode(q));
    CHECK(pv.policy[0] >= 0.0);
    CHECK(pv.policy[1] >= 0.0);
    CHECK(pv.policy[0] + pv.policy[1] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(pv.value >= -1.0);
    CHECK(pv.value <= 1.0);
  }
}

TEST_CASE("forward is invariant under node permutation") {
  const GgnnParams p = init_params(small_config(), 1);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Qbf q = random_qbf(4, 3, seed);
    if (q.decided()) continue;
    const QbfGraph g = encode(q);

    Rng rng(seed + 100);
    std::vector<int> perm(static_cast<std::size_t>(g.node_count()));
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
    rng.shuffle(perm);

    QbfGraph shuffled;
    shuffled.nodes.resize(perm.size());
    for (std::size_t i = 0; i < perm.size(); ++i)
      shuffled.nodes[static_cast<std::size_t>(perm[i])] = g.nodes[i];
    for (const GraphEdge& e : g.edges) {
      shuffled.edges.push_back({perm[static_cast<std::size_t>(e.u)],
                                perm[static_cast<std::size_t>(e.v)], e.type});
    }

    const PolicyValue a = forward(p, g);
    const PolicyValue b = forward(p, shuffled);
    CHECK(a.policy[0] == doctest::Approx(b.policy[0]).epsilon(1e-6));
    CHECK(a.policy[1] == doctest::Approx(b.policy[1]).epsilon(1e-6));
    CHECK(a.value == doctest::Approx(b.value).epsilon(1e-6));
  }
}

TEST_CASE("loss matches hand arithmetic") {
  const GgnnParams p = init_params(small_config(0.0), 0);

  ForwardOut pred;
  pred.logits << 0.0, 0.0;
  pred.policy << 0.5, 0.5;
  pred.value = 0.0;
  TrainingExample ex;
  ex.target_policy = {0.5, 0.5};
  ex.target_value = 1.0;
  CHECK(loss(pred, ex, p) == doctest::Approx(1.0 + std::log(2.0)));

  // Confident and right: loss collapses to ~0.
  pred.logits << 20.0, -20.0;
  pred.policy << 1.0, 0.0;
  pred.value = 1.0;
  ex.target_policy = {1.0, 0.0};
  CHECK(loss(pred, ex, p) == doctest::Approx(0.0).epsilon(1e-12));

  // Gibbs: cross-entropy is at least the target entropy when v = z.
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    ForwardOut out;
    out.logits << rng.symmetric(3.0), rng.symmetric(3.0);
    const double mx = out.logits.maxCoeff();
    Eigen::Vector2d e = (out.logits.array() - mx).exp();
    out.policy = e / e.sum();
    out.value = 0.25;
    TrainingExample t;
    const double pi0 = rng.real01();
    t.target_policy = {pi0, 1.0 - pi0};
    t.target_value = 0.25;
    double entropy = 0.0;
    for (const double x : t.target_policy)
      if (x > 0.0) entropy -= x * std::log(x);
    CHECK(loss(out, t, p) >= entropy - 1e-12);
  }
}

TEST_CASE("gradients match finite differences") {
  for (std::uint64_t seed = 0; seed < 2; ++seed) {
    const GgnnParams p = init_params(small_config(0.01), seed);
    const TrainingExample ex = example_for(five_node_qbf(), seed + 50);
    const auto result = testing::finite_difference_check(p, ex);
    INFO("worst tensor: " << result.worst_tensor);
    CHECK(result.entries > 1000);
    CHECK(result.max_rel_err < 1e-3);
  }
}

TEST_CASE("gradient of a duplicated example equals the single example") {
  const GgnnParams p = init_params(small_config(0.01), 9);
  const TrainingExample ex = example_for(five_node_qbf(), 3);
  const GgnnParams g1 = gradients(p, {ex});
  const GgnnParams g2 = gradients(p, {ex, ex});
  CHECK(max_abs_diff(g1, g2) <= 1e-15);
}

TEST_CASE("weight decay contributes exactly 2*wd*theta") {
  const TrainingExample ex = example_for(five_node_qbf(), 4);
  GgnnParams p0 = init_params(small_config(0.0), 5);
  GgnnParams pw = p0;
  pw.config.weight_decay = 0.02;
  const GgnnParams g0 = gradients(p0, {ex});
  const GgnnParams gw = gradients(pw, {ex});

  std::vector<const GgnnParams::Mat*> base, with, theta;
  g0.for_each_tensor([&](const char*, const GgnnParams::Mat& m) { base.push_back(&m); });
  gw.for_each_tensor([&](const char*, const GgnnParams::Mat& m) { with.push_back(&m); });
  p0.for_each_tensor([&](const char*, const GgnnParams::Mat& m) { theta.push_back(&m); });
  for (std::size_t i = 0; i < base.size(); ++i) {
    const double diff =
        (*with[i] - *base[i] - 0.04 * (*theta[i])).cwiseAbs().maxCoeff();
    CHECK(diff <= 1e-12);
  }
}

TEST_CASE("optimizer steps") {
  const TrainingExample ex = example_for(five_node_qbf(), 6);

  SUBCASE("zero gradient leaves parameters unchanged") {
    for (const auto mode : {GgnnConfig::Optimizer::PlainGradient,
                            GgnnConfig::Optimizer::AdaptiveMoment}) {
      GgnnConfig cfg = small_config();
      cfg.optimizer = mode;
      GgnnParams p = init_params(cfg, 7);
      const GgnnParams before = p;
      OptimState state;
      optimizer_step(p, zero_like(p), state);
      CHECK(max_abs_diff(p, before) == 0.0);
    }
  }

  SUBCASE("plain step is theta minus lr times gradient") {
    GgnnConfig cfg = small_config();
    cfg.optimizer = GgnnConfig::Optimizer::PlainGradient;
    cfg.learning_rate = 0.1;
    GgnnParams p = init_params(cfg, 8);
    p.for_each_tensor([](const char*, GgnnParams::Mat& m) { m.setOnes(); });
    GgnnParams g = zero_like(p);
    g.for_each_tensor([](const char*, GgnnParams::Mat& m) {
      m.setConstant(0.5);
    });
    OptimState state;
    optimizer_step(p, g, state);
    p.for_each_tensor([&](const char*, const GgnnParams::Mat& m) {
      CHECK(m.minCoeff() == doctest::Approx(0.95));
      CHECK(m.maxCoeff() == doctest::Approx(0.95));
    });
  }

  SUBCASE("adaptive first step matches the closed form") {
    // m_hat = g, v_hat = g^2, so theta -= lr * g / (|g| + eps).
    GgnnConfig cfg = small_config();
    cfg.optimizer = GgnnConfig::Optimizer::AdaptiveMoment;
    cfg.learning_rate = 0.1;
    GgnnParams p = init_params(cfg, 8);
    p.for_each_tensor([](const char*, GgnnParams::Mat& m) { m.setOnes(); });
    GgnnParams g = zero_like(p);
    g.for_each_tensor([](const char*, GgnnParams::Mat& m) {
      m.setConstant(0.5);
    });
    OptimState state;
    optimizer_step(p, g, state);
    const double expected = 1.0 - 0.1 * 0.5 / (0.5 + 1e-8);
    p.for_each_tensor([&](const char*, const GgnnParams::Mat& m) {
      CHECK(m.minCoeff() == doctest::Approx(expected).epsilon(1e-12));
      CHECK(m.maxCoeff() == doctest::Approx(expected).epsilon(1e-12));
    });
    CHECK(state.step == 1);
  }

  SUBCASE("shape mismatch is rejected") {
    GgnnParams p = init_params(small_config(), 1);
    GgnnConfig other = small_config();
    other.hidden_size = 16;
    other.mlp_hidden = 16;
    const GgnnParams g = init_params(other, 1);
    OptimState state;
    CHECK_THROWS_AS(optimizer_step(p, g, state), std::invalid_argument);
  }
}

TEST_CASE("a small step on a fixed batch rarely increases its loss") {
  int improved = 0;
  const int trials = 100;
  for (int trial = 0; trial < trials; ++trial) {
    GgnnConfig cfg = small_config(1e-4);
    cfg.learning_rate = 1e-4;
    GgnnParams p = init_params(cfg, static_cast<std::uint64_t>(trial));
    const Qbf q = random_qbf(3, 2, static_cast<std::uint64_t>(trial), true);
    std::vector<TrainingExample> batch{
        example_for(q, static_cast<std::uint64_t>(trial) + 1000)};
    double before = 0.0;
    const GgnnParams g = gradients(p, batch, &before);
    OptimState state;
    optimizer_step(p, g, state);
    double after = 0.0;
    gradients(p, batch, &after);
    if (after <= before + 1e-12) ++improved;
  }
  CHECK(improved >= 95);
}

TEST_CASE("forward and gradients are deterministic") {
  const GgnnParams p = init_params(small_config(0.01), 11);
  const TrainingExample ex = example_for(five_node_qbf(), 12);
  const ForwardOut a = forward_full(p, ex.graph);
  const ForwardOut b = forward_full(p, ex.graph);
  CHECK(a.logits == b.logits);
  CHECK(a.value == b.value);
  CHECK(max_abs_diff(gradients(p, {ex}), gradients(p, {ex})) == 0.0);
}

TEST_CASE("checkpoint round trip is bit exact") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "qzero_ckpt_test";
  fs::create_directories(dir);
  const fs::path path = dir / "net.bin";

  GgnnConfig cfg = small_config(0.01);
  GgnnParams p = init_params(cfg, 13);
  // Exercise a real optimizer state.
  const TrainingExample ex = example_for(five_node_qbf(), 14);
  OptimState state;
  optimizer_step(p, gradients(p, {ex}), state);

  save_checkpoint(path, p, &state);
  const Checkpoint loaded = load_checkpoint(path);
  CHECK(max_abs_diff(loaded.params, p) == 0.0);
  CHECK(loaded.params.config == p.config);
  REQUIRE(loaded.opt.has_value());
  CHECK(loaded.opt->step == 1);
  CHECK(max_abs_diff(loaded.opt->m, state.m) == 0.0);
  CHECK(max_abs_diff(loaded.opt->v, state.v) == 0.0);

  // Forward output identical before and after the round trip.
  const Qbf q = fig1();
  const PolicyValue before = forward(p, encode(q));
  const PolicyValue after = forward(loaded.params, encode(q));
  CHECK(before.policy == after.policy);
  CHECK(before.value == after.value);

  SUBCASE("corrupted version is rejected") {
    auto bytes = [&] {
      std::ifstream in(path, std::ios::binary);
      return std::string(std::istreambuf_iterator<char>(in), {});
    }();
    bytes[4] = 99;  // version field
    const fs::path bad = dir / "bad_version.bin";
    std::ofstream(bad, std::ios::binary) << bytes;
    CHECK_THROWS_AS(load_checkpoint(bad), CheckpointError);

    bytes[0] = 'X';  // magic
    const fs::path worse = dir / "bad_magic.bin";
    std::ofstream(worse, std::ios::binary) << bytes;
    CHECK_THROWS_AS(load_checkpoint(worse), CheckpointError);
  }

  SUBCASE("truncated file is rejected") {
    auto bytes = [&] {
      std::ifstream in(path, std::ios::binary);
      return std::string(std::istreambuf_iterator<char>(in), {});
    }();
    const fs::path cut = dir / "truncated.bin";
    std::ofstream(cut, std::ios::binary) << bytes.substr(0, bytes.size() / 2);
    CHECK_THROWS_AS(load_checkpoint(cut), CheckpointError);
  }
}

TEST_CASE("fig1 forward regression fixture") {
  // Frozen from the first gradient-verified build (seed-0 params, H=8, T=2).
  GgnnConfig cfg = small_config();
  const GgnnParams p = init_params(cfg, 0);
  const PolicyValue pv = forward(p, encode(fig1()));
  CHECK(pv.policy[0] == doctest::Approx(0.76581015616626358).epsilon(1e-12));
  CHECK(pv.policy[1] == doctest::Approx(0.23418984383373648).epsilon(1e-12));
  CHECK(pv.value == doctest::Approx(-0.78082818071601623).epsilon(1e-12));
}
