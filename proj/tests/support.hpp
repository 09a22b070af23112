#pragma once

#include <random>
#include <string>
#include <vector>

#include "xvoice/field_net.hpp"
#include "xvoice/infill.hpp"
#include "xvoice/toy_data.hpp"
#include "xvoice/training.hpp"

namespace xvt {

inline Eigen::MatrixXd randn(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = n(rng);
  return m;
}

inline xvoice::FeatureSequence rand_seq(Eigen::Index t, Eigen::Index d, std::mt19937_64& rng) {
  return xvoice::FeatureSequence(randn(t, d, rng), 50.0);
}

struct MiniWorld {
  xvoice::Vocabulary vocab;
  xvoice::LanguageTable langs{std::vector<std::string>{"aa", "bb"}};
  MiniWorld() {
    for (const char* u : {"p", "t", "k", "a", "i", "u"}) vocab.add({u, xvoice::TokenKind::articulatory});
    vocab.add({"ˈ", xvoice::TokenKind::stress});
    vocab.add({"ː", xvoice::TokenKind::modifier});
  }
  std::vector<int> random_tokens(int n, std::mt19937_64& rng) const {
    std::uniform_int_distribution<int> pick(xvoice::Vocabulary::kNumReserved, vocab.size() - 1);
    std::vector<int> out(static_cast<std::size_t>(n));
    for (auto& id : out) id = pick(rng);
    return out;
  }
};

// Small network with every LID path perturbed away from its no-op init.
inline xvoice::FieldNet perturbed_net(const MiniWorld& w, std::uint64_t seed, bool lid = true) {
  xvoice::ModelDims dims;
  dims.feature_dim = 3;
  dims.time_dim = 6;
  dims.lid_dim = 4;
  dims.time_hidden = 5;
  dims.text_dim = 6;
  dims.hidden = 7;
  auto net = xvoice::init_field_net(dims, w.vocab.size(), w.langs.size(), lid, seed);
  std::mt19937_64 rng(seed + 1);
  auto& inj = net.params.injection;
  inj.time_weight_lid = randn(inj.time_weight_lid.rows(), inj.time_weight_lid.cols(), rng, 0.5);
  inj.film_gamma_weight = randn(inj.film_gamma_weight.rows(), inj.film_gamma_weight.cols(), rng, 0.3);
  inj.film_beta_weight = randn(inj.film_beta_weight.rows(), inj.film_beta_weight.cols(), rng, 0.3);
  inj.film_gamma_bias.array() += randn(inj.film_gamma_bias.size(), 1, rng, 0.2).array();
  inj.film_beta_bias = randn(inj.film_beta_bias.size(), 1, rng, 0.2);
  net.params.b1 = randn(net.params.b1.size(), 1, rng, 0.1);
  net.params.b2 = randn(net.params.b2.size(), 1, rng, 0.1);
  return net;
}

// Mixed batch: Stage-1 and Stage-2 layouts, all three branches.
inline std::vector<xvoice::TrainingItem> mixed_batch(const MiniWorld& w, std::mt19937_64& rng, int dim) {
  using namespace xvoice;
  std::vector<TrainingItem> batch;
  const LanguageId a = w.langs.lookup("aa");
  const LanguageId b = w.langs.lookup("bb");
  const Branch branches[] = {Branch::full, Branch::text_only, Branch::unconditional};
  for (int i = 0; i < 3; ++i) {
    const int m1 = 2 + i, m2 = 3;
    Segment prompt{rand_seq(4 * m1, dim, rng), w.random_tokens(m1, rng), a};
    Segment target{rand_seq(4 * m2, dim, rng), w.random_tokens(m2, rng), i == 1 ? a : b};
    auto ex = build_stage1_example(w.vocab, prompt, target);
    batch.push_back(make_training_item(ex, randn(ex.target_frames(), dim, rng), 0.1 + 0.3 * i, branches[i]));
  }
  for (int i = 0; i < 2; ++i) {
    auto toks = w.random_tokens(3, rng);
    auto ex = build_stage2_example(w.vocab, rand_seq(7 + i, dim, rng), rand_seq(12, dim, rng), toks, b);
    batch.push_back(make_training_item(ex, randn(ex.target_frames(), dim, rng), 0.55, branches[i]));
  }
  return batch;
}

inline std::vector<xvoice::TrainingUtterance> training_set(const std::vector<xvoice::ToyUtterance>& utts,
                                                           const xvoice::ToyWorld& world) {
  std::vector<xvoice::TrainingUtterance> out;
  for (const auto& u : utts) {
    out.push_back({u.record.id, u.record.speaker, world.languages.lookup(u.record.lang),
                   xvoice::encode(world.vocab, u.tokens), u.features});
  }
  return out;
}

struct ParamRef {
  std::string name;
  Eigen::Index index;
};

inline double& param_at(xvoice::FieldNetParams& p, const ParamRef& ref) {
  double* out = nullptr;
  xvoice::for_each_tensor(
      [&](const char* name, auto& t) {
        if (ref.name == name) out = t.data() + ref.index;
      },
      p);
  return *out;
}

}  // namespace xvt
