#include "xvoice/field_net.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "xvoice/errors.hpp"

namespace xvoice {

namespace {

Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, double scale, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, scale);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = n(rng);
  return m;
}

struct Slot {
  int token;
  LanguageId lid;
};

Slot effective_slot(const ConditionBundle& c, int s, Branch b) {
  if (b == Branch::unconditional) return {Vocabulary::kFiller, LanguageId::none()};
  return {c.z[static_cast<std::size_t>(s)], c.l[static_cast<std::size_t>(s)]};
}

bool filmed(const FieldNet& net, const Slot& s) { return net.lid_injection && !s.lid.is_none(); }

Eigen::VectorXd embed_slot(const FieldNet& net, const Slot& s) {
  const Eigen::VectorXd e = net.params.token_embedding.row(s.token).transpose();
  if (!filmed(net, s)) return e;
  return film_modulate(e, s.lid, net.params.injection);
}

// Layout of one network input row.
struct Columns {
  Eigen::Index x, cond, audio_mean, text, text_mean, time, width;
  explicit Columns(const ModelDims& d)
      : x(0),
        cond(d.feature_dim),
        audio_mean(2 * d.feature_dim),
        text(3 * d.feature_dim),
        text_mean(3 * d.feature_dim + d.text_dim),
        time(3 * d.feature_dim + 2 * d.text_dim),
        width(d.input_width()) {}
};

// Everything the backward pass needs from one forward evaluation.
struct Activations {
  std::vector<int> rows;
  std::vector<int> row_slots;
  LanguageId time_lid;
  Eigen::VectorXd e_t;
  Eigen::VectorXd a_time;
  Eigen::MatrixXd X, A1, S1, A2, S2, Y;
};

void check_condition(const FieldNet& net, const ConditionBundle& c) {
  const auto tau = c.frame_slots.size();
  if (c.z.size() != tau || c.l.size() != tau) {
    throw ShapeMismatch("condition: z (" + std::to_string(c.z.size()) + ") and l (" + std::to_string(c.l.size()) +
                        ") must match the frame count " + std::to_string(tau));
  }
  if (c.prompt_audio.cols() != net.dims.feature_dim) {
    throw ShapeMismatch("condition: prompt audio has D=" + std::to_string(c.prompt_audio.cols()) + ", network expects " +
                        std::to_string(net.dims.feature_dim));
  }
  if (c.prompt_text_length < 1 || c.prompt_text_length > static_cast<int>(tau)) {
    throw std::invalid_argument("condition: prompt text length out of range");
  }
  for (int id : c.z) {
    if (id < 0 || id >= net.params.token_embedding.rows()) {
      throw std::out_of_range("condition: token id " + std::to_string(id) + " outside the embedding table");
    }
  }
}

Activations evaluate(const FieldNet& net, const Eigen::MatrixXd& x_rows, std::span<const int> rows, double t,
                     const ConditionBundle& c, Branch branch) {
  check_condition(net, c);
  const ModelDims& d = net.dims;
  if (x_rows.rows() != static_cast<Eigen::Index>(rows.size()) || x_rows.cols() != d.feature_dim) {
    throw ShapeMismatch("forward: x_t rows " + std::to_string(x_rows.rows()) + "x" + std::to_string(x_rows.cols()) +
                        " for " + std::to_string(rows.size()) + " frames of D=" + std::to_string(d.feature_dim));
  }
  const auto& inj = net.params.injection;
  const Columns col(d);
  const auto n = static_cast<Eigen::Index>(rows.size());

  Activations act;
  act.rows.assign(rows.begin(), rows.end());
  act.row_slots.resize(rows.size());

  // Text: prompt-side summary plus the slot aligned to each row.
  Eigen::VectorXd text_mean = Eigen::VectorXd::Zero(d.text_dim);
  for (int s = 0; s < c.prompt_text_length; ++s) text_mean += embed_slot(net, effective_slot(c, s, branch));
  text_mean /= static_cast<double>(c.prompt_text_length);

  // Audio: only the full branch sees the prompt frames.
  const bool audio = branch == Branch::full;
  Eigen::VectorXd audio_mean = Eigen::VectorXd::Zero(d.feature_dim);
  if (audio && c.prompt_frames() > 0) audio_mean = c.prompt_audio.colwise().mean().transpose();

  // Time: dropped language falls back to the UNKNOWN row.
  act.time_lid = branch == Branch::unconditional ? LanguageId::unknown() : c.time_lid;
  act.e_t = time_embedding(t, d.time_dim);
  Eigen::VectorXd h;
  if (net.lid_injection) {
    if (act.time_lid.is_none()) throw std::invalid_argument("time-level injection needs a language");
    h = inject_time(act.e_t, act.time_lid, inj);
    act.a_time = (inj.time_weight_time * act.e_t + inj.time_weight_lid * inj.lid_embedding.row(act.time_lid.index).transpose()) +
                 inj.time_bias;
  } else {
    h = project_time(act.e_t, inj);
    act.a_time = inj.time_weight_time * act.e_t + inj.time_bias;
  }

  act.X.resize(n, col.width);
  std::vector<Eigen::VectorXd> slot_cache(c.frame_slots.size());
  for (Eigen::Index r = 0; r < n; ++r) {
    const int u = rows[static_cast<std::size_t>(r)];
    if (u < 0 || u >= c.total_frames()) throw std::out_of_range("forward: frame index " + std::to_string(u));
    const int s = c.frame_slots[static_cast<std::size_t>(u)];
    act.row_slots[static_cast<std::size_t>(r)] = s;
    auto& e = slot_cache[static_cast<std::size_t>(s)];
    if (e.size() == 0) e = embed_slot(net, effective_slot(c, s, branch));

    act.X.row(r).segment(col.x, d.feature_dim) = x_rows.row(r);
    if (audio && u < c.prompt_frames()) {
      act.X.row(r).segment(col.cond, d.feature_dim) = c.prompt_audio.row(u);
    } else {
      act.X.row(r).segment(col.cond, d.feature_dim).setZero();
    }
    act.X.row(r).segment(col.audio_mean, d.feature_dim) = audio_mean.transpose();
    act.X.row(r).segment(col.text, d.text_dim) = e.transpose();
    act.X.row(r).segment(col.text_mean, d.text_dim) = text_mean.transpose();
    act.X.row(r).segment(col.time, d.time_hidden) = h.transpose();
  }

  const auto& p = net.params;
  act.A1 = (act.X * p.w1.transpose()).rowwise() + p.b1.transpose();
  act.S1 = act.A1.unaryExpr([](double v) { return silu(v); });
  act.A2 = (act.S1 * p.w2.transpose()).rowwise() + p.b2.transpose();
  act.S2 = act.A2.unaryExpr([](double v) { return silu(v); });
  act.Y = (act.S2 * p.w_out.transpose()).rowwise() + p.b_out.transpose();
  return act;
}

// Accumulates d(loss)/d(params) given d(loss)/dY for one evaluation.
void backpropagate(const FieldNet& net, const ConditionBundle& c, Branch branch, const Activations& act,
                   const Eigen::MatrixXd& dY, FieldNetParams& g) {
  const ModelDims& d = net.dims;
  const auto& p = net.params;
  const auto& inj = p.injection;
  const Columns col(d);

  g.w_out.noalias() += dY.transpose() * act.S2;
  g.b_out += dY.colwise().sum().transpose();
  Eigen::MatrixXd dA2 = (dY * p.w_out).cwiseProduct(act.A2.unaryExpr([](double v) { return silu_grad(v); }));
  g.w2.noalias() += dA2.transpose() * act.S1;
  g.b2 += dA2.colwise().sum().transpose();
  Eigen::MatrixXd dA1 = (dA2 * p.w2).cwiseProduct(act.A1.unaryExpr([](double v) { return silu_grad(v); }));
  g.w1.noalias() += dA1.transpose() * act.X;
  g.b1 += dA1.colwise().sum().transpose();
  const Eigen::MatrixXd dX = dA1 * p.w1;

  // Time-level injection.
  const Eigen::VectorXd dh = dX.middleCols(col.time, d.time_hidden).colwise().sum().transpose();
  const Eigen::VectorXd da = dh.cwiseProduct(act.a_time.unaryExpr([](double v) { return silu_grad(v); }));
  g.injection.time_weight_time.noalias() += da * act.e_t.transpose();
  g.injection.time_bias += da;
  if (net.lid_injection) {
    const Eigen::VectorXd e_l = inj.lid_embedding.row(act.time_lid.index).transpose();
    g.injection.time_weight_lid.noalias() += da * e_l.transpose();
    g.injection.lid_embedding.row(act.time_lid.index) += (inj.time_weight_lid.transpose() * da).transpose();
  }

  // Text: per-slot gradients of the (possibly FiLM-modulated) embeddings.
  Eigen::MatrixXd d_slot = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(c.frame_slots.size()), d.text_dim);
  for (Eigen::Index r = 0; r < dX.rows(); ++r) {
    d_slot.row(act.row_slots[static_cast<std::size_t>(r)]) += dX.row(r).segment(col.text, d.text_dim);
  }
  const Eigen::RowVectorXd d_mean =
      dX.middleCols(col.text_mean, d.text_dim).colwise().sum() / static_cast<double>(c.prompt_text_length);
  for (int s = 0; s < c.prompt_text_length; ++s) d_slot.row(s) += d_mean;

  for (Eigen::Index s = 0; s < d_slot.rows(); ++s) {
    if (d_slot.row(s).isZero(0.0)) continue;
    const Slot slot = effective_slot(c, static_cast<int>(s), branch);
    const Eigen::VectorXd ds = d_slot.row(s).transpose();
    if (!filmed(net, slot)) {
      g.token_embedding.row(slot.token) += ds.transpose();
      continue;
    }
    const Eigen::VectorXd e = p.token_embedding.row(slot.token).transpose();
    const Eigen::VectorXd e_l = inj.lid_embedding.row(slot.lid.index).transpose();
    const Eigen::VectorXd gamma = inj.film_gamma_weight * e_l + inj.film_gamma_bias;
    const Eigen::VectorXd d_gamma = ds.cwiseProduct(e);
    g.token_embedding.row(slot.token) += ds.cwiseProduct(gamma).transpose();
    g.injection.film_gamma_weight.noalias() += d_gamma * e_l.transpose();
    g.injection.film_gamma_bias += d_gamma;
    g.injection.film_beta_weight.noalias() += ds * e_l.transpose();
    g.injection.film_beta_bias += ds;
    g.injection.lid_embedding.row(slot.lid.index) +=
        (inj.film_gamma_weight.transpose() * d_gamma + inj.film_beta_weight.transpose() * ds).transpose();
  }
}

}  // namespace

FieldNetParams zeros_like(const FieldNetParams& p) {
  FieldNetParams z = p;
  for_each_tensor([](const char*, auto& t) { t.setZero(); }, z);
  return z;
}

std::size_t parameter_count(const FieldNetParams& p) {
  std::size_t n = 0;
  for_each_tensor([&n](const char*, const auto& t) { n += static_cast<std::size_t>(t.size()); }, p);
  return n;
}

FieldNet init_field_net(const ModelDims& dims, int vocab_size, int num_languages, bool lid_injection,
                        std::uint64_t seed) {
  if (vocab_size <= Vocabulary::kNumReserved) throw std::invalid_argument("vocabulary has no regular tokens");
  if (num_languages < 2) throw std::invalid_argument("LID table needs UNKNOWN plus at least one language");
  std::mt19937_64 rng(seed);
  FieldNet net;
  net.dims = dims;
  net.lid_injection = lid_injection;
  auto& p = net.params;
  p.token_embedding = gaussian(vocab_size, dims.text_dim, 1.0, rng);
  p.injection = init_injection(dims, num_languages, rng);
  const int in = dims.input_width();
  p.w1 = gaussian(dims.hidden, in, 1.0 / std::sqrt(double(in)), rng);
  p.b1 = Eigen::VectorXd::Zero(dims.hidden);
  p.w2 = gaussian(dims.hidden, dims.hidden, 1.0 / std::sqrt(double(dims.hidden)), rng);
  p.b2 = Eigen::VectorXd::Zero(dims.hidden);
  p.w_out = gaussian(dims.feature_dim, dims.hidden, 1.0 / std::sqrt(double(dims.hidden)), rng);
  p.b_out = Eigen::VectorXd::Zero(dims.feature_dim);
  return net;
}

ConditionBundle make_condition(const InfillExample& ex) {
  ConditionBundle c;
  c.prompt_audio = ex.x1.frames.topRows(ex.prompt_frames);
  c.z = ex.z;
  c.l = ex.l;
  c.time_lid = ex.time_lid;
  c.prompt_text_length = ex.prompt_text_length;
  c.frame_slots = align_text_to_frames(ex);
  return c;
}

Eigen::MatrixXd forward_rows(const FieldNet& net, const Eigen::MatrixXd& x_rows, std::span<const int> rows, double t,
                             const ConditionBundle& cond, Branch branch) {
  return evaluate(net, x_rows, rows, t, cond, branch).Y;
}

FeatureSequence forward(const FieldNet& net, const FeatureSequence& x_t, double t, const ConditionBundle& cond,
                        Branch branch) {
  if (x_t.num_frames() != cond.total_frames()) {
    throw ShapeMismatch("forward: x_t has " + std::to_string(x_t.num_frames()) + " frames, condition expects " +
                        std::to_string(cond.total_frames()));
  }
  std::vector<int> rows(static_cast<std::size_t>(x_t.num_frames()));
  std::iota(rows.begin(), rows.end(), 0);
  const Eigen::MatrixXd x = x_t.frames;
  return FeatureSequence(forward_rows(net, x, rows, t, cond, branch), x_t.frame_rate_hz);
}

TrainingItem make_training_item(InfillExample example, Eigen::MatrixXd noise, double t, Branch branch) {
  if (noise.rows() != example.target_frames() || noise.cols() != example.x1.dim()) {
    throw ShapeMismatch("training item: noise must cover the target frames");
  }
  TrainingItem item;
  item.cond = make_condition(example);
  item.example = std::move(example);
  item.noise = std::move(noise);
  item.t = t;
  item.branch = branch;
  return item;
}

namespace {

// Loss rows are the target frames the mask selects; noise row u - tau1 holds
// x0 for frame u. A batch without any selected frame has zero loss and
// gradient.
double run_batch(const FieldNet& net, std::span<const TrainingItem> batch, FieldNetParams* grad) {
  std::vector<std::vector<int>> rows(batch.size());
  Eigen::Index entries = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& ex = batch[i].example;
    if (static_cast<int>(ex.mask.size()) != ex.total_frames()) throw ShapeMismatch("training item: mask length");
    for (int u = ex.prompt_frames; u < ex.total_frames(); ++u) {
      if (ex.mask[static_cast<std::size_t>(u)] == 1) rows[i].push_back(u);
    }
    entries += static_cast<Eigen::Index>(rows[i].size()) * net.dims.feature_dim;
  }
  if (entries == 0) return 0.0;

  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (rows[i].empty()) continue;
    const auto& item = batch[i];
    const auto n = static_cast<Eigen::Index>(rows[i].size());
    Eigen::MatrixXd x0(n, net.dims.feature_dim), x1(n, net.dims.feature_dim);
    for (Eigen::Index r = 0; r < n; ++r) {
      const int u = rows[i][static_cast<std::size_t>(r)];
      x0.row(r) = item.noise.row(u - item.example.prompt_frames);
      x1.row(r) = item.example.x1.frames.row(u);
    }
    const Eigen::MatrixXd x_t = (1.0 - item.t) * x0 + item.t * x1;
    const Activations act = evaluate(net, x_t, rows[i], item.t, item.cond, item.branch);
    const Eigen::MatrixXd residual = act.Y - (x1 - x0);
    total += residual.squaredNorm();
    if (grad) backpropagate(net, item.cond, item.branch, act, (2.0 / static_cast<double>(entries)) * residual, *grad);
  }
  return total / static_cast<double>(entries);
}

}  // namespace

LossAndGradient loss_and_gradient(const FieldNet& net, std::span<const TrainingItem> batch) {
  LossAndGradient out;
  out.gradient = zeros_like(net.params);
  out.loss = run_batch(net, batch, &out.gradient);
  for_each_tensor(
      [](const char* name, const auto& t) {
        if (!t.allFinite()) throw NumericError(std::string("non-finite gradient in ") + name, 0);
      },
      out.gradient);
  return out;
}

double batch_loss(const FieldNet& net, std::span<const TrainingItem> batch) { return run_batch(net, batch, nullptr); }

}  // namespace xvoice
