#include "rewardloop/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

namespace rewardloop {

Encoder Encoder::affine(Eigen::MatrixXd a, FeatureVec b) {
  if (a.rows() != a.cols() || a.rows() != b.size()) {
    throw DimensionError("affine encoder: A must be d x d and b of length d");
  }
  return Encoder{EncoderMode::kAffine, std::move(a), std::move(b)};
}

ClassifierState::ClassifierState(Eigen::Index dim, double logit_scale, Encoder encoder)
    : dim_(dim), scale_(logit_scale), encoder_(std::move(encoder)) {
  if (dim < 1) throw ParameterError("classifier: dimension must be >= 1");
  if (!(logit_scale > 0.0)) throw ParameterError("classifier: logit scale must be > 0");
  if (encoder_.mode == EncoderMode::kAffine && encoder_.a.rows() != dim) {
    throw DimensionError("classifier: encoder dimension differs from feature dimension");
  }
}

int ClassifierState::index_of(int class_id) const {
  auto it = index_.find(class_id);
  if (it == index_.end()) throw ParameterError("classifier: unknown class " + std::to_string(class_id));
  return it->second;
}

const Prototype& ClassifierState::prototype(int class_id) const {
  return prototypes_[static_cast<std::size_t>(index_of(class_id))];
}

void ClassifierState::set_prototype(int class_id, FeatureVec mu) {
  if (mu.size() != dim_) throw DimensionError("classifier: prototype dimension mismatch");
  require_finite(mu);
  if (!(mu.norm() > 0.0)) throw DegenerateInputError("classifier: prototype has zero norm");
  auto it = index_.find(class_id);
  if (it != index_.end()) {
    prototypes_[static_cast<std::size_t>(it->second)].mu = std::move(mu);
    return;
  }
  index_[class_id] = static_cast<int>(prototypes_.size());
  prototypes_.push_back({class_id, std::move(mu)});
}

FeatureVec ClassifierState::encode(const FeatureVec& x) const {
  if (x.size() != dim_) throw DimensionError("classifier: input dimension mismatch");
  if (encoder_.mode == EncoderMode::kIdentity) return x;
  return encoder_.a * x + encoder_.b;
}

FeatureVec encode(const ClassifierState& state, const FeatureVec& x) { return state.encode(x); }

ClassifierState init_prototypes(ClassifierState state,
                                const std::map<int, std::vector<FeatureVec>>& shots) {
  for (const auto& [class_id, xs] : shots) {
    if (xs.empty()) {
      throw DegenerateInputError("init_prototypes: class " + std::to_string(class_id) + " has no shots");
    }
    FeatureVec mean = FeatureVec::Zero(state.dim());
    for (const auto& x : xs) mean += state.encode(x);
    state.set_prototype(class_id, mean / static_cast<double>(xs.size()));
  }
  return state;
}

Eigen::VectorXd logits_of_feature(const ClassifierState& state, const FeatureVec& feature) {
  const auto& protos = state.prototypes();
  if (protos.empty()) throw ParameterError("classifier: no prototypes");
  Eigen::VectorXd out(static_cast<Eigen::Index>(protos.size()));
  for (std::size_t c = 0; c < protos.size(); ++c) {
    out(static_cast<Eigen::Index>(c)) = state.logit_scale() * cosine_sim(feature, protos[c].mu);
  }
  return out;
}

Eigen::VectorXd logits(const ClassifierState& state, const FeatureVec& x) {
  return logits_of_feature(state, state.encode(x));
}

int ncm_predict(const ClassifierState& state, const FeatureVec& x) {
  const FeatureVec f = state.encode(x);
  const auto& protos = state.prototypes();
  if (protos.empty()) throw ParameterError("classifier: no prototypes");
  int best = protos.front().class_id;
  double best_sim = -2.0;
  for (const auto& p : protos) {
    const double s = cosine_sim(f, p.mu);
    if (s > best_sim || (s == best_sim && p.class_id < best)) {
      best_sim = s;
      best = p.class_id;
    }
  }
  return best;
}

namespace {

/// Row-normalized encoded batch, its norms, and one-hot label indices.
struct Batch {
  Eigen::MatrixXd f;       // M x d, encoded
  Eigen::VectorXd f_norm;  // M
  std::vector<int> label_index;
};

Batch make_batch(const ClassifierState& state, std::span<const LabeledFeature> data) {
  if (data.empty()) throw DegenerateInputError("classifier: empty training or evaluation set");
  const auto m = static_cast<Eigen::Index>(data.size());
  Batch b{Eigen::MatrixXd(m, state.dim()), Eigen::VectorXd(m), {}};
  b.label_index.reserve(data.size());
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& item = data[static_cast<std::size_t>(i)];
    b.f.row(i) = state.encode(item.x).transpose();
    b.f_norm(i) = b.f.row(i).norm();
    if (!(b.f_norm(i) > 0.0)) throw DegenerateInputError("classifier: zero-norm feature");
    b.label_index.push_back(state.index_of(item.class_id));
  }
  return b;
}

struct Forward {
  Eigen::MatrixXd f_hat;   // M x d
  Eigen::MatrixXd mu_hat;  // C x d
  Eigen::VectorXd mu_norm; // C
  Eigen::MatrixXd cos;     // M x C
  Eigen::MatrixXd prob;    // M x C
  double loss = 0.0;
};

Forward forward(const ClassifierState& state, const Batch& b) {
  const auto& protos = state.prototypes();
  const auto c = static_cast<Eigen::Index>(protos.size());
  Forward fw;
  fw.f_hat = b.f_norm.cwiseInverse().asDiagonal() * b.f;
  fw.mu_hat.resize(c, state.dim());
  fw.mu_norm.resize(c);
  for (Eigen::Index k = 0; k < c; ++k) {
    const auto& mu = protos[static_cast<std::size_t>(k)].mu;
    fw.mu_norm(k) = mu.norm();
    fw.mu_hat.row(k) = mu.transpose() / fw.mu_norm(k);
  }
  fw.cos = fw.f_hat * fw.mu_hat.transpose();
  const Eigen::MatrixXd z = state.logit_scale() * fw.cos;
  fw.prob.resize(z.rows(), z.cols());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double mx = z.row(i).maxCoeff();
    const Eigen::RowVectorXd e = (z.row(i).array() - mx).exp();
    const double s = e.sum();
    fw.prob.row(i) = e / s;
    loss -= z(i, b.label_index[static_cast<std::size_t>(i)]) - mx - std::log(s);
  }
  fw.loss = loss / static_cast<double>(z.rows());
  return fw;
}

}  // namespace

double cross_entropy_loss(const ClassifierState& state, std::span<const LabeledFeature> data) {
  return forward(state, make_batch(state, data)).loss;
}

LossGradient cross_entropy_gradient(const ClassifierState& state, std::span<const LabeledFeature> data) {
  const Batch b = make_batch(state, data);
  const Forward fw = forward(state, b);
  const double s = state.logit_scale();
  const auto m = static_cast<double>(b.f.rows());

  // dL/dz = P - Y.
  Eigen::MatrixXd g = fw.prob;
  for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, b.label_index[static_cast<std::size_t>(i)]) -= 1.0;
  g *= s / m;  // now dL/dcos

  // d cos / d mu_c = (f_hat - cos mu_hat_c) / |mu_c|.
  const Eigen::VectorXd gc = (g.cwiseProduct(fw.cos)).colwise().sum().transpose();
  LossGradient out;
  out.loss = fw.loss;
  out.prototypes = fw.mu_norm.cwiseInverse().asDiagonal() *
                   (g.transpose() * fw.f_hat - gc.asDiagonal() * fw.mu_hat);

  if (state.encoder().mode == EncoderMode::kAffine) {
    // d cos / d f = (mu_hat_c - cos f_hat) / |f|.
    const Eigen::VectorXd gf_cos = (g.cwiseProduct(fw.cos)).rowwise().sum();
    const Eigen::MatrixXd grad_f =
        b.f_norm.cwiseInverse().asDiagonal() * (g * fw.mu_hat - gf_cos.asDiagonal() * fw.f_hat);
    Eigen::MatrixXd x(b.f.rows(), state.dim());
    for (Eigen::Index i = 0; i < x.rows(); ++i) x.row(i) = data[static_cast<std::size_t>(i)].x.transpose();
    out.encoder_a = grad_f.transpose() * x;
    out.encoder_b = grad_f.colwise().sum().transpose();
  }
  return out;
}

TrainResult train_epochs(ClassifierState state, std::span<const LabeledFeature> data,
                         const TrainOptions& opts) {
  if (data.empty()) throw DegenerateInputError("train: empty data");
  if (opts.epochs < 0) throw ParameterError("train: epochs must be >= 0");
  if (opts.lr < 0.0) throw ParameterError("train: learning rate must be >= 0");

  std::set<int> present;
  for (const auto& item : data) {
    if (!state.has_class(item.class_id)) {
      throw ParameterError("train: label " + std::to_string(item.class_id) + " has no prototype");
    }
    present.insert(item.class_id);
  }

  TrainResult result{state, {}};
  result.loss_curve.reserve(static_cast<std::size_t>(opts.epochs) + 1);
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    const LossGradient grad = cross_entropy_gradient(result.state, data);
    result.loss_curve.push_back(grad.loss);
    if (opts.lr == 0.0) continue;
    const auto& protos = result.state.prototypes();
    std::vector<std::pair<int, FeatureVec>> updates;
    for (std::size_t c = 0; c < protos.size(); ++c) {
      if (!present.count(protos[c].class_id)) continue;
      updates.emplace_back(protos[c].class_id,
                           protos[c].mu - opts.lr * grad.prototypes.row(static_cast<Eigen::Index>(c)).transpose());
    }
    for (auto& [id, mu] : updates) result.state.set_prototype(id, std::move(mu));
    if (result.state.encoder().mode == EncoderMode::kAffine && !result.state.encoder_frozen()) {
      auto& enc = result.state.mutable_encoder();
      enc.a -= opts.lr * grad.encoder_a;
      enc.b -= opts.lr * grad.encoder_b;
    }
  }
  result.loss_curve.push_back(cross_entropy_loss(result.state, data));
  return result;
}

double session_accuracy(const ClassifierState& state, std::span<const LabeledFeature> eval_set) {
  if (eval_set.empty()) throw DegenerateInputError("accuracy: empty evaluation set");
  std::size_t hits = 0;
  for (const auto& item : eval_set) {
    if (!state.has_class(item.class_id)) {
      throw ParameterError("accuracy: evaluation label " + std::to_string(item.class_id) + " is unseen");
    }
    if (ncm_predict(state, item.x) == item.class_id) ++hits;
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(eval_set.size());
}

double average_accuracy(std::span<const double> history) {
  if (history.empty()) throw DegenerateInputError("average accuracy of an empty history");
  return std::accumulate(history.begin(), history.end(), 0.0) / static_cast<double>(history.size());
}

// ----------------------------------------------------------------------------- checkpoint

namespace {

std::string hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

double parse_real(std::istream& in) {
  std::string tok;
  if (!(in >> tok)) throw ParameterError("checkpoint: truncated");
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0') throw ParameterError("checkpoint: bad real '" + tok + "'");
  return v;
}

void expect(std::istream& in, const std::string& word) {
  std::string tok;
  if (!(in >> tok) || tok != word) throw ParameterError("checkpoint: expected '" + word + "'");
}

void write_row(std::ostream& out, const Eigen::RowVectorXd& row) {
  for (Eigen::Index j = 0; j < row.size(); ++j) out << (j ? " " : "") << hex(row(j));
  out << '\n';
}

}  // namespace

void save_checkpoint(const ClassifierState& state, std::ostream& out) {
  out << "rewardloop-classifier 1\n";
  out << "d " << state.dim() << '\n';
  out << "s " << hex(state.logit_scale()) << '\n';
  const bool affine = state.encoder().mode == EncoderMode::kAffine;
  out << "encoder " << (affine ? "affine" : "identity") << ' ' << (state.encoder_frozen() ? 1 : 0) << '\n';
  out << "classes " << state.num_classes();
  for (const auto& p : state.prototypes()) out << ' ' << p.class_id;
  out << '\n';
  for (const auto& p : state.prototypes()) write_row(out, p.mu.transpose());
  if (affine) {
    for (Eigen::Index i = 0; i < state.dim(); ++i) write_row(out, state.encoder().a.row(i));
    write_row(out, state.encoder().b.transpose());
  }
}

ClassifierState load_checkpoint(std::istream& in) {
  expect(in, "rewardloop-classifier");
  int version = 0;
  if (!(in >> version) || version != 1) throw ParameterError("checkpoint: unsupported version");
  expect(in, "d");
  Eigen::Index d = 0;
  if (!(in >> d) || d < 1) throw ParameterError("checkpoint: bad dimension");
  expect(in, "s");
  const double s = parse_real(in);
  expect(in, "encoder");
  std::string mode;
  int frozen = 0;
  if (!(in >> mode >> frozen)) throw ParameterError("checkpoint: bad encoder line");
  expect(in, "classes");
  std::size_t n = 0;
  if (!(in >> n)) throw ParameterError("checkpoint: bad class count");
  std::vector<int> ids(n);
  for (auto& id : ids) {
    if (!(in >> id)) throw ParameterError("checkpoint: bad class id");
  }
  std::vector<FeatureVec> mus(n, FeatureVec(d));
  for (auto& mu : mus) {
    for (Eigen::Index j = 0; j < d; ++j) mu(j) = parse_real(in);
  }
  Encoder enc;
  if (mode == "affine") {
    Eigen::MatrixXd a(d, d);
    FeatureVec b(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      for (Eigen::Index j = 0; j < d; ++j) a(i, j) = parse_real(in);
    }
    for (Eigen::Index j = 0; j < d; ++j) b(j) = parse_real(in);
    enc = Encoder::affine(std::move(a), std::move(b));
  } else if (mode != "identity") {
    throw ParameterError("checkpoint: unknown encoder mode '" + mode + "'");
  }
  ClassifierState state(d, s, std::move(enc));
  state.set_encoder_frozen(frozen != 0);
  for (std::size_t i = 0; i < n; ++i) state.set_prototype(ids[i], mus[i]);
  return state;
}

}  // namespace rewardloop
