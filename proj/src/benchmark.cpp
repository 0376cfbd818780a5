#include "rewardloop/benchmark.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <sstream>

#include "rewardloop/random.hpp"

namespace rewardloop {

void BenchmarkSpec::validate() const {
  if (dim < 1) throw ParameterError("benchmark: dim must be >= 1");
  if (num_base_classes < 1) throw ParameterError("benchmark: need at least one base class");
  if (num_sessions < 0) throw ParameterError("benchmark: num_sessions must be >= 0");
  if (way < 1) throw ParameterError("benchmark: way must be >= 1");
  if (shot < 1) throw ParameterError("benchmark: shot must be >= 1");
  if (samples_per_base_class < 2) throw ParameterError("benchmark: need >= 2 samples per base class");
  if (eval_per_class < 1) throw ParameterError("benchmark: eval_per_class must be >= 1");
  if (!(mean_norm > 0.0) || !(within_std > 0.0) || var_spread < 0.0) {
    throw ParameterError("benchmark: mean_norm, within_std must be > 0 and var_spread >= 0");
  }
  if (num_classes() > dim) {
    throw ParameterError("benchmark: the class geometry needs num_classes <= dim");
  }
  if (!(base_cos > -1.0 && base_cos < 1.0) || !(confusable_cos > -1.0 && confusable_cos < 1.0)) {
    throw ParameterError("benchmark: cosines must be in (-1, 1)");
  }
  for (const auto& [a, b] : confusable_pairs) {
    if (a < 0 || b < 0 || a >= num_classes() || b >= num_classes() || a == b) {
      throw ParameterError("benchmark: confusable pair references an invalid class");
    }
  }
}

namespace {

FeatureVec normal_vec(Eigen::Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  FeatureVec v(d);
  for (Eigen::Index j = 0; j < d; ++j) v(j) = normal(rng);
  return v;
}

FeatureVec draw(const FeatureVec& mean, const FeatureVec& var, std::mt19937_64& rng) {
  return mean + (var.cwiseSqrt().array() * normal_vec(mean.size(), rng).array()).matrix();
}

}  // namespace

Dataset make_benchmark(const BenchmarkSpec& spec) {
  spec.validate();
  const int n_cls = spec.num_classes();
  const Eigen::Index d = spec.dim;

  Dataset data;
  data.spec = spec;

  // Mean directions: rows of a Cholesky factor of the requested Gram matrix, rotated.
  Eigen::MatrixXd gram = Eigen::MatrixXd::Constant(n_cls, n_cls, spec.base_cos);
  gram.diagonal().setOnes();
  for (const auto& [a, b] : spec.confusable_pairs) gram(a, b) = gram(b, a) = spec.confusable_cos;
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) {
    throw ParameterError("benchmark: requested class cosines are not realizable (Gram not PD)");
  }
  data.mean_cosines = gram;
  const Eigen::MatrixXd chol = llt.matrixL();  // n_cls x n_cls, rows are unit vectors

  std::mt19937_64 geo = make_rng(spec.seed, {10});
  Eigen::MatrixXd gauss(d, d);
  for (Eigen::Index j = 0; j < d; ++j) gauss.col(j) = normal_vec(d, geo);
  const Eigen::MatrixXd rotation = Eigen::HouseholderQR<Eigen::MatrixXd>(gauss).householderQ();

  std::normal_distribution<double> normal(0.0, 1.0);
  for (int c = 0; c < n_cls; ++c) {
    FeatureVec padded = FeatureVec::Zero(d);
    padded.head(n_cls) = chol.row(c).transpose();
    data.true_means.push_back(spec.mean_norm * (rotation * padded));
    FeatureVec var(d);
    for (Eigen::Index j = 0; j < d; ++j) {
      var(j) = spec.within_std * spec.within_std * std::exp(spec.var_spread * normal(geo));
    }
    data.true_vars.push_back(var);
  }

  // Stand-in generator.
  std::mt19937_64 gen = make_rng(spec.seed, {11});
  for (int c = 0; c < n_cls; ++c) {
    int nn = -1;
    for (int o = 0; o < n_cls; ++o) {
      if (o != c && (nn < 0 || gram(c, o) > gram(c, nn))) nn = o;
    }
    const FeatureVec spurious = data.true_means[c] + spec.spurious_pull * (data.true_means[nn] - data.true_means[c]);
    const FeatureVec shift_dir = normal_vec(d, gen);
    data.prior.set_class(c, miscalibrated_components(data.true_means[c], data.true_vars[c], shift_dir,
                                                     spurious, spec.miscalibration));
  }

  // Train splits.
  std::mt19937_64 samp = make_rng(spec.seed, {12});
  SessionSplit base;
  base.session = 0;
  for (int c = 0; c < spec.num_base_classes; ++c) {
    base.classes.push_back(c);
    for (int i = 0; i < spec.samples_per_base_class; ++i) {
      base.train.push_back({draw(data.true_means[c], data.true_vars[c], samp), c});
    }
  }
  data.sessions.push_back(std::move(base));
  for (int s = 1; s <= spec.num_sessions; ++s) {
    SessionSplit split;
    split.session = s;
    for (int k = 0; k < spec.way; ++k) {
      const int c = spec.num_base_classes + (s - 1) * spec.way + k;
      split.classes.push_back(c);
      for (int i = 0; i < spec.shot; ++i) {
        split.train.push_back({draw(data.true_means[c], data.true_vars[c], samp), c});
      }
    }
    data.sessions.push_back(std::move(split));
  }

  std::mt19937_64 ev = make_rng(spec.seed, {13});
  for (int c = 0; c < n_cls; ++c) {
    for (int i = 0; i < spec.eval_per_class; ++i) {
      data.eval.push_back({draw(data.true_means[c], data.true_vars[c], ev), c});
    }
  }
  return data;
}

std::vector<LabeledFeature> eval_subset(const Dataset& data, const std::vector<int>& classes) {
  std::vector<LabeledFeature> out;
  for (const auto& item : data.eval) {
    for (int c : classes) {
      if (item.class_id == c) {
        out.push_back(item);
        break;
      }
    }
  }
  return out;
}

namespace {

std::string real_text(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& tok) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (tok.empty() || *end != '\0') throw ParameterError("prior: bad number '" + tok + "'");
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string prior_to_config_text(const GmmPrior& prior) {
  std::string out;
  for (int id : prior.class_ids()) {
    out += "class_" + std::to_string(id) + " = ";
    bool first = true;
    for (const auto& c : prior.components(id)) {
      if (!first) out += ';';
      first = false;
      out += real_text(c.weight) + '|' + real_text(c.var) + '|';
      for (Eigen::Index j = 0; j < c.mean.size(); ++j) out += (j ? "," : "") + real_text(c.mean(j));
    }
    out += '\n';
  }
  return out;
}

std::vector<GaussianComponent> parse_prior_components(const std::string& value) {
  std::vector<GaussianComponent> out;
  for (const auto& comp : split(value, ';')) {
    const auto fields = split(trim(comp), '|');
    if (fields.size() != 3) throw ParameterError("prior: component must be weight|var|mean");
    GaussianComponent g;
    g.weight = parse_double(trim(fields[0]));
    g.var = parse_double(trim(fields[1]));
    const auto coords = split(fields[2], ',');
    g.mean.resize(static_cast<Eigen::Index>(coords.size()));
    for (std::size_t j = 0; j < coords.size(); ++j) g.mean(static_cast<Eigen::Index>(j)) = parse_double(trim(coords[j]));
    out.push_back(std::move(g));
  }
  if (out.empty()) throw ParameterError("prior: no components");
  return out;
}

}  // namespace rewardloop
