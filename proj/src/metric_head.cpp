#include "osd/metric_head.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace osd {
namespace {

using nlohmann::json;

void check_dim(std::span<const double> e, const Prototypes& protos) {
  if (e.size() != protos.num_classes()) {
    throw std::invalid_argument("embedding dimension " + std::to_string(e.size()) +
                                " does not match " +
                                std::to_string(protos.num_classes()) + " classes");
  }
}

void check_label(std::size_t label, std::size_t classes) {
  if (label >= classes) {
    throw std::invalid_argument("class index " + std::to_string(label) +
                                " out of range for " + std::to_string(classes) +
                                " classes");
  }
}

// log(sum(exp(v))) with max subtraction.
double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - m);
  return m + std::log(acc);
}

std::vector<double> negated(std::span<const double> v) {
  std::vector<double> out(v.begin(), v.end());
  for (double& x : out) x = -x;
  return out;
}

struct Forward {
  std::vector<double> pre;     // hidden pre-activation
  std::vector<double> hidden;  // after ReLU
  std::vector<double> out;
};

Forward forward(const HeadModel& m, std::span<const double> x) {
  Forward f;
  f.pre.assign(m.hidden, 0.0);
  f.hidden.assign(m.hidden, 0.0);
  f.out.assign(m.classes, 0.0);
  for (std::size_t j = 0; j < m.hidden; ++j) {
    double acc = m.b1[j];
    const double* row = &m.w1[j * m.features];
    for (std::size_t i = 0; i < m.features; ++i) acc += row[i] * x[i];
    f.pre[j] = acc;
    f.hidden[j] = acc > 0.0 ? acc : 0.0;
  }
  for (std::size_t k = 0; k < m.classes; ++k) {
    double acc = m.b2[k];
    const double* row = &m.w2[k * m.hidden];
    for (std::size_t j = 0; j < m.hidden; ++j) acc += row[j] * f.hidden[j];
    f.out[k] = acc;
  }
  return f;
}

// Loss and dLoss/dOutput for one sample.
double output_loss(const HeadModel& m, const Prototypes& protos,
                   std::span<const double> out, std::size_t label,
                   std::vector<double>* grad) {
  if (m.kind == HeadKind::kMetric) {
    if (grad) *grad = loss_gradient(out, label, protos);
    return metric_loss(out, label, protos);
  }
  const std::vector<double> p = softmax(out);
  if (grad) {
    *grad = p;
    (*grad)[label] -= 1.0;
  }
  return log_sum_exp(out) - out[label];
}

std::vector<double> read_array(const json& doc, const char* key, std::size_t n) {
  if (!doc.contains(key) || !doc.at(key).is_array()) {
    throw std::runtime_error(std::string("model: missing array '") + key + "'");
  }
  const json& arr = doc.at(key);
  if (arr.size() != n) {
    throw std::runtime_error(std::string("model: array '") + key + "' has " +
                             std::to_string(arr.size()) + " values, expected " +
                             std::to_string(n));
  }
  std::vector<double> out;
  out.reserve(n);
  for (const json& v : arr) {
    if (!v.is_number()) {
      throw std::runtime_error(std::string("model: non-numeric value in '") + key + "'");
    }
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

Prototypes::Prototypes(std::size_t num_classes) : num_classes_(num_classes) {
  if (num_classes == 0) throw std::invalid_argument("need at least one class");
}

Embedding Prototypes::vector(std::size_t t) const {
  check_label(t, num_classes_);
  Embedding m(num_classes_, 0.0);
  m[t] = scale();
  return m;
}

std::vector<double> Prototypes::squared_distances(std::span<const double> e) const {
  check_dim(e, *this);
  const double c = scale();
  std::vector<double> d(num_classes_);
  for (std::size_t t = 0; t < num_classes_; ++t) {
    double acc = 0.0;
    for (std::size_t i = 0; i < num_classes_; ++i) {
      const double diff = e[i] - (i == t ? c : 0.0);
      acc += diff * diff;
    }
    d[t] = acc;
  }
  return d;
}

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw std::invalid_argument("empty logit vector");
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - m);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

std::vector<double> class_probabilities(std::span<const double> e,
                                        const Prototypes& protos) {
  return softmax(negated(protos.squared_distances(e)));
}

double naive_confidence(std::span<const double> probs) {
  if (probs.empty()) throw std::invalid_argument("empty probability vector");
  return *std::max_element(probs.begin(), probs.end());
}

std::size_t argmax(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("argmax of empty vector");
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

double metric_loss(std::span<const double> e, std::size_t label,
                   const Prototypes& protos) {
  check_label(label, protos.num_classes());
  const std::vector<double> d = protos.squared_distances(e);
  // -log p_Y as a log-sum-exp over d_Y - d_k; the k = Y term is exactly 0,
  // so a confident sample keeps its tiny loss instead of cancelling to 0.
  double top = 0.0;
  for (std::size_t k = 0; k < d.size(); ++k) top = std::max(top, d[label] - d[k]);
  double rest = 0.0;
  for (std::size_t k = 0; k < d.size(); ++k) {
    if (k != label) rest += std::exp(d[label] - d[k] - top);
  }
  if (top == 0.0) return std::log1p(rest);
  return top + std::log(std::exp(-top) + rest);
}

std::vector<double> loss_gradient(std::span<const double> e, std::size_t label,
                                  const Prototypes& protos) {
  check_label(label, protos.num_classes());
  const std::vector<double> p = class_probabilities(e, protos);
  const std::size_t n = protos.num_classes();
  const double c = protos.scale();
  // 2(e - m_Y) - sum_k p_k 2(e - m_k) = 2(sum_k p_k m_k - m_Y)
  std::vector<double> g(n);
  double others = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i == label) continue;
    g[i] = 2.0 * c * p[i];
    others += p[i];
  }
  // p_Y - 1 written as -sum_{k != Y} p_k to keep precision near the prototype.
  g[label] = -2.0 * c * others;
  return g;
}

double eds(std::span<const double> e, const Prototypes& protos) {
  const std::vector<double> d = protos.squared_distances(e);
  return std::accumulate(d.begin(), d.end(), 0.0);
}

std::string to_string(HeadKind kind) {
  return kind == HeadKind::kMetric ? "metric" : "softmax";
}

HeadKind head_kind_from_string(const std::string& s) {
  if (s == "metric") return HeadKind::kMetric;
  if (s == "softmax") return HeadKind::kSoftmax;
  throw std::invalid_argument("unknown head kind '" + s + "'");
}

HeadModel HeadModel::initialize(HeadKind kind, std::size_t features,
                                std::size_t hidden, std::size_t classes,
                                std::uint64_t seed) {
  if (features == 0 || hidden == 0 || classes == 0) {
    throw std::invalid_argument("head dimensions must be positive");
  }
  HeadModel m;
  m.kind = kind;
  m.features = features;
  m.hidden = hidden;
  m.classes = classes;
  std::mt19937_64 rng(seed);
  auto glorot = [&rng](std::size_t fan_in, std::size_t fan_out, std::size_t n) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    std::vector<double> w(n);
    for (double& v : w) v = dist(rng);
    return w;
  };
  m.w1 = glorot(features, hidden, hidden * features);
  m.b1.assign(hidden, 0.0);
  m.w2 = glorot(hidden, classes, classes * hidden);
  m.b2.assign(classes, 0.0);
  return m;
}

void HeadModel::check_shapes() const {
  if (features == 0 || hidden == 0 || classes == 0) {
    throw std::invalid_argument("head dimensions must be positive");
  }
  if (w1.size() != hidden * features || b1.size() != hidden ||
      w2.size() != classes * hidden || b2.size() != classes) {
    throw std::invalid_argument("head weight shapes inconsistent with dimensions");
  }
  if (!class_names.empty() && class_names.size() != classes) {
    throw std::invalid_argument("class name count does not match class dimension");
  }
  for (const auto* arr : {&w1, &b1, &w2, &b2}) {
    for (double v : *arr) {
      if (!std::isfinite(v)) throw std::invalid_argument("non-finite head weight");
    }
  }
}

std::vector<double> embed(const HeadModel& model, std::span<const double> features) {
  if (features.size() != model.features) {
    throw std::invalid_argument("feature dimension " + std::to_string(features.size()) +
                                " does not match model input " +
                                std::to_string(model.features));
  }
  return forward(model, features).out;
}

void TrainConfig::validate() const {
  auto in_unit = [](double v) { return v > 0.0 && v < 1.0; };
  if (!in_unit(learning_rate) || !in_unit(beta1) || !in_unit(beta2)) {
    throw std::invalid_argument("learning rate and moment decays must lie in (0,1)");
  }
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (epochs < 0) throw std::invalid_argument("epochs must be non-negative");
  if (batch_size == 0) throw std::invalid_argument("batch size must be positive");
  if (hidden == 0) throw std::invalid_argument("hidden width must be positive");
}

double mean_loss(const HeadModel& model, std::span<const TrainSample> samples) {
  if (samples.empty()) return 0.0;
  const Prototypes protos(model.classes);
  double acc = 0.0;
  for (const TrainSample& s : samples) {
    acc += output_loss(model, protos, embed(model, s.features), s.label, nullptr);
  }
  return acc / static_cast<double>(samples.size());
}

TrainResult train(std::span<const TrainSample> samples, const TrainConfig& cfg,
                  HeadKind kind, std::size_t num_classes) {
  if (samples.empty()) throw std::invalid_argument("no training samples");
  cfg.validate();
  const std::size_t nf = samples.front().features.size();
  for (const TrainSample& s : samples) {
    if (s.features.size() != nf) {
      throw std::invalid_argument("inconsistent feature dimensions in training set");
    }
    check_label(s.label, num_classes);
  }

  TrainResult result;
  result.model = HeadModel::initialize(kind, nf, cfg.hidden, num_classes, cfg.seed);
  HeadModel& m = result.model;
  const Prototypes protos(num_classes);

  std::vector<std::vector<double>*> params = {&m.w1, &m.b1, &m.w2, &m.b2};
  std::vector<std::vector<double>> first(params.size()), second(params.size()),
      grads(params.size());
  for (std::size_t k = 0; k < params.size(); ++k) {
    first[k].assign(params[k]->size(), 0.0);
    second[k].assign(params[k]->size(), 0.0);
    grads[k].assign(params[k]->size(), 0.0);
  }

  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 shuffle_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::int64_t step = 0;
  std::vector<double> dout, dhidden(m.hidden);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      for (auto& g : grads) std::fill(g.begin(), g.end(), 0.0);

      for (std::size_t bi = start; bi < stop; ++bi) {
        const TrainSample& s = samples[order[bi]];
        const Forward f = forward(m, s.features);
        epoch_loss += output_loss(m, protos, f.out, s.label, &dout);

        std::fill(dhidden.begin(), dhidden.end(), 0.0);
        for (std::size_t k = 0; k < m.classes; ++k) {
          grads[3][k] += dout[k];
          for (std::size_t j = 0; j < m.hidden; ++j) {
            grads[2][k * m.hidden + j] += dout[k] * f.hidden[j];
            dhidden[j] += dout[k] * m.w2[k * m.hidden + j];
          }
        }
        for (std::size_t j = 0; j < m.hidden; ++j) {
          if (f.pre[j] <= 0.0) continue;
          grads[1][j] += dhidden[j];
          for (std::size_t i = 0; i < m.features; ++i) {
            grads[0][j * m.features + i] += dhidden[j] * s.features[i];
          }
        }
      }

      const double inv_batch = 1.0 / static_cast<double>(stop - start);
      ++step;
      const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      for (std::size_t k = 0; k < params.size(); ++k) {
        std::vector<double>& w = *params[k];
        for (std::size_t i = 0; i < w.size(); ++i) {
          const double g = grads[k][i] * inv_batch;
          first[k][i] = cfg.beta1 * first[k][i] + (1.0 - cfg.beta1) * g;
          second[k][i] = cfg.beta2 * second[k][i] + (1.0 - cfg.beta2) * g * g;
          const double mhat = first[k][i] / c1;
          const double vhat = second[k][i] / c2;
          w[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
        }
      }
    }
    result.epoch_losses.push_back(epoch_loss / static_cast<double>(samples.size()));
  }
  return result;
}

std::string save_model(const HeadModel& model) {
  model.check_shapes();
  json doc;
  doc["format"] = "osd-head-model";
  doc["version"] = 1;
  doc["kind"] = to_string(model.kind);
  doc["features"] = model.features;
  doc["hidden"] = model.hidden;
  doc["classes"] = model.classes;
  doc["class_names"] = model.class_names;
  doc["w1"] = model.w1;
  doc["b1"] = model.b1;
  doc["w2"] = model.w2;
  doc["b2"] = model.b2;
  return doc.dump(1) + "\n";
}

HeadModel load_model(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("model: ") + e.what());
  }
  if (!doc.is_object() || doc.value("format", "") != "osd-head-model") {
    throw std::runtime_error("model: not an osd-head-model document");
  }
  HeadModel m;
  try {
    m.kind = head_kind_from_string(doc.at("kind").get<std::string>());
    m.features = doc.at("features").get<std::size_t>();
    m.hidden = doc.at("hidden").get<std::size_t>();
    m.classes = doc.at("classes").get<std::size_t>();
    if (doc.contains("class_names")) {
      m.class_names = doc.at("class_names").get<std::vector<std::string>>();
    }
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("model: ") + e.what());
  }
  m.w1 = read_array(doc, "w1", m.hidden * m.features);
  m.b1 = read_array(doc, "b1", m.hidden);
  m.w2 = read_array(doc, "w2", m.classes * m.hidden);
  m.b2 = read_array(doc, "b2", m.classes);
  try {
    m.check_shapes();
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("model: ") + e.what());
  }
  return m;
}

}  // namespace osd
