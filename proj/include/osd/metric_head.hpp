#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace osd {

using Embedding = std::vector<double>;

// Fixed class anchors: prototype t is the one-hot vector scaled by C.
// Class indices are zero-based throughout the library.
class Prototypes {
 public:
  explicit Prototypes(std::size_t num_classes);

  std::size_t num_classes() const { return num_classes_; }
  double scale() const { return static_cast<double>(num_classes_); }
  Embedding vector(std::size_t t) const;

  // ||e - m_t||^2 for every t.
  std::vector<double> squared_distances(std::span<const double> e) const;

 private:
  std::size_t num_classes_;
};

std::vector<double> class_probabilities(std::span<const double> e,
                                        const Prototypes& protos);
std::vector<double> softmax(std::span<const double> logits);
double naive_confidence(std::span<const double> probs);
std::size_t argmax(std::span<const double> v);

double metric_loss(std::span<const double> e, std::size_t label,
                   const Prototypes& protos);
std::vector<double> loss_gradient(std::span<const double> e, std::size_t label,
                                  const Prototypes& protos);

// Euclidean distance sum to all prototypes. Small values sit near the centre
// of the embedding space.
double eds(std::span<const double> e, const Prototypes& protos);

enum class HeadKind { kMetric, kSoftmax };

std::string to_string(HeadKind kind);
HeadKind head_kind_from_string(const std::string& s);

// Two-layer perceptron with a ReLU hidden layer. Weights are row-major:
// w1 is hidden x features, w2 is classes x hidden.
struct HeadModel {
  HeadKind kind = HeadKind::kMetric;
  std::size_t features = 0;
  std::size_t hidden = 0;
  std::size_t classes = 0;
  std::vector<double> w1, b1, w2, b2;
  std::vector<std::string> class_names;

  static HeadModel initialize(HeadKind kind, std::size_t features,
                              std::size_t hidden, std::size_t classes,
                              std::uint64_t seed);

  void check_shapes() const;
  friend bool operator==(const HeadModel&, const HeadModel&) = default;
};

// Embedding for metric heads, logits for softmax heads.
std::vector<double> embed(const HeadModel& model, std::span<const double> features);

struct TrainSample {
  std::vector<double> features;
  std::size_t label = 0;
};

struct TrainConfig {
  double learning_rate = 0.003;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int epochs = 50;
  std::size_t batch_size = 4;
  std::size_t hidden = 32;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainResult {
  HeadModel model;
  // Mean per-sample loss of each epoch, measured during the epoch.
  std::vector<double> epoch_losses;
};

TrainResult train(std::span<const TrainSample> samples, const TrainConfig& cfg,
                  HeadKind kind, std::size_t num_classes);

// Mean training loss of `model` over `samples`.
double mean_loss(const HeadModel& model, std::span<const TrainSample> samples);

// Text persistence (JSON). Readers reject shape-inconsistent documents.
std::string save_model(const HeadModel& model);
HeadModel load_model(const std::string& text);

}  // namespace osd
