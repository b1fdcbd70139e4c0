#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sugarl::nn {

template <typename T>
struct CrossEntropyResult {
  T loss;
  T probability;         // softmax(logits)[label]
  std::vector<T> grad;   // d loss / d logits
};

/// Numerically stable softmax.
template <typename T>
std::vector<T> softmax(std::span<const T> logits) {
  if (logits.empty()) throw std::invalid_argument("softmax: empty logits");
  const T mx = *std::max_element(logits.begin(), logits.end());
  std::vector<T> p(logits.size());
  T sum{0};
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    sum += p[i];
  }
  for (auto& v : p) v /= sum;
  return p;
}

/// -log softmax(logits)[label], with the label probability and the logit
/// gradient softmax - onehot.
template <typename T>
CrossEntropyResult<T> softmax_cross_entropy(std::span<const T> logits, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= logits.size())
    throw std::invalid_argument("softmax_cross_entropy: label " + std::to_string(label) + " outside [0, " +
                                std::to_string(logits.size()) + ")");
  const T mx = *std::max_element(logits.begin(), logits.end());
  T sum{0};
  for (T z : logits) sum += std::exp(z - mx);
  const T log_z = mx + std::log(sum);
  CrossEntropyResult<T> r;
  r.loss = log_z - logits[label];
  r.grad.resize(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) r.grad[i] = std::exp(logits[i] - log_z);
  r.probability = r.grad[label];
  r.grad[label] -= T{1};
  return r;
}

}  // namespace sugarl::nn
