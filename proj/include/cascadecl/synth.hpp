#pragma once

// Synthetic propagation corpora in structurally distinct regimes.

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>

#include "cascadecl/dataset.hpp"

#include <json.hpp>

namespace cascadecl {

struct RegimeConfig {
  std::string name = "A";
  std::size_t n_news = 400;
  double cascade_mean = 3.0;        // expected cascades per news item (>= 1)
  double cascade_dispersion = 0.5;  // negative-binomial dispersion; 0 => Poisson
  double branching = 1.5;           // expected retweets per tweet
  std::size_t max_cascade_size = 30;
  double time_scale_s = 600.0;      // mean gap between a tweet and its retweets
  /// Class-conditional shift per profile feature, in units of the generating
  /// distribution's spread. Fake items get +shift/2, real items -shift/2.
  std::array<double, 8> fake_shift{};
  double mention_prob = 0.3;
  double public_prob = 0.9;
  double label_balance = 0.5;       // fraction fake
  bool timelines = true;
  std::uint64_t seed = 1;

  /// Throws InvalidConfig / DegenerateRegime.
  void validate() const;
};

struct GeneratorManifest {
  RegimeConfig regime;
  DatasetSummary realized;
  BuildStats build;
};

struct SynthDataset {
  RawCorpus corpus;
  GraphDataset dataset;
  GeneratorManifest manifest;
};

/// Raw records only; every news item derives its RNG stream from (seed, index).
RawCorpus generate_corpus(const RegimeConfig& regime);

/// Records plus the graph dataset built from them by the regular pipeline.
SynthDataset generate(const RegimeConfig& regime, const BuildOptions& options = {});

/// Two regimes sharing the profile schema but differing in cascade structure.
std::pair<RegimeConfig, RegimeConfig> default_regimes();

nlohmann::json to_json(const RegimeConfig& regime);
nlohmann::json to_json(const GeneratorManifest& manifest);

}  // namespace cascadecl
