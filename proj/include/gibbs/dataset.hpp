#pragma once

#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "gibbs/models.hpp"
#include "gibbs/simulation.hpp"

namespace gibbs {

struct Dataset {
  std::string name;
  SampleSummary sample;
};

// Canonical on-disk form: multiplicities keyed by level. Frequency order is
// not preserved (the summary is an exchangeable statistic anyway).
inline nlohmann::json dataset_to_json(const Dataset& d) {
  nlohmann::json mult = nlohmann::json::object();
  for (const auto& [level, count] : d.sample.multiplicities)
    mult[std::to_string(level)] = count;
  return {{"name", d.name}, {"n", d.sample.n}, {"multiplicities", mult}};
}

inline Dataset dataset_from_json(const nlohmann::json& doc, const std::string& origin) {
  if (!doc.is_object()) throw ValidationError(origin + ": expected a JSON object");
  Dataset out;
  out.name = doc.value("name", origin);
  bool has_mult = doc.contains("multiplicities");
  bool has_freq = doc.contains("frequencies");
  if (has_mult == has_freq)
    throw ValidationError(origin +
                          ": provide exactly one of \"multiplicities\" or \"frequencies\"");
  try {
    if (has_mult) {
      std::map<int, int> mult;
      for (const auto& [key, value] : doc.at("multiplicities").items())
        mult[std::stoi(key)] = value.get<int>();
      out.sample = summarize_multiplicities(mult);
    } else {
      out.sample = summarize_frequencies(doc.at("frequencies").get<std::vector<int>>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(origin + ": " + e.what());
  } catch (const std::invalid_argument&) {
    throw ValidationError(origin + ": multiplicity keys must be integer levels");
  }
  if (doc.contains("n")) {
    int declared = doc.at("n").get<int>();
    if (declared != out.sample.n)
      throw ValidationError(origin + ": declared n=" + std::to_string(declared) +
                            " but entries sum to " + std::to_string(out.sample.n));
  } else if (has_mult) {
    throw ValidationError(origin + ": multiplicity datasets must declare n");
  }
  return out;
}

inline Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open dataset file: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
  return dataset_from_json(doc, path);
}

struct Subsample {
  SampleSummary sample;  // the drawn sub-sample
  int k_true = 0;        // distinct species confined to the holdout
  int l_true = 0;        // holdout reads belonging to those species
};

// Draws `size` reads without replacement from the dataset's labeled
// expansion; the holdout truths are what a future-sample prediction from the
// sub-sample should recover.
inline Subsample subsample(const Dataset& dataset, int size, RngStream& rng) {
  int n = dataset.sample.n;
  if (size < 1 || size >= n)
    throw ValidationError("subsample: size must satisfy 1 <= size < n");
  std::vector<int> labels;
  labels.reserve(n);
  for (int species = 0; species < dataset.sample.j; ++species)
    labels.insert(labels.end(), dataset.sample.frequencies[species], species);
  for (int t = 0; t < size; ++t) {
    int pick = t + static_cast<int>(rng.next_double() * (n - t));
    std::swap(labels[t], labels[pick]);
  }
  std::vector<int> drawn(dataset.sample.j, 0);
  for (int t = 0; t < size; ++t) ++drawn[labels[t]];
  Subsample out;
  std::vector<int> freq;
  for (int species = 0; species < dataset.sample.j; ++species) {
    if (drawn[species] > 0) {
      freq.push_back(drawn[species]);
    } else {
      ++out.k_true;
      out.l_true += dataset.sample.frequencies[species];
    }
  }
  out.sample = summarize_frequencies(freq);
  return out;
}

}  // namespace gibbs
