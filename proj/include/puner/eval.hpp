#pragma once

#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "puner/corpus.hpp"
#include "puner/decoder.hpp"

namespace puner {

struct TypeCounts {
  std::size_t tp = 0, fp = 0, fn = 0;

  // 0/0 is reported as 0 throughout.
  double precision() const {
    return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  }
  double recall() const {
    return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  }
  double f1() const {
    double p = precision(), r = recall();
    return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
  }
};

struct F1Report {
  std::map<std::string, TypeCounts> per_type;
  TypeCounts overall;  // micro: counts summed over types

  double macro_precision() const;
  double macro_recall() const;
  double macro_f1() const;  // mean of per-type F1s
};

/// Exact entity match: a prediction counts as a true positive only when a
/// gold span with the same start, end and type exists in the same sentence.
F1Report entity_f1(const Corpus& gold,
                   const std::vector<std::vector<PredSpan>>& pred);

void print_f1_table(const F1Report& report, std::ostream& out, bool macro = false);
std::string f1_report_json(const F1Report& report);

}  // namespace puner
