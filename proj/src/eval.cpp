#include "puner/eval.hpp"

#include <iomanip>
#include <set>

#include <json.hpp>

#include "puner/error.hpp"

namespace puner {

double F1Report::macro_precision() const {
  if (per_type.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& [_, c] : per_type) sum += c.precision();
  return sum / static_cast<double>(per_type.size());
}

double F1Report::macro_recall() const {
  if (per_type.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& [_, c] : per_type) sum += c.recall();
  return sum / static_cast<double>(per_type.size());
}

double F1Report::macro_f1() const {
  if (per_type.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& [_, c] : per_type) sum += c.f1();
  return sum / static_cast<double>(per_type.size());
}

F1Report entity_f1(const Corpus& gold,
                   const std::vector<std::vector<PredSpan>>& pred) {
  if (pred.size() != gold.sentences.size()) {
    throw Error("prediction covers " + std::to_string(pred.size()) +
                " sentences, gold has " + std::to_string(gold.sentences.size()));
  }

  F1Report report;
  for (std::size_t si = 0; si < gold.sentences.size(); ++si) {
    const Sentence& s = gold.sentences[si];
    std::multiset<std::tuple<std::size_t, std::size_t, std::string>> gold_set;
    if (s.gold) {
      for (const GoldSpan& g : *s.gold) {
        gold_set.insert({g.start, g.end, g.etype});
        report.per_type[g.etype];  // ensure the type appears in the report
      }
    }
    for (const PredSpan& p : pred[si]) {
      if (p.start > p.end || p.end >= s.tokens.size()) {
        throw Error("predicted span out of bounds in sentence " +
                    std::to_string(si));
      }
      auto it = gold_set.find({p.start, p.end, p.etype});
      if (it != gold_set.end()) {
        gold_set.erase(it);
        ++report.per_type[p.etype].tp;
      } else {
        ++report.per_type[p.etype].fp;
      }
    }
    for (const auto& [start, end, etype] : gold_set) {
      ++report.per_type[etype].fn;
    }
  }

  for (const auto& [_, c] : report.per_type) {
    report.overall.tp += c.tp;
    report.overall.fp += c.fp;
    report.overall.fn += c.fn;
  }
  return report;
}

void print_f1_table(const F1Report& report, std::ostream& out, bool macro) {
  auto row = [&](const std::string& name, std::size_t tp, std::size_t fp,
                 std::size_t fn, double p, double r, double f) {
    out << std::left << std::setw(12) << name << std::right << std::setw(7) << tp
        << std::setw(7) << fp << std::setw(7) << fn << std::fixed
        << std::setprecision(2) << std::setw(9) << 100.0 * p << std::setw(9)
        << 100.0 * r << std::setw(9) << 100.0 * f << "\n";
  };
  out << std::left << std::setw(12) << "type" << std::right << std::setw(7)
      << "tp" << std::setw(7) << "fp" << std::setw(7) << "fn" << std::setw(9)
      << "prec" << std::setw(9) << "rec" << std::setw(9) << "f1" << "\n";
  for (const auto& [name, c] : report.per_type) {
    row(name, c.tp, c.fp, c.fn, c.precision(), c.recall(), c.f1());
  }
  const TypeCounts& o = report.overall;
  row("overall", o.tp, o.fp, o.fn, o.precision(), o.recall(), o.f1());
  if (macro) {
    out << "macro" << std::fixed << std::setprecision(2) << "  prec="
        << 100.0 * report.macro_precision() << " rec="
        << 100.0 * report.macro_recall() << " f1=" << 100.0 * report.macro_f1()
        << "\n";
  }
}

std::string f1_report_json(const F1Report& report) {
  nlohmann::json j;
  for (const auto& [name, c] : report.per_type) {
    j["types"][name] = {{"tp", c.tp},
                        {"fp", c.fp},
                        {"fn", c.fn},
                        {"precision", c.precision()},
                        {"recall", c.recall()},
                        {"f1", c.f1()}};
  }
  const TypeCounts& o = report.overall;
  j["overall"] = {{"tp", o.tp},          {"fp", o.fp},
                  {"fn", o.fn},          {"precision", o.precision()},
                  {"recall", o.recall()}, {"f1", o.f1()}};
  j["macro"] = {{"precision", report.macro_precision()},
                {"recall", report.macro_recall()},
                {"f1", report.macro_f1()}};
  return j.dump(2);
}

}  // namespace puner
