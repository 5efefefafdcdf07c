#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "wvsort/pdw.hpp"

namespace wvsort {

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::uint64_t support = 0;    ///< true tokens of this class
    std::uint64_t predicted = 0;  ///< tokens predicted as this class
};

/// Token-level classification report. Pre = TP/(TP+FP), Rec = TP/(TP+FN),
/// F1 = harmonic mean; an undefined ratio counts as 0. Macro averages run
/// over the classes that occur in the labels or the predictions.
struct EvalReport {
    std::size_t classes = 0;
    std::vector<std::uint64_t> confusion;  ///< row = true, column = predicted
    std::vector<ClassMetrics> per_class;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    double accuracy = 0.0;
    std::uint64_t tokens = 0;
    std::map<std::string, std::string> metadata;

    std::uint64_t count(std::size_t truth, std::size_t predicted) const { return confusion[truth * classes + predicted]; }
};

EvalReport compute_report(std::span<const Label> labels, std::span<const Label> predictions, std::size_t classes);

/// `true\pred,0,1,...` header then one row per true class.
void write_confusion_csv(std::ostream& out, const EvalReport& report);
/// `class,precision,recall,f1,support` rows plus a `macro` row and an
/// `accuracy` row; metadata is emitted as leading `# key=value` comments.
void write_metrics_csv(std::ostream& out, const EvalReport& report);

}  // namespace wvsort
