#include "wvsort/metrics.hpp"

#include <ostream>

#include "wvsort/error.hpp"
#include "wvsort/kv_config.hpp"

namespace wvsort {

EvalReport compute_report(std::span<const Label> labels, std::span<const Label> predictions, std::size_t classes) {
    if (labels.size() != predictions.size()) throw PreconditionError("compute_report: label/prediction count mismatch");
    if (classes == 0) throw PreconditionError("compute_report: class count must be positive");
    EvalReport r;
    r.classes = classes;
    r.confusion.assign(classes * classes, 0);
    r.per_class.resize(classes);
    std::uint64_t correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= classes || predictions[i] >= classes) {
            throw PreconditionError("compute_report: class id " + std::to_string(std::max(labels[i], predictions[i])) +
                                    " outside [0, " + std::to_string(classes) + ")");
        }
        ++r.confusion[labels[i] * classes + predictions[i]];
        correct += labels[i] == predictions[i];
    }
    r.tokens = labels.size();
    r.accuracy = r.tokens ? static_cast<double>(correct) / static_cast<double>(r.tokens) : 0.0;

    std::size_t present = 0;
    for (std::size_t c = 0; c < classes; ++c) {
        auto& m = r.per_class[c];
        const std::uint64_t tp = r.count(c, c);
        for (std::size_t k = 0; k < classes; ++k) {
            m.support += r.count(c, k);
            m.predicted += r.count(k, c);
        }
        m.precision = m.predicted ? static_cast<double>(tp) / static_cast<double>(m.predicted) : 0.0;
        m.recall = m.support ? static_cast<double>(tp) / static_cast<double>(m.support) : 0.0;
        m.f1 = (m.precision + m.recall) > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
        if (m.support || m.predicted) {
            ++present;
            r.macro_precision += m.precision;
            r.macro_recall += m.recall;
            r.macro_f1 += m.f1;
        }
    }
    if (present) {
        r.macro_precision /= static_cast<double>(present);
        r.macro_recall /= static_cast<double>(present);
        r.macro_f1 /= static_cast<double>(present);
    }
    return r;
}

void write_confusion_csv(std::ostream& out, const EvalReport& report) {
    out << "true\\pred";
    for (std::size_t c = 0; c < report.classes; ++c) out << ',' << c;
    out << '\n';
    for (std::size_t t = 0; t < report.classes; ++t) {
        out << t;
        for (std::size_t p = 0; p < report.classes; ++p) out << ',' << report.count(t, p);
        out << '\n';
    }
}

void write_metrics_csv(std::ostream& out, const EvalReport& report) {
    for (const auto& [key, value] : report.metadata) out << "# " << key << '=' << value << '\n';
    out << "class,precision,recall,f1,support\n";
    for (std::size_t c = 0; c < report.classes; ++c) {
        const auto& m = report.per_class[c];
        out << c << ',' << format_double(m.precision) << ',' << format_double(m.recall) << ',' << format_double(m.f1)
            << ',' << m.support << '\n';
    }
    out << "macro," << format_double(report.macro_precision) << ',' << format_double(report.macro_recall) << ','
        << format_double(report.macro_f1) << ',' << report.tokens << '\n';
    out << "accuracy," << format_double(report.accuracy) << ",,," << report.tokens << '\n';
}

}  // namespace wvsort
