#pragma once

#include <cstdio>
#include <iomanip>
#include <ostream>
#include <string>
#include <vector>

#include "orf/crossval.hpp"
#include "orf/effects.hpp"
#include "orf/simulation.hpp"

namespace orf {

inline const char* significance_stars(double p) {
    if (p < 0.01) return "***";
    if (p < 0.05) return "**";
    if (p < 0.1) return "*";
    return "";
}

inline std::string format_full(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

inline void write_effects_csv(const EffectsTable& table, std::ostream& out) {
    bool with_se = false;
    for (const auto& c : table.cells) with_se = with_se || c.has_se;
    out << "covariate,class,effect";
    if (with_se) out << ",std_error,t_value,p_value";
    out << "\n";
    for (const auto& c : table.cells) {
        const long long cls_label =
            table.class_map.empty() ? c.cls : table.class_map[static_cast<std::size_t>(c.cls) - 1];
        out << table.col_names[static_cast<std::size_t>(c.covariate)] << "," << cls_label << ","
            << format_full(c.effect);
        if (with_se) {
            if (c.has_se)
                out << "," << format_full(c.std_error) << "," << format_full(c.t_value) << ","
                    << format_full(c.p_value);
            else
                out << ",,,";
        }
        out << "\n";
    }
}

inline void print_effects_table(const EffectsTable& table, std::ostream& out) {
    bool with_se = false;
    for (const auto& c : table.cells) with_se = with_se || c.has_se;
    out << "Marginal effects (" << eval_kind_name(table.eval_kind) << ")\n";
    out << std::left << std::setw(24) << "Variable" << std::right << std::setw(7) << "Class"
        << std::setw(12) << "Effect";
    if (with_se)
        out << std::setw(12) << "Std.Error" << std::setw(10) << "t-Value" << std::setw(10)
            << "p-Value" << "  ";
    out << "\n";
    int last_cov = -1;
    for (const auto& c : table.cells) {
        const std::string name =
            c.covariate == last_cov ? "" : table.col_names[static_cast<std::size_t>(c.covariate)];
        last_cov = c.covariate;
        const long long cls_label =
            table.class_map.empty() ? c.cls : table.class_map[static_cast<std::size_t>(c.cls) - 1];
        out << std::left << std::setw(24) << name << std::right << std::setw(7) << cls_label
            << std::setw(12) << std::fixed << std::setprecision(4) << c.effect;
        if (with_se) {
            if (c.has_se)
                out << std::setw(12) << c.std_error << std::setw(10) << std::setprecision(4)
                    << c.t_value << std::setw(10) << c.p_value << "  "
                    << significance_stars(c.p_value);
            else
                out << std::setw(12) << "-" << std::setw(10) << "-" << std::setw(10) << "-";
        }
        out << "\n";
        out.unsetf(std::ios::fixed);
    }
    if (with_se) out << "Significance: *** p<0.01, ** p<0.05, * p<0.1\n";
}

inline void write_experiment_csv(const std::vector<ExperimentRow>& rows, std::ostream& out) {
    out << "config,estimator,metric,mean,sd\n";
    for (const auto& r : rows) {
        if (r.skipped) {
            out << r.config_label << "," << estimator_name(r.estimator) << ",rps,skipped,\n";
            continue;
        }
        out << r.config_label << "," << estimator_name(r.estimator) << ",rps,"
            << format_full(r.mean_rps) << "," << format_full(r.sd_rps) << "\n";
        out << r.config_label << "," << estimator_name(r.estimator) << ",mse,"
            << format_full(r.mean_mse) << "," << format_full(r.sd_mse) << "\n";
    }
}

inline void write_crossval_csv(const std::string& dataset_name,
                               const std::vector<CrossValResult>& results, std::ostream& out) {
    out << "dataset,estimator,metric,mean,sd\n";
    for (const auto& r : results) {
        out << dataset_name << "," << estimator_name(r.estimator) << ",rps,"
            << format_full(r.mean_rps) << "," << format_full(r.sd_rps) << "\n";
        out << dataset_name << "," << estimator_name(r.estimator) << ",mse,"
            << format_full(r.mean_mse) << "," << format_full(r.sd_mse) << "\n";
    }
}

inline void write_probs_csv(const Matrix& probs, const std::vector<long long>& class_map,
                            std::ostream& out) {
    for (std::size_t m = 0; m < probs.cols(); ++m)
        out << (m ? "," : "") << "p_class_" << class_map[m];
    out << "\n";
    for (std::size_t r = 0; r < probs.rows(); ++r) {
        for (std::size_t m = 0; m < probs.cols(); ++m)
            out << (m ? "," : "") << format_full(probs(r, m));
        out << "\n";
    }
}

}  // namespace orf
