// orf: ordered forest estimation from the command line.
//
// Subcommands: train, predict, margins, simulate, crossval. Every run echoes
// its version, seed, thread count and a hash of the effective configuration
// so results can be reproduced exactly.

#include <cstdint>
#include <ctime>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "orf/crossval.hpp"
#include "orf/dataset.hpp"
#include "orf/effects.hpp"
#include "orf/estimators.hpp"
#include "orf/metrics.hpp"
#include "orf/model_io.hpp"
#include "orf/ologit.hpp"
#include "orf/ordered_forest.hpp"
#include "orf/report.hpp"
#include "orf/simulation.hpp"
#include "orf/version.hpp"

namespace {

using orf::Error;
using nlohmann::json;

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void print_header(const std::string& subcommand, std::uint64_t seed, int threads,
                  const json& config) {
    std::cout << "orf " << orf::kVersion << " | " << subcommand << " | seed " << seed
              << " | threads " << threads << " | config " << hex64(fnv1a(config.dump())) << "\n";
}

std::uint64_t fresh_seed() {
    std::random_device rd;
    return orf::derive_seed((static_cast<std::uint64_t>(rd()) << 32) ^ rd(),
                            static_cast<std::uint64_t>(std::time(nullptr)));
}

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

// Optional JSON config file: values apply only where the flag was not given
// on the command line (flags win).
struct ConfigFile {
    json data = json::object();

    void load(const std::string& path) {
        std::ifstream in(path);
        if (!in.good()) throw Error("FileNotFound", "cannot open config '" + path + "'");
        in >> data;
    }
    template <typename T>
    void fill(const CLI::Option* opt, const char* key, T& value) const {
        if (opt->count() == 0 && data.contains(key)) value = data.at(key).get<T>();
    }
};

struct CommonArgs {
    std::uint64_t seed = 0;
    bool seed_given = false;
    int threads = 0;
    std::string config_path;
};

orf::Matrix select_columns(const orf::Matrix& X, const std::vector<std::string>& have,
                           const std::vector<std::string>& want) {
    std::vector<std::size_t> idx;
    for (const std::string& name : want) {
        bool found = false;
        for (std::size_t c = 0; c < have.size(); ++c)
            if (have[c] == name) {
                idx.push_back(c);
                found = true;
                break;
            }
        if (!found) throw Error("ColumnMismatch", "data file lacks model column '" + name + "'");
    }
    orf::Matrix out(X.rows(), idx.size());
    for (std::size_t r = 0; r < X.rows(); ++r)
        for (std::size_t c = 0; c < idx.size(); ++c) out(r, c) = X(r, idx[c]);
    return out;
}

// Raw CSV read (header + all-numeric matrix) for prediction inputs that may
// carry extra columns or no outcome at all.
std::pair<std::vector<std::string>, orf::Matrix> load_csv_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in.good()) throw Error("FileNotFound", "cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw Error("EmptyFile", "'" + path + "' has no header row");
    std::vector<std::string> header = orf::detail::split_csv_line(line);
    for (auto& h : header) h = orf::detail::trim(h);
    std::vector<std::vector<double>> rows;
    std::size_t r = 0;
    while (std::getline(in, line)) {
        if (orf::detail::trim(line).empty()) continue;
        const auto cells = orf::detail::split_csv_line(line);
        if (cells.size() != header.size())
            throw Error("NonNumericCell", "row " + std::to_string(r + 1) + " has wrong cell count");
        std::vector<double> row;
        for (std::size_t c = 0; c < cells.size(); ++c)
            row.push_back(orf::detail::parse_cell(cells[c], r, header[c]));
        rows.push_back(std::move(row));
        ++r;
    }
    if (rows.empty()) throw Error("EmptyFile", "'" + path + "' has no data rows");
    orf::Matrix X(rows.size(), header.size());
    for (std::size_t i = 0; i < rows.size(); ++i) X.set_row(i, rows[i]);
    return {header, X};
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out.good()) throw Error("FileNotFound", "cannot write '" + path + "'");
    out << content;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ordered forest estimation: probabilities, marginal effects, inference"};
    app.require_subcommand(1);

    // ---- train ----
    auto* train = app.add_subcommand("train", "fit a model on a CSV dataset and save it");
    std::string t_data, t_y, t_out, t_estimator = "ordered", t_cat, t_not_cat;
    orf::ForestParams t_params;
    bool t_inference = false, t_oob = false;
    CommonArgs t_common;
    auto* t_data_opt = train->add_option("--data", t_data, "training CSV file")->required();
    auto* t_y_opt = train->add_option("--y", t_y, "outcome column name")->required();
    train->add_option("--out", t_out, "output model file")->required();
    train->add_option("--estimator", t_estimator, "ordered | multinomial | ologit");
    train->add_option("--trees", t_params.n_trees, "number of trees");
    train->add_option("--mtry", t_params.mtry, "covariates tried per split (0 = ceil(sqrt(p)))");
    train->add_option("--min-leaf", t_params.min_leaf, "minimum leaf size");
    train->add_option("--subsample", t_params.subsample_fraction, "subsample fraction");
    train->add_flag("--honest", t_params.honest, "double-sample honest trees");
    train->add_flag("--inference", t_inference, "half-sample split for weight-based inference");
    train->add_flag("--oob", t_oob, "print out-of-bag training metrics");
    train->add_option("--categorical", t_cat, "comma-separated columns forced categorical");
    train->add_option("--not-categorical", t_not_cat, "comma-separated columns forced continuous");
    auto* t_seed_opt = train->add_option("--seed", t_common.seed, "master seed");
    train->add_option("--threads", t_common.threads, "worker threads (0 = auto)");
    train->add_option("--config", t_common.config_path, "JSON config file (flags win)");

    // ---- predict ----
    auto* predict_cmd = app.add_subcommand("predict", "predict class probabilities for a CSV");
    std::string p_model, p_data, p_out;
    CommonArgs p_common;
    predict_cmd->add_option("--model", p_model, "model file")->required();
    predict_cmd->add_option("--data", p_data, "CSV with the model's covariate columns")->required();
    predict_cmd->add_option("--out", p_out, "output CSV (default stdout)");
    predict_cmd->add_option("--threads", p_common.threads, "worker threads (0 = auto)");

    // ---- margins ----
    auto* margins = app.add_subcommand("margins", "marginal effects of covariates on class probabilities");
    std::string m_model, m_data, m_y, m_out, m_at = "all";
    bool m_inference = false;
    CommonArgs m_common;
    margins->add_option("--model", m_model, "model file")->required();
    margins->add_option("--data", m_data, "evaluation CSV")->required();
    margins->add_option("--y", m_y, "outcome column name")->required();
    margins->add_option("--at", m_at, "all = mean marginal effects, mean = effects at the mean");
    margins->add_flag("--inference", m_inference, "weight-based standard errors");
    margins->add_option("--out", m_out, "output CSV path");
    margins->add_option("--threads", m_common.threads, "worker threads (0 = auto)");

    // ---- simulate ----
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo benchmark on built-in designs");
    std::string s_dgp, s_estimators = "ologit,ordered", s_out;
    bool s_list = false;
    int s_reps = 100, s_classes = 3;
    std::size_t s_train_n = 200, s_test_n = 10000;
    bool s_noise = false, s_nonlinear = false, s_multi = false, s_random_t = false, s_high = false;
    orf::ForestParams s_params;
    CommonArgs s_common;
    simulate->add_flag("--list", s_list, "list the 72 designs and exit");
    simulate->add_option("--dgp", s_dgp, "design id 1..72, simpleM or complexM");
    simulate->add_option("--classes", s_classes, "3, 6 or 9 (flag-built design)");
    simulate->add_flag("--noise", s_noise, "add zero-effect covariates");
    simulate->add_flag("--nonlinear", s_nonlinear, "sine index");
    simulate->add_flag("--multicollinear", s_multi, "correlated effect covariates");
    simulate->add_flag("--random-thresholds", s_random_t, "random threshold spacing");
    simulate->add_flag("--high-dim", s_high, "add 1000 zero-effect covariates");
    auto* s_est_opt = simulate->add_option("--estimators", s_estimators, "comma-separated estimator list");
    auto* s_reps_opt = simulate->add_option("--reps", s_reps, "replications");
    auto* s_train_opt = simulate->add_option("--train-n", s_train_n, "training rows per replication");
    auto* s_test_opt = simulate->add_option("--test-n", s_test_n, "testing rows per replication");
    simulate->add_option("--trees", s_params.n_trees, "number of trees");
    simulate->add_option("--mtry", s_params.mtry, "covariates tried per split (0 = ceil(sqrt(p)))");
    simulate->add_option("--min-leaf", s_params.min_leaf, "minimum leaf size");
    simulate->add_option("--out", s_out, "output CSV path");
    auto* s_seed_opt = simulate->add_option("--seed", s_common.seed, "master seed");
    simulate->add_option("--threads", s_common.threads, "worker threads (0 = auto)");
    simulate->add_option("--config", s_common.config_path, "JSON config file (flags win)");

    // ---- crossval ----
    auto* crossval = app.add_subcommand("crossval", "repeated k-fold cross-validation on a CSV");
    std::string c_data, c_y, c_out, c_estimators = "ologit,ordered";
    int c_k = 10, c_repeats = 10;
    orf::ForestParams c_params;
    CommonArgs c_common;
    crossval->add_option("--data", c_data, "CSV file")->required();
    crossval->add_option("--y", c_y, "outcome column name")->required();
    crossval->add_option("--estimators", c_estimators, "comma-separated estimator list");
    crossval->add_option("--k", c_k, "fold count");
    crossval->add_option("--repeats", c_repeats, "repetitions of the whole procedure");
    crossval->add_option("--trees", c_params.n_trees, "number of trees");
    crossval->add_option("--min-leaf", c_params.min_leaf, "minimum leaf size");
    crossval->add_option("--out", c_out, "output CSV path");
    auto* c_seed_opt = crossval->add_option("--seed", c_common.seed, "master seed");
    crossval->add_option("--threads", c_common.threads, "worker threads (0 = auto)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;  // usage error
    }

    try {
        if (train->parsed()) {
            ConfigFile cfg;
            if (!t_common.config_path.empty()) cfg.load(t_common.config_path);
            cfg.fill(t_data_opt, "data", t_data);
            cfg.fill(t_y_opt, "y", t_y);
            cfg.fill(t_seed_opt, "seed", t_common.seed);
            if (t_seed_opt->count() == 0 && !cfg.data.contains("seed")) t_common.seed = fresh_seed();
            t_params.seed = t_common.seed;
            t_params.n_threads = t_common.threads;

            json echo{{"cmd", "train"},      {"data", t_data},         {"y", t_y},
                      {"estimator", t_estimator}, {"trees", t_params.n_trees}, {"mtry", t_params.mtry},
                      {"min_leaf", t_params.min_leaf}, {"honest", t_params.honest},
                      {"inference", t_inference}, {"seed", t_common.seed}};
            print_header("train", t_common.seed, orf::resolve_threads(t_common.threads), echo);

            orf::CsvOptions csv_opts;
            csv_opts.categorical_columns = split_list(t_cat);
            csv_opts.continuous_columns = split_list(t_not_cat);
            const orf::Dataset ds = orf::load_csv(t_data, t_y, csv_opts);
            std::cout << "loaded " << ds.n_rows() << " rows, " << ds.n_cols() << " covariates, "
                      << ds.n_classes << " classes\n";

            if (t_estimator == "ologit") {
                if (t_inference) throw Error("BadParams", "--inference applies to forest estimators");
                const orf::OlogitModel model = orf::fit_ologit(ds);
                orf::save_json(orf::to_json(model), t_out);
                std::cout << "ologit: loglik " << model.loglik << ", "
                          << (model.converged ? "converged" : "NOT converged") << " in "
                          << model.n_iter << " iterations\n";
            } else {
                const orf::Variant variant = t_estimator == "multinomial" ? orf::Variant::multinomial
                                                                          : orf::Variant::ordered;
                if (t_estimator != "ordered" && t_estimator != "multinomial")
                    throw Error("BadParams", "unknown estimator '" + t_estimator + "'");
                const orf::OrderedForestModel model =
                    orf::fit_ordered_forest(ds, t_params, variant, t_inference);
                for (const std::string& w : model.warnings) std::cout << "warning: " << w << "\n";
                orf::save_json(orf::to_json(model), t_out);
                if (t_oob) {
                    const orf::Matrix probs =
                        orf::predict_proba(model, ds.X, !t_inference, t_common.threads);
                    const orf::ScoreReport score = orf::score_against_classes(ds.y, probs);
                    std::cout << "training metrics (" << (t_inference ? "honest-half" : "out-of-bag")
                              << "): rps " << score.arps << ", mse " << score.amse << "\n";
                }
                std::cout << "model: " << orf::variant_name(model.variant) << ", "
                          << model.n_forests() << " forests x " << t_params.n_trees
                          << " trees, inference_ready=" << (model.inference_ready ? "true" : "false")
                          << "\n";
            }
            std::cout << "saved " << t_out << "\n";
            return 0;
        }

        if (predict_cmd->parsed()) {
            json echo{{"cmd", "predict"}, {"model", p_model}, {"data", p_data}};
            print_header("predict", 0, orf::resolve_threads(p_common.threads), echo);
            const json j = orf::load_json(p_model);
            const auto [header, X_all] = load_csv_matrix(p_data);
            std::ostringstream csv;
            if (orf::model_type(j) == "ologit") {
                const orf::OlogitModel model = orf::ologit_from_json(j);
                const orf::Matrix X = select_columns(X_all, header, model.train_meta.col_names);
                orf::write_probs_csv(orf::predict_proba_ologit(model, X), model.class_map, csv);
            } else {
                const orf::OrderedForestModel model = orf::ordered_forest_from_json(j);
                const orf::Matrix X = select_columns(X_all, header, model.train_meta.col_names);
                orf::write_probs_csv(orf::predict_proba(model, X, false, p_common.threads),
                                     model.class_map, csv);
            }
            if (p_out.empty())
                std::cout << csv.str();
            else {
                write_text_file(p_out, csv.str());
                std::cout << "wrote " << p_out << "\n";
            }
            return 0;
        }

        if (margins->parsed()) {
            json echo{{"cmd", "margins"}, {"model", m_model}, {"data", m_data},
                      {"at", m_at},       {"inference", m_inference}};
            print_header("margins", 0, orf::resolve_threads(m_common.threads), echo);
            if (m_at != "all" && m_at != "mean")
                throw Error("BadParams", "--at must be 'all' or 'mean'");
            const orf::EvalKind kind =
                m_at == "all" ? orf::EvalKind::mean_effect : orf::EvalKind::effect_at_mean;

            const json j = orf::load_json(m_model);
            orf::EffectsTable table;
            if (orf::model_type(j) == "ologit") {
                if (m_inference)
                    throw Error("NotInferenceReady", "the ologit baseline reports no standard errors");
                const orf::OlogitModel model = orf::ologit_from_json(j);
                orf::CsvOptions csv_opts;
                orf::Dataset ds = orf::load_csv(m_data, m_y, csv_opts);
                ds.X = select_columns(ds.X, ds.col_names, model.train_meta.col_names);
                ds.col_names = model.train_meta.col_names;
                ds.categorical_mask = model.train_meta.categorical_mask;
                table = orf::marginal_effects(model, ds, kind);
            } else {
                const orf::OrderedForestModel model = orf::ordered_forest_from_json(j);
                orf::CsvOptions csv_opts;
                orf::Dataset ds = orf::load_csv(m_data, m_y, csv_opts);
                ds.X = select_columns(ds.X, ds.col_names, model.train_meta.col_names);
                ds.col_names = model.train_meta.col_names;
                ds.categorical_mask = model.train_meta.categorical_mask;
                table = orf::marginal_effects(model, ds, kind, m_inference, m_common.threads);
            }
            orf::print_effects_table(table, std::cout);
            if (!m_out.empty()) {
                std::ostringstream csv;
                orf::write_effects_csv(table, csv);
                write_text_file(m_out, csv.str());
                std::cout << "wrote " << m_out << "\n";
            }
            return 0;
        }

        if (simulate->parsed()) {
            ConfigFile cfg;
            if (!s_common.config_path.empty()) cfg.load(s_common.config_path);
            cfg.fill(s_est_opt, "estimators", s_estimators);
            cfg.fill(s_reps_opt, "reps", s_reps);
            cfg.fill(s_train_opt, "train_n", s_train_n);
            cfg.fill(s_test_opt, "test_n", s_test_n);
            cfg.fill(s_seed_opt, "seed", s_common.seed);

            if (s_list) {
                for (const orf::DgpConfig& c : orf::enumerate_dgps())
                    std::cout << c.id << "\t" << c.label() << "\n";
                return 0;
            }
            if (s_seed_opt->count() == 0 && !cfg.data.contains("seed")) s_common.seed = fresh_seed();

            orf::DgpConfig config;
            if (!s_dgp.empty()) {
                config = orf::find_dgp(s_dgp);
            } else {
                config.n_classes = s_classes;
                config.noise = s_noise;
                config.nonlinear = s_nonlinear;
                config.multicollinear = s_multi;
                config.random_thresholds = s_random_t;
                config.high_dim = s_high;
                if (config.high_dim) config.noise = true;
                config.seed = orf::derive_seed(orf::kDefaultDgpSeed, 0xad0cULL);
            }

            std::vector<orf::EstimatorKind> kinds;
            for (const std::string& name : split_list(s_estimators)) {
                const orf::EstimatorKind kind = orf::parse_estimator(name);
                if (config.high_dim && kind == orf::EstimatorKind::ologit)
                    std::cout << "warning: ologit is skipped in high-dimensional designs\n";
                kinds.push_back(kind);
            }

            json echo{{"cmd", "simulate"}, {"dgp", config.label()}, {"estimators", s_estimators},
                      {"reps", s_reps},    {"train_n", s_train_n},  {"test_n", s_test_n},
                      {"seed", s_common.seed}};
            print_header("simulate", s_common.seed, orf::resolve_threads(s_common.threads), echo);
            std::cout << "design " << (config.id > 0 ? std::to_string(config.id) : "custom") << ": "
                      << config.label() << "\n";

            const std::vector<orf::ExperimentRow> rows =
                orf::run_experiment({config}, kinds, s_reps, s_train_n, s_test_n, s_common.seed,
                                    s_params, s_common.threads);
            std::ostringstream csv;
            orf::write_experiment_csv(rows, csv);
            std::cout << csv.str();
            if (!s_out.empty()) {
                write_text_file(s_out, csv.str());
                std::cout << "wrote " << s_out << "\n";
            }
            return 0;
        }

        if (crossval->parsed()) {
            if (c_seed_opt->count() == 0) c_common.seed = fresh_seed();
            json echo{{"cmd", "crossval"}, {"data", c_data}, {"y", c_y},
                      {"estimators", c_estimators}, {"k", c_k}, {"repeats", c_repeats},
                      {"seed", c_common.seed}};
            print_header("crossval", c_common.seed, orf::resolve_threads(c_common.threads), echo);
            const orf::Dataset ds = orf::load_csv(c_data, c_y);
            std::vector<orf::EstimatorKind> kinds;
            for (const std::string& name : split_list(c_estimators))
                kinds.push_back(orf::parse_estimator(name));
            c_params.seed = c_common.seed;
            const std::vector<orf::CrossValResult> results = orf::cross_validate(
                ds, kinds, c_k, c_repeats, c_common.seed, c_params, c_common.threads);
            std::ostringstream csv;
            orf::write_crossval_csv(c_data, results, csv);
            std::cout << csv.str();
            if (!c_out.empty()) {
                write_text_file(c_out, csv.str());
                std::cout << "wrote " << c_out << "\n";
            }
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
