#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "orf/common.hpp"
#include "orf/ologit.hpp"
#include "orf/ordered_forest.hpp"

namespace orf {

using nlohmann::json;

inline constexpr int kModelFormatVersion = 1;

namespace io_detail {

inline json matrix_to_json(const Matrix& m) {
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}};
}

inline Matrix matrix_from_json(const json& j) {
    Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
    m.data() = j.at("data").get<std::vector<double>>();
    require(m.data().size() == m.rows() * m.cols(), "BadModelFile", "matrix payload size mismatch");
    return m;
}

inline json meta_to_json(const TrainMeta& meta) {
    return json{{"col_names", meta.col_names},
                {"categorical", std::vector<int>(meta.categorical_mask.begin(), meta.categorical_mask.end())},
                {"mean", meta.mean},
                {"sd", meta.sd},
                {"min", meta.min},
                {"max", meta.max}};
}

inline TrainMeta meta_from_json(const json& j) {
    TrainMeta meta;
    meta.col_names = j.at("col_names").get<std::vector<std::string>>();
    const auto cat = j.at("categorical").get<std::vector<int>>();
    meta.categorical_mask.assign(cat.begin(), cat.end());
    meta.mean = j.at("mean").get<std::vector<double>>();
    meta.sd = j.at("sd").get<std::vector<double>>();
    meta.min = j.at("min").get<std::vector<double>>();
    meta.max = j.at("max").get<std::vector<double>>();
    return meta;
}

inline json params_to_json(const ForestParams& p) {
    return json{{"n_trees", p.n_trees},
                {"mtry", p.mtry},
                {"min_leaf", p.min_leaf},
                {"honest", p.honest},
                {"subsample_fraction", p.subsample_fraction},
                {"sample_with_replacement", p.sample_with_replacement},
                {"seed", p.seed}};
}

inline ForestParams params_from_json(const json& j) {
    ForestParams p;
    p.n_trees = j.at("n_trees").get<int>();
    p.mtry = j.at("mtry").get<int>();
    p.min_leaf = j.at("min_leaf").get<int>();
    p.honest = j.at("honest").get<bool>();
    p.subsample_fraction = j.at("subsample_fraction").get<double>();
    p.sample_with_replacement = j.at("sample_with_replacement").get<bool>();
    p.seed = j.at("seed").get<std::uint64_t>();
    return p;
}

inline json forest_to_json(const Forest& f) {
    json trees = json::array();
    for (const Tree& tree : f.trees) {
        json nodes = json::array();
        for (const TreeNode& node : tree.nodes) {
            if (node.is_leaf())
                nodes.push_back(json{{"val", node.value}, {"members", node.member_ids}});
            else
                nodes.push_back(json{{"var", node.split_var},
                                     {"split", node.split_value},
                                     {"left", node.left},
                                     {"right", node.right}});
        }
        trees.push_back(json{{"nodes", std::move(nodes)},
                             {"sample_ids", tree.sample_ids},
                             {"estimation_ids", tree.estimation_ids}});
    }
    return json{{"n_train", f.n_train}, {"params", params_to_json(f.params)}, {"trees", std::move(trees)}};
}

inline Forest forest_from_json(const json& j) {
    Forest f;
    f.n_train = j.at("n_train").get<std::size_t>();
    f.params = params_from_json(j.at("params"));
    for (const json& jt : j.at("trees")) {
        Tree tree;
        tree.sample_ids = jt.at("sample_ids").get<std::vector<int>>();
        tree.estimation_ids = jt.at("estimation_ids").get<std::vector<int>>();
        for (const json& jn : jt.at("nodes")) {
            TreeNode node;
            if (jn.contains("var")) {
                node.split_var = jn.at("var").get<int>();
                node.split_value = jn.at("split").get<double>();
                node.left = jn.at("left").get<int>();
                node.right = jn.at("right").get<int>();
            } else {
                node.value = jn.at("val").get<double>();
                node.member_ids = jn.at("members").get<std::vector<int>>();
            }
            tree.nodes.push_back(std::move(node));
        }
        f.trees.push_back(std::move(tree));
    }
    return f;
}

}  // namespace io_detail

inline json to_json(const OrderedForestModel& model) {
    json j{{"format", "orf-model"},
           {"format_version", kModelFormatVersion},
           {"type", "ordered_forest"},
           {"variant", variant_name(model.variant)},
           {"n_classes", model.n_classes},
           {"class_map", model.class_map},
           {"honest", model.honest},
           {"inference_ready", model.inference_ready},
           {"train_meta", io_detail::meta_to_json(model.train_meta)},
           {"warnings", model.warnings}};
    json forests = json::array();
    for (const Forest& f : model.forests) forests.push_back(io_detail::forest_to_json(f));
    j["forests"] = std::move(forests);
    if (model.inference_ready) {
        j["half_assignments"] =
            std::vector<int>(model.half_assignments.begin(), model.half_assignments.end());
        j["half2_X"] = io_detail::matrix_to_json(model.half2_X);
        j["half2_y"] = model.half2_y;
    }
    return j;
}

inline OrderedForestModel ordered_forest_from_json(const json& j) {
    require(j.value("format", "") == "orf-model" && j.value("type", "") == "ordered_forest",
            "BadModelFile", "not an ordered forest model file");
    require(j.value("format_version", -1) == kModelFormatVersion, "BadModelFile",
            "unsupported model format version");
    OrderedForestModel model;
    model.variant =
        j.at("variant").get<std::string>() == "ordered" ? Variant::ordered : Variant::multinomial;
    model.n_classes = j.at("n_classes").get<int>();
    model.class_map = j.at("class_map").get<std::vector<long long>>();
    model.honest = j.at("honest").get<bool>();
    model.inference_ready = j.at("inference_ready").get<bool>();
    model.train_meta = io_detail::meta_from_json(j.at("train_meta"));
    model.warnings = j.at("warnings").get<std::vector<std::string>>();
    for (const json& jf : j.at("forests")) model.forests.push_back(io_detail::forest_from_json(jf));
    if (model.inference_ready) {
        const auto half = j.at("half_assignments").get<std::vector<int>>();
        model.half_assignments.assign(half.begin(), half.end());
        model.half2_X = io_detail::matrix_from_json(j.at("half2_X"));
        model.half2_y = j.at("half2_y").get<std::vector<int>>();
        model.half2_indicators = make_indicators(model.half2_y, model.n_classes, model.variant);
        model.half2_index.resize(model.forests.size());
        for (std::size_t m = 0; m < model.forests.size(); ++m)
            model.half2_index[m] = build_leaf_index(model.forests[m], model.half2_X);
    }
    return model;
}

inline json to_json(const OlogitModel& model) {
    return json{{"format", "orf-model"},
                {"format_version", kModelFormatVersion},
                {"type", "ologit"},
                {"beta", model.beta},
                {"alpha", model.alpha},
                {"n_classes", model.n_classes},
                {"converged", model.converged},
                {"loglik", model.loglik},
                {"n_iter", model.n_iter},
                {"class_map", model.class_map},
                {"train_meta", io_detail::meta_to_json(model.train_meta)}};
}

inline OlogitModel ologit_from_json(const json& j) {
    require(j.value("format", "") == "orf-model" && j.value("type", "") == "ologit", "BadModelFile",
            "not an ordered logit model file");
    require(j.value("format_version", -1) == kModelFormatVersion, "BadModelFile",
            "unsupported model format version");
    OlogitModel model;
    model.beta = j.at("beta").get<std::vector<double>>();
    model.alpha = j.at("alpha").get<std::vector<double>>();
    model.n_classes = j.at("n_classes").get<int>();
    model.converged = j.at("converged").get<bool>();
    model.loglik = j.at("loglik").get<double>();
    model.n_iter = j.at("n_iter").get<int>();
    model.class_map = j.at("class_map").get<std::vector<long long>>();
    model.train_meta = io_detail::meta_from_json(j.at("train_meta"));
    return model;
}

inline void save_json(const json& j, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "FileNotFound", "cannot write '" + path + "'");
    out << j.dump() << "\n";
}

inline json load_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "FileNotFound", "cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw Error("BadModelFile", std::string("cannot parse '") + path + "': " + e.what());
    }
    return j;
}

inline std::string model_type(const json& j) { return j.value("type", ""); }

}  // namespace orf
