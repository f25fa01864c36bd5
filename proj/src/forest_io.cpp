#include "cqrf/forest_io.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace cqrf {

namespace {

using nlohmann::json;

constexpr const char* kFormat = "cqrf-forest";
constexpr int kVersion = 1;

json node_to_json(const Tree& tree, std::int32_t id) {
    const TreeNode& node = tree.nodes[static_cast<std::size_t>(id)];
    if (node.is_leaf()) return json{{"members", node.members}};
    return json{{"feature", node.feature},
                {"threshold", node.threshold},
                {"left", node_to_json(tree, node.left)},
                {"right", node_to_json(tree, node.right)}};
}

std::int32_t node_from_json(const json& j, Tree& tree) {
    const auto id = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    if (j.contains("members")) {
        tree.nodes[static_cast<std::size_t>(id)].members =
            j.at("members").get<std::vector<std::uint32_t>>();
        return id;
    }
    const auto feature = j.at("feature").get<std::int32_t>();
    const auto threshold = j.at("threshold").get<double>();
    const std::int32_t left = node_from_json(j.at("left"), tree);
    const std::int32_t right = node_from_json(j.at("right"), tree);
    TreeNode& node = tree.nodes[static_cast<std::size_t>(id)];
    node.feature = feature;
    node.threshold = threshold;
    node.left = left;
    node.right = right;
    return id;
}

std::string rule_name(SplitRule rule) {
    return rule == SplitRule::cart_variance ? "cart_variance" : "grf_quantile";
}

SplitRule rule_from_name(const std::string& name) {
    if (name == "cart_variance") return SplitRule::cart_variance;
    if (name == "grf_quantile") return SplitRule::grf_quantile;
    throw std::invalid_argument("forest_from_json: unknown split_rule '" + name + "'");
}

}  // namespace

json forest_to_json(const Forest& f) {
    json trees = json::array();
    for (const Tree& tree : f.trees) trees.push_back(node_to_json(tree, 0));
    return json{{"format", kFormat},
                {"version", kVersion},
                {"training_n", f.training_n},
                {"config",
                 {{"num_trees", f.config.num_trees},
                  {"min_node_size", f.config.min_node_size},
                  {"mtry", f.config.mtry},
                  {"subsample_fraction", f.config.subsample_fraction},
                  {"honest", f.config.honest},
                  {"gamma", f.config.gamma},
                  {"split_rule", rule_name(f.config.split_rule)},
                  {"grf_taus", f.config.grf_taus},
                  {"seed", f.config.seed}}},
                {"trees", trees}};
}

Forest forest_from_json(const json& j) {
    if (!j.contains("format") || j.at("format").get<std::string>() != kFormat)
        throw std::invalid_argument("forest_from_json: not a cqrf-forest document");
    if (j.at("version").get<int>() != kVersion)
        throw std::invalid_argument("forest_from_json: unsupported version");

    Forest f;
    const json& cfg = j.at("config");
    f.config.num_trees = cfg.at("num_trees").get<std::uint32_t>();
    f.config.min_node_size = cfg.at("min_node_size").get<std::uint32_t>();
    f.config.mtry = cfg.at("mtry").get<std::uint32_t>();
    f.config.subsample_fraction = cfg.at("subsample_fraction").get<double>();
    f.config.honest = cfg.at("honest").get<bool>();
    f.config.gamma = cfg.at("gamma").get<double>();
    f.config.split_rule = rule_from_name(cfg.at("split_rule").get<std::string>());
    f.config.grf_taus = cfg.at("grf_taus").get<std::vector<double>>();
    f.config.seed = cfg.at("seed").get<std::uint64_t>();
    f.training_n = j.at("training_n").get<std::uint32_t>();

    const json& trees = j.at("trees");
    f.trees.resize(trees.size());
    for (std::size_t b = 0; b < trees.size(); ++b) node_from_json(trees[b], f.trees[b]);
    if (f.trees.size() != f.config.num_trees)
        throw std::invalid_argument("forest_from_json: tree count disagrees with config");
    return f;
}

void save_forest(const Forest& f, const std::filesystem::path& path) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("save_forest: cannot open " + tmp.string());
        out << forest_to_json(f).dump();
        out.put('\n');
        if (!out) throw std::runtime_error("save_forest: write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

Forest load_forest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_forest: cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::runtime_error("load_forest: " + path.string() + ": " + e.what());
    }
    return forest_from_json(j);
}

}  // namespace cqrf
