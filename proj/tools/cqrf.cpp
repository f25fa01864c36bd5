// Command-line front end: simulate / train / predict / survcurve / weights /
// evaluate / benchmark. Every output is written atomically (temp file +
// rename) with a .meta.json sidecar recording the fully resolved flags, and
// identical flags always reproduce identical bytes.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cqrf/dataset.hpp"
#include "cqrf/forest.hpp"
#include "cqrf/forest_io.hpp"
#include "cqrf/metrics.hpp"
#include "cqrf/parallel.hpp"
#include "cqrf/quantile.hpp"
#include "cqrf/rng.hpp"
#include "cqrf/simgen.hpp"
#include "cqrf/survival.hpp"
#include "cqrf/weights.hpp"

namespace {

using nlohmann::json;

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt_short(double v) {  // for metric names and meta labels
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

void write_text_atomic(const std::string& path, const std::string& text) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open '" + tmp + "' for writing");
        out << text;
        if (!out) throw std::runtime_error("write failed for '" + tmp + "'");
    }
    std::filesystem::rename(tmp, path);
}

// Sidecar with the resolved configuration. Thread counts are deliberately
// omitted: outputs must be byte-identical whatever the parallelism.
void write_meta(const std::string& out_path, const std::string& command, json flags) {
    json meta{{"command", command}, {"flags", std::move(flags)}};
    write_text_atomic(out_path + ".meta.json", meta.dump(2) + "\n");
}

void mirror_as_json(const std::string& out_path, const json& rows) {
    std::filesystem::path p(out_path);
    p.replace_extension(".json");
    if (p == std::filesystem::path(out_path)) p += ".json";
    write_text_atomic(p.string(), rows.dump(2) + "\n");
}

struct SurvivalChoice {
    cqrf::SurvivalKind kind = cqrf::SurvivalKind::beran_forest;
    std::size_t knn_k = 0;
};

SurvivalChoice parse_survival(const std::string& name) {
    if (name == "beran-forest") return {cqrf::SurvivalKind::beran_forest, 0};
    if (name == "unit") return {cqrf::SurvivalKind::unit, 0};
    if (name.rfind("km-knn", 0) == 0) {
        const std::string digits = name.substr(6);
        std::size_t k = 0;  // bare "km-knn" keeps the full support
        if (!digits.empty()) {
            const auto res =
                std::from_chars(digits.data(), digits.data() + digits.size(), k);
            if (res.ec != std::errc{} || res.ptr != digits.data() + digits.size() || k == 0)
                throw std::invalid_argument("--survival: bad neighbor count in '" + name +
                                            "'");
        }
        return {cqrf::SurvivalKind::km_knn, k};
    }
    throw std::invalid_argument(
        "--survival: expected beran-forest, km-knnN, or unit; got '" + name + "'");
}

std::vector<double> parse_query_point(const std::string& text) {
    std::vector<double> x;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t comma = text.find(',', pos);
        if (comma == std::string::npos) comma = text.size();
        const char* first = text.data() + pos;
        const char* last = text.data() + comma;
        while (first < last && *first == ' ') ++first;
        double v = 0.0;
        const auto res = std::from_chars(first, last, v);
        if (res.ec != std::errc{} || res.ptr != last)
            throw std::invalid_argument("--x: cannot parse '" + text + "'");
        x.push_back(v);
        pos = comma + 1;
        if (comma == text.size()) break;
    }
    return x;
}

void check_tau(double tau, const char* flag) {
    if (!(tau > 0.0 && tau < 1.0))
        throw std::invalid_argument(std::string(flag) + ": value " + fmt_short(tau) +
                                    " outside (0, 1)");
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateOpts {
    std::string model = "aft";
    std::size_t n = 1000;
    std::size_t p = 0;  // 0: model default
    std::uint64_t seed = 0;
    std::string out;
    std::string data;         // inject mode input
    double multiplier = 2.0;  // inject mode censoring strength
};

void run_simulate(const SimulateOpts& o) {
    cqrf::Dataset d;
    if (o.model == "inject") {
        if (o.data.empty())
            throw std::invalid_argument("--data is required with --model inject");
        d = cqrf::inject_censoring(cqrf::load_csv(o.data), o.multiplier, o.seed);
    } else {
        cqrf::SimSpec spec;
        spec.n = o.n;
        spec.seed = o.seed;
        if (o.model == "aft") {
            spec.model = cqrf::SimModel::aft;
            spec.p = o.p == 0 ? 20 : o.p;
        } else if (o.model == "hetero") {
            spec.model = cqrf::SimModel::hetero;
            spec.p = o.p == 0 ? 40 : o.p;
        } else if (o.model == "sine") {
            spec.model = cqrf::SimModel::sine;
            spec.p = o.p == 0 ? 1 : o.p;
        } else {
            throw std::invalid_argument("--model: expected aft, hetero, sine, or inject; got '" +
                                        o.model + "'");
        }
        d = cqrf::generate(spec);
    }
    cqrf::save_csv(d, o.out);
    json flags{{"model", o.model}, {"seed", o.seed}, {"out", o.out}};
    if (o.model == "inject") {
        flags["data"] = o.data;
        flags["multiplier"] = o.multiplier;
    } else {
        flags["n"] = d.n;
        flags["p"] = d.p;
    }
    write_meta(o.out, "simulate", std::move(flags));
}

// ---------------------------------------------------------------------------
// train

struct TrainOpts {
    std::string data;
    std::string model_out;
    std::string weights = "quantile";
    std::uint32_t trees = 1000;
    std::uint32_t min_node_size = 20;
    std::uint32_t mtry = 0;
    double gamma = 0.05;
    double subsample = 0.0;  // 0: family default
    bool honest = false;
    bool honest_set = false;
    std::uint64_t seed = 0;
    int threads = 0;
};

cqrf::ForestConfig resolve_train_config(const TrainOpts& o) {
    cqrf::SplitRule rule;
    if (o.weights == "quantile")
        rule = cqrf::SplitRule::cart_variance;
    else if (o.weights == "generalized")
        rule = cqrf::SplitRule::grf_quantile;
    else
        throw std::invalid_argument("--weights: expected quantile or generalized; got '" +
                                    o.weights + "'");
    cqrf::ForestConfig cfg = cqrf::ForestConfig::defaults_for(rule);
    cfg.num_trees = o.trees;
    cfg.min_node_size = o.min_node_size;
    cfg.mtry = o.mtry;
    cfg.gamma = o.gamma;
    if (o.subsample != 0.0) cfg.subsample_fraction = o.subsample;
    if (o.honest_set) cfg.honest = o.honest;
    cfg.seed = o.seed;
    return cfg;
}

json config_to_flags(const cqrf::ForestConfig& cfg) {
    return json{{"trees", cfg.num_trees},
                {"min_node_size", cfg.min_node_size},
                {"mtry", cfg.mtry},
                {"gamma", cfg.gamma},
                {"subsample", cfg.subsample_fraction},
                {"honest", cfg.honest},
                {"split_rule",
                 cfg.split_rule == cqrf::SplitRule::cart_variance ? "cart_variance"
                                                                  : "grf_quantile"},
                {"grf_taus", cfg.grf_taus},
                {"seed", cfg.seed}};
}

void run_train(const TrainOpts& o) {
    const cqrf::Dataset d = cqrf::load_csv(o.data);
    const cqrf::Forest f =
        cqrf::fit(d, resolve_train_config(o), cqrf::resolve_threads(o.threads));
    cqrf::save_forest(f, o.model_out);
    json flags = config_to_flags(f.config);
    flags["data"] = o.data;
    flags["model_out"] = o.model_out;
    write_meta(o.model_out, "train", std::move(flags));
}

// ---------------------------------------------------------------------------
// predict

struct PredictOpts {
    std::string model;
    std::string data;
    std::string train;  // defaults to data
    std::vector<double> taus;
    double level = 0.0;  // 0: quantile mode
    std::string survival = "beran-forest";
    std::string out;
    int threads = 0;
    bool json_mirror = false;
};

void run_predict(const PredictOpts& o) {
    for (double t : o.taus) check_tau(t, "--tau");
    if (o.level != 0.0 && !(o.level > 0.0 && o.level < 1.0))
        throw std::invalid_argument("--level: value " + fmt_short(o.level) +
                                    " outside (0, 1)");
    if (o.taus.empty() && o.level == 0.0)
        throw std::invalid_argument("predict: one of --tau or --level is required");
    const SurvivalChoice surv = parse_survival(o.survival);

    const cqrf::Forest f = cqrf::load_forest(o.model);
    const std::string train_path = o.train.empty() ? o.data : o.train;
    const cqrf::Dataset train = cqrf::load_csv(train_path);
    const cqrf::Dataset queries =
        train_path == o.data ? train : cqrf::load_csv(o.data);
    if (train.n != f.training_n)
        throw std::invalid_argument("predict: training data has " + std::to_string(train.n) +
                                    " rows but the model was fit on " +
                                    std::to_string(f.training_n));
    if (queries.p != train.p)
        throw std::invalid_argument("predict: query and training data disagree on p");

    const int threads = cqrf::resolve_threads(o.threads);
    std::string csv;
    json rows = json::array();

    if (o.level == 0.0) {
        std::vector<cqrf::QuantileEstimate> results(queries.n * o.taus.size());
        cqrf::parallel_for(queries.n, threads, [&](std::size_t i) {
            const cqrf::WeightVector w = cqrf::forest_weights(f, queries.row(i));
            for (std::size_t t = 0; t < o.taus.size(); ++t)
                results[i * o.taus.size() + t] =
                    cqrf::solve_quantile(w, train, o.taus[t], surv.kind, surv.knn_k);
        });
        csv = "row,tau,q_hat,score_abs,degenerate\n";
        for (std::size_t i = 0; i < queries.n; ++i)
            for (std::size_t t = 0; t < o.taus.size(); ++t) {
                const cqrf::QuantileEstimate& e = results[i * o.taus.size() + t];
                csv += std::to_string(i) + ',' + fmt(o.taus[t]) + ',' + fmt(e.q_hat) +
                       ',' + fmt(e.score_abs) + ',' + (e.degenerate ? "1\n" : "0\n");
                if (o.json_mirror)
                    rows.push_back(json{{"row", i},
                                        {"tau", o.taus[t]},
                                        {"q_hat", e.q_hat},
                                        {"score_abs", e.score_abs},
                                        {"degenerate", e.degenerate}});
            }
    } else {
        std::vector<cqrf::IntervalEstimate> results(queries.n);
        cqrf::parallel_for(queries.n, threads, [&](std::size_t i) {
            const cqrf::WeightVector w = cqrf::forest_weights(f, queries.row(i));
            results[i] = cqrf::interval_from_weights(w, train, o.level, surv.kind);
        });
        csv = "row,level,lower,upper,swapped,degenerate\n";
        for (std::size_t i = 0; i < queries.n; ++i) {
            const cqrf::IntervalEstimate& e = results[i];
            csv += std::to_string(i) + ',' + fmt(o.level) + ',' + fmt(e.lower) + ',' +
                   fmt(e.upper) + ',' + (e.swapped ? "1," : "0,") +
                   (e.degenerate ? "1\n" : "0\n");
            if (o.json_mirror)
                rows.push_back(json{{"row", i},
                                    {"level", o.level},
                                    {"lower", e.lower},
                                    {"upper", e.upper},
                                    {"swapped", e.swapped},
                                    {"degenerate", e.degenerate}});
        }
    }

    write_text_atomic(o.out, csv);
    if (o.json_mirror) mirror_as_json(o.out, rows);
    json flags{{"model", o.model},      {"data", o.data},
               {"train", train_path},   {"survival", o.survival},
               {"out", o.out}};
    if (o.level == 0.0)
        flags["taus"] = o.taus;
    else
        flags["level"] = o.level;
    write_meta(o.out, "predict", std::move(flags));
}

// ---------------------------------------------------------------------------
// survcurve / weights: single-query dumps

struct QueryOpts {
    std::string model;
    std::string train;
    std::string x_text;
    std::string data;
    std::int64_t row = -1;
    std::string survival = "beran-forest";
    double bandwidth = 0.0;
    std::string out;
    bool json_mirror = false;
};

std::vector<double> resolve_query_point(const QueryOpts& o) {
    if (!o.x_text.empty()) return parse_query_point(o.x_text);
    if (o.data.empty() || o.row < 0)
        throw std::invalid_argument("need either --x or both --data and --row");
    const cqrf::Dataset d = cqrf::load_csv(o.data);
    if (static_cast<std::size_t>(o.row) >= d.n)
        throw std::invalid_argument("--row: index " + std::to_string(o.row) +
                                    " out of range for " + std::to_string(d.n) + " rows");
    const auto r = d.row(static_cast<std::size_t>(o.row));
    return {r.begin(), r.end()};
}

void run_survcurve(const QueryOpts& o) {
    const std::vector<double> x = resolve_query_point(o);
    const cqrf::Dataset train = cqrf::load_csv(o.train);

    cqrf::SurvivalCurve curve;
    if (o.survival.rfind("nw-", 0) == 0) {
        cqrf::KernelSpec kernel;
        if (o.survival == "nw-box")
            kernel.shape = cqrf::KernelShape::box;
        else if (o.survival == "nw-gaussian")
            kernel.shape = cqrf::KernelShape::gaussian;
        else
            throw std::invalid_argument("--survival: expected nw-box or nw-gaussian; got '" +
                                        o.survival + "'");
        kernel.bandwidth =
            o.bandwidth > 0.0 ? o.bandwidth : cqrf::default_bandwidth(train);
        curve = cqrf::beran_nw(train, x, kernel);
    } else {
        const SurvivalChoice surv = parse_survival(o.survival);
        if (o.model.empty())
            throw std::invalid_argument("--model is required unless --survival is nw-*");
        const cqrf::Forest f = cqrf::load_forest(o.model);
        if (train.n != f.training_n)
            throw std::invalid_argument("survcurve: training data does not match the model");
        const cqrf::WeightVector w = cqrf::forest_weights(f, x);
        curve = surv.kind == cqrf::SurvivalKind::km_knn
                    ? cqrf::km_knn(train, w, surv.knn_k == 0 ? w.support_size() : surv.knn_k)
                    : cqrf::beran_forest(train, w);
    }

    std::string csv = "jump_time,value\n";
    json rows = json::array();
    for (std::size_t j = 0; j < curve.jump_times.size(); ++j) {
        csv += fmt(curve.jump_times[j]) + ',' + fmt(curve.values[j]) + '\n';
        if (o.json_mirror)
            rows.push_back(
                json{{"jump_time", curve.jump_times[j]}, {"value", curve.values[j]}});
    }
    write_text_atomic(o.out, csv);
    if (o.json_mirror) mirror_as_json(o.out, rows);
    write_meta(o.out, "survcurve",
               json{{"model", o.model},
                    {"train", o.train},
                    {"survival", o.survival},
                    {"x", x},
                    {"out", o.out}});
}

void run_weights(const QueryOpts& o) {
    const std::vector<double> x = resolve_query_point(o);
    const cqrf::Forest f = cqrf::load_forest(o.model);
    const cqrf::WeightVector w = cqrf::forest_weights(f, x);

    std::string csv = "index,weight\n";
    json rows = json::array();
    for (const cqrf::WeightEntry& e : w.entries) {
        csv += std::to_string(e.index) + ',' + fmt(e.weight) + '\n';
        if (o.json_mirror)
            rows.push_back(json{{"index", e.index}, {"weight", e.weight}});
    }
    write_text_atomic(o.out, csv);
    if (o.json_mirror) mirror_as_json(o.out, rows);
    write_meta(o.out, "weights", json{{"model", o.model}, {"x", x}, {"out", o.out}});
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateOpts {
    std::string pred;
    std::string data;
    std::string out;
    bool json_mirror = false;
};

struct PredTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

PredTable read_pred_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("evaluate: cannot open '" + path + "'");
    PredTable table;
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("evaluate: '" + path + "' is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::stringstream hs(line);
    for (std::string cell; std::getline(hs, cell, ',');) table.header.push_back(cell);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        std::size_t pos = 0;
        while (pos <= line.size()) {
            std::size_t comma = line.find(',', pos);
            if (comma == std::string::npos) comma = line.size();
            double v = 0.0;
            const auto res = std::from_chars(line.data() + pos, line.data() + comma, v);
            if (res.ec != std::errc{} || res.ptr != line.data() + comma)
                throw std::runtime_error("evaluate: parse error at '" + path + "' line " +
                                         std::to_string(line_no));
            row.push_back(v);
            pos = comma + 1;
            if (comma == line.size()) break;
        }
        if (row.size() != table.header.size())
            throw std::runtime_error("evaluate: ragged row at '" + path + "' line " +
                                     std::to_string(line_no));
        table.rows.push_back(std::move(row));
    }
    return table;
}

std::size_t column(const PredTable& t, const std::string& name) {
    const auto it = std::find(t.header.begin(), t.header.end(), name);
    if (it == t.header.end())
        throw std::runtime_error("evaluate: prediction file lacks column '" + name + "'");
    return static_cast<std::size_t>(it - t.header.begin());
}

std::optional<double> loss_std_error(const std::vector<double>& losses, double mean) {
    if (losses.size() < 2) return std::nullopt;
    double ss = 0.0;
    for (double l : losses) ss += (l - mean) * (l - mean);
    const auto n = static_cast<double>(losses.size());
    return std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
}

void run_evaluate(const EvaluateOpts& o) {
    const PredTable preds = read_pred_csv(o.pred);
    const cqrf::Dataset d = cqrf::load_csv(o.data);

    const bool uncensored =
        std::all_of(d.delta.begin(), d.delta.end(), [](std::uint8_t v) { return v == 1; });
    const std::vector<double>* truth = nullptr;
    if (d.has_latent())
        truth = &d.latent_t;
    else if (uncensored)
        truth = &d.y;

    std::vector<cqrf::MetricReport> reports;
    const bool interval_table =
        std::find(preds.header.begin(), preds.header.end(), "level") != preds.header.end();

    if (interval_table) {
        if (!truth)
            throw std::invalid_argument(
                "evaluate: coverage needs the latent response column 't' in --data");
        const std::size_t c_row = column(preds, "row");
        const std::size_t c_level = column(preds, "level");
        const std::size_t c_lo = column(preds, "lower");
        const std::size_t c_hi = column(preds, "upper");
        std::vector<double> levels;
        for (const auto& r : preds.rows)
            if (std::find(levels.begin(), levels.end(), r[c_level]) == levels.end())
                levels.push_back(r[c_level]);
        for (double level : levels) {
            std::vector<std::pair<double, double>> intervals;
            std::vector<double> t_true;
            for (const auto& r : preds.rows) {
                if (r[c_level] != level) continue;
                const auto row = static_cast<std::size_t>(r[c_row]);
                if (row >= d.n)
                    throw std::invalid_argument("evaluate: prediction row out of range");
                intervals.emplace_back(r[c_lo], r[c_hi]);
                t_true.push_back((*truth)[row]);
            }
            const double cov = cqrf::interval_coverage(intervals, t_true);
            const auto n = static_cast<double>(intervals.size());
            reports.push_back({"coverage_level" + fmt_short(level), cov, intervals.size(),
                               std::sqrt(cov * (1.0 - cov) / n)});
        }
    } else {
        const std::size_t c_row = column(preds, "row");
        const std::size_t c_tau = column(preds, "tau");
        const std::size_t c_q = column(preds, "q_hat");
        std::vector<double> taus;
        for (const auto& r : preds.rows)
            if (std::find(taus.begin(), taus.end(), r[c_tau]) == taus.end())
                taus.push_back(r[c_tau]);
        for (double tau : taus) {
            std::vector<std::size_t> row_ids;
            std::vector<double> q_hats;
            for (const auto& r : preds.rows) {
                if (r[c_tau] != tau) continue;
                const auto row = static_cast<std::size_t>(r[c_row]);
                if (row >= d.n)
                    throw std::invalid_argument("evaluate: prediction row out of range");
                row_ids.push_back(row);
                q_hats.push_back(r[c_q]);
            }
            if (truth) {
                std::vector<double> t_true, losses;
                for (std::size_t k = 0; k < row_ids.size(); ++k)
                    t_true.push_back((*truth)[row_ids[k]]);
                const double mean = cqrf::quantile_loss(q_hats, t_true, tau);
                for (std::size_t k = 0; k < q_hats.size(); ++k) {
                    const double u = t_true[k] - q_hats[k];
                    losses.push_back(u * (tau - (u < 0.0 ? 1.0 : 0.0)));
                }
                reports.push_back({"quantile_loss_tau" + fmt_short(tau), mean,
                                   q_hats.size(), loss_std_error(losses, mean)});
            }
            std::vector<double> y, risk;
            std::vector<std::uint8_t> delta;
            for (std::size_t k = 0; k < row_ids.size(); ++k) {
                y.push_back(d.y[row_ids[k]]);
                delta.push_back(d.delta[row_ids[k]]);
                risk.push_back(-q_hats[k]);  // later predicted event time = lower risk
            }
            try {
                reports.push_back({"c_index_tau" + fmt_short(tau),
                                   cqrf::c_index(y, delta, risk), y.size(), std::nullopt});
            } catch (const std::invalid_argument&) {
                std::cerr << "evaluate: no comparable pairs for c_index at tau "
                          << fmt_short(tau) << "; skipping\n";
            }
        }
        if (!truth)
            std::cerr << "evaluate: --data has censored rows and no latent column; "
                         "quantile loss skipped\n";
    }

    std::string csv = "name,value,n_evaluated,std_error\n";
    json rows = json::array();
    for (const cqrf::MetricReport& r : reports) {
        csv += r.name + ',' + fmt(r.value) + ',' + std::to_string(r.n_evaluated) + ',' +
               (r.std_error ? fmt(*r.std_error) : "") + '\n';
        if (o.json_mirror) {
            json row{{"name", r.name}, {"value", r.value}, {"n_evaluated", r.n_evaluated}};
            if (r.std_error) row["std_error"] = *r.std_error;
            rows.push_back(std::move(row));
        }
    }
    write_text_atomic(o.out, csv);
    if (o.json_mirror) mirror_as_json(o.out, rows);
    write_meta(o.out, "evaluate",
               json{{"pred", o.pred}, {"data", o.data}, {"out", o.out}});
}

// ---------------------------------------------------------------------------
// benchmark

struct BenchmarkOpts {
    std::string model;  // aft | hetero | sine, or empty with --data
    std::string data;
    std::size_t n = 1000;
    std::size_t test_n = 200;
    std::size_t p = 0;
    std::vector<std::uint32_t> node_sizes{10, 20, 40, 80};
    std::vector<double> taus{0.3, 0.5, 0.7};
    std::size_t reps = 10;
    std::uint32_t trees = 1000;
    std::uint32_t mtry = 0;
    double gamma = 0.05;
    std::string metric = "quantile-loss";
    double inject_multiplier = 2.0;
    std::uint64_t seed = 0;
    int threads = 0;
    std::string out;
    bool json_mirror = false;
};

// Forests behind the six methods: each fit serves one corrected and one
// uncorrected solver pass. Oracle families train on the latent response.
struct MethodSpec {
    const char* name;
    cqrf::SplitRule rule;
    bool oracle;
    cqrf::SurvivalKind kind;
};

constexpr MethodSpec kMethods[] = {
    {"crf-quantile", cqrf::SplitRule::cart_variance, false, cqrf::SurvivalKind::beran_forest},
    {"crf-generalized", cqrf::SplitRule::grf_quantile, false, cqrf::SurvivalKind::beran_forest},
    {"qrf", cqrf::SplitRule::cart_variance, false, cqrf::SurvivalKind::unit},
    {"grf", cqrf::SplitRule::grf_quantile, false, cqrf::SurvivalKind::unit},
    {"qrf-oracle", cqrf::SplitRule::cart_variance, true, cqrf::SurvivalKind::unit},
    {"grf-oracle", cqrf::SplitRule::grf_quantile, true, cqrf::SurvivalKind::unit},
};
constexpr std::size_t kNumMethods = std::size(kMethods);

cqrf::Dataset as_uncensored_latent(const cqrf::Dataset& d) {
    cqrf::Dataset out = d;
    out.y = d.latent_t;
    std::fill(out.delta.begin(), out.delta.end(), std::uint8_t{1});
    out.latent_t = d.latent_t;
    return out;
}

struct BenchContext {
    const BenchmarkOpts& o;
    std::vector<bool> method_on;
    cqrf::Dataset real_data;  // --data mode only
    bool c_index_mode = false;
};

// One (rep, node size) cell: every requested method evaluated at every tau.
// Values are quantile losses or C-indices depending on the mode.
std::vector<double> run_cell(const BenchContext& ctx, std::size_t rep,
                             std::uint32_t node_size) {
    const BenchmarkOpts& o = ctx.o;
    const std::uint64_t cell_seed =
        cqrf::derive_seed(o.seed, rep * 1000003ULL + node_size);

    cqrf::Dataset train, test;
    if (!o.data.empty()) {
        cqrf::SplitSpec split_spec{0.8, cqrf::derive_seed(cell_seed, 0)};
        auto [tr, te] = cqrf::split(ctx.real_data, split_spec);
        test = std::move(te);
        train = ctx.c_index_mode
                    ? std::move(tr)
                    : cqrf::inject_censoring(tr, o.inject_multiplier,
                                             cqrf::derive_seed(cell_seed, 1));
    } else {
        cqrf::SimSpec spec;
        spec.model = o.model == "aft"      ? cqrf::SimModel::aft
                     : o.model == "hetero" ? cqrf::SimModel::hetero
                                           : cqrf::SimModel::sine;
        spec.p = o.p;
        spec.n = o.n;
        spec.seed = cqrf::derive_seed(cell_seed, 0);
        train = cqrf::generate(spec);
        spec.n = o.test_n;
        spec.seed = cqrf::derive_seed(cell_seed, 1);
        test = cqrf::generate(spec);
    }

    // test truth for the loss: latent response when we have it, else raw y
    // (real-data quantile-loss mode keeps the uninjected test side).
    const std::vector<double>& t_true = test.has_latent() ? test.latent_t : test.y;

    std::vector<double> values(kNumMethods * o.taus.size(),
                               std::numeric_limits<double>::quiet_NaN());
    // The four (rule, oracle) families; forests are shared by the two
    // methods differing only in the survival correction.
    for (int oracle = 0; oracle < 2; ++oracle) {
        if (oracle && !train.has_latent()) continue;
        const cqrf::Dataset fit_data = oracle ? as_uncensored_latent(train) : train;
        for (int rule_idx = 0; rule_idx < 2; ++rule_idx) {
            const auto rule = rule_idx == 0 ? cqrf::SplitRule::cart_variance
                                            : cqrf::SplitRule::grf_quantile;
            std::vector<std::size_t> members;
            for (std::size_t m = 0; m < kNumMethods; ++m)
                if (ctx.method_on[m] && kMethods[m].rule == rule &&
                    kMethods[m].oracle == (oracle == 1))
                    members.push_back(m);
            if (members.empty()) continue;

            cqrf::ForestConfig cfg = cqrf::ForestConfig::defaults_for(rule);
            cfg.num_trees = o.trees;
            cfg.min_node_size = node_size;
            cfg.mtry = o.mtry;
            cfg.gamma = o.gamma;
            cfg.seed = cqrf::derive_seed(cell_seed, 2 + 2 * oracle + rule_idx);
            const cqrf::Forest forest = cqrf::fit(fit_data, cfg, 1);

            std::vector<double> q_hat(members.size() * o.taus.size() * test.n);
            for (std::size_t i = 0; i < test.n; ++i) {
                const cqrf::WeightVector w = cqrf::forest_weights(forest, test.row(i));
                for (std::size_t mi = 0; mi < members.size(); ++mi)
                    for (std::size_t t = 0; t < o.taus.size(); ++t)
                        q_hat[(mi * o.taus.size() + t) * test.n + i] =
                            cqrf::solve_quantile(w, fit_data, o.taus[t],
                                                 kMethods[members[mi]].kind)
                                .q_hat;
            }
            for (std::size_t mi = 0; mi < members.size(); ++mi)
                for (std::size_t t = 0; t < o.taus.size(); ++t) {
                    const std::span<const double> preds(
                        q_hat.data() + (mi * o.taus.size() + t) * test.n, test.n);
                    double value;
                    if (ctx.c_index_mode) {
                        std::vector<double> risk(preds.size());
                        for (std::size_t i = 0; i < preds.size(); ++i) risk[i] = -preds[i];
                        value = cqrf::c_index(test.y, test.delta, risk);
                    } else {
                        value = cqrf::quantile_loss(preds, t_true, o.taus[t]);
                    }
                    values[members[mi] * o.taus.size() + t] = value;
                }
        }
    }
    return values;
}

void run_benchmark(const BenchmarkOpts& o, const std::vector<std::string>& methods) {
    for (double t : o.taus) check_tau(t, "--taus");
    if (o.model.empty() == o.data.empty())
        throw std::invalid_argument("benchmark: exactly one of --model or --data is required");
    if (o.metric != "quantile-loss" && o.metric != "c-index")
        throw std::invalid_argument("--metric: expected quantile-loss or c-index; got '" +
                                    o.metric + "'");
    if (!o.model.empty() && o.model != "aft" && o.model != "hetero" && o.model != "sine")
        throw std::invalid_argument("--model: expected aft, hetero, or sine; got '" +
                                    o.model + "'");
    if (o.reps == 0) throw std::invalid_argument("--reps must be positive");

    BenchContext ctx{o, std::vector<bool>(kNumMethods, methods.empty()), {}, false};
    for (const std::string& name : methods) {
        bool known = false;
        for (std::size_t m = 0; m < kNumMethods; ++m)
            if (name == kMethods[m].name) {
                ctx.method_on[m] = true;
                known = true;
            }
        if (!known) throw std::invalid_argument("--methods: unknown method '" + name + "'");
    }
    ctx.c_index_mode = o.metric == "c-index";
    if (!o.data.empty()) ctx.real_data = cqrf::load_csv(o.data);

    const bool latent_available = !ctx.c_index_mode;  // oracles need true responses
    if (!latent_available)
        for (std::size_t m = 0; m < kNumMethods; ++m)
            if (kMethods[m].oracle && ctx.method_on[m]) {
                ctx.method_on[m] = false;
                std::cerr << "benchmark: skipping " << kMethods[m].name
                          << " (no latent responses under --metric c-index)\n";
            }

    BenchmarkOpts resolved = o;
    if (resolved.p == 0 && !o.model.empty())
        resolved.p = o.model == "aft" ? 20 : o.model == "hetero" ? 40 : 1;
    const BenchContext rctx{resolved, ctx.method_on, std::move(ctx.real_data),
                            ctx.c_index_mode};

    const std::size_t cells = o.reps * o.node_sizes.size();
    std::vector<std::vector<double>> cell_values(cells);
    cqrf::parallel_for(cells, cqrf::resolve_threads(o.threads), [&](std::size_t c) {
        cell_values[c] =
            run_cell(rctx, c / o.node_sizes.size(), o.node_sizes[c % o.node_sizes.size()]);
    });

    std::string csv = "method,node_size,tau,mean_loss,std_loss\n";
    json rows = json::array();
    for (std::size_t m = 0; m < kNumMethods; ++m) {
        if (!rctx.method_on[m]) continue;
        for (std::size_t s = 0; s < o.node_sizes.size(); ++s)
            for (std::size_t t = 0; t < o.taus.size(); ++t) {
                double mean = 0.0;
                for (std::size_t r = 0; r < o.reps; ++r)
                    mean += cell_values[r * o.node_sizes.size() + s][m * o.taus.size() + t];
                mean /= static_cast<double>(o.reps);
                double ss = 0.0;
                for (std::size_t r = 0; r < o.reps; ++r) {
                    const double v =
                        cell_values[r * o.node_sizes.size() + s][m * o.taus.size() + t];
                    ss += (v - mean) * (v - mean);
                }
                const double sd =
                    o.reps > 1 ? std::sqrt(ss / static_cast<double>(o.reps - 1)) : 0.0;
                csv += std::string(kMethods[m].name) + ',' +
                       std::to_string(o.node_sizes[s]) + ',' + fmt(o.taus[t]) + ',' +
                       fmt(mean) + ',' + fmt(sd) + '\n';
                if (o.json_mirror)
                    rows.push_back(json{{"method", kMethods[m].name},
                                        {"node_size", o.node_sizes[s]},
                                        {"tau", o.taus[t]},
                                        {"mean_loss", mean},
                                        {"std_loss", sd}});
            }
    }
    write_text_atomic(o.out, csv);
    if (o.json_mirror) mirror_as_json(o.out, rows);

    json flags{{"metric", o.metric},   {"node_sizes", o.node_sizes},
               {"taus", o.taus},       {"reps", o.reps},
               {"trees", o.trees},     {"gamma", o.gamma},
               {"seed", o.seed},       {"out", o.out}};
    if (!o.model.empty()) {
        flags["model"] = o.model;
        flags["n"] = o.n;
        flags["test_n"] = o.test_n;
        flags["p"] = resolved.p;
    } else {
        flags["data"] = o.data;
        if (!rctx.c_index_mode) flags["inject_multiplier"] = o.inject_multiplier;
    }
    write_meta(o.out, "benchmark", std::move(flags));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"censored quantile regression forests"};
    app.require_subcommand(1);

    SimulateOpts sim;
    auto* c_sim = app.add_subcommand("simulate", "generate simulation data as CSV");
    c_sim->add_option("--model", sim.model, "aft | hetero | sine | inject");
    c_sim->add_option("--n", sim.n, "rows to generate");
    c_sim->add_option("--p", sim.p, "feature count (default per model)");
    c_sim->add_option("--seed", sim.seed, "RNG seed");
    c_sim->add_option("--data", sim.data, "input CSV for --model inject");
    c_sim->add_option("--multiplier", sim.multiplier,
                      "censoring mean multiplier for --model inject");
    c_sim->add_option("--out", sim.out, "output CSV path")->required();
    c_sim->callback([&] { run_simulate(sim); });

    TrainOpts tr;
    auto* c_train = app.add_subcommand("train", "fit a forest and save it as JSON");
    c_train->add_option("--data", tr.data, "training CSV")->required();
    c_train->add_option("--model-out", tr.model_out, "model JSON path")->required();
    c_train->add_option("--weights", tr.weights, "quantile | generalized");
    c_train->add_option("--trees", tr.trees, "number of trees");
    c_train->add_option("--min-node-size", tr.min_node_size, "minimum leaf size");
    c_train->add_option("--mtry", tr.mtry, "features per split (0: ceil(sqrt(p)))");
    c_train->add_option("--gamma", tr.gamma, "child-balance floor");
    auto* sub_opt = c_train->add_option("--subsample", tr.subsample,
                                        "subsample fraction (default per family)");
    auto* honest_opt = c_train->add_flag("--honest,!--no-honest", tr.honest,
                                         "split/estimation sample honesty");
    c_train->add_option("--seed", tr.seed, "RNG seed");
    c_train->add_option("--threads", tr.threads, "worker threads (0: auto)");
    c_train->callback([&] {
        tr.honest_set = honest_opt->count() > 0;
        if (sub_opt->count() == 0) tr.subsample = 0.0;
        run_train(tr);
    });

    PredictOpts pr;
    auto* c_pred = app.add_subcommand("predict", "batch quantiles or intervals");
    c_pred->add_option("--model", pr.model, "model JSON")->required();
    c_pred->add_option("--data", pr.data, "query CSV")->required();
    c_pred->add_option("--train", pr.train, "training CSV (default: --data)");
    auto* tau_opt =
        c_pred->add_option("--tau", pr.taus, "target quantiles")->delimiter(',');
    auto* level_opt = c_pred->add_option("--level", pr.level, "central interval level");
    tau_opt->excludes(level_opt);
    c_pred->add_option("--survival", pr.survival, "beran-forest | km-knnN | unit");
    c_pred->add_option("--threads", pr.threads, "worker threads (0: auto)");
    c_pred->add_flag("--json", pr.json_mirror, "also write a JSON mirror");
    c_pred->add_option("--out", pr.out, "output CSV path")->required();
    c_pred->callback([&] { run_predict(pr); });

    QueryOpts sc;
    auto* c_surv = app.add_subcommand("survcurve", "dump a censoring-survival curve");
    c_surv->add_option("--model", sc.model, "model JSON (forest estimators)");
    c_surv->add_option("--train", sc.train, "training CSV")->required();
    c_surv->add_option("--x", sc.x_text, "query point as comma-separated values");
    c_surv->add_option("--data", sc.data, "CSV holding the query row");
    c_surv->add_option("--row", sc.row, "row index into --data");
    c_surv->add_option("--survival", sc.survival,
                       "beran-forest | km-knnN | nw-box | nw-gaussian");
    c_surv->add_option("--bandwidth", sc.bandwidth, "kernel bandwidth for nw-*");
    c_surv->add_flag("--json", sc.json_mirror, "also write a JSON mirror");
    c_surv->add_option("--out", sc.out, "output CSV path")->required();
    c_surv->callback([&] { run_survcurve(sc); });

    QueryOpts wq;
    auto* c_w = app.add_subcommand("weights", "dump forest weights for a query point");
    c_w->add_option("--model", wq.model, "model JSON")->required();
    c_w->add_option("--x", wq.x_text, "query point as comma-separated values");
    c_w->add_option("--data", wq.data, "CSV holding the query row");
    c_w->add_option("--row", wq.row, "row index into --data");
    c_w->add_flag("--json", wq.json_mirror, "also write a JSON mirror");
    c_w->add_option("--out", wq.out, "output CSV path")->required();
    c_w->callback([&] { run_weights(wq); });

    EvaluateOpts ev;
    auto* c_eval = app.add_subcommand("evaluate", "score predictions against data");
    c_eval->add_option("--pred", ev.pred, "prediction CSV from `predict`")->required();
    c_eval->add_option("--data", ev.data, "evaluation CSV")->required();
    c_eval->add_flag("--json", ev.json_mirror, "also write a JSON mirror");
    c_eval->add_option("--out", ev.out, "output CSV path")->required();
    c_eval->callback([&] { run_evaluate(ev); });

    BenchmarkOpts bm;
    std::vector<std::string> bm_methods;
    auto* c_bm = app.add_subcommand("benchmark", "method sweep over node sizes and seeds");
    c_bm->add_option("--model", bm.model, "aft | hetero | sine");
    c_bm->add_option("--data", bm.data, "user CSV (real-data protocol)");
    c_bm->add_option("--n", bm.n, "training rows per rep (simulated modes)");
    c_bm->add_option("--test-n", bm.test_n, "test rows per rep (simulated modes)");
    c_bm->add_option("--p", bm.p, "feature count (default per model)");
    c_bm->add_option("--node-sizes", bm.node_sizes, "minimum leaf sizes")->delimiter(',');
    c_bm->add_option("--taus", bm.taus, "target quantiles")->delimiter(',');
    c_bm->add_option("--reps", bm.reps, "repetitions per cell");
    c_bm->add_option("--trees", bm.trees, "trees per forest");
    c_bm->add_option("--mtry", bm.mtry, "features per split (0: ceil(sqrt(p)))");
    c_bm->add_option("--gamma", bm.gamma, "child-balance floor");
    c_bm->add_option("--methods", bm_methods, "subset of methods to run")->delimiter(',');
    c_bm->add_option("--metric", bm.metric, "quantile-loss | c-index");
    c_bm->add_option("--inject-multiplier", bm.inject_multiplier,
                     "censoring mean multiplier for --data quantile-loss runs");
    c_bm->add_option("--seed", bm.seed, "RNG seed");
    c_bm->add_option("--threads", bm.threads, "worker threads (0: auto)");
    c_bm->add_flag("--json", bm.json_mirror, "also write a JSON mirror");
    c_bm->add_option("--out", bm.out, "output CSV path")->required();
    c_bm->callback([&] { run_benchmark(bm, bm_methods); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
