#include "cqrf/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "cqrf/rng.hpp"

namespace cqrf {

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_csv: cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

double parse_double_field(const std::string& field, std::size_t line_no,
                          const std::string& column) {
    double value = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) {
        throw std::runtime_error("load_csv: parse error at line " +
                                 std::to_string(line_no) + ", column '" + column +
                                 "': not a number: '" + field + "'");
    }
    return value;
}

void format_double(std::string& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
}

}  // namespace

void validate(const Dataset& d) {
    if (d.n < 1) throw std::runtime_error("dataset: n must be >= 1");
    if (d.p < 1) throw std::runtime_error("dataset: p must be >= 1");
    if (d.features.size() != d.n * d.p)
        throw std::runtime_error("dataset: features size != n*p");
    if (d.y.size() != d.n) throw std::runtime_error("dataset: y size != n");
    if (d.delta.size() != d.n) throw std::runtime_error("dataset: delta size != n");
    if (!d.latent_t.empty() && d.latent_t.size() != d.n)
        throw std::runtime_error("dataset: latent_t size != n");

    for (std::size_t i = 0; i < d.n; ++i) {
        for (std::size_t j = 0; j < d.p; ++j) {
            if (!std::isfinite(d.x(i, j)))
                throw std::runtime_error("dataset: features[" + std::to_string(i) +
                                         "][" + std::to_string(j) + "] is not finite");
        }
        if (!std::isfinite(d.y[i]))
            throw std::runtime_error("dataset: y[" + std::to_string(i) +
                                     "] is not finite");
        if (d.delta[i] != 0 && d.delta[i] != 1)
            throw std::runtime_error("dataset: delta[" + std::to_string(i) +
                                     "] must be 0 or 1");
        if (d.has_latent()) {
            if (!std::isfinite(d.latent_t[i]))
                throw std::runtime_error("dataset: latent_t[" + std::to_string(i) +
                                         "] is not finite");
            if (d.y[i] > d.latent_t[i])
                throw std::runtime_error("dataset: y[" + std::to_string(i) +
                                         "] > latent_t[" + std::to_string(i) + "]");
            const bool tied = d.y[i] == d.latent_t[i];
            if (d.delta[i] == 1 && !tied)
                throw std::runtime_error("dataset: delta[" + std::to_string(i) +
                                         "]=1 but y != latent_t");
            if (d.delta[i] == 0 && tied)
                throw std::runtime_error("dataset: delta[" + std::to_string(i) +
                                         "]=0 but y == latent_t");
        }
    }
}

Dataset load_csv(const std::string& path, bool has_latent) {
    const std::string text = read_file(path);

    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t pos = text.find('\n', start);
        if (pos == std::string::npos) pos = text.size();
        std::string line = text.substr(start, pos - start);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) lines.push_back(std::move(line));
        start = pos + 1;
    }
    if (lines.empty()) throw std::runtime_error("load_csv: '" + path + "' is empty");

    const std::vector<std::string> header = split_line(lines[0]);
    const std::size_t fixed = has_latent ? 3 : 2;  // y, delta [, t]
    if (header.size() < fixed + 1)
        throw std::runtime_error("load_csv: schema error: too few columns");
    const std::size_t p = header.size() - fixed;
    for (std::size_t j = 0; j < p; ++j) {
        if (header[j] != "x" + std::to_string(j))
            throw std::runtime_error("load_csv: schema error: expected column 'x" +
                                     std::to_string(j) + "', got '" + header[j] + "'");
    }
    if (header[p] != "y")
        throw std::runtime_error("load_csv: schema error: expected column 'y', got '" +
                                 header[p] + "'");
    if (header[p + 1] != "delta")
        throw std::runtime_error("load_csv: schema error: expected column 'delta', got '" +
                                 header[p + 1] + "'");
    if (has_latent && header[p + 2] != "t")
        throw std::runtime_error("load_csv: schema error: expected column 't', got '" +
                                 header[p + 2] + "'");

    Dataset d;
    d.p = p;
    d.n = lines.size() - 1;
    if (d.n == 0) throw std::runtime_error("load_csv: '" + path + "' has no data rows");
    d.features.resize(d.n * d.p);
    d.y.resize(d.n);
    d.delta.resize(d.n);
    if (has_latent) d.latent_t.resize(d.n);

    for (std::size_t i = 0; i < d.n; ++i) {
        const std::size_t line_no = i + 2;  // 1-based, after header
        const std::vector<std::string> fields = split_line(lines[i + 1]);
        if (fields.size() != header.size())
            throw std::runtime_error("load_csv: line " + std::to_string(line_no) +
                                     ": expected " + std::to_string(header.size()) +
                                     " fields, got " + std::to_string(fields.size()));
        for (std::size_t j = 0; j < p; ++j)
            d.features[i * p + j] = parse_double_field(fields[j], line_no, header[j]);
        d.y[i] = parse_double_field(fields[p], line_no, "y");
        const double dv = parse_double_field(fields[p + 1], line_no, "delta");
        if (dv != 0.0 && dv != 1.0)
            throw std::runtime_error("load_csv: line " + std::to_string(line_no) +
                                     " (row " + std::to_string(i) +
                                     "): delta must be 0 or 1, got '" + fields[p + 1] + "'");
        d.delta[i] = static_cast<std::uint8_t>(dv);
        if (has_latent) d.latent_t[i] = parse_double_field(fields[p + 2], line_no, "t");
    }
    return d;
}

Dataset load_csv(const std::string& path) {
    const std::string text = read_file(path);
    const std::size_t eol = text.find('\n');
    std::string header = text.substr(0, eol == std::string::npos ? text.size() : eol);
    if (!header.empty() && header.back() == '\r') header.pop_back();
    const std::vector<std::string> cols = split_line(header);
    const bool has_latent = !cols.empty() && cols.back() == "t";
    return load_csv(path, has_latent);
}

std::string to_csv(const Dataset& d) {
    std::string out;
    out.reserve(d.n * (d.p + 3) * 20);
    for (std::size_t j = 0; j < d.p; ++j) {
        out += "x" + std::to_string(j) + ",";
    }
    out += "y,delta";
    if (d.has_latent()) out += ",t";
    out += "\n";
    for (std::size_t i = 0; i < d.n; ++i) {
        for (std::size_t j = 0; j < d.p; ++j) {
            format_double(out, d.x(i, j));
            out += ',';
        }
        format_double(out, d.y[i]);
        out += ',';
        out += d.delta[i] ? '1' : '0';
        if (d.has_latent()) {
            out += ',';
            format_double(out, d.latent_t[i]);
        }
        out += '\n';
    }
    return out;
}

void save_csv(const Dataset& d, const std::string& path) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("save_csv: cannot open '" + tmp + "'");
        out << to_csv(d);
        if (!out) throw std::runtime_error("save_csv: write failed for '" + tmp + "'");
    }
    std::filesystem::rename(tmp, path);
}

Dataset subset(const Dataset& d, std::span<const std::uint32_t> rows) {
    Dataset out;
    out.n = rows.size();
    out.p = d.p;
    out.features.reserve(out.n * out.p);
    out.y.reserve(out.n);
    out.delta.reserve(out.n);
    if (d.has_latent()) out.latent_t.reserve(out.n);
    for (std::uint32_t r : rows) {
        const auto row = d.row(r);
        out.features.insert(out.features.end(), row.begin(), row.end());
        out.y.push_back(d.y[r]);
        out.delta.push_back(d.delta[r]);
        if (d.has_latent()) out.latent_t.push_back(d.latent_t[r]);
    }
    return out;
}

std::pair<Dataset, Dataset> split(const Dataset& d, const SplitSpec& spec) {
    if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
        throw std::invalid_argument("split: train_fraction must be in (0,1)");
    if (d.n < 2) throw std::invalid_argument("split: need n >= 2");

    // llround = round half away from zero, the documented rounding rule.
    const auto n_train = static_cast<std::size_t>(
        std::llround(spec.train_fraction * static_cast<double>(d.n)));
    if (n_train == 0 || n_train >= d.n)
        throw std::invalid_argument("split: train_fraction leaves an empty side");

    std::vector<std::uint32_t> order(d.n);
    std::iota(order.begin(), order.end(), 0u);
    SplitMix64 rng(spec.seed);
    for (std::size_t i = d.n - 1; i > 0; --i)
        std::swap(order[i], order[rng.next_below(i + 1)]);

    std::vector<std::uint32_t> train(order.begin(), order.begin() + n_train);
    std::vector<std::uint32_t> test(order.begin() + n_train, order.end());
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    return {subset(d, train), subset(d, test)};
}

}  // namespace cqrf
