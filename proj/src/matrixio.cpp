#include "snapcp/matrixio.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <spdlog/spdlog.h>

#include "snapcp/error.hpp"

namespace snapcp {

namespace fs = std::filesystem;

namespace {

constexpr std::array<char, 4> kMatrixMagic = {'S', 'N', 'P', 'M'};

std::uint32_t read_u32_le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void append_u32_le(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

void check_finite(const DenseMatrix& m, const fs::path& path) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) {
            if (!std::isfinite(m(r, c))) {
                throw ValidationError(path.string() + ": non-finite value at row " +
                                      std::to_string(r) + ", col " + std::to_string(c));
            }
        }
    }
}

DenseMatrix parse_binary(const std::string& bytes, const fs::path& path) {
    if (bytes.size() < 12 || !std::equal(kMatrixMagic.begin(), kMatrixMagic.end(), bytes.begin())) {
        throw ValidationError(path.string() + ": missing SNPM header");
    }
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    const std::uint32_t rows = read_u32_le(p + 4);
    const std::uint32_t cols = read_u32_le(p + 8);
    const std::size_t payload = bytes.size() - 12;
    const std::size_t expected = static_cast<std::size_t>(rows) * cols;
    if (payload % 4 != 0 || payload / 4 != expected) {
        throw ValidationError(path.string() + ": header declares " + std::to_string(rows) + "x" +
                              std::to_string(cols) + " but payload holds " +
                              std::to_string(payload / 4) + " values");
    }
    std::vector<double> data(expected);
    for (std::size_t i = 0; i < expected; ++i) {
        data[i] = std::bit_cast<float>(read_u32_le(p + 12 + 4 * i));
    }
    return DenseMatrix(rows, cols, std::move(data));
}

std::string_view trim(std::string_view s) {
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

DenseMatrix parse_csv(const std::string& text, const fs::path& path) {
    std::vector<double> data;
    std::size_t cols = 0;
    std::size_t rows = 0;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto body = trim(line);
        if (body.empty()) continue;
        std::size_t count = 0;
        std::size_t start = 0;
        while (true) {
            const auto comma = body.find(',', start);
            const auto cell = trim(body.substr(start, comma == std::string_view::npos
                                                          ? std::string_view::npos
                                                          : comma - start));
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
                throw ValidationError(path.string() + ": malformed CSV cell '" + std::string(cell) +
                                      "' on line " + std::to_string(line_no));
            }
            data.push_back(v);
            ++count;
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (rows == 0) {
            cols = count;
        } else if (count != cols) {
            throw ValidationError(path.string() + ": line " + std::to_string(line_no) + " has " +
                                  std::to_string(count) + " cells, expected " +
                                  std::to_string(cols));
        }
        ++rows;
    }
    return DenseMatrix(rows, cols, std::move(data));
}

std::uint32_t parse_index(std::string_view token, const fs::path& path, std::size_t line_no) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (token.empty() || ec != std::errc() || ptr != token.data() + token.size() ||
        v > std::numeric_limits<std::uint32_t>::max()) {
        throw ValidationError(path.string() + ": bad integer '" + std::string(token) + "' on line " +
                              std::to_string(line_no));
    }
    return static_cast<std::uint32_t>(v);
}

}  // namespace

MatrixFormat format_from_path(const fs::path& path) {
    return path.extension() == ".csv" ? MatrixFormat::csv : MatrixFormat::binary;
}

DenseMatrix load_matrix(const fs::path& path, MatrixFormat format) {
    const std::string bytes = read_file(path);
    DenseMatrix m = format == MatrixFormat::binary ? parse_binary(bytes, path) : parse_csv(bytes, path);
    check_finite(m, path);
    return m;
}

void write_matrix(const DenseMatrix& m, const fs::path& path, MatrixFormat format) {
    std::string out;
    if (format == MatrixFormat::binary) {
        out.reserve(12 + 4 * m.rows() * m.cols());
        out.append(kMatrixMagic.begin(), kMatrixMagic.end());
        append_u32_le(out, static_cast<std::uint32_t>(m.rows()));
        append_u32_le(out, static_cast<std::uint32_t>(m.cols()));
        for (double v : m.data()) append_u32_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    } else {
        std::array<char, 64> buf{};
        for (std::size_t r = 0; r < m.rows(); ++r) {
            for (std::size_t c = 0; c < m.cols(); ++c) {
                if (c) out.push_back(',');
                const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), m(r, c));
                out.append(buf.data(), res.ptr);
            }
            out.push_back('\n');
        }
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

std::vector<std::uint32_t> load_labels(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    std::vector<std::uint32_t> labels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto body = trim(line);
        if (body.empty() || body.front() == '#') continue;
        labels.push_back(parse_index(body, path, line_no));
    }
    return labels;
}

void write_labels(std::span<const std::uint32_t> labels, const fs::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (auto l : labels) out << l << '\n';
}

std::vector<std::pair<NodeId, NodeId>> load_edges(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    std::vector<std::pair<NodeId, NodeId>> edges;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto body = trim(line);
        if (body.empty() || body.front() == '#') continue;
        const auto split = body.find_first_of(" \t,");
        if (split == std::string_view::npos) {
            throw ValidationError(path.string() + ": expected two node ids on line " +
                                  std::to_string(line_no));
        }
        const auto u = parse_index(trim(body.substr(0, split)), path, line_no);
        const auto v = parse_index(trim(body.substr(split + 1)), path, line_no);
        edges.emplace_back(u, v);
    }
    return edges;
}

DatasetBundle make_bundle(std::string name, DenseMatrix features, DenseMatrix probabilities,
                          LabelVector labels, std::span<const std::pair<NodeId, NodeId>> edges,
                          const BundleOptions& options) {
    const std::size_t n = labels.size();
    if (features.rows() != n || probabilities.rows() != n) {
        throw ValidationError("row-count mismatch: features " + std::to_string(features.rows()) +
                              ", probabilities " + std::to_string(probabilities.rows()) +
                              ", labels " + std::to_string(n));
    }
    if (probabilities.cols() != labels.num_classes) {
        throw ValidationError("probability matrix has " + std::to_string(probabilities.cols()) +
                              " columns but the class count is " +
                              std::to_string(labels.num_classes));
    }
    labels.validate();

    for (std::size_t i = 0; i < n; ++i) {
        auto row = probabilities.row(i);
        double sum = 0.0;
        for (double p : row) {
            if (p < 0.0) {
                throw ValidationError("negative probability in row " + std::to_string(i));
            }
            sum += p;
        }
        if (options.renormalize) {
            if (sum <= 0.0) throw ValidationError("probability row " + std::to_string(i) + " sums to 0");
            for (double& p : row) p /= sum;
        } else if (std::abs(sum - 1.0) > options.probability_tolerance) {
            throw ValidationError("probability row " + std::to_string(i) + " sums to " +
                                  std::to_string(sum));
        }
    }

    DatasetBundle b;
    b.name = std::move(name);
    b.arcs.reserve(2 * edges.size());
    for (const auto& [u, v] : edges) {
        if (u >= n || v >= n) {
            throw ValidationError("edge (" + std::to_string(u) + ", " + std::to_string(v) +
                                  ") has an endpoint outside [0, " + std::to_string(n) + ")");
        }
        if (u == v) {
            ++b.dropped_self_loops;
            continue;
        }
        b.arcs.emplace_back(u, v);
        b.arcs.emplace_back(v, u);
    }
    std::sort(b.arcs.begin(), b.arcs.end());
    b.arcs.erase(std::unique(b.arcs.begin(), b.arcs.end()), b.arcs.end());
    if (b.dropped_self_loops > 0) {
        spdlog::warn("{}: dropped {} self-loop edge(s)", b.name, b.dropped_self_loops);
    }
    b.features = std::move(features);
    b.probabilities = std::move(probabilities);
    b.labels = std::move(labels);
    return b;
}

DatasetBundle load_bundle(const fs::path& manifest, const BundleOptions& options) {
    std::ifstream in(manifest);
    if (!in) throw ValidationError("cannot open manifest " + manifest.string());
    std::map<std::string, std::string, std::less<>> kv;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto body = trim(line);
        if (body.empty() || body.front() == '#') continue;
        const auto eq = body.find('=');
        if (eq == std::string_view::npos) {
            throw ValidationError(manifest.string() + ": expected key=value on line " +
                                  std::to_string(line_no));
        }
        kv[std::string(trim(body.substr(0, eq)))] = std::string(trim(body.substr(eq + 1)));
    }
    auto require = [&](std::string_view key) -> const std::string& {
        const auto it = kv.find(key);
        if (it == kv.end()) {
            throw ValidationError(manifest.string() + ": missing key '" + std::string(key) + "'");
        }
        return it->second;
    };
    const fs::path base = manifest.parent_path();
    auto resolve = [&](std::string_view key) {
        const fs::path p = require(key);
        return p.is_absolute() ? p : base / p;
    };

    LabelVector labels;
    const auto& classes = require("classes");
    labels.num_classes = parse_index(classes, manifest, 0);
    labels.labels = load_labels(resolve("labels"));

    const auto features_path = resolve("features");
    const auto probs_path = resolve("probabilities");
    auto features = load_matrix(features_path, format_from_path(features_path));
    auto probs = load_matrix(probs_path, format_from_path(probs_path));
    const auto edges = load_edges(resolve("edges"));

    const auto name_it = kv.find("name");
    std::string name = name_it != kv.end() ? name_it->second : manifest.stem().string();
    auto bundle = make_bundle(std::move(name), std::move(features), std::move(probs),
                              std::move(labels), edges, options);
    bundle.features_path = features_path;
    return bundle;
}

fs::path write_bundle(const DatasetBundle& bundle, const fs::path& dir) {
    fs::create_directories(dir);
    write_matrix(bundle.features, dir / "features.bin", MatrixFormat::binary);
    write_matrix(bundle.probabilities, dir / "probabilities.bin", MatrixFormat::binary);
    write_labels(bundle.labels.labels, dir / "labels.txt");
    {
        std::ofstream out(dir / "edges.txt", std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + (dir / "edges.txt").string());
        for (const auto& [u, v] : bundle.arcs) {
            if (u < v) out << u << ' ' << v << '\n';
        }
    }
    const fs::path manifest = dir / "manifest.txt";
    std::ofstream out(manifest, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + manifest.string());
    out << "name=" << bundle.name << '\n'
        << "classes=" << bundle.num_classes() << '\n'
        << "features=features.bin\n"
        << "probabilities=probabilities.bin\n"
        << "labels=labels.txt\n"
        << "edges=edges.txt\n";
    return manifest;
}

}  // namespace snapcp
