#include "mimvc/dataset.hpp"

#include "mimvc/error.hpp"
#include "mimvc/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace mimvc {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::vector<std::string>> read_csv_cells(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw DataError("cannot open " + file.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        rows.push_back(std::move(cells));
    }
    return rows;
}

double parse_double(const std::string& cell, const fs::path& file, std::size_t row) {
    double value = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    if (!cell.empty() && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (cell.empty() || ec != std::errc() || ptr != last)
        throw DataError(file.string() + ": non-numeric cell '" + cell + "' in row " +
                        std::to_string(row + 1));
    return value;
}

long parse_int(const std::string& cell, const fs::path& file, std::size_t row) {
    long value = 0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size())
        throw DataError(file.string() + ": non-integer cell '" + cell + "' in row " +
                        std::to_string(row + 1));
    return value;
}

std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace

void MultiViewDataset::validate() const {
    if (views.empty()) throw DataError("dataset has no views");
    const auto n = mask.rows();
    if (mask.cols() != num_views())
        throw DataError("mask has " + std::to_string(mask.cols()) + " columns for " +
                        std::to_string(num_views()) + " views");
    if (names.size() != views.size()) throw DataError("view name count differs from view count");
    for (std::size_t v = 0; v < views.size(); ++v) {
        if (views[v].rows() != n)
            throw DataError("row-count mismatch: view '" + names[v] + "' has " +
                            std::to_string(views[v].rows()) + " rows, expected " +
                            std::to_string(n));
        if (views[v].cols() == 0) throw DataError("view '" + names[v] + "' has no columns");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        int observed = 0;
        for (Eigen::Index v = 0; v < mask.cols(); ++v) {
            if (mask(i, v) > 1) throw DataError("mask entries must be 0 or 1");
            observed += mask(i, v);
        }
        if (observed == 0)
            throw DataError("mask row " + std::to_string(i) + " has no observed view");
    }
    if (labels) {
        if (static_cast<Eigen::Index>(labels->size()) != n)
            throw DataError("labels length differs from sample count");
        const int c = labels->empty() ? 0 : *std::max_element(labels->begin(), labels->end()) + 1;
        if (c < 2) throw DataError("labels must contain at least two classes");
        if (num_clusters && *num_clusters != c)
            throw DataError("cluster count disagrees with labels");
    }
}

Matrix read_matrix_csv(const fs::path& file) {
    const auto cells = read_csv_cells(file);
    if (cells.empty()) throw DataError(file.string() + " is empty");
    const auto cols = cells.front().size();
    Matrix m(static_cast<Eigen::Index>(cells.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < cells.size(); ++r) {
        if (cells[r].size() != cols)
            throw DataError(file.string() + ": ragged row " + std::to_string(r + 1));
        for (std::size_t c = 0; c < cols; ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                parse_double(cells[r][c], file, r);
    }
    return m;
}

void write_matrix_csv(const Matrix& m, const fs::path& file) {
    std::ofstream out(file);
    if (!out) throw DataError("cannot write " + file.string());
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            out << format_double(m(i, j));
        }
        out << '\n';
    }
}

Mask read_mask_csv(const fs::path& file) {
    const auto cells = read_csv_cells(file);
    if (cells.empty()) throw DataError(file.string() + " is empty");
    const auto cols = cells.front().size();
    Mask mask(static_cast<Eigen::Index>(cells.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < cells.size(); ++r) {
        if (cells[r].size() != cols)
            throw DataError(file.string() + ": ragged row " + std::to_string(r + 1));
        for (std::size_t c = 0; c < cols; ++c) {
            const long x = parse_int(cells[r][c], file, r);
            if (x != 0 && x != 1)
                throw DataError(file.string() + ": mask entries must be 0 or 1");
            mask(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                static_cast<std::uint8_t>(x);
        }
    }
    return mask;
}

void write_mask_csv(const Mask& mask, const fs::path& file) {
    std::ofstream out(file);
    if (!out) throw DataError("cannot write " + file.string());
    for (Eigen::Index i = 0; i < mask.rows(); ++i) {
        for (Eigen::Index v = 0; v < mask.cols(); ++v) {
            if (v) out << ',';
            out << static_cast<int>(mask(i, v));
        }
        out << '\n';
    }
}

MultiViewDataset load_dataset(const fs::path& dir) {
    const auto manifest_path = dir / "manifest.json";
    std::ifstream in(manifest_path);
    if (!in) throw DataError("missing manifest: " + manifest_path.string());
    json manifest;
    try {
        manifest = json::parse(in);
    } catch (const json::exception& e) {
        throw DataError("bad manifest " + manifest_path.string() + ": " + e.what());
    }

    MultiViewDataset data;
    try {
        data.names = manifest.at("views").get<std::vector<std::string>>();
        if (manifest.contains("C")) data.num_clusters = manifest.at("C").get<int>();
    } catch (const json::exception& e) {
        throw DataError("bad manifest " + manifest_path.string() + ": " + e.what());
    }
    if (data.names.empty()) throw DataError("manifest lists no views");
    if (manifest.contains("V") && manifest["V"].get<std::size_t>() != data.names.size())
        throw DataError("manifest V disagrees with the view list");

    for (const auto& name : data.names) {
        const auto file = dir / ("view_" + name + ".csv");
        if (!fs::exists(file)) throw DataError("missing view file: " + file.string());
        data.views.push_back(read_matrix_csv(file));
    }
    const auto n = data.views.front().rows();
    if (manifest.contains("N") && manifest["N"].get<Eigen::Index>() != n)
        throw DataError("row-count mismatch: manifest N=" + manifest["N"].dump() + ", view '" +
                        data.names.front() + "' has " + std::to_string(n) + " rows");
    for (std::size_t v = 1; v < data.views.size(); ++v)
        if (data.views[v].rows() != n)
            throw DataError("row-count mismatch: view '" + data.names[v] + "' has " +
                            std::to_string(data.views[v].rows()) + " rows, expected " +
                            std::to_string(n));
    for (std::size_t v = 0; v < data.views.size(); ++v)
        if (!data.views[v].allFinite())
            throw DataError("view '" + data.names[v] + "' contains NaN or Inf");

    if (const auto file = dir / "mask.csv"; fs::exists(file)) {
        data.mask = read_mask_csv(file);
        if (data.mask.rows() != n)
            throw DataError("row-count mismatch: mask.csv has " + std::to_string(data.mask.rows()) +
                            " rows, expected " + std::to_string(n));
    } else {
        data.mask = Mask::Ones(n, data.num_views());
    }

    if (const auto file = dir / "labels.csv"; fs::exists(file)) {
        const auto cells = read_csv_cells(file);
        std::vector<long> raw;
        for (std::size_t r = 0; r < cells.size(); ++r) {
            if (cells[r].size() != 1) throw DataError("labels.csv: one integer per line expected");
            raw.push_back(parse_int(cells[r][0], file, r));
        }
        if (static_cast<Eigen::Index>(raw.size()) != n)
            throw DataError("row-count mismatch: labels.csv has " + std::to_string(raw.size()) +
                            " rows, expected " + std::to_string(n));
        std::map<long, int> remap;
        for (long x : raw) remap.emplace(x, 0);
        int next = 0;
        for (auto& [value, id] : remap) id = next++;
        std::vector<int> labels;
        labels.reserve(raw.size());
        for (long x : raw) labels.push_back(remap[x]);
        data.labels = std::move(labels);
        if (!data.num_clusters) data.num_clusters = next;
    }

    data.validate();
    return data;
}

void save_dataset(const MultiViewDataset& data, const fs::path& dir) {
    data.validate();
    fs::create_directories(dir);
    json manifest;
    manifest["views"] = data.names;
    manifest["N"] = data.num_samples();
    manifest["V"] = data.num_views();
    if (data.num_clusters) manifest["C"] = *data.num_clusters;
    {
        std::ofstream out(dir / "manifest.json");
        if (!out) throw DataError("cannot write " + (dir / "manifest.json").string());
        out << manifest.dump(2) << '\n';
    }
    for (std::size_t v = 0; v < data.views.size(); ++v)
        write_matrix_csv(data.views[v], dir / ("view_" + data.names[v] + ".csv"));
    write_mask_csv(data.mask, dir / "mask.csv");
    if (data.labels) {
        std::ofstream out(dir / "labels.csv");
        for (int y : *data.labels) out << y << '\n';
    }
}

Matrix scale_min_max(const Matrix& x) {
    if (!x.allFinite()) throw std::invalid_argument("scale_min_max: input contains NaN or Inf");
    Matrix out(x.rows(), x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        const double lo = x.col(c).minCoeff();
        const double hi = x.col(c).maxCoeff();
        if (hi > lo)
            out.col(c) = (x.col(c).array() - lo) / (hi - lo);
        else
            out.col(c).setZero();
    }
    return out;
}

MultiViewDataset scale_views(const MultiViewDataset& data) {
    MultiViewDataset out = data;
    const auto part = partition_observed(data.mask);
    for (std::size_t v = 0; v < data.views.size(); ++v) {
        const auto& obs = part.observed(v);
        out.views[v] = scatter_rows(scale_min_max(gather_rows(data.views[v], obs)), obs,
                                    data.num_samples());
    }
    return out;
}

Mask generate_mask(Eigen::Index n, Eigen::Index v, const MaskSpec& spec) {
    if (n < 1 || v < 1) throw std::invalid_argument("generate_mask: empty shape");
    const double rate = spec.missing_rate;
    const double bound = static_cast<double>(v - 1) / static_cast<double>(v);
    if (!(rate >= 0.0) || !(rate < bound || rate == 0.0))
        throw std::invalid_argument("missing rate " + std::to_string(rate) +
                                    " outside [0, (V-1)/V) = [0, " + std::to_string(bound) + ")");

    Mask mask = Mask::Ones(n, v);
    const auto target = static_cast<Eigen::Index>(std::llround(rate * static_cast<double>(n * v)));
    if (target == 0) return mask;

    std::vector<Eigen::Index> cells(static_cast<std::size_t>(n * v));
    for (std::size_t c = 0; c < cells.size(); ++c) cells[c] = static_cast<Eigen::Index>(c);
    Rng rng(spec.seed);
    rng.shuffle(cells.begin(), cells.end());

    std::vector<Eigen::Index> kept(static_cast<std::size_t>(n), v);
    Eigen::Index removed = 0;
    for (auto cell : cells) {
        if (removed == target) break;
        const auto i = cell / v;
        const auto j = cell % v;
        if (kept[i] == 1) continue;
        mask(i, j) = 0;
        --kept[i];
        ++removed;
    }
    return mask;
}

ObservedPartition partition_observed(const Mask& mask) {
    ObservedPartition part;
    part.views.resize(static_cast<std::size_t>(mask.cols()));
    for (Eigen::Index v = 0; v < mask.cols(); ++v) {
        auto& p = part.views[v];
        for (Eigen::Index i = 0; i < mask.rows(); ++i)
            (mask(i, v) ? p.observed : p.missing).push_back(i);
    }
    return part;
}

Matrix gather_rows(const Matrix& x, const IndexList& rows) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) out.row(r) = x.row(rows[r]);
    return out;
}

Matrix scatter_rows(const Matrix& src, const IndexList& rows, Eigen::Index n) {
    if (src.rows() != static_cast<Eigen::Index>(rows.size()))
        throw std::invalid_argument("scatter_rows: row count differs from index count");
    Matrix out = Matrix::Zero(n, src.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) out.row(rows[r]) = src.row(r);
    return out;
}

bool is_complete(const Mask& mask) { return (mask.array() == 1).all(); }

}  // namespace mimvc
