#ifndef CLUSTOPT_VIZ_HPP
#define CLUSTOPT_VIZ_HPP

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "clustopt/clustering.hpp"
#include "clustopt/common.hpp"
#include "clustopt/metrics.hpp"
#include "clustopt/representation.hpp"
#include "clustopt/trajectory.hpp"

namespace clustopt {

namespace detail {

inline std::string fmt2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

inline std::string xml_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char ch : s) {
        switch (ch) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(ch);
        }
    }
    return out;
}

// Linear white-to-dark-blue ramp; t in [0,1].
inline std::string ramp_color(double t) {
    t = std::clamp(t, 0.0, 1.0);
    const auto lerp = [t](double a, double b) {
        return static_cast<int>(std::lround(a + (b - a) * t));
    };
    char buf[16];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", lerp(222, 8), lerp(235, 48),
                  lerp(247, 107));
    return buf;
}

inline const char* text_color(double t) { return t > 0.55 ? "#ffffff" : "#000000"; }

struct SvgCell {
    std::string fill;
    std::string label;  // empty = no annotation
};

// Shared annotated-grid renderer.  Output is byte-deterministic: fixed
// formatting, no timestamps, no generated ids.
inline void write_svg_grid(const std::filesystem::path& path,
                           const std::string& title,
                           const std::vector<std::string>& row_labels,
                           const std::vector<std::string>& col_labels,
                           const std::vector<std::vector<SvgCell>>& cells,
                           int cell_w, int cell_h, int bottom_margin,
                           int row_label_step) {
    const int rows = static_cast<int>(row_labels.size());
    const int cols = static_cast<int>(col_labels.size());
    const int left = 58, top = 30, right = 10;
    const int width = left + cols * cell_w + right;
    const int height = top + rows * cell_h + bottom_margin;

    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
        << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << ' '
        << height << "\">\n";
    out << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height
        << "\" fill=\"#ffffff\"/>\n";
    out << "<text x=\"" << left << "\" y=\"18\" font-family=\"monospace\" "
           "font-size=\"12\">"
        << xml_escape(title) << "</text>\n";

    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const int x = left + c * cell_w;
            const int y = top + r * cell_h;
            const auto& cell = cells[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
            out << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell_w
                << "\" height=\"" << cell_h << "\" fill=\"" << cell.fill
                << "\" stroke=\"#cccccc\" stroke-width=\"0.5\"/>\n";
            if (!cell.label.empty()) {
                const char* color =
                    cell.fill.size() == 7 && cell.fill[1] < '8' ? "#ffffff"
                                                                : "#000000";
                out << "<text x=\"" << x + cell_w / 2 << "\" y=\""
                    << y + cell_h / 2 + 3
                    << "\" font-family=\"monospace\" font-size=\"9\" "
                       "text-anchor=\"middle\" fill=\""
                    << color << "\">" << xml_escape(cell.label) << "</text>\n";
            }
        }
    }
    for (int r = 0; r < rows; ++r) {
        if (r % row_label_step != 0) continue;
        out << "<text x=\"" << left - 4 << "\" y=\"" << top + r * cell_h + cell_h / 2 + 3
            << "\" font-family=\"monospace\" font-size=\"9\" "
               "text-anchor=\"end\">"
            << xml_escape(row_labels[static_cast<std::size_t>(r)]) << "</text>\n";
    }
    const int label_y = top + rows * cell_h + 12;
    for (int c = 0; c < cols; ++c) {
        const int x = left + c * cell_w + cell_w / 2;
        out << "<text x=\"" << x << "\" y=\"" << label_y
            << "\" font-family=\"monospace\" font-size=\"9\" text-anchor=\"end\" "
               "transform=\"rotate(-55 "
            << x << ' ' << label_y << ")\">"
            << xml_escape(col_labels[static_cast<std::size_t>(c)]) << "</text>\n";
    }
    out << "</svg>\n";
    if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace detail

// Centroid label in raw coordinates, the "(4.99,4.99)" style of the axis
// annotations: inverse-scaled, two decimals.
inline std::string centroid_label(const ClusterModel& model, int cluster) {
    const Eigen::VectorXd raw =
        model.scaler.inverse(model.centroids.row(cluster));
    std::string out = "(";
    for (int j = 0; j < raw.size(); ++j) {
        if (j > 0) out += ",";
        out += detail::fmt2(raw(j));
    }
    out += ")";
    return out;
}

// Heatmap of one trajectory representation: rows are iterations, columns are
// clusters labelled with their raw-space centroid, cells annotated with the
// membership count.  Zero cells are pure white; the ramp over [1, s] starts
// at a visibly non-white tint.
inline void render_trajectory_heatmap(const TrajectoryRepresentation& rep,
                                      const ClusterModel& model,
                                      const std::filesystem::path& path) {
    if (rep.cluster_count() != model.cluster_count())
        throw UsageError("render_trajectory_heatmap: representation has " +
                         std::to_string(rep.cluster_count()) +
                         " clusters, model has " +
                         std::to_string(model.cluster_count()));
    const int b = rep.iterations();
    const int c = rep.cluster_count();
    int s = 0;
    for (int i = 0; i < b; ++i) s = std::max(s, static_cast<int>(rep.counts.row(i).sum()));

    std::vector<std::string> row_labels(static_cast<std::size_t>(b));
    for (int i = 0; i < b; ++i) row_labels[static_cast<std::size_t>(i)] = std::to_string(i);
    std::vector<std::string> col_labels(static_cast<std::size_t>(c));
    for (int j = 0; j < c; ++j)
        col_labels[static_cast<std::size_t>(j)] =
            "c" + std::to_string(j) + " " + centroid_label(model, j);

    std::vector<std::vector<detail::SvgCell>> cells(
        static_cast<std::size_t>(b),
        std::vector<detail::SvgCell>(static_cast<std::size_t>(c)));
    for (int i = 0; i < b; ++i) {
        for (int j = 0; j < c; ++j) {
            const int v = rep.counts(i, j);
            auto& cell = cells[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            if (v == 0) {
                cell.fill = "#ffffff";  // empty cluster
            } else {
                const double t = s > 1 ? static_cast<double>(v - 1) / (s - 1) : 1.0;
                cell.fill = detail::ramp_color(t);
                cell.label = std::to_string(v);
            }
        }
    }
    const std::string title = rep.algorithm_id + " on " + rep.problem_id +
                              " (seed " + std::to_string(rep.seed) + ")";
    const int label_len = static_cast<int>(col_labels.back().size());
    detail::write_svg_grid(path, title, row_labels, col_labels, cells, 36, 16,
                           24 + 5 * label_len, b > 50 ? 5 : 1);
}

// Annotated heatmap of a labelled matrix in [0,1] (stability tables and
// similarity matrices).  NaN cells render white without annotation.
inline void render_matrix_heatmap(const LabeledMatrix& matrix,
                                  const std::string& title,
                                  const std::filesystem::path& path) {
    const int rows = static_cast<int>(matrix.row_labels.size());
    const int cols = static_cast<int>(matrix.col_labels.size());
    std::vector<std::vector<detail::SvgCell>> cells(
        static_cast<std::size_t>(rows),
        std::vector<detail::SvgCell>(static_cast<std::size_t>(cols)));
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const double v = matrix.values(r, c);
            auto& cell = cells[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
            if (std::isnan(v)) {
                cell.fill = "#ffffff";
            } else {
                cell.fill = detail::ramp_color(v);
                cell.label = detail::fmt2(v);
            }
        }
    }
    int label_len = 1;
    for (const auto& l : matrix.col_labels)
        label_len = std::max(label_len, static_cast<int>(l.size()));
    detail::write_svg_grid(path, title, matrix.row_labels, matrix.col_labels,
                           cells, 52, 20, 24 + 5 * label_len, 1);
}

// Similarity clustermap: axes reordered by the average-linkage leaf order.
inline void render_similarity_clustermap(const SimilarityMatrix& matrix,
                                         const std::filesystem::path& path,
                                         const std::string& title = "algorithm similarity") {
    const auto& order = matrix.leaf_order;
    const auto n = static_cast<Eigen::Index>(order.size());
    LabeledMatrix reordered;
    reordered.corner = "algorithm";
    reordered.values.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        reordered.row_labels.push_back(
            matrix.algorithms[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]);
        reordered.col_labels.push_back(
            matrix.algorithms[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]);
        for (Eigen::Index j = 0; j < n; ++j)
            reordered.values(i, j) = matrix.values(order[static_cast<std::size_t>(i)],
                                                   order[static_cast<std::size_t>(j)]);
    }
    render_matrix_heatmap(reordered, title, path);
}

// Lossless numeric CSV exports for external plotting.

inline void dump_plot_csv(const TrajectoryRepresentation& rep,
                          const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << "iteration";
    for (int j = 0; j < rep.cluster_count(); ++j) out << ",cluster_" << j;
    out << '\n';
    for (int i = 0; i < rep.iterations(); ++i) {
        out << i;
        for (int j = 0; j < rep.cluster_count(); ++j) out << ',' << rep.counts(i, j);
        out << '\n';
    }
    if (!out) throw DataError("write failed for " + path.string());
}

inline Eigen::MatrixXi read_counts_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
    const auto header = detail::split_csv_line(line);
    const int c = static_cast<int>(header.size()) - 1;
    std::vector<Eigen::VectorXi> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != header.size())
            throw DataError("line " + std::to_string(line_no) + ": field count");
        Eigen::VectorXi row(c);
        for (int j = 0; j < c; ++j)
            row(j) = static_cast<int>(detail::parse_int_field(
                fields[static_cast<std::size_t>(j + 1)], line_no, "count"));
        rows.push_back(std::move(row));
    }
    Eigen::MatrixXi m(static_cast<Eigen::Index>(rows.size()), c);
    for (std::size_t i = 0; i < rows.size(); ++i)
        m.row(static_cast<Eigen::Index>(i)) = rows[i];
    return m;
}

inline void dump_plot_csv(const LabeledMatrix& matrix,
                          const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << matrix.corner;
    for (const auto& col : matrix.col_labels) out << ',' << col;
    out << '\n';
    for (std::size_t r = 0; r < matrix.row_labels.size(); ++r) {
        out << matrix.row_labels[r];
        for (Eigen::Index c = 0; c < matrix.values.cols(); ++c) {
            const double v = matrix.values(static_cast<Eigen::Index>(r), c);
            out << ',';
            if (!std::isnan(v)) out << detail::format_double(v);
        }
        out << '\n';
    }
    if (!out) throw DataError("write failed for " + path.string());
}

inline LabeledMatrix read_labeled_matrix_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
    const auto header = detail::split_csv_line(line);
    if (header.empty()) throw DataError(path.string() + ": bad header");
    LabeledMatrix m;
    m.corner = header[0];
    for (std::size_t j = 1; j < header.size(); ++j) m.col_labels.push_back(header[j]);

    std::vector<Eigen::VectorXd> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != header.size())
            throw DataError("line " + std::to_string(line_no) + ": field count");
        m.row_labels.push_back(fields[0]);
        Eigen::VectorXd row(static_cast<Eigen::Index>(m.col_labels.size()));
        for (std::size_t j = 1; j < fields.size(); ++j)
            row(static_cast<Eigen::Index>(j - 1)) =
                fields[j].empty()
                    ? std::numeric_limits<double>::quiet_NaN()
                    : detail::parse_double_field(fields[j], line_no, "value");
        rows.push_back(std::move(row));
    }
    m.values.resize(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(m.col_labels.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        m.values.row(static_cast<Eigen::Index>(i)) = rows[i];
    return m;
}

}  // namespace clustopt

#endif
