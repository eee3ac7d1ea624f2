#include "qbic/path.hpp"

#include "qbic/errors.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

namespace qbic {

PathGrid::PathGrid(double h, RowMatrix values) : h_(h), values_(std::move(values)) {
    if (!(h_ > 0.0) || !std::isfinite(h_)) throw SpecificationError("path step size must be positive");
    if (values_.rows() < 2) throw SpecificationError("path needs at least two grid points");
    if (values_.cols() < 1) throw SpecificationError("path has no coordinates");
    if (!values_.allFinite()) throw SpecificationError("path contains non-finite values");
}

PathGrid PathGrid::column(int k) const {
    if (k < 0 || k >= dim()) throw SpecificationError("path column " + std::to_string(k) + " out of range");
    return PathGrid(h_, values_.col(k));
}

namespace {

void put_number(std::ostream& os, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf;
}

}  // namespace

void write_path_csv(std::ostream& os, const PathGrid& path) {
    os << "t";
    for (int k = 1; k <= path.dim(); ++k) os << ",x" << k;
    os << '\n';
    for (std::size_t j = 0; j <= path.n(); ++j) {
        put_number(os, static_cast<double>(j) * path.h());
        for (int k = 0; k < path.dim(); ++k) {
            os << ',';
            put_number(os, path(j, k));
        }
        os << '\n';
    }
}

std::string path_to_csv(const PathGrid& path) {
    std::ostringstream os;
    write_path_csv(os, path);
    return os.str();
}

PathGrid read_path_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw SpecificationError("path CSV is empty");
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    if (header.size() < 2 || header[0] != "t") {
        throw SpecificationError("path CSV header must start with 't' followed by state columns");
    }
    const std::size_t d = header.size() - 1;
    std::vector<double> t;
    std::vector<double> flat;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t col = 0;
        while (std::getline(ss, cell, ',')) {
            double v = 0.0;
            try {
                std::size_t used = 0;
                v = std::stod(cell, &used);
            } catch (const std::exception&) {
                throw SpecificationError("path CSV line " + std::to_string(lineno) + ": bad number '" + cell + "'");
            }
            if (col == 0) {
                t.push_back(v);
            } else {
                flat.push_back(v);
            }
            ++col;
        }
        if (col != d + 1) {
            throw SpecificationError("path CSV line " + std::to_string(lineno) + ": expected " +
                                     std::to_string(d + 1) + " columns, got " + std::to_string(col));
        }
    }
    if (t.size() < 2) throw SpecificationError("path CSV needs at least two rows");
    const double h = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
    for (std::size_t j = 1; j < t.size(); ++j) {
        if (std::abs((t[j] - t[j - 1]) - h) > 1e-9 * std::max(1.0, std::abs(h) * static_cast<double>(t.size()))) {
            throw SpecificationError("path CSV line " + std::to_string(j + 2) + ": time grid is not equispaced");
        }
    }
    RowMatrix values = Eigen::Map<RowMatrix>(flat.data(), static_cast<Eigen::Index>(t.size()),
                                             static_cast<Eigen::Index>(d));
    return PathGrid(h, std::move(values));
}

Observations Observations::diffusion(const PathGrid& path) {
    if (path.dim() != 1) throw SpecificationError("diffusion observations require a scalar path");
    const auto& v = path.values();
    const Eigen::Index n = v.rows() - 1;
    Vector inc = v.col(0).tail(n) - v.col(0).head(n);
    return Observations{path, std::move(inc)};
}

Observations Observations::regression(const PathGrid& covariates, const PathGrid& response) {
    if (covariates.n() != response.n() || std::abs(covariates.h() - response.h()) > 1e-12 * covariates.h()) {
        throw SpecificationError("covariate and response grids differ (n or h mismatch)");
    }
    if (response.dim() != 1) throw SpecificationError("response must be scalar");
    const auto& v = response.values();
    const Eigen::Index n = v.rows() - 1;
    Vector inc = v.col(0).tail(n) - v.col(0).head(n);
    return Observations{covariates, std::move(inc)};
}

}  // namespace qbic
