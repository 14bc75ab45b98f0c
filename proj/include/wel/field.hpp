#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "core.hpp"
#include "grid.hpp"

namespace wel {

/// Node-sampled real function on a grid.
class ScalarField {
public:
    explicit ScalarField(GridPtr grid, double fill = 0.0)
        : grid_(std::move(grid)), values_(grid_->size(), fill) {}

    ScalarField(GridPtr grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {
        if (values_.size() != grid_->size()) throw InvalidArgument("field size does not match lattice");
    }

    /// Samples fn(Point) at every node.
    template <class Fn>
    static ScalarField sample(GridPtr grid, Fn&& fn) {
        ScalarField f(grid);
        for (std::size_t k = 0; k < grid->size(); ++k) f.values_[k] = fn(grid->node(k));
        return f;
    }

    const Grid2D& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const { return grid_; }
    std::size_t size() const { return values_.size(); }

    double& operator[](std::size_t k) { return values_[k]; }
    double operator[](std::size_t k) const { return values_[k]; }
    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }

    /// Same values on a lattice-compatible grid (e.g. one carrying a conformal factor).
    ScalarField on(GridPtr grid) const {
        if (!grid->same_lattice(*grid_)) throw InvalidArgument("lattice mismatch");
        return ScalarField(std::move(grid), values_);
    }

    /// Copy with boundary (non-interior) nodes set to zero.
    ScalarField masked() const {
        ScalarField out(grid_);
        for (std::size_t k : grid_->interior_nodes()) out.values_[k] = values_[k];
        return out;
    }

    ScalarField& operator+=(const ScalarField& o) {
        check(o);
        for (std::size_t k = 0; k < size(); ++k) values_[k] += o.values_[k];
        return *this;
    }
    ScalarField& operator-=(const ScalarField& o) {
        check(o);
        for (std::size_t k = 0; k < size(); ++k) values_[k] -= o.values_[k];
        return *this;
    }
    ScalarField& operator*=(double s) {
        for (double& v : values_) v *= s;
        return *this;
    }
    friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
    friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
    friend ScalarField operator*(double s, ScalarField a) { return a *= s; }

    double max_abs() const {
        double m = 0.0;
        for (double v : values_) m = std::max(m, std::abs(v));
        return m;
    }

private:
    void check(const ScalarField& o) const {
        if (!o.grid_->same_lattice(*grid_)) throw InvalidArgument("lattice mismatch");
    }

    GridPtr grid_;
    std::vector<double> values_;
};

/// Node-sampled one-form a dx + b dy.
class OneForm {
public:
    explicit OneForm(GridPtr grid)
        : grid_(std::move(grid)), a_(grid_->size(), 0.0), b_(grid_->size(), 0.0) {}

    OneForm(GridPtr grid, std::vector<double> a, std::vector<double> b)
        : grid_(std::move(grid)), a_(std::move(a)), b_(std::move(b)) {
        if (a_.size() != grid_->size() || b_.size() != grid_->size())
            throw InvalidArgument("one-form size does not match lattice");
    }

    template <class Fn>
    static OneForm sample(GridPtr grid, Fn&& fn) {
        OneForm w(grid);
        for (std::size_t k = 0; k < grid->size(); ++k) {
            const Vec2 v = fn(grid->node(k));
            w.a_[k] = v.x;
            w.b_[k] = v.y;
        }
        return w;
    }

    const Grid2D& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const { return grid_; }
    std::size_t size() const { return a_.size(); }

    std::span<double> a() { return a_; }
    std::span<double> b() { return b_; }
    std::span<const double> a() const { return a_; }
    std::span<const double> b() const { return b_; }
    Vec2 at(std::size_t k) const { return {a_[k], b_[k]}; }
    void set(std::size_t k, Vec2 v) { a_[k] = v.x; b_[k] = v.y; }

    OneForm on(GridPtr grid) const {
        if (!grid->same_lattice(*grid_)) throw InvalidArgument("lattice mismatch");
        return OneForm(std::move(grid), a_, b_);
    }

    OneForm masked() const {
        OneForm out(grid_);
        for (std::size_t k : grid_->interior_nodes()) out.set(k, at(k));
        return out;
    }

    OneForm& operator+=(const OneForm& o) {
        check(o);
        for (std::size_t k = 0; k < size(); ++k) { a_[k] += o.a_[k]; b_[k] += o.b_[k]; }
        return *this;
    }
    OneForm& operator-=(const OneForm& o) {
        check(o);
        for (std::size_t k = 0; k < size(); ++k) { a_[k] -= o.a_[k]; b_[k] -= o.b_[k]; }
        return *this;
    }
    OneForm& operator*=(double s) {
        for (std::size_t k = 0; k < size(); ++k) { a_[k] *= s; b_[k] *= s; }
        return *this;
    }
    friend OneForm operator+(OneForm x, const OneForm& y) { return x += y; }
    friend OneForm operator-(OneForm x, const OneForm& y) { return x -= y; }
    friend OneForm operator*(double s, OneForm x) { return x *= s; }

    /// Pointwise scaling by a scalar field.
    OneForm scaled_by(const ScalarField& s) const {
        if (!s.grid().same_lattice(*grid_)) throw InvalidArgument("lattice mismatch");
        OneForm out(grid_);
        for (std::size_t k = 0; k < size(); ++k) { out.a_[k] = s[k] * a_[k]; out.b_[k] = s[k] * b_[k]; }
        return out;
    }

private:
    void check(const OneForm& o) const {
        if (!o.grid_->same_lattice(*grid_)) throw InvalidArgument("lattice mismatch");
    }

    GridPtr grid_;
    std::vector<double> a_;
    std::vector<double> b_;
};

/// Returns the grid with metric e^{2 psi} delta.
inline GridPtr with_conformal_factor(const GridPtr& grid, const ScalarField& psi) {
    if (!psi.grid().same_lattice(*grid)) throw InvalidArgument("conformal exponent lattice mismatch");
    std::vector<double> values(psi.values().begin(), psi.values().end());
    return std::make_shared<const Grid2D>(grid->nx(), grid->ny(), grid->h(), grid->origin(), grid->mask(),
                                          std::move(values));
}

// CSV dumps, row-major node order, 17 significant digits.

inline void write_csv(std::ostream& os, const ScalarField& f) {
    os << "x,y,value\n" << std::setprecision(17);
    for (std::size_t k = 0; k < f.size(); ++k) {
        const Point p = f.grid().node(k);
        os << p.x << ',' << p.y << ',' << f[k] << '\n';
    }
}

inline void write_csv(std::ostream& os, const OneForm& w) {
    os << "x,y,a,b\n" << std::setprecision(17);
    for (std::size_t k = 0; k < w.size(); ++k) {
        const Point p = w.grid().node(k);
        os << p.x << ',' << p.y << ',' << w.a()[k] << ',' << w.b()[k] << '\n';
    }
}

namespace detail {

inline std::vector<std::vector<double>> read_csv_rows(std::istream& is, const std::string& header) {
    std::string line;
    if (!std::getline(is, line)) throw InvalidArgument("empty CSV");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != header) throw InvalidArgument("unexpected CSV header '" + line + "'");
    std::vector<std::vector<double>> rows;
    while (std::getline(is, line)) {
        if (line.empty() || line == "\r") continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            // from_chars keeps subnormals that stod rejects as out of range
            double v = 0.0;
            const char* first = cell.data();
            const char* last = first + cell.size();
            while (last > first && (last[-1] == '\r' || last[-1] == ' ')) --last;
            const auto [ptr, ec] = std::from_chars(first, last, v);
            if (ec == std::errc::invalid_argument || ptr != last)
                throw InvalidArgument("malformed CSV value '" + cell + "'");
            row.push_back(v);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline void check_row_coordinates(const Grid2D& grid, std::size_t k, const std::vector<double>& row) {
    const Point p = grid.node(k);
    const double tol = 1e-9 * grid.h();
    if (std::abs(row[0] - p.x) > tol || std::abs(row[1] - p.y) > tol)
        throw InvalidArgument("CSV node coordinates do not match the grid");
}

}  // namespace detail

/// Reads a `x,y,a,b` dump; the node layout must match `grid` exactly.
inline OneForm read_one_form_csv(std::istream& is, const GridPtr& grid) {
    const auto rows = detail::read_csv_rows(is, "x,y,a,b");
    if (rows.size() != grid->size()) throw InvalidArgument("CSV node count does not match the grid");
    OneForm w(grid);
    for (std::size_t k = 0; k < rows.size(); ++k) {
        if (rows[k].size() != 4) throw InvalidArgument("CSV row must have 4 columns");
        detail::check_row_coordinates(*grid, k, rows[k]);
        w.set(k, {rows[k][2], rows[k][3]});
    }
    return w;
}

inline ScalarField read_scalar_csv(std::istream& is, const GridPtr& grid) {
    const auto rows = detail::read_csv_rows(is, "x,y,value");
    if (rows.size() != grid->size()) throw InvalidArgument("CSV node count does not match the grid");
    ScalarField f(grid);
    for (std::size_t k = 0; k < rows.size(); ++k) {
        if (rows[k].size() != 3) throw InvalidArgument("CSV row must have 3 columns");
        detail::check_row_coordinates(*grid, k, rows[k]);
        f[k] = rows[k][2];
    }
    return f;
}

}  // namespace wel
