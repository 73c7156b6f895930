#pragma once

// Deterministic generators for the benchmark mesh families and the
// line-oriented mesh text format.

#include <sushi/mesh.hpp>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace sushi {

/// nx x ny axis-aligned rectangles on the unit square.
inline Mesh gen_rect(int nx, int ny) {
    if (nx < 1 || ny < 1) throw InputError("gen_rect: resolution must be >= 1");
    RawMesh raw;
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i) raw.vertices.emplace_back(double(i) / nx, double(j) / ny);
    auto v = [nx](int i, int j) { return j * (nx + 1) + i; };
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) raw.cells.push_back({v(i, j), v(i + 1, j), v(i + 1, j + 1), v(i, j + 1)});
    return compute_geometry(raw);
}

/// n x n squares, each cut along its (0,0)-(1,1) diagonal.
inline Mesh gen_tri(int n) {
    if (n < 1) throw InputError("gen_tri: resolution must be >= 1");
    RawMesh raw;
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i) raw.vertices.emplace_back(double(i) / n, double(j) / n);
    auto v = [n](int i, int j) { return j * (n + 1) + i; };
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            raw.cells.push_back({v(i, j), v(i + 1, j), v(i + 1, j + 1)});
            raw.cells.push_back({v(i, j), v(i + 1, j + 1), v(i, j + 1)});
        }
    return compute_geometry(raw);
}

/// Unit square cut at x = 1/2: 2n columns x 3n rows on the left,
/// 2n columns x 5n rows on the right, interface edges split.
inline Mesh gen_nonconforming_rect(int n) {
    if (n < 1) throw InputError("gen_nonconforming_rect: resolution must be >= 1");
    const int cols = 2 * n, rows_l = 3 * n, rows_r = 5 * n;
    RawMesh raw;
    std::vector<Index> left((cols + 1) * (rows_l + 1));
    std::vector<Index> right((cols + 1) * (rows_r + 1));
    for (int j = 0; j <= rows_l; ++j)
        for (int i = 0; i <= cols; ++i) {
            left[j * (cols + 1) + i] = static_cast<Index>(raw.vertices.size());
            raw.vertices.emplace_back(0.5 * i / cols, double(j) / rows_l);
        }
    for (int k = 0; k <= rows_r; ++k)
        for (int i = 0; i <= cols; ++i) {
            if (i == 0 && (3 * k) % 5 == 0) {
                right[k * (cols + 1)] = left[(3 * k / 5) * (cols + 1) + cols];
                continue;
            }
            right[k * (cols + 1) + i] = static_cast<Index>(raw.vertices.size());
            raw.vertices.emplace_back(0.5 + 0.5 * i / cols, double(k) / rows_r);
        }
    auto L = [&](int i, int j) { return left[j * (cols + 1) + i]; };
    auto R = [&](int i, int k) { return right[k * (cols + 1) + i]; };
    for (int j = 0; j < rows_l; ++j)
        for (int i = 0; i < cols; ++i) raw.cells.push_back({L(i, j), L(i + 1, j), L(i + 1, j + 1), L(i, j + 1)});
    for (int k = 0; k < rows_r; ++k)
        for (int i = 0; i < cols; ++i) raw.cells.push_back({R(i, k), R(i + 1, k), R(i + 1, k + 1), R(i, k + 1)});

    // left cells: edge (x=1/2, y_j) -> (x=1/2, y_j+1) picks up right-block breakpoints
    for (int j = 0; j < rows_l; ++j) {
        EdgeSplit s{L(cols, j), L(cols, j + 1), {}};
        for (int k = 0; k <= rows_r; ++k)
            if (5 * j < 3 * k && 3 * k < 5 * (j + 1)) s.inner.push_back(R(0, k));
        if (!s.inner.empty()) raw.splits.push_back(s);
    }
    // right cells: edge (x=1/2, y_k+1) -> (x=1/2, y_k), downward
    for (int k = 0; k < rows_r; ++k) {
        EdgeSplit s{R(0, k + 1), R(0, k), {}};
        for (int j = rows_l; j >= 0; --j)
            if (3 * k < 5 * j && 5 * j < 3 * (k + 1)) s.inner.push_back(L(cols, j));
        if (!s.inner.empty()) raw.splits.push_back(s);
    }
    return compute_geometry(raw);
}

/// Geometry of the slanted low-permeability layer on the unit square.
struct BarrierGeometry {
    static constexpr double slope = 0.2;
    static constexpr double offset = 0.475;
    static constexpr double thickness = 0.05;
    static double phi1(double x, double y) { return y - slope * (x - 0.5) - offset; }
    static double phi2(double x, double y) { return phi1(x, y) - thickness; }
    static double lower(double x) { return offset + slope * (x - 0.5); }
    static double upper(double x) { return lower(x) + thickness; }
    static int region(double x, double y) { return phi1(x, y) < 0.0 ? 1 : (phi2(x, y) < 0.0 ? 2 : 3); }
};

/// Quadrilateral meshes of the tilted-barrier benchmark; cell regions in
/// mesh.regions(). Variant 1: 10 x 21 (10 + 1 + 10 layers); variant 2:
/// 10 x 100 (45 + 10 + 45); variant 3: variant 1 plus thin layers of
/// thickness 1e-4 on both sides of each discontinuity line.
inline Mesh gen_tilted_barrier(int variant) {
    using G = BarrierGeometry;
    constexpr int columns = 10;
    constexpr double thin = 1e-4;
    int below = 10, inside = 1, above = 10;
    if (variant == 2) below = 45, inside = 10, above = 45;
    else if (variant != 1 && variant != 3) throw InputError("gen_tilted_barrier: variant must be 1, 2 or 3");

    // a mesh line y(x): fan from y=0 to the lower interface (kind 0), inside the
    // layer (kind 1), or fan from the upper interface to y=1 (kind 2)
    struct Line {
        double t;
        int kind;
        double shift;
    };
    std::vector<Line> lines;
    for (int j = 0; j <= below; ++j) lines.push_back({double(j) / below, 0, 0.0});
    for (int j = 1; j <= inside; ++j) lines.push_back({double(j) / inside, 1, 0.0});
    for (int j = 1; j <= above; ++j) lines.push_back({double(j) / above, 2, 0.0});
    if (variant == 3) {
        std::vector<Line> with_thin;
        for (const auto& l : lines) {
            const bool at_lower = l.kind == 0 && l.t == 1.0;
            const bool at_upper = l.kind == 1 && l.t == 1.0;
            if (at_lower || at_upper) with_thin.push_back({l.t, l.kind, -thin});
            with_thin.push_back(l);
            if (at_lower || at_upper) with_thin.push_back({l.t, l.kind, +thin});
        }
        lines = with_thin;
    }
    auto eval = [](const Line& l, double x) {
        switch (l.kind) {
        case 0: return l.t * G::lower(x) + l.shift;
        case 1: return G::lower(x) + l.t * G::thickness + l.shift;
        default: return G::upper(x) + l.t * (1.0 - G::upper(x)) + l.shift;
        }
    };

    RawMesh raw;
    const int nl = static_cast<int>(lines.size());
    for (int j = 0; j < nl; ++j)
        for (int i = 0; i <= columns; ++i) {
            const double x = double(i) / columns;
            raw.vertices.emplace_back(x, eval(lines[j], x));
        }
    auto v = [](int i, int j) { return j * (columns + 1) + i; };
    for (int j = 0; j + 1 < nl; ++j)
        for (int i = 0; i < columns; ++i) {
            raw.cells.push_back({v(i, j), v(i + 1, j), v(i + 1, j + 1), v(i, j + 1)});
            const Vec mid = 0.25 * (raw.vertices[v(i, j)] + raw.vertices[v(i + 1, j)] + raw.vertices[v(i + 1, j + 1)] +
                                    raw.vertices[v(i, j + 1)]);
            raw.regions.push_back(G::region(mid.x(), mid.y()));
        }
    return compute_geometry(raw);
}

// ---------------------------------------------------------------------------
// Mesh text format
//
//   dim 2
//   vertices N        followed by N lines "x y"
//   cells M           followed by M lines of counter-clockwise vertex indices
//   cellpoints M      optional, M lines "x y"
//   split S           optional, S lines "a b v1 v2 ..." (hanging vertices from a to b)
//   regions M         optional, M lines with an integer tag
//
// '#' starts a comment. Reals are written with 17 significant digits so that
// read(write(m)) reproduces every coordinate bit for bit.

inline void write_mesh(const RawMesh& raw, std::ostream& os) {
    char buf[64];
    auto real = [&buf](double x) {
        std::snprintf(buf, sizeof buf, "%.17g", x);
        return std::string(buf);
    };
    os << "dim " << raw.dim << "\n";
    os << "vertices " << raw.vertices.size() << "\n";
    for (const auto& p : raw.vertices) os << real(p.x()) << " " << real(p.y()) << "\n";
    os << "cells " << raw.cells.size() << "\n";
    for (const auto& c : raw.cells) {
        for (std::size_t i = 0; i < c.size(); ++i) os << (i ? " " : "") << c[i];
        os << "\n";
    }
    if (!raw.cell_points.empty()) {
        os << "cellpoints " << raw.cell_points.size() << "\n";
        for (const auto& p : raw.cell_points) os << real(p.x()) << " " << real(p.y()) << "\n";
    }
    if (!raw.splits.empty()) {
        os << "split " << raw.splits.size() << "\n";
        for (const auto& s : raw.splits) {
            os << s.a << " " << s.b;
            for (Index v : s.inner) os << " " << v;
            os << "\n";
        }
    }
    if (!raw.regions.empty()) {
        os << "regions " << raw.regions.size() << "\n";
        for (int r : raw.regions) os << r << "\n";
    }
}

inline void write_mesh(const Mesh& mesh, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open " + path + " for writing");
    write_mesh(mesh.source, os);
    if (!os) throw IoError("write failed: " + path);
}

namespace detail {

class LineReader {
public:
    explicit LineReader(std::istream& is) : is_(is) {}

    // next non-empty, comment-stripped line; false at end of input
    bool next(std::istringstream& out) {
        std::string line;
        while (std::getline(is_, line)) {
            ++number_;
            if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            out.clear();
            out.str(line);
            return true;
        }
        return false;
    }
    std::istringstream require(const char* what) {
        std::istringstream s;
        if (!next(s)) throw ParseError(std::string("unexpected end of file, expected ") + what, number_ + 1);
        return s;
    }
    std::size_t line() const { return number_; }

private:
    std::istream& is_;
    std::size_t number_ = 0;
};

inline void expect_end(std::istringstream& s, std::size_t line) {
    std::string extra;
    if (s >> extra) throw ParseError("unexpected token '" + extra + "'", line);
}

inline Vec read_point(LineReader& in) {
    auto s = in.require("a coordinate pair");
    double x, y;
    if (!(s >> x >> y)) throw ParseError("expected two real coordinates", in.line());
    expect_end(s, in.line());
    return {x, y};
}

} // namespace detail

inline RawMesh parse_mesh(std::istream& is) {
    detail::LineReader in(is);
    RawMesh raw;
    bool have_cells = false, have_vertices = false;
    std::istringstream s;
    while (in.next(s)) {
        std::string key;
        s >> key;
        std::size_t count = 0;
        if (key == "dim") {
            if (!(s >> raw.dim)) throw ParseError("expected dimension", in.line());
            if (raw.dim != 2) throw ParseError("only dim 2 is supported", in.line());
            detail::expect_end(s, in.line());
            continue;
        }
        if (!(s >> count)) throw ParseError("expected a count after '" + key + "'", in.line());
        detail::expect_end(s, in.line());
        if (key == "vertices") {
            raw.vertices.clear();
            for (std::size_t i = 0; i < count; ++i) raw.vertices.push_back(detail::read_point(in));
            have_vertices = true;
        } else if (key == "cells") {
            if (!have_vertices) throw ParseError("cells section before vertices", in.line());
            for (std::size_t c = 0; c < count; ++c) {
                auto line = in.require("a cell");
                std::vector<Index> cell;
                std::string tok;
                while (line >> tok) {
                    char* end = nullptr;
                    const long v = std::strtol(tok.c_str(), &end, 10);
                    if (*end != '\0') throw ParseError("bad vertex index '" + tok + "'", in.line());
                    if (v < 0 || static_cast<std::size_t>(v) >= raw.vertices.size())
                        throw ParseError("cell references missing vertex " + tok, in.line());
                    cell.push_back(static_cast<Index>(v));
                }
                if (cell.size() < 3) throw ParseError("cell needs at least 3 vertices", in.line());
                raw.cells.push_back(std::move(cell));
            }
            have_cells = true;
        } else if (key == "cellpoints") {
            for (std::size_t i = 0; i < count; ++i) raw.cell_points.push_back(detail::read_point(in));
        } else if (key == "split") {
            for (std::size_t i = 0; i < count; ++i) {
                auto line = in.require("a split");
                EdgeSplit sp;
                if (!(line >> sp.a >> sp.b)) throw ParseError("split needs two end vertices", in.line());
                Index v;
                while (line >> v) sp.inner.push_back(v);
                if (!line.eof()) throw ParseError("bad vertex index in split", in.line());
                for (Index w : sp.inner)
                    if (w < 0 || static_cast<std::size_t>(w) >= raw.vertices.size())
                        throw ParseError("split references missing vertex " + std::to_string(w), in.line());
                raw.splits.push_back(std::move(sp));
            }
        } else if (key == "regions") {
            for (std::size_t i = 0; i < count; ++i) {
                auto line = in.require("a region tag");
                int r;
                if (!(line >> r)) throw ParseError("expected an integer region tag", in.line());
                detail::expect_end(line, in.line());
                raw.regions.push_back(r);
            }
        } else {
            throw ParseError("unknown section '" + key + "'", in.line());
        }
    }
    if (!have_cells) throw ParseError("missing cells section", in.line());
    return raw;
}

inline Mesh read_mesh(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open mesh file " + path);
    return compute_geometry(parse_mesh(is));
}

} // namespace sushi
