#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fkoc/errors.hpp"
#include "fkoc/grid.hpp"

namespace fkoc {

// ---------------------------------------------------------------------------
// Logging (FKOC_LOG = error | warn | info | debug)
// ---------------------------------------------------------------------------

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

inline LogLevel log_level() {
    static LogLevel lvl = [] {
        const char* e = std::getenv("FKOC_LOG");
        if (!e) return LogLevel::Warn;
        std::string s(e);
        if (s == "error") return LogLevel::Error;
        if (s == "info") return LogLevel::Info;
        if (s == "debug") return LogLevel::Debug;
        return LogLevel::Warn;
    }();
    return lvl;
}

inline void log(LogLevel lvl, const std::string& msg) {
    if (lvl > log_level()) return;
    const char* tag = lvl == LogLevel::Error  ? "error"
                      : lvl == LogLevel::Warn ? "warn"
                      : lvl == LogLevel::Info ? "info"
                                              : "debug";
    std::fprintf(stderr, "fkoc [%s] %s\n", tag, msg.c_str());
}

// ---------------------------------------------------------------------------
// Numeric formatting: shortest representation that round-trips exactly, so
// identical runs emit byte-identical files.
// ---------------------------------------------------------------------------

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// GridFunction CSV: columns t, re, im
// ---------------------------------------------------------------------------

inline void write_grid_function_csv(const std::string& path, const GridFunction& gf) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open output file: " + path);
    out << "t,re,im\n";
    for (int i = 0; i < gf.n(); ++i) {
        out << format_double(gf.grid().node(i)) << ',' << format_double(gf[i].real())
            << ',' << format_double(gf[i].imag()) << '\n';
    }
}

inline GridFunction read_grid_function_csv(const std::string& path, const TimeGrid& grid) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open input file: " + path);
    std::string line;
    std::getline(in, line); // header
    std::vector<CScalar> v;
    v.reserve(grid.n());
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string cell;
        double cols[3] = {0, 0, 0};
        for (int c = 0; c < 3 && std::getline(ss, cell, ','); ++c) {
            cols[c] = std::strtod(cell.c_str(), nullptr);
        }
        v.emplace_back(cols[1], cols[2]);
    }
    if (static_cast<int>(v.size()) != grid.n()) {
        throw ShapeMismatch("csv: row count " + std::to_string(v.size()) +
                            " does not match grid n=" + std::to_string(grid.n()));
    }
    return GridFunction(grid, std::move(v));
}

// ---------------------------------------------------------------------------
// Markdown / CSV report tables
// ---------------------------------------------------------------------------

struct ReportTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::string to_markdown() const {
        std::ostringstream out;
        out << '|';
        for (const auto& h : header) out << ' ' << h << " |";
        out << "\n|";
        for (std::size_t i = 0; i < header.size(); ++i) out << " --- |";
        out << '\n';
        for (const auto& row : rows) {
            out << '|';
            for (const auto& c : row) out << ' ' << c << " |";
            out << '\n';
        }
        return out.str();
    }

    std::string to_csv() const {
        std::ostringstream out;
        for (std::size_t i = 0; i < header.size(); ++i) {
            out << header[i] << (i + 1 < header.size() ? "," : "");
        }
        out << '\n';
        for (const auto& row : rows) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                out << row[i] << (i + 1 < row.size() ? "," : "");
            }
            out << '\n';
        }
        return out.str();
    }
};

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open output file: " + path);
    out << content;
}

} // namespace fkoc
