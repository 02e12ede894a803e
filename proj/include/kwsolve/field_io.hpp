#pragma once

// KWF1 binary field files and CSV tables (rank <= 2).
//
// KWF1 layout: "KWF1", u32 rank, rank x u32 dims, then f64 values, all
// little-endian, row-major with the last axis fastest.

#include <array>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "kwsolve/error.hpp"
#include "kwsolve/grid.hpp"

namespace kw::io {

inline constexpr std::array<char, 4> field_magic = {'K', 'W', 'F', '1'};

namespace detail {

inline void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<unsigned char>((v >> (8 * b)) & 0xFFu));
}

inline void put_f64(std::vector<unsigned char>& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<unsigned char>((bits >> (8 * b)) & 0xFFu));
}

inline std::uint32_t get_u32(const unsigned char* p) {
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(p[b]) << (8 * b);
    return v;
}

inline double get_f64(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(p[b]) << (8 * b);
    return std::bit_cast<double>(v);
}

} // namespace detail

inline std::vector<unsigned char> encode_field(const ScalarField& field) {
    const GridSpec& spec = field.spec();
    std::vector<unsigned char> out(field_magic.begin(), field_magic.end());
    out.reserve(8 + 4 * spec.rank() + 8 * field.size());
    detail::put_u32(out, static_cast<std::uint32_t>(spec.rank()));
    for (std::size_t n : spec.dims()) detail::put_u32(out, static_cast<std::uint32_t>(n));
    for (double v : field.values()) detail::put_f64(out, v);
    return out;
}

inline ScalarField decode_field(const std::vector<unsigned char>& bytes) {
    if (bytes.size() < 8) throw FormatError("field file too short for header");
    if (std::memcmp(bytes.data(), field_magic.data(), 4) != 0) {
        throw FormatError("bad magic: expected KWF1");
    }
    const std::uint32_t rank = detail::get_u32(bytes.data() + 4);
    if (rank == 0 || rank > max_rank) {
        throw FormatError("unsupported rank " + std::to_string(rank));
    }
    const std::size_t header = 8 + 4 * static_cast<std::size_t>(rank);
    if (bytes.size() < header) throw FormatError("size mismatch: truncated header");
    std::vector<std::size_t> dims(rank);
    for (std::uint32_t a = 0; a < rank; ++a) dims[a] = detail::get_u32(bytes.data() + 8 + 4 * a);

    GridSpec spec;
    try {
        spec = GridSpec(dims);
    } catch (const PreconditionError& e) {
        throw FormatError(std::string("invalid grid in field file: ") + e.what());
    }
    const std::size_t expected = header + 8 * spec.size();
    if (bytes.size() != expected) {
        throw FormatError("size mismatch: expected " + std::to_string(expected) + " bytes, got " +
                          std::to_string(bytes.size()));
    }
    std::vector<double> values(spec.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        values[i] = detail::get_f64(bytes.data() + header + 8 * i);
        if (!std::isfinite(values[i])) {
            throw FormatError("non-finite value at index " + std::to_string(i));
        }
    }
    return ScalarField(std::move(spec), std::move(values));
}

inline void write_field(const ScalarField& field, const std::filesystem::path& path) {
    const auto bytes = encode_field(field);
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot open " + path.string() + " for writing");
    os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw Error("write failed for " + path.string());
}

inline ScalarField read_field(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot open field file " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)),
                                     std::istreambuf_iterator<char>());
    return decode_field(bytes);
}

/// One row per first-axis index; rank-1 fields give a single column.
inline std::string to_csv(const ScalarField& field) {
    const GridSpec& spec = field.spec();
    if (spec.rank() > 2) throw PreconditionError("CSV export supports rank <= 2");
    const std::size_t rows = spec.dim(0);
    const std::size_t cols = spec.rank() == 2 ? spec.dim(1) : 1;
    std::string out;
    char buf[32];
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            if (c) out += ',';
            std::snprintf(buf, sizeof buf, "%.17g", field[r * cols + c]);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

inline ScalarField from_csv(const std::string& text) {
    std::vector<std::vector<double>> rows;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        std::vector<double> row;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(cell, &used));
                if (cell.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                throw FormatError("CSV row " + std::to_string(rows.size()) + ": bad number '" + cell + "'");
            }
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw FormatError("CSV row " + std::to_string(rows.size()) + " has " +
                              std::to_string(row.size()) + " columns, expected " +
                              std::to_string(rows.front().size()));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw FormatError("empty CSV table");
    std::vector<std::size_t> dims{rows.size()};
    if (rows.front().size() > 1) dims.push_back(rows.front().size());
    std::vector<double> values;
    values.reserve(rows.size() * rows.front().size());
    for (const auto& r : rows) values.insert(values.end(), r.begin(), r.end());
    try {
        return ScalarField(GridSpec(dims), std::move(values));
    } catch (const PreconditionError& e) {
        throw FormatError(std::string("invalid grid in CSV: ") + e.what());
    }
}

inline void write_csv(const ScalarField& field, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw Error("cannot open " + path.string() + " for writing");
    os << to_csv(field);
}

inline ScalarField read_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw FormatError("cannot open CSV file " + path.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return from_csv(ss.str());
}

/// Dispatches on extension: ".csv" is a table, anything else is KWF1.
inline ScalarField load_field(const std::filesystem::path& path) {
    if (path.extension() == ".csv") return read_csv(path);
    return read_field(path);
}

} // namespace kw::io
