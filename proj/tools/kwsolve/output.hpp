#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "kwsolve/kwsolve.hpp"

namespace kwcli {

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Collects report entries and writes artifacts into the output directory.
class Output {
public:
    Output(std::filesystem::path dir, bool heatmaps) : dir_(std::move(dir)), heatmaps_(heatmaps) {
        std::filesystem::create_directories(dir_);
    }

    const std::filesystem::path& dir() const { return dir_; }

    void put(const std::string& key, const std::string& value) { entries_.emplace_back(key, value); }
    void put(const std::string& key, const char* value) { put(key, std::string(value)); }
    void put(const std::string& key, double value) { put(key, format_double(value)); }
    void put(const std::string& key, int value) { put(key, std::to_string(value)); }
    void put(const std::string& key, std::size_t value) { put(key, std::to_string(value)); }
    void put(const std::string& key, bool value) { put(key, std::string(value ? "true" : "false")); }

    /// Writes <name>.kwf and, for rank >= 2 with heatmaps on, <name>.pgm of
    /// the slice through the first two axes at index 0 on the others.
    void field(const std::string& name, const kw::ScalarField& f) {
        kw::io::write_field(f, dir_ / (name + ".kwf"));
        put(name + ".file", name + ".kwf");
        put(name + ".min", f.min());
        put(name + ".max", f.max());
        put(name + ".mean", kw::ops::mean(f));
        if (heatmaps_ && f.spec().rank() >= 2) write_pgm(name, f);
    }

    void table(const std::string& name, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
        std::ofstream out(dir_ / (name + ".csv"));
        for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
        out << '\n';
        for (const auto& row : rows) {
            for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_double(row[i]);
            out << '\n';
        }
        if (!out) throw kw::Error("cannot write " + (dir_ / (name + ".csv")).string());
        put(name + ".table", name + ".csv");
    }

    void trace(const std::string& name, const kw::solver::SolveReport& rep) {
        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < rep.trace.size(); ++i) {
            rows.push_back({static_cast<double>(i), rep.trace[i], i == 0 ? 0.0 : rep.steps.at(i - 1)});
        }
        table(name, {"iteration", "sup_w", "step"}, rows);
    }

    void write_report() const {
        std::ofstream out(dir_ / "report.kv");
        for (const auto& [k, v] : entries_) out << k << '=' << v << '\n';
    }

private:
    void write_pgm(const std::string& name, const kw::ScalarField& f) {
        const kw::GridSpec& spec = f.spec();
        const std::size_t rows = spec.dim(0), cols = spec.dim(1);
        std::vector<double> slice(rows * cols);
        kw::MultiIndex idx{};
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) {
                idx[0] = r;
                idx[1] = c;
                slice[r * cols + c] = f[spec.ravel(idx)];
            }
        }
        double lo = slice.front(), hi = slice.front();
        for (double v : slice) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        std::ofstream out(dir_ / (name + ".pgm"), std::ios::binary);
        out << "P5\n" << cols << ' ' << rows << "\n255\n";
        for (double v : slice) {
            const double x = hi > lo ? (v - lo) / (hi - lo) : 0.0;
            out.put(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * x))));
        }
        put(name + ".pgm", name + ".pgm");
        put(name + ".pgm_min", lo);
        put(name + ".pgm_max", hi);
    }

    std::filesystem::path dir_;
    bool heatmaps_;
    std::vector<std::pair<std::string, std::string>> entries_;
};

/// `out` key, then KW_OUTPUT_DIR, then the working directory.
inline std::filesystem::path output_dir(const std::optional<std::string>& configured) {
    if (configured) return *configured;
    if (const char* env = std::getenv("KW_OUTPUT_DIR"); env && *env) return env;
    return ".";
}

} // namespace kwcli
