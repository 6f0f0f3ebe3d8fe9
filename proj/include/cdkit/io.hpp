#pragma once

#include <chrono>
#include <concepts>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

#include "json.hpp"

#include "cdkit/chebfit.hpp"

namespace cdkit {

inline constexpr const char* kToolVersion = "0.1.0";

// Shortest representation that parses back to the same bits, '.' decimal
// regardless of locale. All numeric output funnels through here so golden
// files stay byte-stable.
std::string format_double(double v);

// Quotes a field only when the CSV dialect forces it (comma, quote, newline).
std::string csv_field(const std::string& s);

// Comma-separated, LF line endings, header row written up front. Rows are
// flushed on destruction; arity is checked against the header.
class CsvWriter {
  public:
    CsvWriter(const std::filesystem::path& path, std::initializer_list<const char*> header);

    template <class... Ts> void row(const Ts&... fields) {
        check_arity(sizeof...(fields));
        std::string line;
        (append(line, fields), ...);
        write_line(line);
    }

    const std::filesystem::path& path() const { return path_; }

  private:
    static void append(std::string& line, double v);
    static void append(std::string& line, const std::string& s);
    static void append(std::string& line, const char* s);
    template <std::integral T> static void append(std::string& line, T v) {
        if (!line.empty()) line += ',';
        line += std::to_string(v);
    }
    void check_arity(std::size_t n) const;
    void write_line(const std::string& line);

    std::filesystem::path path_;
    std::ofstream out_;
    std::size_t columns_ = 0;
};

// (ell, zeta_star, objective) rows as written by the zeta experiments; the
// omega scans and the protocol comparison read their window table back from
// this file.
std::vector<ZetaTableRow> read_zeta_csv(const std::filesystem::path& path);

// "2026-08-19T12:34:56Z"
std::string iso_utc(std::chrono::system_clock::time_point t);

// Root for relative output directories: CDKIT_OUTPUT_ROOT if set, else ".".
std::filesystem::path output_root();

// Resolves dir against output_root() (absolute paths pass through) and
// creates it.
std::filesystem::path resolve_output_dir(const std::filesystem::path& dir);

// manifest.json next to a run's outputs: tool, version, full config echo and
// wall-clock bracket. With fixed-step integration the echoed config is enough
// to reproduce every CSV byte for byte.
void write_manifest(const std::filesystem::path& dir, const std::string& tool,
                    const nlohmann::json& config,
                    std::chrono::system_clock::time_point started);

} // namespace cdkit
