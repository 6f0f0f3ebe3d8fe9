#include "cdkit/io.hpp"

#include <charconv>
#include <cstdlib>
#include <ctime>

#include "cdkit/errors.hpp"

namespace cdkit {

std::string format_double(double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw NumericalError("format_double: value does not format");
    return std::string(buf, ptr);
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string quoted = "\"";
    for (char c : s) {
        if (c == '"') quoted += '"';
        quoted += c;
    }
    quoted += '"';
    return quoted;
}

CsvWriter::CsvWriter(const std::filesystem::path& path,
                     std::initializer_list<const char*> header)
    : path_(path), out_(path, std::ios::binary), columns_(header.size()) {
    if (!out_) throw ResourceError("cannot open " + path.string() + " for writing");
    if (columns_ == 0) throw ConfigError("CsvWriter: empty header");
    std::string line;
    for (const char* h : header) append(line, h);
    write_line(line);
}

void CsvWriter::append(std::string& line, double v) {
    if (!line.empty()) line += ',';
    line += format_double(v);
}

void CsvWriter::append(std::string& line, const std::string& s) {
    if (!line.empty()) line += ',';
    line += csv_field(s);
}

void CsvWriter::append(std::string& line, const char* s) { append(line, std::string(s)); }

void CsvWriter::check_arity(std::size_t n) const {
    if (n != columns_)
        throw ConfigError("CsvWriter: row with " + std::to_string(n) + " fields against a " +
                          std::to_string(columns_) + "-column header in " + path_.string());
}

void CsvWriter::write_line(const std::string& line) {
    out_ << line << '\n';
    if (!out_) throw ResourceError("write failed on " + path_.string());
}

std::vector<ZetaTableRow> read_zeta_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ResourceError("cannot open " + path.string());

    std::vector<ZetaTableRow> rows;
    std::string line;
    bool header = true;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (header) {
            header = false;
            continue;
        }
        std::vector<std::string> fields;
        std::size_t start = 0;
        for (std::size_t pos; (pos = line.find(',', start)) != std::string::npos; start = pos + 1)
            fields.push_back(line.substr(start, pos - start));
        fields.push_back(line.substr(start));
        if (fields.size() < 2)
            throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                              ": expected at least ell,zeta_star");
        try {
            ZetaTableRow row;
            row.ell = std::stoi(fields[0]);
            row.zeta_star = std::stod(fields[1]);
            row.objective = fields.size() > 2 ? std::stod(fields[2]) : 0.0;
            rows.push_back(row);
        } catch (const std::exception&) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                              ": malformed zeta table row \"" + line + "\"");
        }
    }
    if (rows.empty()) throw ConfigError(path.string() + ": no zeta table rows");
    return rows;
}

std::string iso_utc(std::chrono::system_clock::time_point t) {
    const std::time_t tt = std::chrono::system_clock::to_time_t(t);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::filesystem::path output_root() {
    if (const char* root = std::getenv("CDKIT_OUTPUT_ROOT"); root && *root)
        return std::filesystem::path(root);
    return ".";
}

std::filesystem::path resolve_output_dir(const std::filesystem::path& dir) {
    std::filesystem::path full = dir.is_absolute() ? dir : output_root() / dir;
    std::error_code ec;
    std::filesystem::create_directories(full, ec);
    if (ec) throw ResourceError("cannot create " + full.string() + ": " + ec.message());
    return full;
}

void write_manifest(const std::filesystem::path& dir, const std::string& tool,
                    const nlohmann::json& config,
                    std::chrono::system_clock::time_point started) {
    const auto finished = std::chrono::system_clock::now();
    nlohmann::json m;
    m["tool"] = tool;
    m["version"] = kToolVersion;
    m["config"] = config;
    m["started_utc"] = iso_utc(started);
    m["finished_utc"] = iso_utc(finished);
    m["wall_seconds"] = std::chrono::duration<double>(finished - started).count();

    const auto path = dir / "manifest.json";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ResourceError("cannot open " + path.string() + " for writing");
    out << m.dump(2) << '\n';
    if (!out) throw ResourceError("write failed on " + path.string());
}

} // namespace cdkit
