#include "nlobs/cli/artifacts.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

#include "nlobs/error.hpp"

namespace nlobs::cli {

namespace fs = std::filesystem;

std::string format_number(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, r.ptr);
}

std::string format_fixed(double v, int digits) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, digits);
    return std::string(buf, r.ptr);
}

void atomic_write(const fs::path& path, const std::string& content) {
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    if (ec) throw Error(ErrorKind::io, "cannot create " + path.parent_path().string() + ": " + ec.message());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::io, "cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw Error(ErrorKind::io, "write failed for " + tmp.string());
    }
    fs::rename(tmp, path, ec);
    if (ec) throw Error(ErrorKind::io, "cannot rename " + tmp.string() + ": " + ec.message());
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::missing_artifact, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string csv_text(const std::string& hash, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& columns) {
    std::string out = "# config_hash " + hash + "\n";
    for (std::size_t c = 0; c < header.size(); ++c) out += (c ? "," : "") + header[c];
    out += '\n';
    const std::size_t rows = columns.empty() ? 0 : columns.front().size();
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < columns.size(); ++c) {
            if (c) out += ',';
            out += format_number(columns[c][r]);
        }
        out += '\n';
    }
    return out;
}

std::string trajectory_csv(const std::string& hash, const Trajectory& traj) {
    std::string out = "# config_hash " + hash + "\n";
    out.reserve(traj.levels() * traj.nodes() * 24);
    out += "t";
    for (std::size_t i = 0; i < traj.nodes(); ++i) out += ",u" + std::to_string(i);
    out += '\n';
    for (std::size_t k = 0; k < traj.levels(); ++k) {
        out += format_number(traj.t[k]);
        for (double u : traj.u[k]) {
            out += ',';
            out += format_number(u);
        }
        out += '\n';
    }
    return out;
}

std::string read_trajectory_csv(const fs::path& path, Trajectory& traj) {
    const std::string text = read_file(path);
    const std::string bad = "malformed trajectory file " + path.string();
    std::size_t pos = 0;
    auto next_line = [&](std::string_view& line) {
        if (pos >= text.size()) return false;
        const std::size_t end = text.find('\n', pos);
        const std::size_t stop = end == std::string::npos ? text.size() : end;
        line = std::string_view(text).substr(pos, stop - pos);
        pos = stop + 1;
        return true;
    };
    std::string_view line;
    const std::string prefix = "# config_hash ";
    if (!next_line(line) || line.substr(0, prefix.size()) != prefix) throw Error(ErrorKind::io, bad);
    const std::string hash(line.substr(prefix.size()));
    if (!next_line(line) || line.substr(0, 1) != "t") throw Error(ErrorKind::io, bad);
    const std::size_t n = traj.nodes();
    while (next_line(line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        row.reserve(n + 1);
        const char* p = line.data();
        const char* end = line.data() + line.size();
        while (p < end) {
            double v = 0.0;
            const auto r = std::from_chars(p, end, v);
            if (r.ec != std::errc()) throw Error(ErrorKind::io, bad);
            row.push_back(v);
            p = r.ptr;
            if (p < end) {
                if (*p != ',') throw Error(ErrorKind::io, bad);
                ++p;
            }
        }
        if (row.size() != n + 1) throw Error(ErrorKind::io, bad + ": row width does not match the grid");
        traj.t.push_back(row.front());
        traj.u.emplace_back(row.begin() + 1, row.end());
    }
    if (traj.levels() == 0) throw Error(ErrorKind::io, bad + ": no levels");
    return hash;
}

}  // namespace nlobs::cli
