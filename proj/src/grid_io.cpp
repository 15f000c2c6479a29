#include "gridcp/grid_io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

namespace gridcp::io {

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
    std::array<char, 4> b{};
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
    out.write(b.data(), b.size());
}

void put_f64(std::ostream& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    std::array<char, 8> b{};
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xFFu);
    out.write(b.data(), b.size());
}

void read_exact(std::istream& in, char* dst, std::size_t n) {
    in.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n) throw DataError("CGF1: truncated stream");
}

std::uint32_t get_u32(std::istream& in) {
    std::array<unsigned char, 4> b{};
    read_exact(in, reinterpret_cast<char*>(b.data()), b.size());
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

}  // namespace

void write_cgf(std::ostream& out, const GridField& field) {
    if (field.height() > std::numeric_limits<std::uint32_t>::max() ||
        field.width() > std::numeric_limits<std::uint32_t>::max()) {
        throw DataError("CGF1: grid too large");
    }
    out.write(kCgfMagic, sizeof(kCgfMagic));
    put_u32(out, static_cast<std::uint32_t>(field.height()));
    put_u32(out, static_cast<std::uint32_t>(field.width()));
    const auto& mask = field.layout().mask();
    out.put(mask ? 1 : 0);
    for (double v : field.values()) put_f64(out, v);
    if (mask) out.write(reinterpret_cast<const char*>(mask->data()), static_cast<std::streamsize>(mask->size()));
    if (!out) throw DataError("CGF1: write failed");
}

GridField read_cgf(std::istream& in) {
    std::array<char, 8> magic{};
    read_exact(in, magic.data(), magic.size());
    if (std::memcmp(magic.data(), kCgfMagic, sizeof(kCgfMagic)) != 0) {
        throw DataError("CGF1: bad magic");
    }
    const std::uint32_t height = get_u32(in);
    const std::uint32_t width = get_u32(in);
    char flag = 0;
    read_exact(in, &flag, 1);
    if (flag != 0 && flag != 1) throw DataError("CGF1: bad mask flag");
    const std::size_t n = static_cast<std::size_t>(height) * width;

    std::vector<unsigned char> raw(n * 8);
    read_exact(in, reinterpret_cast<char*>(raw.data()), raw.size());
    std::vector<double> values(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t bits = 0;
        for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(raw[i * 8 + k]) << (8 * k);
        values[i] = std::bit_cast<double>(bits);
    }
    std::optional<Mask> mask;
    if (flag == 1) {
        Mask m(n);
        read_exact(in, reinterpret_cast<char*>(m.data()), n);
        mask = std::move(m);
    }
    return GridField(height, width, std::move(values), std::move(mask));
}

void write_cgf(const std::filesystem::path& path, const GridField& field) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    write_cgf(out, field);
}

GridField read_cgf(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    return read_cgf(in);
}

void write_cgf_stack(const std::filesystem::path& path, const std::vector<GridField>& fields) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    for (const auto& f : fields) write_cgf(out, f);
}

std::vector<GridField> read_cgf_stack(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::vector<GridField> fields;
    while (in.peek() != std::char_traits<char>::eof()) fields.push_back(read_cgf(in));
    return fields;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
        while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
        cells.push_back(cell);
    }
    return cells;
}

template <typename T>
T parse_number(const std::string& text, std::size_t line_no) {
    T value{};
    if constexpr (std::is_floating_point_v<T>) {
        try {
            std::size_t used = 0;
            value = std::stod(text, &used);
            if (used != text.size()) throw std::invalid_argument(text);
        } catch (const std::exception&) {
            throw DataError("CSV line " + std::to_string(line_no) + ": bad number '" + text + "'");
        }
    } else {
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
        if (ec != std::errc{} || ptr != text.data() + text.size()) {
            throw DataError("CSV line " + std::to_string(line_no) + ": bad integer '" + text + "'");
        }
    }
    return value;
}

}  // namespace

GridField read_grid_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw DataError("CSV: empty input");
    const auto header = split_csv(line);
    const bool has_mask_col = header.size() == 4 && header[3] == "mask";
    if (header.size() < 3 || header[0] != "row" || header[1] != "col" || header[2] != "value" ||
        (header.size() == 4 && !has_mask_col) || header.size() > 4) {
        throw DataError("CSV: header must be row,col,value[,mask]");
    }

    struct Cell {
        double value;
        bool valid;
    };
    std::map<std::pair<std::size_t, std::size_t>, Cell> cells;
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto parts = split_csv(line);
        if (parts.size() != header.size()) {
            throw DataError("CSV line " + std::to_string(line_no) + ": wrong column count");
        }
        const auto row = parse_number<std::size_t>(parts[0], line_no);
        const auto col = parse_number<std::size_t>(parts[1], line_no);
        const double value = parse_number<double>(parts[2], line_no);
        bool valid = true;
        if (has_mask_col) valid = parse_number<int>(parts[3], line_no) != 0;
        if (!cells.emplace(std::make_pair(row, col), Cell{value, valid}).second) {
            throw DataError("CSV line " + std::to_string(line_no) + ": duplicate cell");
        }
        height = std::max(height, row + 1);
        width = std::max(width, col + 1);
    }
    if (cells.empty()) throw DataError("CSV: no cells");

    const std::size_t n = height * width;
    std::vector<double> values(n, 0.0);
    Mask mask(n, 0);
    bool all_valid = true;
    for (const auto& [rc, cell] : cells) {
        const std::size_t idx = rc.first * width + rc.second;
        values[idx] = cell.value;
        mask[idx] = cell.valid ? 1 : 0;
    }
    for (auto m : mask) all_valid = all_valid && m;
    std::optional<Mask> opt_mask;
    if (has_mask_col || !all_valid) opt_mask = std::move(mask);
    return GridField(height, width, std::move(values), std::move(opt_mask));
}

GridField read_grid_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    return read_grid_csv(in);
}

void write_grid_csv(std::ostream& out, const GridField& field) {
    const bool masked = field.layout().has_mask();
    out << (masked ? "row,col,value,mask\n" : "row,col,value\n");
    char buf[64];
    for (std::size_t r = 0; r < field.height(); ++r) {
        for (std::size_t c = 0; c < field.width(); ++c) {
            const std::size_t idx = field.layout().index(r, c);
            auto res = std::to_chars(buf, buf + sizeof(buf), field[idx]);
            out << r << ',' << c << ',' << std::string_view(buf, res.ptr - buf);
            if (masked) out << ',' << (field.valid(idx) ? 1 : 0);
            out << '\n';
        }
    }
}

}  // namespace gridcp::io
