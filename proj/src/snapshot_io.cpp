#include "mcf/snapshot_io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

#include "mcf/config.hpp"
#include "mcf/errors.hpp"

namespace mcf {

namespace {

constexpr char kMagic[4] = {'M', 'C', 'F', 'S'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

void put_f64(std::vector<std::uint8_t>& out, double x) {
    const auto v = std::bit_cast<std::uint64_t>(x);
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

class ByteReader {
public:
    explicit ByteReader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

    void need(std::size_t n, const char* what) const {
        if (pos_ + n > bytes_.size()) {
            throw InsufficientData(std::string("snapshot truncated in ") + what);
        }
    }
    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(bytes_[pos_ + b]) << (8 * b);
        pos_ += 4;
        return v;
    }
    double f64(const char* what) {
        need(8, what);
        std::uint64_t v = 0;
        for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(bytes_[pos_ + b]) << (8 * b);
        pos_ += 8;
        return std::bit_cast<double>(v);
    }
    std::size_t remaining() const { return bytes_.size() - pos_; }
    std::size_t pos() const { return pos_; }
    void skip(std::size_t n) { pos_ += n; }

private:
    const std::vector<std::uint8_t>& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_snapshot(const Immersion& imm) {
    const auto& grid = imm.grid();
    std::vector<std::uint8_t> out(kMagic, kMagic + 4);
    put_u32(out, kFormatVersion);
    put_u32(out, static_cast<std::uint32_t>(grid.dim));
    put_u32(out, static_cast<std::uint32_t>(imm.ambient_dim()));
    for (int i = 0; i < grid.dim; ++i) put_u32(out, static_cast<std::uint32_t>(grid.sizes[i]));
    for (int i = 0; i < grid.dim; ++i) put_f64(out, grid.spacing[i]);
    put_f64(out, imm.time());
    out.reserve(out.size() + 8 * imm.coords().size());
    for (double x : imm.coords()) put_f64(out, x);
    return out;
}

Immersion decode_snapshot(const std::vector<std::uint8_t>& bytes,
                          const std::vector<double>& periods) {
    ByteReader r(bytes);
    r.need(4, "magic");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw ParseError(0, "bad snapshot magic");
    r.skip(4);
    const std::uint32_t version = r.u32("header");
    if (version != kFormatVersion) throw VersionMismatch(version, kFormatVersion);
    const std::uint32_t n = r.u32("header");
    const std::uint32_t N = r.u32("header");
    if (n < 1 || n > 2) throw ParseError(0, "snapshot intrinsic dimension must be 1 or 2");
    if (N < n + 1 || N > 64) throw ParseError(0, "snapshot ambient dimension out of range");
    std::size_t sizes[2] = {1, 1};
    double h[2] = {1.0, 1.0};
    for (std::uint32_t i = 0; i < n; ++i) sizes[i] = r.u32("header");
    for (std::uint32_t i = 0; i < n; ++i) h[i] = r.f64("header");
    const double t = r.f64("header");

    const ParameterGrid grid = n == 1 ? ParameterGrid::curve(sizes[0], h[0])
                                      : ParameterGrid::surface(sizes[0], sizes[1], h[0], h[1]);
    const std::size_t count = grid.node_count() * N;
    r.need(8 * count, "payload");
    if (r.remaining() != 8 * count) throw ParseError(0, "trailing bytes after snapshot payload");
    std::vector<double> F(count);
    for (auto& x : F) x = r.f64("payload");
    return Immersion(grid, static_cast<int>(N), std::move(F), periods, t);
}

void write_snapshot(const std::filesystem::path& path, const Immersion& imm) {
    const auto bytes = encode_snapshot(imm);
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw std::runtime_error("write failed for " + path.string());
}

Immersion read_snapshot(const std::filesystem::path& path, const std::vector<double>& periods) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InsufficientData("missing snapshot " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)),
                                    std::istreambuf_iterator<char>());
    return decode_snapshot(bytes, periods);
}

std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_series_csv(std::ostream& os, const MonitorSeries& series) {
    const auto& names = series.names();
    for (std::size_t c = 0; c < names.size(); ++c) os << (c ? "," : "") << names[c];
    os << '\n';
    for (std::size_t r = 0; r < series.rows(); ++r) {
        for (std::size_t c = 0; c < series.cols(); ++c) {
            os << (c ? "," : "") << format_double(series.column(c)[r]);
        }
        os << '\n';
    }
}

}  // namespace mcf
