#pragma once

#include <cctype>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ptomo/errors.hpp"
#include "ptomo/grid.hpp"
#include "ptomo/sinogram.hpp"

namespace ptomo {

namespace detail {

inline void write_u32le(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline void write_f64le(std::ostream& os, double d) {
    std::uint64_t v;
    std::memcpy(&v, &d, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

inline void read_exact(std::istream& is, unsigned char* buf, std::size_t n,
                       const std::string& what) {
    is.read(reinterpret_cast<char*>(buf), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is.gcount()) != n)
        throw TruncatedPayload("unexpected end of file while reading " + what);
}

inline std::uint32_t read_u32le(std::istream& is, const std::string& what) {
    unsigned char b[4];
    read_exact(is, b, 4, what);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline double read_f64le(std::istream& is, const std::string& what) {
    unsigned char b[8];
    read_exact(is, b, 8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double d;
    std::memcpy(&d, &v, 8);
    return d;
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot open " + path + " for writing");
    return os;
}

inline std::ifstream open_in(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open " + path + " for reading");
    return is;
}

// Remaining byte count from the current stream position; bounds every
// allocation so a corrupt header cannot request absurd memory.
inline std::uint64_t bytes_left(std::istream& is) {
    const auto pos = is.tellg();
    is.seekg(0, std::ios::end);
    const auto end = is.tellg();
    is.seekg(pos);
    return static_cast<std::uint64_t>(end - pos);
}

inline void check_payload_size(std::istream& is, std::uint64_t expected, const std::string& path) {
    const std::uint64_t have = bytes_left(is);
    if (have < expected)
        throw TruncatedPayload(path + ": payload has " + std::to_string(have) +
                               " bytes, header promises " + std::to_string(expected));
    if (have > expected)
        throw CorruptHeader(path + ": " + std::to_string(have - expected) +
                            " trailing bytes after payload");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// RF64: magic "RF64", u32 flags (bit0: complex), u32 n_x, u32 n_y,
// f64 length_L, then row-major f64 values (re,im pairs when complex).
// All integers and doubles little-endian.

namespace detail {

inline void write_rf64_header(std::ostream& os, bool complex, const Grid2D& g) {
    os.write("RF64", 4);
    write_u32le(os, complex ? 1u : 0u);
    write_u32le(os, static_cast<std::uint32_t>(g.nx()));
    write_u32le(os, static_cast<std::uint32_t>(g.ny()));
    write_f64le(os, g.length());
}

struct Rf64Header {
    bool complex;
    Grid2D grid;
};

inline Rf64Header read_rf64_header(std::istream& is, const std::string& path) {
    unsigned char magic[4];
    read_exact(is, magic, 4, path + " magic");
    if (std::memcmp(magic, "RF64", 4) != 0) throw CorruptHeader(path + ": not an RF64 file");
    const std::uint32_t flags = read_u32le(is, path + " flags");
    if (flags & ~1u) throw CorruptHeader(path + ": unknown flag bits set");
    const std::uint32_t nx = read_u32le(is, path + " n_x");
    const std::uint32_t ny = read_u32le(is, path + " n_y");
    if (nx < 2 || ny < 2 || nx > (1u << 24) || ny > (1u << 24))
        throw CorruptHeader(path + ": implausible grid " + std::to_string(nx) + "x" +
                            std::to_string(ny));
    const double length = read_f64le(is, path + " length");
    if (!(length > 0.0) || !std::isfinite(length))
        throw ValueOutOfRange(path + ": non-positive domain length");
    return {(flags & 1u) != 0,
            Grid2D(static_cast<int>(nx), static_cast<int>(ny), length)};
}

}  // namespace detail

inline void write_rf64(const std::string& path, const RealField& f) {
    if (!f.all_finite()) throw ValueOutOfRange(path + ": refusing to write non-finite values");
    auto os = detail::open_out(path);
    detail::write_rf64_header(os, false, f.grid());
    for (double v : f.values()) detail::write_f64le(os, v);
    if (!os) throw Error("write failed for " + path);
}

inline void write_rf64(const std::string& path, const ComplexField& f) {
    if (!f.all_finite()) throw ValueOutOfRange(path + ": refusing to write non-finite values");
    auto os = detail::open_out(path);
    detail::write_rf64_header(os, true, f.grid());
    for (const cplx& v : f.values()) {
        detail::write_f64le(os, v.real());
        detail::write_f64le(os, v.imag());
    }
    if (!os) throw Error("write failed for " + path);
}

inline bool rf64_is_complex(const std::string& path) {
    auto is = detail::open_in(path);
    return detail::read_rf64_header(is, path).complex;
}

inline RealField read_rf64_real(const std::string& path) {
    auto is = detail::open_in(path);
    const auto hdr = detail::read_rf64_header(is, path);
    if (hdr.complex) throw UnsupportedFormat(path + ": expected a real field, found complex");
    detail::check_payload_size(is, hdr.grid.count() * 8, path);
    RealField f(hdr.grid);
    for (double& v : f.values()) v = detail::read_f64le(is, path + " payload");
    return f;
}

inline ComplexField read_rf64_complex(const std::string& path) {
    auto is = detail::open_in(path);
    const auto hdr = detail::read_rf64_header(is, path);
    if (!hdr.complex) throw UnsupportedFormat(path + ": expected a complex field, found real");
    detail::check_payload_size(is, hdr.grid.count() * 16, path);
    ComplexField f(hdr.grid);
    for (cplx& v : f.values()) {
        const double re = detail::read_f64le(is, path + " payload");
        const double im = detail::read_f64le(is, path + " payload");
        v = {re, im};
    }
    return f;
}

// ---------------------------------------------------------------------------
// WVSG: magic "WVSG", u32 version=1, u32 n_angles, u32 n_y, f64 length_L,
// f64 l_over_lambda, f64 angles[n_angles] (radians), then row-major complex
// f64 pairs, angle-major.

inline void write_wvsg(const std::string& path, const Sinogram& s) {
    if (!s.all_finite()) throw ValueOutOfRange(path + ": refusing to write non-finite values");
    auto os = detail::open_out(path);
    os.write("WVSG", 4);
    detail::write_u32le(os, 1u);
    detail::write_u32le(os, static_cast<std::uint32_t>(s.n_angles()));
    detail::write_u32le(os, static_cast<std::uint32_t>(s.ny()));
    detail::write_f64le(os, s.params().length_L);
    detail::write_f64le(os, s.params().l_over_lambda);
    for (double a : s.angles()) detail::write_f64le(os, a);
    for (const cplx& v : s.values()) {
        detail::write_f64le(os, v.real());
        detail::write_f64le(os, v.imag());
    }
    if (!os) throw Error("write failed for " + path);
}

inline Sinogram read_wvsg(const std::string& path) {
    auto is = detail::open_in(path);
    unsigned char magic[4];
    detail::read_exact(is, magic, 4, path + " magic");
    if (std::memcmp(magic, "WVSG", 4) != 0) throw CorruptHeader(path + ": not a WVSG file");
    const std::uint32_t version = detail::read_u32le(is, path + " version");
    if (version != 1u) throw CorruptHeader(path + ": unsupported version " + std::to_string(version));
    const std::uint32_t n_angles = detail::read_u32le(is, path + " n_angles");
    const std::uint32_t ny = detail::read_u32le(is, path + " n_y");
    if (n_angles == 0) throw CorruptHeader(path + ": empty sinogram (n_angles = 0)");
    if (ny < 2 || n_angles > (1u << 20) || ny > (1u << 24))
        throw CorruptHeader(path + ": implausible shape " + std::to_string(n_angles) + "x" +
                            std::to_string(ny));
    const double length = detail::read_f64le(is, path + " length");
    const double ratio = detail::read_f64le(is, path + " l_over_lambda");
    if (!(length > 0.0) || !std::isfinite(length))
        throw ValueOutOfRange(path + ": non-positive domain length");
    if (!(ratio > 0.0) || !std::isfinite(ratio))
        throw ValueOutOfRange(path + ": non-positive L/lambda");
    detail::check_payload_size(
        is, static_cast<std::uint64_t>(n_angles) * 8 +
                static_cast<std::uint64_t>(n_angles) * ny * 16,
        path);
    std::vector<double> angles(n_angles);
    for (double& a : angles) a = detail::read_f64le(is, path + " angles");
    Sinogram s(std::move(angles), static_cast<int>(ny), WaveParams(length, ratio));
    for (cplx& v : s.values()) {
        const double re = detail::read_f64le(is, path + " payload");
        const double im = detail::read_f64le(is, path + " payload");
        v = {re, im};
    }
    return s;
}

// ---------------------------------------------------------------------------
// PGM (netpbm P5): 8-bit for maxval <= 255, otherwise 16-bit with big-endian
// samples. Header tokens separated by whitespace, '#' comments allowed.

struct PgmImage {
    int width = 0;
    int height = 0;
    int maxval = 0;
    std::vector<std::uint16_t> pixels;  // row-major, top row first
};

namespace detail {

inline int pgm_token(std::istream& is, const std::string& path) {
    // Skips whitespace and '#' comments, then parses one unsigned integer.
    int c = is.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = is.get();
        } else if (std::isspace(c)) {
            c = is.get();
        } else {
            break;
        }
    }
    if (c == EOF) throw TruncatedPayload(path + ": header ended early");
    if (!std::isdigit(c)) throw CorruptHeader(path + ": expected integer in header");
    long v = 0;
    while (c != EOF && std::isdigit(c)) {
        v = v * 10 + (c - '0');
        if (v > 1000000000L) throw CorruptHeader(path + ": header value too large");
        c = is.get();
    }
    if (c != EOF) is.unget();
    return static_cast<int>(v);
}

}  // namespace detail

inline PgmImage read_pgm(const std::string& path) {
    auto is = detail::open_in(path);
    char magic[2];
    is.read(magic, 2);
    if (is.gcount() != 2 || magic[0] != 'P' || magic[1] != '5')
        throw UnsupportedFormat(path + ": not a binary (P5) PGM file");
    PgmImage img;
    img.width = detail::pgm_token(is, path);
    img.height = detail::pgm_token(is, path);
    img.maxval = detail::pgm_token(is, path);
    if (img.width < 1 || img.height < 1 || img.width > (1 << 20) || img.height > (1 << 20))
        throw CorruptHeader(path + ": implausible dimensions");
    if (img.maxval < 1 || img.maxval > 65535)
        throw CorruptHeader(path + ": maxval must be in [1, 65535]");
    const int c = is.get();
    if (c == EOF) throw TruncatedPayload(path + ": missing raster");
    if (!std::isspace(c)) throw CorruptHeader(path + ": missing whitespace before raster");
    const std::size_t count = static_cast<std::size_t>(img.width) * img.height;
    const int bytes = img.maxval > 255 ? 2 : 1;
    std::vector<unsigned char> raw(count * bytes);
    detail::read_exact(is, raw.data(), raw.size(), path + " raster");
    img.pixels.resize(count);
    if (bytes == 1) {
        for (std::size_t i = 0; i < count; ++i) img.pixels[i] = raw[i];
    } else {
        for (std::size_t i = 0; i < count; ++i)
            img.pixels[i] = static_cast<std::uint16_t>((raw[2 * i] << 8) | raw[2 * i + 1]);
    }
    for (std::uint16_t p : img.pixels)
        if (p > img.maxval) throw ValueOutOfRange(path + ": sample exceeds maxval");
    return img;
}

// Writes the field through a linear window [lo, hi] -> [0, maxval]; values
// outside the window clamp. lo == hi maps everything to 0.
inline void write_pgm(const std::string& path, const RealField& f, int bits, double lo, double hi) {
    if (bits != 8 && bits != 16) throw InvalidArgument("pgm bit depth must be 8 or 16");
    if (!f.all_finite()) throw ValueOutOfRange(path + ": refusing to write non-finite values");
    if (!std::isfinite(lo) || !std::isfinite(hi) || hi < lo)
        throw ValueOutOfRange(path + ": bad window [lo, hi]");
    const int maxval = bits == 8 ? 255 : 65535;
    auto os = detail::open_out(path);
    os << "P5\n" << f.grid().ny() << " " << f.grid().nx() << "\n" << maxval << "\n";
    // Image rows run along y; field row ix becomes image row ix.
    const double span = hi - lo;
    for (int ix = 0; ix < f.grid().nx(); ++ix) {
        for (int iy = 0; iy < f.grid().ny(); ++iy) {
            double t = span > 0.0 ? (f.at(ix, iy) - lo) / span : 0.0;
            t = t < 0.0 ? 0.0 : (t > 1.0 ? 1.0 : t);
            const int q = static_cast<int>(t * maxval + 0.5);
            if (bits == 8) {
                const unsigned char b = static_cast<unsigned char>(q);
                os.write(reinterpret_cast<const char*>(&b), 1);
            } else {
                const unsigned char b[2] = {static_cast<unsigned char>(q >> 8),
                                            static_cast<unsigned char>(q & 0xFF)};
                os.write(reinterpret_cast<const char*>(b), 2);
            }
        }
    }
    if (!os) throw Error("write failed for " + path);
}

// ---------------------------------------------------------------------------
// Plain-text configuration: one "key = value" per line, '#' starts a comment,
// keys checked against the fixed registry below.

class ToolConfig {
public:
    bool has(const std::string& key) const { return entries_.count(key) != 0; }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        auto it = entries_.find(key);
        return it == entries_.end() ? fallback : it->second;
    }

    double get_double(const std::string& key, double fallback) const {
        auto it = entries_.find(key);
        if (it == entries_.end()) return fallback;
        double v{};
        const char* b = it->second.c_str();
        auto [p, ec] = std::from_chars(b, b + it->second.size(), v);
        if (ec != std::errc{} || p != b + it->second.size() || !std::isfinite(v))
            throw ValueOutOfRange("config key " + key + ": not a number: " + it->second);
        return v;
    }

    long long get_int(const std::string& key, long long fallback) const {
        auto it = entries_.find(key);
        if (it == entries_.end()) return fallback;
        long long v{};
        const char* b = it->second.c_str();
        auto [p, ec] = std::from_chars(b, b + it->second.size(), v);
        if (ec != std::errc{} || p != b + it->second.size())
            throw ValueOutOfRange("config key " + key + ": not an integer: " + it->second);
        return v;
    }

    void set(const std::string& key, const std::string& value) { entries_[key] = value; }

    const std::map<std::string, std::string>& entries() const { return entries_; }

private:
    std::map<std::string, std::string> entries_;
};

inline const std::set<std::string>& config_key_registry() {
    static const std::set<std::string> keys = {
        "grid.n",         "wave.l_over_lambda", "angles.count",  "angles.step_deg",
        "filter.kind",    "filter.cutoff",      "seed",          "phantom.kind",
        "paths.phantom",  "paths.sinogram",     "paths.recon",   "paths.report",
        "paths.pgm",      "paths.input",
    };
    return keys;
}

inline ToolConfig parse_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot open " + path + " for reading");
    ToolConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto strip = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            if (b == std::string::npos) return std::string{};
            const auto e = s.find_last_not_of(" \t\r");
            return s.substr(b, e - b + 1);
        };
        if (strip(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InvalidArgument(path + ":" + std::to_string(lineno) +
                                  ": expected `key = value`");
        const std::string key = strip(line.substr(0, eq));
        const std::string value = strip(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw InvalidArgument(path + ":" + std::to_string(lineno) +
                                  ": expected `key = value`");
        if (!config_key_registry().count(key)) throw UnknownKey(key, lineno);
        cfg.set(key, value);
    }
    return cfg;
}

}  // namespace ptomo
