#include "kronest/dataset_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

namespace kronest {

namespace {

constexpr std::size_t kMaxHeader = 256;

void put_f64(std::ostream& out, double v) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    if constexpr (std::endian::native == std::endian::big) {
        bits = __builtin_bswap64(bits);
    }
    char buf[8];
    std::memcpy(buf, &bits, 8);
    out.write(buf, 8);
}

class PayloadReader {
public:
    PayloadReader(std::istream& in, std::size_t offset) : in_(in), offset_(offset) {}

    double f64() {
        char buf[8];
        in_.read(buf, 8);
        if (in_.gcount() != 8) throw ParseError("truncated payload", offset_ + in_.gcount());
        offset_ += 8;
        std::uint64_t bits = 0;
        std::memcpy(&bits, buf, 8);
        if constexpr (std::endian::native == std::endian::big) {
            bits = __builtin_bswap64(bits);
        }
        return std::bit_cast<double>(bits);
    }

    Complex complex() {
        const double re = f64();
        const double im = f64();
        return {re, im};
    }

    std::size_t offset() const { return offset_; }

private:
    std::istream& in_;
    std::size_t offset_;
};

long parse_field(const std::string& token, const std::string& key, std::size_t offset) {
    const std::string prefix = key + "=";
    if (token.rfind(prefix, 0) != 0) {
        throw ParseError("expected '" + prefix + "<int>' in header, got '" + token + "'", offset);
    }
    const std::string digits = token.substr(prefix.size());
    std::size_t used = 0;
    long v = 0;
    try {
        v = std::stol(digits, &used);
    } catch (const std::exception&) {
        throw ParseError("invalid integer in header field '" + token + "'", offset);
    }
    if (used != digits.size() || v < 0) {
        throw ParseError("invalid integer in header field '" + token + "'", offset);
    }
    return v;
}

}  // namespace

void write_sample_set(std::ostream& out, const SampleSet& s) {
    for (const auto& y : s.samples) {
        if (y.rows() != s.n_p || y.cols() != s.n_st) {
            throw DimensionError("write_sample_set: sample shape mismatch");
        }
    }
    out << "KSAMP v1 Np=" << s.n_p << " Nst=" << s.n_st << " L=" << s.samples.size()
        << " truth=" << (s.truth ? "yes" : "no") << '\n';
    for (const auto& y : s.samples) {
        // Column-major storage is exactly the column-fill layout.
        for (Index k = 0; k < y.size(); ++k) {
            put_f64(out, y.data()[k].real());
            put_f64(out, y.data()[k].imag());
        }
    }
    if (s.truth) {
        for (const Matrix* m : {&s.truth->st, &s.truth->p}) {
            for (Index i = 0; i < m->rows(); ++i) {
                for (Index j = 0; j < m->cols(); ++j) {
                    put_f64(out, (*m)(i, j).real());
                    put_f64(out, (*m)(i, j).imag());
                }
            }
        }
        put_f64(out, s.noise_power);
    }
    if (!out) throw IoError("write_sample_set: stream write failed");
}

void write_sample_set(const std::string& path, const SampleSet& s) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    write_sample_set(out, s);
}

SampleSet read_sample_set(std::istream& in) {
    std::string header;
    char c = 0;
    while (in.get(c) && c != '\n') {
        header.push_back(c);
        if (header.size() > kMaxHeader) throw ParseError("header line too long", header.size());
    }
    if (header.empty() && !in) throw ParseError("empty file: missing KSAMP header", 0);
    if (c != '\n') throw ParseError("header line is not terminated", header.size());

    std::istringstream hs(header);
    std::vector<std::string> tokens;
    for (std::string t; hs >> t;) tokens.push_back(t);
    if (tokens.size() < 5 || tokens.size() > 6 || tokens[0] != "KSAMP") {
        throw ParseError("malformed header (line 1): '" + header + "'", 0);
    }
    if (tokens[1] != "v1") throw ParseError("unsupported version '" + tokens[1] + "' (line 1)", 6);

    SampleSet s;
    s.n_p = parse_field(tokens[2], "Np", 0);
    s.n_st = parse_field(tokens[3], "Nst", 0);
    const long count = parse_field(tokens[4], "L", 0);
    if (s.n_p < 1 || s.n_st < 1) throw ParseError("Np and Nst must be >= 1 (line 1)", 0);
    bool truth = false;
    if (tokens.size() == 6) {
        if (tokens[5] == "truth=yes") {
            truth = true;
        } else if (tokens[5] != "truth=no") {
            throw ParseError("invalid truth flag '" + tokens[5] + "' (line 1)", 0);
        }
    }

    PayloadReader r(in, header.size() + 1);
    s.samples.reserve(static_cast<std::size_t>(count));
    for (long l = 0; l < count; ++l) {
        DataMatrix y(s.n_p, s.n_st);
        for (Index k = 0; k < y.size(); ++k) y.data()[k] = r.complex();
        s.samples.push_back(std::move(y));
    }
    if (truth) {
        KroneckerCov t{Matrix(s.n_st, s.n_st), Matrix(s.n_p, s.n_p)};
        for (Matrix* m : {&t.st, &t.p}) {
            for (Index i = 0; i < m->rows(); ++i) {
                for (Index j = 0; j < m->cols(); ++j) (*m)(i, j) = r.complex();
            }
        }
        s.truth = std::move(t);
        s.noise_power = r.f64();
    }
    if (in.peek() != std::char_traits<char>::eof()) {
        throw ParseError("trailing bytes after payload", r.offset());
    }
    return s;
}

SampleSet read_sample_set(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open dataset '" + path + "'");
    return read_sample_set(in);
}

}  // namespace kronest
