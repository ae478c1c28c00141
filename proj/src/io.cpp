#include "ods/io.hpp"

#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <random>
#include <sstream>

#include "ods/error.hpp"

namespace ods {

namespace fs = std::filesystem;

namespace {

uint32_t read_be32(const unsigned char* p) {
    return (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) | (uint32_t(p[2]) << 8) | uint32_t(p[3]);
}

std::string temp_sibling(const fs::path& path) {
    static thread_local std::mt19937_64 rng{std::random_device{}()};
    return path.string() + ".tmp" + std::to_string(rng() % 1000000000ULL);
}

}  // namespace

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const fs::path& path, const std::string& bytes) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    const std::string tmp = temp_sibling(path);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw Error(ErrorCode::IoError, "short write to " + path.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw Error(ErrorCode::IoError, "cannot move output into place: " + path.string());
    }
}

Raster<Rgba8> read_png(const fs::path& path) {
    const std::string bytes = read_file(path);
    const cv::Mat buf(1, static_cast<int>(bytes.size()), CV_8U, const_cast<char*>(bytes.data()));
    cv::Mat m = cv::imdecode(buf, cv::IMREAD_UNCHANGED);
    if (m.empty()) throw Error(ErrorCode::ParseError, "cannot decode image " + path.string());
    if (m.depth() == CV_16U) m.convertTo(m, CV_8U, 1.0 / 257.0);
    if (m.depth() != CV_8U) throw Error(ErrorCode::ParseError, "unsupported pixel depth in " + path.string());
    Raster<Rgba8> out(m.cols, m.rows);
    const int ch = m.channels();
    for (int y = 0; y < m.rows; ++y) {
        const uint8_t* row = m.ptr<uint8_t>(y);
        for (int x = 0; x < m.cols; ++x) {
            const uint8_t* p = row + static_cast<ptrdiff_t>(x) * ch;
            switch (ch) {
                case 1: out(x, y) = {p[0], p[0], p[0], 255}; break;
                case 2: out(x, y) = {p[0], p[0], p[0], p[1]}; break;
                case 3: out(x, y) = {p[2], p[1], p[0], 255}; break;
                default: out(x, y) = {p[2], p[1], p[0], p[3]}; break;
            }
        }
    }
    return out;
}

std::vector<uint8_t> encode_png(const Raster<Rgba8>& img) {
    cv::Mat m(img.height(), img.width(), CV_8UC4);
    for (int y = 0; y < img.height(); ++y) {
        uint8_t* row = m.ptr<uint8_t>(y);
        for (int x = 0; x < img.width(); ++x) {
            const Rgba8& p = img(x, y);
            row[4 * x + 0] = p.b;
            row[4 * x + 1] = p.g;
            row[4 * x + 2] = p.r;
            row[4 * x + 3] = p.a;
        }
    }
    std::vector<uint8_t> out;
    if (!cv::imencode(".png", m, out)) throw Error(ErrorCode::IoError, "PNG encoding failed");
    return out;
}

void write_png(const fs::path& path, const Raster<Rgba8>& img) {
    const std::vector<uint8_t> png = encode_png(img);
    write_file_atomic(path, std::string(png.begin(), png.end()));
}

std::pair<int, int> png_size(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    unsigned char head[24];
    in.read(reinterpret_cast<char*>(head), sizeof head);
    static constexpr unsigned char kSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    if (in.gcount() != 24 || std::memcmp(head, kSig, 8) != 0 || std::memcmp(head + 12, "IHDR", 4) != 0) {
        throw Error(ErrorCode::ParseError, "not a PNG file: " + path.string());
    }
    return {static_cast<int>(read_be32(head + 16)), static_cast<int>(read_be32(head + 20))};
}

Raster<float> read_pfm(const fs::path& path) {
    const std::string bytes = read_file(path);
    const std::string name = path.string();
    // Header: three whitespace-separated tokens after the magic, then one whitespace byte.
    size_t pos = 0;
    auto token = [&]() {
        while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
        const size_t start = pos;
        while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
        return bytes.substr(start, pos - start);
    };
    const std::string magic = token();
    int channels = 0;
    if (magic == "Pf") {
        channels = 1;
    } else if (magic == "PF") {
        channels = 3;
    } else {
        throw Error(ErrorCode::ParseError, "bad PFM magic in " + name);
    }
    int w = 0, h = 0;
    double scale = 0.0;
    try {
        w = std::stoi(token());
        h = std::stoi(token());
        scale = std::stod(token());
    } catch (const std::exception&) {
        throw Error(ErrorCode::ParseError, "bad PFM header in " + name);
    }
    if (pos >= bytes.size() || w <= 0 || h <= 0 || scale == 0.0 || !std::isfinite(scale)) {
        throw Error(ErrorCode::ParseError, "bad PFM header in " + name);
    }
    ++pos;  // single whitespace byte before the data
    const size_t count = static_cast<size_t>(w) * static_cast<size_t>(h) * static_cast<size_t>(channels);
    if (bytes.size() - pos != count * 4) {
        throw Error(ErrorCode::ParseError, "PFM data size mismatch in " + name + " (expected " +
                                               std::to_string(count * 4) + " bytes, found " +
                                               std::to_string(bytes.size() - pos) + ")");
    }
    const bool little = scale < 0.0;
    Raster<float> out(w, h);
    for (int row = 0; row < h; ++row) {
        const int y = h - 1 - row;
        for (int x = 0; x < w; ++x) {
            const size_t off = pos + (static_cast<size_t>(row) * static_cast<size_t>(w) + static_cast<size_t>(x)) *
                                         static_cast<size_t>(channels) * 4;
            uint32_t bits = 0;
            std::memcpy(&bits, bytes.data() + off, 4);
            if ((std::endian::native == std::endian::little) != little) bits = __builtin_bswap32(bits);
            out(x, y) = std::bit_cast<float>(bits);
        }
    }
    return out;
}

void write_pfm(const fs::path& path, const Raster<float>& img) {
    std::string bytes = "Pf\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n-1.0\n";
    const size_t header = bytes.size();
    bytes.resize(header + img.size() * 4);
    for (int row = 0; row < img.height(); ++row) {
        const int y = img.height() - 1 - row;
        for (int x = 0; x < img.width(); ++x) {
            uint32_t bits = std::bit_cast<uint32_t>(img(x, y));
            if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
            std::memcpy(bytes.data() + header + (static_cast<size_t>(row) * img.width() + x) * 4, &bits, 4);
        }
    }
    write_file_atomic(path, bytes);
}

}  // namespace ods
