#include "scoregeo/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace scoregeo {

namespace {

uint32_t crc32_table_entry(uint32_t n) {
    for (int k = 0; k < 8; ++k) n = (n & 1) ? 0xEDB88320u ^ (n >> 1) : n >> 1;
    return n;
}

uint32_t crc32(const uint8_t* data, size_t len, uint32_t crc = 0xFFFFFFFFu) {
    static uint32_t table[256];
    static bool init = false;
    if (!init) {
        for (uint32_t n = 0; n < 256; ++n) table[n] = crc32_table_entry(n);
        init = true;
    }
    for (size_t i = 0; i < len; ++i) crc = table[(crc ^ data[i]) & 0xFF] ^ (crc >> 8);
    return crc;
}

void push_u32(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(static_cast<uint8_t>(v >> 24));
    out.push_back(static_cast<uint8_t>(v >> 16));
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v));
}

void push_chunk(std::vector<uint8_t>& out, const char type[4], const std::vector<uint8_t>& payload) {
    push_u32(out, static_cast<uint32_t>(payload.size()));
    std::vector<uint8_t> body(type, type + 4);
    body.insert(body.end(), payload.begin(), payload.end());
    out.insert(out.end(), body.begin(), body.end());
    push_u32(out, crc32(body.data(), body.size()) ^ 0xFFFFFFFFu);
}

// zlib stream with stored (uncompressed) deflate blocks.
std::vector<uint8_t> zlib_store(const std::vector<uint8_t>& raw) {
    std::vector<uint8_t> out;
    out.push_back(0x78);
    out.push_back(0x01);
    size_t pos = 0;
    do {
        const size_t chunk = std::min<size_t>(raw.size() - pos, 65535);
        const bool final = pos + chunk == raw.size();
        out.push_back(final ? 1 : 0);
        out.push_back(static_cast<uint8_t>(chunk & 0xFF));
        out.push_back(static_cast<uint8_t>(chunk >> 8));
        out.push_back(static_cast<uint8_t>(~chunk & 0xFF));
        out.push_back(static_cast<uint8_t>((~chunk >> 8) & 0xFF));
        out.insert(out.end(), raw.begin() + static_cast<long>(pos), raw.begin() + static_cast<long>(pos + chunk));
        pos += chunk;
    } while (pos < raw.size());
    uint32_t a = 1, b = 0;
    for (uint8_t byte : raw) {
        a = (a + byte) % 65521;
        b = (b + a) % 65521;
    }
    push_u32(out, (b << 16) | a);
    return out;
}

} // namespace

std::vector<uint8_t> encode_png_gray(const GrayImage& image) {
    if (image.width < 1 || image.height < 1 ||
        image.pixels.size() != static_cast<size_t>(image.width) * image.height)
        throw std::invalid_argument("encode_png_gray: bad image dimensions");

    std::vector<uint8_t> png = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
    std::vector<uint8_t> ihdr;
    push_u32(ihdr, static_cast<uint32_t>(image.width));
    push_u32(ihdr, static_cast<uint32_t>(image.height));
    ihdr.push_back(8); // bit depth
    ihdr.push_back(0); // grayscale
    ihdr.push_back(0); // compression
    ihdr.push_back(0); // filter
    ihdr.push_back(0); // no interlace
    push_chunk(png, "IHDR", ihdr);

    std::vector<uint8_t> raw;
    raw.reserve((static_cast<size_t>(image.width) + 1) * image.height);
    for (int y = 0; y < image.height; ++y) {
        raw.push_back(0); // filter type: none
        const uint8_t* row = image.pixels.data() + static_cast<size_t>(y) * image.width;
        raw.insert(raw.end(), row, row + image.width);
    }
    push_chunk(png, "IDAT", zlib_store(raw));
    push_chunk(png, "IEND", {});
    return png;
}

void write_png_gray(const std::string& path, const GrayImage& image) {
    const std::vector<uint8_t> bytes = encode_png_gray(image);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_png_gray: cannot open " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write_png_gray: write failed for " + path);
}

Vec read_pgm(const std::string& path, int& width, int& height) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_pgm: cannot open " + path);
    std::string magic;
    in >> magic;
    if (magic != "P2" && magic != "P5") throw std::runtime_error("read_pgm: not a PGM file: " + path);

    auto next_int = [&in, &path]() {
        int v;
        while (true) {
            in >> std::ws;
            if (in.peek() == '#') {
                std::string comment;
                std::getline(in, comment);
                continue;
            }
            if (!(in >> v)) throw std::runtime_error("read_pgm: truncated header in " + path);
            return v;
        }
    };
    width = next_int();
    height = next_int();
    const int maxval = next_int();
    if (width < 1 || height < 1 || maxval < 1 || maxval > 255)
        throw std::runtime_error("read_pgm: unsupported dimensions or maxval in " + path);

    Vec out(width * height);
    if (magic == "P5") {
        in.get(); // single whitespace after maxval
        std::vector<uint8_t> buf(static_cast<size_t>(width) * height);
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        if (!in) throw std::runtime_error("read_pgm: truncated pixel data in " + path);
        for (size_t i = 0; i < buf.size(); ++i) out[static_cast<int>(i)] = buf[i] / static_cast<double>(maxval);
    } else {
        for (int i = 0; i < out.size(); ++i) {
            int v;
            if (!(in >> v)) throw std::runtime_error("read_pgm: truncated pixel data in " + path);
            out[i] = v / static_cast<double>(maxval);
        }
    }
    return out;
}

GrayImage sample_strip(const Mat& rows, int img_h, int img_w, double vmin, double vmax) {
    if (rows.cols() != img_h * img_w)
        throw std::invalid_argument("sample_strip: sample dimension does not match the image shape");
    if (!(vmax > vmin)) throw std::invalid_argument("sample_strip: need vmax > vmin");
    const int count = static_cast<int>(rows.rows());
    GrayImage strip;
    strip.height = img_h;
    strip.width = img_w * count;
    strip.pixels.assign(static_cast<size_t>(strip.width) * strip.height, 0);
    for (int k = 0; k < count; ++k) {
        for (int y = 0; y < img_h; ++y) {
            for (int x = 0; x < img_w; ++x) {
                const double v = (rows(k, y * img_w + x) - vmin) / (vmax - vmin);
                const double clamped = std::clamp(v, 0.0, 1.0);
                strip.pixels[static_cast<size_t>(y) * strip.width + k * img_w + x] =
                    static_cast<uint8_t>(std::lround(clamped * 255.0));
            }
        }
    }
    return strip;
}

} // namespace scoregeo
