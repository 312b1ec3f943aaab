#include "ridgerec/pgm.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

namespace ridgerec {

namespace {

// Reads the next header token, skipping whitespace and '#' comments.
bool next_token(std::istream& in, std::string& tok) {
    tok.clear();
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {}
            continue;
        }
        if (!std::isspace(c)) break;
    }
    if (c == EOF) return false;
    do {
        tok.push_back(static_cast<char>(c));
        c = in.get();
    } while (c != EOF && !std::isspace(c) && c != '#');
    if (c == '#') in.unget();
    return true;
}

int parse_dim(const std::string& tok, const char* what) {
    try {
        size_t pos = 0;
        const int v = std::stoi(tok, &pos);
        if (pos != tok.size() || v <= 0) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw PgmError(std::string("malformed header: bad ") + what + " '" + tok + "'");
    }
}

}  // namespace

GrayImage load_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw PgmError("cannot open '" + path + "'");

    std::string tok;
    if (!next_token(in, tok)) throw PgmError("malformed header: empty file '" + path + "'");
    if (tok == "P2") throw PgmError("unsupported format P2 (ASCII PGM) in '" + path + "'");
    if (tok != "P5") throw PgmError("malformed header: expected P5, got '" + tok + "'");

    std::string wt, ht, mt;
    if (!next_token(in, wt) || !next_token(in, ht) || !next_token(in, mt))
        throw PgmError("malformed header: truncated dimensions in '" + path + "'");
    const int w = parse_dim(wt, "width");
    const int h = parse_dim(ht, "height");
    const int maxval = parse_dim(mt, "maxval");
    if (maxval != 255)
        throw PgmError("unsupported maxval " + std::to_string(maxval) + " in '" + path + "'");
    // The header is terminated by exactly one whitespace byte, already
    // consumed by next_token's trailing get().

    std::vector<unsigned char> raw(static_cast<size_t>(w) * h);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<size_t>(in.gcount()) != raw.size())
        throw PgmError("truncated payload in '" + path + "'");

    GrayImage img(w, h);
    for (size_t i = 0; i < raw.size(); ++i) img.data[i] = raw[i] / 255.0;
    return img;
}

void save_pgm(const GrayImage& image, const std::string& path) {
    if (image.width <= 0 || image.height <= 0 ||
        image.data.size() != static_cast<size_t>(image.width) * image.height)
        throw PgmError("invalid image for '" + path + "'");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw PgmError("cannot write '" + path + "'");
    char header[64];
    const int n = std::snprintf(header, sizeof(header), "P5\n%d %d\n255\n", image.width,
                                image.height);
    out.write(header, n);
    std::vector<unsigned char> raw(image.size());
    for (size_t i = 0; i < raw.size(); ++i) {
        long v = std::lround(image.data[i] * 255.0);
        if (v < 0) v = 0;
        if (v > 255) v = 255;
        raw[i] = static_cast<unsigned char>(v);
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) throw PgmError("write failed for '" + path + "'");
}

}  // namespace ridgerec
