#include "ridgerec/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace ridgerec {

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'R', 'F', 'C', 'K'};
constexpr uint32_t kVersion = 1;

struct Writer {
    std::ofstream out;
    explicit Writer(const std::string& path) : out(path, std::ios::binary) {
        if (!out) throw CheckpointError("cannot write '" + path + "'");
    }
    void bytes(const void* p, size_t n) { out.write(static_cast<const char*>(p), n); }
    void u32(uint32_t v) { bytes(&v, 4); }
    void u64(uint64_t v) { bytes(&v, 8); }
    void f64(double v) { bytes(&v, 8); }
    void floats(const std::vector<float>& v) {
        u64(v.size());
        bytes(v.data(), v.size() * sizeof(float));
    }
    void doubles(const std::vector<double>& v) {
        u64(v.size());
        bytes(v.data(), v.size() * sizeof(double));
    }
};

struct Reader {
    std::ifstream in;
    std::string path;
    explicit Reader(const std::string& p) : in(p, std::ios::binary), path(p) {
        if (!in) throw CheckpointError("cannot open '" + p + "'");
    }
    void bytes(void* p, size_t n) {
        in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<size_t>(in.gcount()) != n)
            throw CheckpointError("truncated checkpoint '" + path + "'");
    }
    uint32_t u32() {
        uint32_t v;
        bytes(&v, 4);
        return v;
    }
    uint64_t u64() {
        uint64_t v;
        bytes(&v, 8);
        return v;
    }
    double f64() {
        double v;
        bytes(&v, 8);
        return v;
    }
    void floats(std::vector<float>& v, size_t expected) {
        const uint64_t n = u64();
        if (n != expected)
            throw CheckpointError("parameter blob size mismatch in '" + path + "'");
        v.resize(n);
        bytes(v.data(), n * sizeof(float));
    }
    void doubles(std::vector<double>& v) {
        const uint64_t n = u64();
        v.resize(n);
        bytes(v.data(), n * sizeof(double));
    }
};

std::vector<const std::vector<float>*> layer_param_arrays(const Layer& l) {
    switch (l.kind) {
        case LayerKind::Conv:
        case LayerKind::ConvTranspose:
            return {&l.weight, &l.bias};
        case LayerKind::BatchNorm:
            return {&l.scale, &l.shift, &l.running_mean, &l.running_var};
        default:
            return {};
    }
}

std::vector<std::vector<float>*> layer_param_arrays(Layer& l) {
    switch (l.kind) {
        case LayerKind::Conv:
        case LayerKind::ConvTranspose:
            return {&l.weight, &l.bias};
        case LayerKind::BatchNorm:
            return {&l.scale, &l.shift, &l.running_mean, &l.running_var};
        default:
            return {};
    }
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
    Writer w(path);
    w.bytes(kMagic, 4);
    w.u32(kVersion);
    w.u32(static_cast<uint32_t>(ck.model.in_h));
    w.u32(static_cast<uint32_t>(ck.model.in_w));
    w.u32(static_cast<uint32_t>(ck.model.stages));
    w.u32(static_cast<uint32_t>(ck.model.bottleneck));
    w.u32(static_cast<uint32_t>(ck.model.ksize));

    w.u32(static_cast<uint32_t>(ck.model.layers.size()));
    for (const Layer& l : ck.model.layers) {
        w.u32(static_cast<uint32_t>(l.kind));
        w.u32(static_cast<uint32_t>(l.in_c));
        w.u32(static_cast<uint32_t>(l.out_c));
        w.u32(static_cast<uint32_t>(l.k));
        w.u32(static_cast<uint32_t>(l.stride));
        w.f64(l.slope);
        w.u32(static_cast<uint32_t>(l.target_h));
        w.u32(static_cast<uint32_t>(l.target_w));
    }
    for (const Layer& l : ck.model.layers)
        for (const auto* arr : layer_param_arrays(l)) w.floats(*arr);

    w.u64(static_cast<uint64_t>(ck.adam.t));
    w.u64(ck.adam.m.size());
    for (size_t i = 0; i < ck.adam.m.size(); ++i) {
        w.doubles(ck.adam.m[i]);
        w.doubles(ck.adam.v[i]);
    }
    for (uint64_t s : ck.rng_state) w.u64(s);
    w.u64(static_cast<uint64_t>(ck.iterations_done));
    if (!w.out) throw CheckpointError("write failed for '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
    Reader r(path);
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw CheckpointError("bad magic in '" + path + "' (not a checkpoint)");
    const uint32_t version = r.u32();
    if (version != kVersion)
        throw CheckpointError("unsupported checkpoint version " + std::to_string(version) +
                              " in '" + path + "'");

    const int in_h = static_cast<int>(r.u32());
    const int in_w = static_cast<int>(r.u32());
    const int stages = static_cast<int>(r.u32());
    const int bottleneck = static_cast<int>(r.u32());
    const int ksize = static_cast<int>(r.u32());

    Checkpoint ck;
    ck.model = build_cae(in_h, in_w, stages, bottleneck, ksize);

    const uint32_t n_layers = r.u32();
    if (n_layers != ck.model.layers.size())
        throw CheckpointError("layer table mismatch in '" + path + "'");
    for (Layer& l : ck.model.layers) {
        const auto kind = static_cast<LayerKind>(r.u32());
        const int in_c = static_cast<int>(r.u32());
        const int out_c = static_cast<int>(r.u32());
        const int k = static_cast<int>(r.u32());
        const int stride = static_cast<int>(r.u32());
        const double slope = r.f64();
        const int th = static_cast<int>(r.u32());
        const int tw = static_cast<int>(r.u32());
        if (kind != l.kind || in_c != l.in_c || out_c != l.out_c || k != l.k ||
            stride != l.stride || slope != l.slope || th != l.target_h || tw != l.target_w)
            throw CheckpointError("layer table mismatch in '" + path + "'");
    }
    for (Layer& l : ck.model.layers)
        for (auto* arr : layer_param_arrays(l)) r.floats(*arr, arr->size());

    ck.adam.t = static_cast<int64_t>(r.u64());
    const uint64_t slots = r.u64();
    ck.adam.m.resize(slots);
    ck.adam.v.resize(slots);
    for (uint64_t i = 0; i < slots; ++i) {
        r.doubles(ck.adam.m[i]);
        r.doubles(ck.adam.v[i]);
    }
    for (auto& s : ck.rng_state) s = r.u64();
    ck.iterations_done = static_cast<int64_t>(r.u64());
    return ck;
}

}  // namespace ridgerec
