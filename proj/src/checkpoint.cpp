#include "passauth/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "passauth/errors.hpp"

namespace passauth::neuralnet {

namespace {

constexpr char kMagic[8] = {'S', 'L', 'S', 'T', 'M', 'C', 'K', '\0'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::vector<unsigned char>& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

void put_f64(std::vector<unsigned char>& buf, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<unsigned char>(bits >> (8 * i)));
}

struct Reader {
    const unsigned char* p;
    const unsigned char* end;

    std::uint32_t u32() {
        if (end - p < 4) throw ParseError("checkpoint truncated");
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
        p += 4;
        return v;
    }

    double f64() {
        if (end - p < 8) throw ParseError("checkpoint truncated");
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
        p += 8;
        double v;
        std::memcpy(&v, &bits, sizeof(v));
        return v;
    }
};

}  // namespace

void save_checkpoint(const SiameseModel& model, const std::string& path) {
    std::vector<unsigned char> buf;
    buf.insert(buf.end(), kMagic, kMagic + sizeof(kMagic));
    put_u32(buf, kVersion);
    put_u32(buf, static_cast<std::uint32_t>(model.feature_width()));
    put_u32(buf, static_cast<std::uint32_t>(model.embedding_width()));
    put_f64(buf, model.margin);

    std::vector<double> flat(parameter_count(model));
    flatten_params(model, flat);
    for (double v : flat) put_f64(buf, v);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("save_checkpoint: cannot open " + path);
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size()));
    if (!out) throw DataError("save_checkpoint: write failed for " + path);
}

SiameseModel load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("load_checkpoint: cannot open " + path);
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());

    if (buf.size() < sizeof(kMagic) ||
        std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0)
        throw ParseError("load_checkpoint: bad magic in " + path);

    Reader r{buf.data() + sizeof(kMagic), buf.data() + buf.size()};
    const std::uint32_t version = r.u32();
    if (version != kVersion)
        throw ParseError("load_checkpoint: unsupported format version " +
                         std::to_string(version));
    const std::uint32_t feature_width = r.u32();
    const std::uint32_t embedding_width = r.u32();
    const double margin = r.f64();
    if (feature_width < 1 || embedding_width < 1 || margin <= 0.0)
        throw ParseError("load_checkpoint: invalid header fields");

    SiameseModel model;
    model.layer1 = LstmLayerParams::zeros(feature_width, embedding_width);
    model.layer2 = LstmLayerParams::zeros(embedding_width, embedding_width);
    model.margin = margin;

    const std::size_t n = parameter_count(model);
    const std::size_t expected = sizeof(kMagic) + 4 + 4 + 4 + 8 + 8 * n;
    if (buf.size() != expected)
        throw ParseError("load_checkpoint: expected " + std::to_string(expected) +
                         " bytes, got " + std::to_string(buf.size()));

    std::vector<double> flat(n);
    for (double& v : flat) v = r.f64();
    unflatten_params(flat, model);
    return model;
}

}  // namespace passauth::neuralnet
