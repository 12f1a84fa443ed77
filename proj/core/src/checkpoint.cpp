#include "etd/checkpoint.hpp"

#include "etd/errors.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace etd {

namespace {

void put_u16(std::string& buf, uint16_t v) {
    for (int i = 0; i < 2; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u32(std::string& buf, uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u64(std::string& buf, uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_f64(std::string& buf, double v) { put_u64(buf, std::bit_cast<uint64_t>(v)); }

class Reader {
public:
    Reader(std::string data, std::string path) : data_(std::move(data)), path_(std::move(path)) {}

    uint16_t u16() { return static_cast<uint16_t>(raw(2)); }
    uint32_t u32() { return static_cast<uint32_t>(raw(4)); }
    uint64_t u64() { return raw(8); }
    double f64() { return std::bit_cast<double>(raw(8)); }

    std::string bytes(size_t n) {
        need(n);
        std::string out = data_.substr(pos_, n);
        pos_ += n;
        return out;
    }

    bool exhausted() const { return pos_ == data_.size(); }
    const std::string& path() const { return path_; }

private:
    uint64_t raw(size_t n) {
        need(n);
        uint64_t v = 0;
        for (size_t i = 0; i < n; ++i) {
            v |= static_cast<uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        }
        pos_ += n;
        return v;
    }
    void need(size_t n) {
        if (pos_ + n > data_.size()) throw DataError(path_ + ": checkpoint truncated");
    }

    std::string data_;
    std::string path_;
    size_t pos_ = 0;
};

void put_named_blocks(std::string& buf, const Model& model) {
    const auto blocks = parameter_blocks(model);
    put_u32(buf, static_cast<uint32_t>(blocks.size()));
    for (const auto& block : blocks) {
        put_u16(buf, static_cast<uint16_t>(block.name.size()));
        buf.append(block.name);
        put_u64(buf, block.values.size());
        for (double v : block.values) put_f64(buf, v);
    }
}

void read_named_blocks(Reader& in, Model& model) {
    const auto blocks = parameter_blocks(model);
    const uint32_t count = in.u32();
    if (count != blocks.size()) {
        throw DataError(in.path() + ": checkpoint block count mismatch");
    }
    for (const auto& block : blocks) {
        const uint16_t name_len = in.u16();
        const std::string name = in.bytes(name_len);
        if (name != block.name) {
            throw DataError(in.path() + ": unexpected checkpoint block '" + name + "', wanted '" +
                            block.name + "'");
        }
        const uint64_t n = in.u64();
        if (n != block.values.size()) {
            throw DataError(in.path() + ": block '" + name + "' has wrong size");
        }
        for (double& v : block.values) v = in.f64();
    }
}

} // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::string buf;
    buf.append(kCheckpointMagic, sizeof(kCheckpointMagic));
    put_u32(buf, kCheckpointVersion);
    put_u32(buf, static_cast<uint32_t>(ckpt.model.d));
    put_u32(buf, static_cast<uint32_t>(ckpt.model.d_L));
    put_u32(buf, static_cast<uint32_t>(ckpt.model.explorer.num_steps));
    put_u32(buf, static_cast<uint32_t>(ckpt.model.explorer.top_k));
    put_named_blocks(buf, ckpt.model);
    buf.push_back(ckpt.has_adam ? 1 : 0);
    if (ckpt.has_adam) {
        put_u64(buf, ckpt.adam.t);
        put_named_blocks(buf, ckpt.adam.m);
        put_named_blocks(buf, ckpt.adam.v);
    }
    put_u32(buf, ckpt.epochs_trained);
    put_u64(buf, ckpt.loss_curve.size());
    for (double v : ckpt.loss_curve) put_f64(buf, v);
    put_u64(buf, ckpt.seed);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError(path + ": cannot open checkpoint for writing");
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw DataError(path + ": checkpoint write failed");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw DataError(path + ": cannot open checkpoint");
    std::string data((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
    Reader in(std::move(data), path);

    const std::string magic = in.bytes(sizeof(kCheckpointMagic));
    if (std::memcmp(magic.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0) {
        throw DataError(path + ": not a checkpoint file");
    }
    const uint32_t version = in.u32();
    if (version != kCheckpointVersion) {
        throw DataError(path + ": unsupported checkpoint version " + std::to_string(version));
    }

    const uint32_t d = in.u32();
    const uint32_t d_L = in.u32();
    const uint32_t num_steps = in.u32();
    const uint32_t top_k = in.u32();
    if (d == 0 || d_L == 0 || num_steps == 0 || top_k == 0) {
        throw DataError(path + ": checkpoint header has zero shape field");
    }

    Checkpoint ckpt;
    ckpt.model = make_model(static_cast<int>(d), static_cast<int>(d_L), static_cast<int>(num_steps),
                            static_cast<int>(top_k));
    read_named_blocks(in, ckpt.model);
    ckpt.has_adam = in.bytes(1)[0] != 0;
    if (ckpt.has_adam) {
        ckpt.adam.t = in.u64();
        ckpt.adam.m = zeros_like(ckpt.model);
        ckpt.adam.v = zeros_like(ckpt.model);
        read_named_blocks(in, ckpt.adam.m);
        read_named_blocks(in, ckpt.adam.v);
    }
    ckpt.epochs_trained = in.u32();
    const uint64_t curve_len = in.u64();
    ckpt.loss_curve.resize(curve_len);
    for (double& v : ckpt.loss_curve) v = in.f64();
    ckpt.seed = in.u64();
    if (!in.exhausted()) throw DataError(path + ": trailing bytes after checkpoint payload");
    return ckpt;
}

} // namespace etd
