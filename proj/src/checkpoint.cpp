#include "cpsr/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace cpsr {

namespace {

constexpr char kMagic[8] = {'C', 'P', 'S', 'R', 'C', 'K', 'P', 'T'};

void put_u64(std::ostream& out, std::uint64_t x) {
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((x >> (8 * i)) & 0xFF);
    out.write(buf, 8);
}

void put_u32(std::ostream& out, std::uint32_t x) {
    char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((x >> (8 * i)) & 0xFF);
    out.write(buf, 4);
}

void put_f64(std::ostream& out, double x) { put_u64(out, std::bit_cast<std::uint64_t>(x)); }

std::uint64_t get_u64(std::istream& in) {
    unsigned char buf[8];
    if (!in.read(reinterpret_cast<char*>(buf), 8)) throw std::runtime_error("truncated checkpoint");
    std::uint64_t x = 0;
    for (int i = 7; i >= 0; --i) x = (x << 8) | buf[i];
    return x;
}

std::uint32_t get_u32(std::istream& in) {
    unsigned char buf[4];
    if (!in.read(reinterpret_cast<char*>(buf), 4)) throw std::runtime_error("truncated checkpoint");
    std::uint32_t x = 0;
    for (int i = 3; i >= 0; --i) x = (x << 8) | buf[i];
    return x;
}

double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

void put_blocks(std::ostream& out, const ParamTensors& t) {
    t.for_each_block([&out](const std::vector<double>& block) {
        for (double x : block) put_f64(out, x);
    });
}

void get_blocks(std::istream& in, ParamTensors& t) {
    t.for_each_block([&in](std::vector<double>& block) {
        for (double& x : block) x = get_f64(in);
    });
}

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
    const auto& p = ckpt.params;
    out.write(kMagic, sizeof kMagic);
    put_u32(out, kCheckpointVersion);
    put_u32(out, static_cast<std::uint32_t>(p.shape.dim));
    put_u32(out, static_cast<std::uint32_t>(p.shape.num_relations));
    put_u32(out, p.shape.shared_mix ? 1u : 0u);
    put_u64(out, p.size());
    put_blocks(out, p);

    const auto& o = ckpt.optimizer;
    put_u64(out, o.step);
    put_f64(out, o.config.lr);
    put_f64(out, o.config.beta1);
    put_f64(out, o.config.beta2);
    put_f64(out, o.config.eps);
    put_blocks(out, o.m);
    put_blocks(out, o.v);

    put_u32(out, ckpt.training.epochs_done);
    put_u32(out, ckpt.training.best_epoch);
    put_f64(out, ckpt.training.best_valid_mrr);
    if (!out) throw std::runtime_error("failed writing checkpoint");
}

Checkpoint read_checkpoint(std::istream& in) {
    char magic[8];
    if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) throw std::runtime_error("not a checkpoint file");
    const auto version = get_u32(in);
    if (version != kCheckpointVersion) {
        throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
    }
    ModelShape shape;
    shape.dim = get_u32(in);
    shape.num_relations = get_u32(in);
    const auto flags = get_u32(in);
    if (flags & ~1u) throw std::runtime_error("unknown checkpoint flags");
    shape.shared_mix = (flags & 1u) != 0;

    Checkpoint c;
    c.params = ModelParams::zeros(shape);
    if (get_u64(in) != c.params.size()) throw std::runtime_error("checkpoint parameter count disagrees with header");
    get_blocks(in, c.params);

    c.optimizer = OptimizerState::init(c.params, {});
    c.optimizer.step = get_u64(in);
    c.optimizer.config.lr = get_f64(in);
    c.optimizer.config.beta1 = get_f64(in);
    c.optimizer.config.beta2 = get_f64(in);
    c.optimizer.config.eps = get_f64(in);
    get_blocks(in, c.optimizer.m);
    get_blocks(in, c.optimizer.v);

    c.training.epochs_done = get_u32(in);
    c.training.best_epoch = get_u32(in);
    c.training.best_valid_mrr = get_f64(in);
    return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write checkpoint " + tmp.string());
        write_checkpoint(out, ckpt);
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint not found: " + path.string());
    try {
        return read_checkpoint(in);
    } catch (const std::runtime_error& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
}

}  // namespace cpsr
