#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

#include "qat/nn.hpp"

namespace qat {

// Checkpoint layout: the 8 magic bytes "QATCKPT1", a u64 array count, then
// per array: u64 name length, name bytes, u64 rank, u64 dims, f64 values.
// All integers and floats little-endian; doubles round-trip bit-exactly.

namespace detail {

inline constexpr char kCkptMagic[8] = {'Q', 'A', 'T', 'C', 'K', 'P', 'T', '1'};

inline void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out += char((v >> (8 * i)) & 0xFF);
}

inline void put_f64(std::string& out, double d) {
    put_u64(out, std::bit_cast<std::uint64_t>(d));
}

struct ByteReader {
    const std::string& data;
    std::size_t pos = 0;

    void need(std::size_t n, const char* what) const {
        if (pos + n > data.size())
            throw std::runtime_error(std::string("checkpoint: truncated while reading ") + what);
    }
    std::uint64_t u64(const char* what) {
        need(8, what);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t(std::uint8_t(data[pos + i])) << (8 * i);
        pos += 8;
        return v;
    }
    double f64(const char* what) { return std::bit_cast<double>(u64(what)); }
    std::string bytes(std::size_t n, const char* what) {
        need(n, what);
        std::string s = data.substr(pos, n);
        pos += n;
        return s;
    }
};

} // namespace detail

inline void save_checkpoint(const std::string& path, const ParamMap& params) {
    std::string out;
    out.append(detail::kCkptMagic, 8);
    detail::put_u64(out, params.size());
    for (const auto& [name, tensor] : params) {
        detail::put_u64(out, name.size());
        out += name;
        detail::put_u64(out, std::uint64_t(tensor.shape().size()));
        for (int d : tensor.shape()) detail::put_u64(out, std::uint64_t(d));
        for (double v : tensor.values()) detail::put_f64(out, v);
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write checkpoint: " + path);
    f.write(out.data(), std::streamsize(out.size()));
    if (!f) throw std::runtime_error("checkpoint write failed: " + path);
}

inline ParamMap load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open checkpoint: " + path);
    std::string data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    detail::ByteReader r{data};
    if (r.bytes(8, "magic") != std::string(detail::kCkptMagic, 8))
        throw std::runtime_error("checkpoint: bad magic in " + path);
    const std::uint64_t count = r.u64("array count");
    ParamMap params;
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::uint64_t name_len = r.u64("name length");
        const std::string name = r.bytes(name_len, "name");
        const std::uint64_t rank = r.u64("rank");
        std::vector<int> shape;
        std::uint64_t total = 1;
        for (std::uint64_t d = 0; d < rank; ++d) {
            const std::uint64_t dim = r.u64("dimension");
            shape.push_back(int(dim));
            total *= dim;
        }
        std::vector<double> values(total);
        for (std::uint64_t v = 0; v < total; ++v) values[v] = r.f64("values");
        params[name] = Tensor::from(std::move(shape), std::move(values), true);
    }
    if (r.pos != data.size()) throw std::runtime_error("checkpoint: trailing bytes in " + path);
    return params;
}

} // namespace qat
