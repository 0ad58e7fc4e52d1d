#include "srckt/model/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "srckt/util/crc32.hpp"
#include "srckt/util/error.hpp"

namespace srckt {
namespace {

void put_u8(std::vector<std::uint8_t>& out, std::uint8_t v) { out.push_back(v); }
void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}
void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}

    void need(std::size_t n) const {
        if (pos_ + n > b_.size()) fail(ErrorCode::ChecksumFail, "tensor file truncated");
    }
    std::uint8_t u8() {
        need(1);
        return b_[pos_++];
    }
    std::uint16_t u16() {
        need(2);
        const auto v = static_cast<std::uint16_t>(b_[pos_] | (b_[pos_ + 1] << 8));
        pos_ += 2;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
        pos_ += 4;
        return v;
    }
    std::string bytes(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    std::size_t pos() const { return pos_; }

private:
    std::span<const std::uint8_t> b_;
    std::size_t pos_ = 0;
};

} // namespace

std::vector<std::uint8_t> encode_tensor_file(std::string_view magic, const TensorFile& file) {
    std::vector<std::uint8_t> out(magic.begin(), magic.end());
    put_u32(out, kTensorFileVersion);
    const std::string header = file.header.dump();
    put_u32(out, static_cast<std::uint32_t>(header.size()));
    out.insert(out.end(), header.begin(), header.end());
    for (const auto& t : file.tensors) {
        if (t.name.size() > 0xffff) fail(ErrorCode::ConfigError, "tensor name too long");
        put_u16(out, static_cast<std::uint16_t>(t.name.size()));
        out.insert(out.end(), t.name.begin(), t.name.end());
        put_u8(out, 0); // f32
        put_u8(out, 2);
        put_u32(out, static_cast<std::uint32_t>(t.value.rows));
        put_u32(out, static_cast<std::uint32_t>(t.value.cols));
        for (double x : t.value.v) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(x)));
    }
    put_u32(out, crc32(out));
    return out;
}

TensorFile decode_tensor_file(std::string_view magic, std::span<const std::uint8_t> bytes) {
    if (bytes.size() < magic.size() ||
        std::memcmp(bytes.data(), magic.data(), magic.size()) != 0) {
        fail(ErrorCode::BadMagic, "expected magic " + std::string(magic));
    }
    if (bytes.size() < magic.size() + 12) fail(ErrorCode::ChecksumFail, "tensor file truncated");
    Reader r(bytes);
    r.bytes(magic.size());
    const std::uint32_t version = r.u32();
    if (version != kTensorFileVersion) {
        fail(ErrorCode::VersionMismatch, "tensor file version " + std::to_string(version));
    }
    const std::size_t body = bytes.size() - 4;
    std::uint32_t stored = 0;
    for (int i = 0; i < 4; ++i) stored |= static_cast<std::uint32_t>(bytes[body + static_cast<std::size_t>(i)]) << (8 * i);
    if (crc32(bytes.first(body)) != stored) fail(ErrorCode::ChecksumFail, "tensor file checksum mismatch");

    TensorFile file;
    const std::uint32_t hlen = r.u32();
    try {
        file.header = nlohmann::json::parse(r.bytes(hlen));
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ChecksumFail, std::string("tensor file header: ") + e.what());
    }
    while (r.pos() < body) {
        NamedTensor t;
        t.name = r.bytes(r.u16());
        if (r.u8() != 0) fail(ErrorCode::ShapeMismatch, "unsupported dtype in " + t.name);
        const std::uint8_t rank = r.u8();
        std::vector<std::size_t> dims;
        for (std::uint8_t i = 0; i < rank; ++i) dims.push_back(r.u32());
        std::size_t rows = 1, cols = 1;
        if (rank == 1) {
            cols = dims[0];
        } else if (rank == 2) {
            rows = dims[0];
            cols = dims[1];
        } else {
            fail(ErrorCode::ShapeMismatch, "unsupported rank in " + t.name);
        }
        t.value = Mat(rows, cols);
        r.need(rows * cols * 4);
        for (double& x : t.value.v) x = static_cast<double>(std::bit_cast<float>(r.u32()));
        file.tensors.push_back(std::move(t));
    }
    if (r.pos() != body) fail(ErrorCode::ChecksumFail, "tensor record overruns checksum");
    return file;
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::IoError, "cannot open " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::IoError, "cannot write " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorCode::IoError, "short write to " + path);
}

void write_tensor_file(const std::string& path, std::string_view magic, const TensorFile& file) {
    write_file_bytes(path, encode_tensor_file(magic, file));
}

TensorFile read_tensor_file(const std::string& path, std::string_view magic) {
    return decode_tensor_file(magic, read_file_bytes(path));
}

namespace {

TensorFile weights_to_file(const Weights& w) {
    TensorFile f;
    f.header = w.config.to_json();
    w.visit([&](const std::string& name, const Mat& m) { f.tensors.push_back({name, m}); });
    return f;
}

} // namespace

void save_weights(const Weights& w, const std::string& path) {
    write_tensor_file(path, kWeightsMagic, weights_to_file(w));
}

Weights load_weights(const std::string& path) {
    TensorFile f = read_tensor_file(path, kWeightsMagic);
    Weights w = Weights::zeros(ModelConfig::from_json(f.header));
    std::size_t k = 0;
    w.visit([&](const std::string& name, Mat& m) {
        if (k >= f.tensors.size() || f.tensors[k].name != name) {
            fail(ErrorCode::ShapeMismatch, "weight file missing tensor " + name);
        }
        Mat& src = f.tensors[k++].value;
        if (src.size() != m.size()) fail(ErrorCode::ShapeMismatch, "tensor " + name + " has wrong shape");
        m.v = std::move(src.v);
    });
    if (k != f.tensors.size()) fail(ErrorCode::ShapeMismatch, "weight file has extra tensors");
    return w;
}

std::string weights_checksum(const Weights& w) {
    const auto bytes = encode_tensor_file(kWeightsMagic, weights_to_file(w));
    return crc32_hex(bytes);
}

} // namespace srckt
