#include "octcnn/weights.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "octcnn/error.hpp"

namespace octcnn {

namespace {

constexpr char kMagic[4] = {'C', 'W', 'T', '1'};

void put_u16(std::ostream& os, std::uint16_t v) {
    const unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                                static_cast<unsigned char>(v >> 8)};
    os.write(reinterpret_cast<const char*>(b), 2);
}

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 4);
}

bool get_bytes(std::istream& is, void* dst, std::size_t n) {
    is.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    return static_cast<std::size_t>(is.gcount()) == n;
}

std::uint16_t load_u16(const unsigned char* b) {
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

std::uint32_t load_u32(const unsigned char* b) {
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

[[noreturn]] void truncated() { throw DataError("weight archive: truncated file"); }

} // namespace

void WeightArchive::add(std::string name, Tensor t) {
    if (find(name))
        throw DataError("weight archive: duplicate tensor name '" + name + "'");
    tensors_.emplace_back(std::move(name), std::move(t));
}

const Tensor* WeightArchive::find(const std::string& name) const {
    for (const auto& [n, t] : tensors_)
        if (n == name) return &t;
    return nullptr;
}

WeightArchive save_weights(const ModelState& state) {
    WeightArchive a;
    auto descs = state.spec.param_layers();
    for (std::size_t i = 0; i < descs.size(); ++i) {
        a.add(descs[i]->name + "/kernel", state.params[i].kernel);
        a.add(descs[i]->name + "/bias", state.params[i].bias);
    }
    return a;
}

ModelState load_weights(const ModelSpec& spec, const WeightArchive& archive, bool strict,
                        SeededRng& rng) {
    ModelState state = init_state(spec, rng);
    auto descs = spec.param_layers();
    for (std::size_t i = 0; i < descs.size(); ++i) {
        const bool is_head = descs[i]->kind == LayerKind::dense;
        for (const char* part : {"kernel", "bias"}) {
            const std::string name = descs[i]->name + "/" + part;
            const Tensor* src = archive.find(name);
            Tensor& dst =
                part[0] == 'k' ? state.params[i].kernel : state.params[i].bias;
            if (!src) {
                if (strict || !is_head)
                    throw DataError("weight archive: missing tensor '" + name + "'");
                continue; // non-strict: head keeps its fresh initialization
            }
            if (!src->same_shape(dst))
                throw DataError("weight archive: shape mismatch for '" + name +
                                "' (expected " + dst.shape_str() + ", found " +
                                src->shape_str() + ")");
            dst = *src;
        }
    }
    return state;
}

void write_archive(const WeightArchive& archive, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
    os.write(kMagic, 4);
    put_u32(os, static_cast<std::uint32_t>(archive.tensors().size()));
    for (const auto& [name, t] : archive.tensors()) {
        if (name.size() > 0xffff)
            throw DataError("weight archive: tensor name too long: '" + name + "'");
        put_u16(os, static_cast<std::uint16_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        os.put(static_cast<char>(t.rank()));
        for (int a = 0; a < t.rank(); ++a) put_u32(os, static_cast<std::uint32_t>(t.extent(a)));
        os.put(0); // dtype: float32
        for (std::size_t i = 0; i < t.size(); ++i) {
            const auto bits = std::bit_cast<std::uint32_t>(t.data()[i]);
            put_u32(os, bits);
        }
    }
    if (!os) throw IoError("write failed for '" + path.string() + "'");
}

WeightArchive read_archive(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open '" + path.string() + "' for reading");

    unsigned char hdr[8];
    if (!get_bytes(is, hdr, 8)) truncated();
    if (std::memcmp(hdr, kMagic, 4) != 0)
        throw DataError("weight archive: bad magic (not a CWT1 file)");
    const std::uint32_t count = load_u32(hdr + 4);

    WeightArchive a;
    for (std::uint32_t ti = 0; ti < count; ++ti) {
        unsigned char lenb[2];
        if (!get_bytes(is, lenb, 2)) truncated();
        const std::uint16_t name_len = load_u16(lenb);
        std::string name(name_len, '\0');
        if (name_len && !get_bytes(is, name.data(), name_len)) truncated();

        unsigned char rank;
        if (!get_bytes(is, &rank, 1)) truncated();
        if (rank < 1 || rank > 4)
            throw DataError("weight archive: tensor '" + name + "' has unsupported rank " +
                            std::to_string(rank));
        std::vector<int> shape(rank);
        std::size_t numel = 1;
        for (int axis = 0; axis < rank; ++axis) {
            unsigned char eb[4];
            if (!get_bytes(is, eb, 4)) truncated();
            const std::uint32_t e = load_u32(eb);
            if (e == 0 || e > 0x7fffffffu)
                throw DataError("weight archive: tensor '" + name + "' has invalid extent");
            shape[static_cast<std::size_t>(axis)] = static_cast<int>(e);
            numel *= e;
        }
        unsigned char dtype;
        if (!get_bytes(is, &dtype, 1)) truncated();
        if (dtype != 0)
            throw DataError("weight archive: tensor '" + name + "' has unsupported dtype " +
                            std::to_string(dtype));
        std::vector<float> values(numel);
        for (std::size_t i = 0; i < numel; ++i) {
            unsigned char vb[4];
            if (!get_bytes(is, vb, 4)) truncated();
            values[i] = std::bit_cast<float>(load_u32(vb));
        }
        a.add(std::move(name), Tensor::from_data(std::move(shape), std::move(values)));
    }
    return a;
}

} // namespace octcnn
