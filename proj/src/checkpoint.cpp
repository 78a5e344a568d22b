#include "graphtcn/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

#include "graphtcn/errors.hpp"

namespace gtcn {

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
void put(std::vector<std::uint8_t>& out, T value) {
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
    out.insert(out.end(), raw, raw + sizeof(T));
}

void put_string(std::vector<std::uint8_t>& out, const std::string& s) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.insert(out.end(), s.begin(), s.end());
}

class Reader {
   public:
    explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

    template <typename T>
    T get() {
        need(sizeof(T));
        std::uint8_t raw[sizeof(T)];
        std::memcpy(raw, bytes_.data() + pos_, sizeof(T));
        if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
        pos_ += sizeof(T);
        T value;
        std::memcpy(&value, raw, sizeof(T));
        return value;
    }

    std::string get_string() {
        const auto len = get<std::uint32_t>();
        need(len);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), len);
        pos_ += len;
        return s;
    }

    bool at_end() const { return pos_ == bytes_.size(); }

   private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) throw CorruptionError("checkpoint is truncated");
    }

    const std::vector<std::uint8_t>& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const ParameterStore& params, const ModelConfig& config) {
    std::vector<std::uint8_t> out{'G', 'T', 'C', 'N'};
    put<std::uint32_t>(out, kCheckpointVersion);
    put_string(out, to_text(config));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
    for (const auto& e : params) {
        put_string(out, e.name);
        put<std::uint32_t>(out, static_cast<std::uint32_t>(e.value.rank()));
        for (auto d : e.value.shape()) put<std::uint64_t>(out, d);
        for (double v : e.value.data()) put<double>(out, v);
    }
    return out;
}

Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 4) throw CorruptionError("checkpoint is truncated");
    if (std::memcmp(bytes.data(), "GTCN", 4) != 0) throw FormatError("not a checkpoint: bad magic");
    std::vector<std::uint8_t> rest(bytes.begin() + 4, bytes.end());
    Reader in(rest);
    const auto version = in.get<std::uint32_t>();
    if (version != kCheckpointVersion)
        throw FormatError("unsupported checkpoint version " + std::to_string(version));

    Checkpoint ck;
    try {
        ck.config = parse_config(in.get_string());
    } catch (const ConfigError& e) {
        throw CorruptionError(std::string("checkpoint config is invalid: ") + e.what());
    }
    const auto count = in.get<std::uint32_t>();
    for (std::uint32_t p = 0; p < count; ++p) {
        const std::string name = in.get_string();
        const auto rank = in.get<std::uint32_t>();
        if (rank == 0 || rank > 8) throw CorruptionError("parameter " + name + " has invalid rank");
        Shape shape(rank);
        std::uint64_t total = 1;
        for (auto& d : shape) {
            d = in.get<std::uint64_t>();
            if (d == 0 || d > (std::uint64_t{1} << 32)) throw CorruptionError("parameter " + name + " has invalid extent");
            total *= d;
            if (total > (std::uint64_t{1} << 32)) throw CorruptionError("parameter " + name + " is implausibly large");
        }
        if (total * sizeof(double) > rest.size()) throw CorruptionError("checkpoint is truncated");
        std::vector<double> values(total);
        for (auto& v : values) v = in.get<double>();
        if (ck.params.contains(name)) throw CorruptionError("duplicate parameter " + name);
        ck.params.add(name, Tensor(std::move(shape), std::move(values)));
    }
    if (!in.at_end()) throw CorruptionError("trailing bytes after checkpoint payload");
    return ck;
}

void save_checkpoint(const std::filesystem::path& path, const ParameterStore& params, const ModelConfig& config) {
    const auto bytes = serialize_checkpoint(params, config);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_checkpoint(bytes);
}

GraphTcn model_from_checkpoint(const Checkpoint& checkpoint) {
    GraphTcn model(checkpoint.config);
    auto& dst = model.params();
    if (dst.size() != checkpoint.params.size())
        throw CorruptionError("checkpoint holds " + std::to_string(checkpoint.params.size()) +
                              " parameters, the config expects " + std::to_string(dst.size()));
    auto src = checkpoint.params.begin();
    for (auto& e : dst) {
        if (src->name != e.name || src->value.shape() != e.value.shape())
            throw CorruptionError("checkpoint parameter " + src->name + " does not match model parameter " + e.name);
        auto out = e.value.data();
        auto in = src->value.data();
        std::copy(in.begin(), in.end(), out.begin());
        ++src;
    }
    return model;
}

}  // namespace gtcn
