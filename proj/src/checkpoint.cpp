#include "fog/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace fog {

namespace {

constexpr char kMagic[8] = {'F', 'O', 'G', 'C', 'K', 'P', 'T', '\0'};

template <class T>
void put(std::string& out, T v) {
    static_assert(std::is_integral_v<T>);
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xFF));
}

void put_f64(std::string& out, double v) { put(out, std::bit_cast<std::uint64_t>(v)); }

void put_str(std::string& out, const std::string& s) {
    put(out, static_cast<std::uint32_t>(s.size()));
    out += s;
}

class Reader {
public:
    explicit Reader(const std::string& b) : bytes_(b) {}

    template <class T>
    T get() {
        need(sizeof(T));
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += sizeof(T);
        return static_cast<T>(v);
    }
    double get_f64() { return std::bit_cast<double>(get<std::uint64_t>()); }
    std::string get_str() {
        const auto n = get<std::uint32_t>();
        need(n);
        std::string s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    void expect_magic() {
        need(8);
        if (std::memcmp(bytes_.data() + pos_, kMagic, 8) != 0) throw CheckpointError("checkpoint: bad magic");
        pos_ += 8;
    }
    bool done() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) const {
        if (pos_ + n > bytes_.size()) throw CheckpointError("checkpoint: truncated file");
    }
    const std::string& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string Checkpoint::config_text() const {
    std::ostringstream os;
    for (const auto& [k, v] : config) os << k << " = " << v << '\n';
    return os.str();
}

std::string Checkpoint::serialize() const {
    std::string out(kMagic, 8);
    put(out, version);
    put(out, seed);
    put_str(out, config_text());
    put(out, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& [name, t] : tensors) {
        put_str(out, name);
        put(out, static_cast<std::uint32_t>(t.ndim()));
        for (auto d : t.shape()) put(out, static_cast<std::uint64_t>(d));
    }
    for (const auto& [name, t] : tensors)
        for (double v : t.data()) put_f64(out, v);
    return out;
}

Checkpoint Checkpoint::deserialize(const std::string& bytes) {
    Reader r(bytes);
    r.expect_magic();
    Checkpoint c;
    c.version = r.get<std::uint32_t>();
    if (c.version != kFormatVersion)
        throw CheckpointError("checkpoint: unsupported format version " + std::to_string(c.version));
    c.seed = r.get<std::uint64_t>();
    std::istringstream cfg(r.get_str());
    for (std::string line; std::getline(cfg, line);) {
        const auto eq = line.find(" = ");
        if (eq != std::string::npos) c.config[line.substr(0, eq)] = line.substr(eq + 3);
    }
    const auto count = r.get<std::uint32_t>();
    std::vector<std::pair<std::string, Shape>> manifest;
    for (std::uint32_t i = 0; i < count; ++i) {
        std::string name = r.get_str();
        const auto nd = r.get<std::uint32_t>();
        Shape s;
        for (std::uint32_t d = 0; d < nd; ++d) s.push_back(static_cast<std::size_t>(r.get<std::uint64_t>()));
        manifest.emplace_back(std::move(name), std::move(s));
    }
    for (auto& [name, shape] : manifest) {
        std::vector<double> v(shape_numel(shape));
        for (auto& x : v) x = r.get_f64();
        c.tensors.emplace_back(name, Tensor(shape, std::move(v)));
    }
    if (!r.done()) throw CheckpointError("checkpoint: trailing bytes");
    return c;
}

void Checkpoint::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
    const std::string bytes = serialize();
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CheckpointError("failed writing checkpoint " + path.string());
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return deserialize(ss.str());
}

void Checkpoint::store(const std::string& prefix, const NamedTensors& params) {
    for (const auto& [name, t] : params) tensors.emplace_back(prefix + "." + name, t.clone());
}

void Checkpoint::restore(const std::string& prefix, const NamedTensors& params) const {
    for (const auto& [name, t] : params) {
        const Tensor* src = find(prefix + "." + name);
        if (!src) throw CheckpointError("checkpoint: missing tensor " + prefix + "." + name);
        if (src->shape() != t.shape())
            throw CheckpointError("checkpoint: tensor " + prefix + "." + name + " has shape " + shape_str(src->shape()) +
                                  ", expected " + shape_str(t.shape()));
        Tensor dst = t;
        std::copy(src->data().begin(), src->data().end(), dst.mutable_data().begin());
    }
}

const Tensor* Checkpoint::find(const std::string& name) const {
    for (const auto& [n, t] : tensors)
        if (n == name) return &t;
    return nullptr;
}

std::string Checkpoint::config_value(const std::string& key, const std::string& fallback) const {
    auto it = config.find(key);
    return it == config.end() ? fallback : it->second;
}

}  // namespace fog
