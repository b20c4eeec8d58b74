#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "tnn/network.hpp"

namespace tnn {
namespace {

constexpr char kMagic[8] = {'T', 'N', 'N', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kByteOrderMark = 0x01020304u;

class Writer {
public:
    template <typename T>
    void put(T value) {
        char buf[sizeof(T)];
        std::memcpy(buf, &value, sizeof(T));
        out_.append(buf, sizeof(T));
    }
    void put_doubles(const double* data, Eigen::Index count) {
        out_.append(reinterpret_cast<const char*>(data),
                    static_cast<std::size_t>(count) * sizeof(double));
    }
    void put_raw(const char* data, std::size_t n) { out_.append(data, n); }
    std::string take() { return std::move(out_); }

private:
    std::string out_;
};

class Reader {
public:
    explicit Reader(const std::string& bytes) : bytes_(bytes) {}

    template <typename T>
    T get() {
        T value;
        std::memcpy(&value, take(sizeof(T)), sizeof(T));
        return value;
    }
    void get_doubles(double* data, Eigen::Index count) {
        const std::size_t n = static_cast<std::size_t>(count) * sizeof(double);
        std::memcpy(data, take(n), n);
    }
    const char* take(std::size_t n) {
        if (pos_ + n > bytes_.size()) throw std::runtime_error("checkpoint: truncated record");
        const char* p = bytes_.data() + pos_;
        pos_ += n;
        return p;
    }
    bool at_end() const { return pos_ == bytes_.size(); }

private:
    const std::string& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_model(const TnnModel& model) {
    Writer w;
    w.put_raw(kMagic, sizeof(kMagic));
    w.put(kVersion);
    w.put(kByteOrderMark);
    w.put(static_cast<std::uint32_t>(model.dimension()));
    w.put(static_cast<std::uint32_t>(model.rank()));
    for (const SubNetwork& net : model.subnets()) {
        w.put(net.interval.lo);
        w.put(net.interval.hi);
        w.put(static_cast<std::uint8_t>(net.activation));
        w.put(static_cast<std::uint8_t>(net.boundary));
        w.put(net.output_scale);
        w.put(static_cast<std::uint32_t>(net.layers.size()));
        for (const DenseLayer& layer : net.layers) {
            w.put(static_cast<std::uint32_t>(layer.weight.rows()));
            w.put(static_cast<std::uint32_t>(layer.weight.cols()));
            w.put_doubles(layer.weight.data(), layer.weight.size());
            w.put_doubles(layer.bias.data(), layer.bias.size());
        }
    }
    return w.take();
}

TnnModel deserialize_model(const std::string& bytes) {
    Reader r(bytes);
    if (std::memcmp(r.take(sizeof(kMagic)), kMagic, sizeof(kMagic)) != 0) {
        throw std::runtime_error("checkpoint: bad magic");
    }
    if (r.get<std::uint32_t>() != kVersion) throw std::runtime_error("checkpoint: unsupported version");
    if (r.get<std::uint32_t>() != kByteOrderMark) {
        throw std::runtime_error("checkpoint: written on a machine with different byte order");
    }
    const auto dimension = r.get<std::uint32_t>();
    const auto rank = r.get<std::uint32_t>();

    std::vector<SubNetwork> subnets(dimension);
    for (SubNetwork& net : subnets) {
        net.interval.lo = r.get<double>();
        net.interval.hi = r.get<double>();
        const auto activation = r.get<std::uint8_t>();
        const auto boundary = r.get<std::uint8_t>();
        if (activation > 1 || boundary > 1) throw std::runtime_error("checkpoint: bad enum value");
        net.activation = static_cast<Activation>(activation);
        net.boundary = static_cast<Boundary>(boundary);
        net.output_scale = r.get<double>();
        net.layers.resize(r.get<std::uint32_t>());
        for (DenseLayer& layer : net.layers) {
            const auto rows = r.get<std::uint32_t>();
            const auto cols = r.get<std::uint32_t>();
            layer.weight.resize(rows, cols);
            layer.bias.resize(rows);
            r.get_doubles(layer.weight.data(), layer.weight.size());
            r.get_doubles(layer.bias.data(), layer.bias.size());
        }
    }
    if (!r.at_end()) throw std::runtime_error("checkpoint: trailing bytes");
    TnnModel model(std::move(subnets));
    if (model.dimension() > 0 && model.rank() != static_cast<Eigen::Index>(rank)) {
        throw std::runtime_error("checkpoint: rank in header does not match layers");
    }
    return model;
}

void save_checkpoint(const TnnModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    const std::string bytes = serialize_model(model);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

TnnModel load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return deserialize_model(buf.str());
}

}  // namespace tnn
