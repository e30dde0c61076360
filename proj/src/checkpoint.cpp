#include "pricecast/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

namespace pricecast {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr std::array<char, 8> kMagic{'P', 'C', 'L', 'S', 'T', 'M', '\0', '\0'};
constexpr std::uint32_t kVersion = 1;

class Writer {
public:
    explicit Writer(const std::filesystem::path& path) : path_(path), tmp_(path.string() + ".tmp") {
        if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
        out_.open(tmp_, std::ios::binary | std::ios::trunc);
        if (!out_) throw DataError("cannot write checkpoint " + path.string());
    }
    template <typename T>
    void put(T v) {
        out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
    }
    void bytes(const char* p, std::size_t n) { out_.write(p, static_cast<std::streamsize>(n)); }
    template <typename T>
    void row_major(const TensorView<const T>& t) {
        for (Eigen::Index i = 0; i < t.rows; ++i)
            for (Eigen::Index j = 0; j < t.cols; ++j) put(t.data[j * t.rows + i]);
    }
    void finish() {
        out_.close();
        if (!out_) throw DataError("checkpoint write failed");
        std::filesystem::rename(tmp_, path_);
    }

private:
    std::filesystem::path path_, tmp_;
    std::ofstream out_;
};

class Reader {
public:
    explicit Reader(const std::filesystem::path& path) : in_(path, std::ios::binary) {
        if (!in_) throw DataError("cannot open checkpoint " + path.string());
    }
    template <typename T>
    T get() {
        T v;
        in_.read(reinterpret_cast<char*>(&v), sizeof(T));
        if (!in_) throw DataError("truncated checkpoint");
        return v;
    }
    void bytes(char* p, std::size_t n) {
        in_.read(p, static_cast<std::streamsize>(n));
        if (!in_) throw DataError("truncated checkpoint");
    }
    template <typename T>
    void row_major(const TensorView<T>& t) {
        for (Eigen::Index i = 0; i < t.rows; ++i)
            for (Eigen::Index j = 0; j < t.cols; ++j) t.data[j * t.rows + i] = get<T>();
    }
    bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

private:
    std::ifstream in_;
};

}  // namespace

template <typename Scalar>
void save_checkpoint(const std::filesystem::path& path, const LstmNetwork<Scalar>& network, const AdamState<Scalar>* adam) {
    Writer w(path);
    w.bytes(kMagic.data(), kMagic.size());
    w.put<std::uint32_t>(kVersion);
    w.put<std::uint32_t>(sizeof(Scalar));
    const auto& c = network.config;
    for (auto v : {c.input_size, c.hidden_size, c.num_layers, c.batch_size, c.max_epochs, c.patience})
        w.put<std::uint64_t>(static_cast<std::uint64_t>(v));
    w.put<std::uint64_t>(c.seed);
    w.put<double>(c.dropout_rate);
    w.put<double>(c.learning_rate);

    const auto ts = tensors(network.params);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(ts.size()));
    for (const auto& t : ts) {
        w.put<std::uint32_t>(static_cast<std::uint32_t>(t.name.size()));
        w.bytes(t.name.data(), t.name.size());
        w.put<std::uint64_t>(static_cast<std::uint64_t>(t.rows));
        w.put<std::uint64_t>(static_cast<std::uint64_t>(t.cols));
        w.row_major(t);
    }
    w.put<std::uint8_t>(adam ? 1 : 0);
    if (adam) {
        w.put<std::int64_t>(adam->step);
        w.put<double>(adam->beta1);
        w.put<double>(adam->beta2);
        w.put<double>(adam->epsilon);
        for (const auto& t : tensors(adam->m)) w.row_major(t);
        for (const auto& t : tensors(adam->v)) w.row_major(t);
    }
    w.finish();
}

template <typename Scalar>
Checkpoint<Scalar> load_checkpoint(const std::filesystem::path& path) {
    Reader r(path);
    std::array<char, 8> magic{};
    r.bytes(magic.data(), magic.size());
    if (magic != kMagic) throw DataError(path.string() + " is not an LSTM checkpoint");
    if (const auto v = r.get<std::uint32_t>(); v != kVersion)
        throw DataError("unsupported checkpoint version " + std::to_string(v));
    if (r.get<std::uint32_t>() != sizeof(Scalar)) throw DataError("checkpoint scalar width mismatch");

    LstmConfig c;
    c.input_size = static_cast<Eigen::Index>(r.get<std::uint64_t>());
    c.hidden_size = static_cast<Eigen::Index>(r.get<std::uint64_t>());
    c.num_layers = static_cast<Eigen::Index>(r.get<std::uint64_t>());
    c.batch_size = static_cast<Eigen::Index>(r.get<std::uint64_t>());
    c.max_epochs = static_cast<Eigen::Index>(r.get<std::uint64_t>());
    c.patience = static_cast<Eigen::Index>(r.get<std::uint64_t>());
    c.seed = r.get<std::uint64_t>();
    c.dropout_rate = r.get<double>();
    c.learning_rate = r.get<double>();
    c.validate();

    // Allocate the layout implied by the config, then check every header.
    Checkpoint<Scalar> ck{init_network<Scalar>(c), std::nullopt};
    auto ts = tensors(ck.network.params);
    if (r.get<std::uint32_t>() != ts.size()) throw DataError("checkpoint tensor count mismatch");
    for (auto& t : ts) {
        std::string name(r.get<std::uint32_t>(), '\0');
        r.bytes(name.data(), name.size());
        const auto rows = r.get<std::uint64_t>(), cols = r.get<std::uint64_t>();
        if (name != t.name || rows != static_cast<std::uint64_t>(t.rows) || cols != static_cast<std::uint64_t>(t.cols))
            throw DataError("checkpoint tensor header mismatch at " + name);
        r.row_major(t);
    }
    if (r.get<std::uint8_t>() == 1) {
        AdamState<Scalar> adam = AdamState<Scalar>::zeros_like(ck.network.params);
        adam.step = r.get<std::int64_t>();
        adam.beta1 = r.get<double>();
        adam.beta2 = r.get<double>();
        adam.epsilon = r.get<double>();
        for (auto& t : tensors(adam.m)) r.row_major(t);
        for (auto& t : tensors(adam.v)) r.row_major(t);
        ck.adam = std::move(adam);
    }
    if (!r.at_end()) throw DataError("trailing bytes in checkpoint");
    return ck;
}

template void save_checkpoint<double>(const std::filesystem::path&, const LstmNetwork<double>&, const AdamState<double>*);
template void save_checkpoint<float>(const std::filesystem::path&, const LstmNetwork<float>&, const AdamState<float>*);
template Checkpoint<double> load_checkpoint<double>(const std::filesystem::path&);
template Checkpoint<float> load_checkpoint<float>(const std::filesystem::path&);

}  // namespace pricecast
