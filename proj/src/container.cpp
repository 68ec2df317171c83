#include "kce/container.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>

namespace kce {

namespace {

constexpr char kMagic[4] = {'K', 'C', 'E', '1'};

template <typename T>
void put_le(std::string& out, T value) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double value) { put_le(out, std::bit_cast<std::uint64_t>(value)); }

class Reader {
public:
    explicit Reader(const std::string& bytes) : bytes_(bytes) {}

    template <typename T>
    T le() {
        need(sizeof(T));
        T value = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i)
            value |= static_cast<T>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += sizeof(T);
        return value;
    }

    std::string bytes(std::uint64_t n) {
        need(n);
        std::string s = bytes_.substr(pos_, static_cast<std::size_t>(n));
        pos_ += static_cast<std::size_t>(n);
        return s;
    }

    [[nodiscard]] bool done() const { return pos_ == bytes_.size(); }

private:
    void need(std::uint64_t n) const {
        if (n > bytes_.size() - pos_) throw IoError("KCE1 data is truncated");
    }

    const std::string& bytes_;
    std::size_t pos_ = 0;
};

std::uint64_t element_count(const std::vector<std::uint64_t>& dims) {
    std::uint64_t n = 1;
    for (auto d : dims) n *= d;
    return n;
}

int to_int(double v, const std::string& what) {
    if (v != std::floor(v)) throw IoError("KCE1 field " + what + " is not an integer");
    return static_cast<int>(v);
}

}  // namespace

void Kce1File::add(Kce1Section s) {
    if (s.name.empty()) throw InvalidArgument("KCE1 section name is empty");
    if (contains(s.name)) throw InvalidArgument("duplicate KCE1 section '" + s.name + "'");
    sections_.push_back(std::move(s));
}

void Kce1File::add_matrix(const std::string& name, const Eigen::Ref<const MatrixXd>& m) {
    Kce1Section s;
    s.name = name;
    s.dims = {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())};
    s.values.reserve(static_cast<std::size_t>(m.size()));
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j) s.values.push_back(m(i, j));
    add(std::move(s));
}

void Kce1File::add_vector(const std::string& name, const Eigen::Ref<const VectorXd>& v) {
    Kce1Section s;
    s.name = name;
    s.dims = {static_cast<std::uint64_t>(v.size())};
    s.values.assign(v.data(), v.data() + v.size());
    add(std::move(s));
}

void Kce1File::add_scalar(const std::string& name, double value) {
    Kce1Section s;
    s.name = name;
    s.values = {value};
    add(std::move(s));
}

void Kce1File::add_text(const std::string& name, const std::string& text) {
    Kce1Section s;
    s.name = name;
    s.kind = Kce1Section::Kind::text;
    s.dims = {static_cast<std::uint64_t>(text.size())};
    s.text = text;
    add(std::move(s));
}

bool Kce1File::contains(const std::string& name) const {
    for (const auto& s : sections_)
        if (s.name == name) return true;
    return false;
}

const Kce1Section& Kce1File::section(const std::string& name) const {
    for (const auto& s : sections_)
        if (s.name == name) return s;
    throw IoError("KCE1 section '" + name + "' is missing");
}

MatrixXd Kce1File::matrix(const std::string& name) const {
    const auto& s = section(name);
    if (s.kind != Kce1Section::Kind::f64 || s.dims.size() != 2) throw IoError("KCE1 section '" + name + "' is not a matrix");
    MatrixXd m(static_cast<Index>(s.dims[0]), static_cast<Index>(s.dims[1]));
    std::size_t k = 0;
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j) m(i, j) = s.values[k++];
    return m;
}

VectorXd Kce1File::vector(const std::string& name) const {
    const auto& s = section(name);
    if (s.kind != Kce1Section::Kind::f64 || s.dims.size() != 1) throw IoError("KCE1 section '" + name + "' is not a vector");
    return Eigen::Map<const VectorXd>(s.values.data(), static_cast<Index>(s.values.size()));
}

double Kce1File::scalar(const std::string& name) const {
    const auto& s = section(name);
    if (s.kind != Kce1Section::Kind::f64 || !s.dims.empty()) throw IoError("KCE1 section '" + name + "' is not a scalar");
    return s.values.at(0);
}

const std::string& Kce1File::text(const std::string& name) const {
    const auto& s = section(name);
    if (s.kind != Kce1Section::Kind::text) throw IoError("KCE1 section '" + name + "' is not text");
    return s.text;
}

std::string encode_kce1(const Kce1File& file) {
    std::string out(kMagic, 4);
    put_le<std::uint32_t>(out, file.version);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(file.sections().size()));
    for (const auto& s : file.sections()) {
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.name.size()));
        out += s.name;
        out.push_back(static_cast<char>(s.kind));
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.dims.size()));
        for (auto d : s.dims) put_le<std::uint64_t>(out, d);
        std::string payload;
        if (s.kind == Kce1Section::Kind::f64) {
            payload.reserve(s.values.size() * 8);
            for (double v : s.values) put_f64(payload, v);
        } else {
            payload = s.text;
        }
        put_le<std::uint64_t>(out, payload.size());
        out += payload;
        put_le<std::uint64_t>(out, fnv1a64(payload.data(), payload.size()));
    }
    return out;
}

Kce1File decode_kce1(const std::string& bytes) {
    Reader in(bytes);
    if (in.bytes(4) != std::string(kMagic, 4)) throw IoError("not a KCE1 file (bad magic)");
    Kce1File file;
    file.version = in.le<std::uint32_t>();
    if (file.version == 0 || file.version > kKce1Version)
        throw IoError("unsupported KCE1 version " + std::to_string(file.version));
    const auto count = in.le<std::uint32_t>();
    std::vector<Kce1Section> sections;
    for (std::uint32_t i = 0; i < count; ++i) {
        Kce1Section s;
        s.name = in.bytes(in.le<std::uint32_t>());
        const auto kind = in.le<std::uint8_t>();
        if (kind > 1) throw IoError("KCE1 section '" + s.name + "' has unknown kind");
        s.kind = static_cast<Kce1Section::Kind>(kind);
        const auto rank = in.le<std::uint32_t>();
        if (rank > 8) throw IoError("KCE1 section '" + s.name + "' has implausible rank");
        for (std::uint32_t r = 0; r < rank; ++r) s.dims.push_back(in.le<std::uint64_t>());
        const auto size = in.le<std::uint64_t>();
        const std::string payload = in.bytes(size);
        const auto checksum = in.le<std::uint64_t>();
        if (checksum != fnv1a64(payload.data(), payload.size()))
            throw IoError("KCE1 section '" + s.name + "' failed its checksum");
        if (s.kind == Kce1Section::Kind::f64) {
            if (size != element_count(s.dims) * 8) throw IoError("KCE1 section '" + s.name + "' size does not match shape");
            Reader values(payload);
            s.values.resize(static_cast<std::size_t>(size / 8));
            for (auto& v : s.values) v = std::bit_cast<double>(values.le<std::uint64_t>());
        } else {
            if (s.dims.size() != 1 || s.dims[0] != size)
                throw IoError("KCE1 section '" + s.name + "' size does not match shape");
            s.text = payload;
        }
        sections.push_back(std::move(s));
    }
    if (!in.done()) throw IoError("trailing bytes after KCE1 sections");
    for (auto& s : sections) {
        if (file.contains(s.name)) throw IoError("duplicate KCE1 section '" + s.name + "'");
        if (s.kind == Kce1Section::Kind::text) {
            file.add_text(s.name, s.text);
        } else if (s.dims.empty()) {
            file.add_scalar(s.name, s.values.at(0));
        } else if (s.dims.size() == 1) {
            file.add_vector(s.name, Eigen::Map<const VectorXd>(s.values.data(), static_cast<Index>(s.values.size())));
        } else if (s.dims.size() == 2) {
            Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(
                s.values.data(), static_cast<Index>(s.dims[0]), static_cast<Index>(s.dims[1]));
            file.add_matrix(s.name, m);
        } else {
            throw IoError("KCE1 section '" + s.name + "' has unsupported rank");
        }
    }
    return file;
}

void write_kce1(const std::filesystem::path& path, const Kce1File& file) {
    const std::string bytes = encode_kce1(file);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

Kce1File read_kce1(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_kce1(bytes);
}

void store(Kce1File& file, const std::string& prefix, const NystromMap& map) {
    file.add_text(prefix + ".kernel", to_string(map.kernel));
    file.add_matrix(prefix + ".landmarks", map.landmarks);
    file.add_matrix(prefix + ".eigvecs", map.eigvecs);
    file.add_vector(prefix + ".eigvals", map.eigvals);
    file.add_scalar(prefix + ".drop_tolerance", map.drop_tolerance);
}

void store(Kce1File& file, const std::string& prefix, const GameSolution& solution) {
    file.add_vector(prefix + ".theta", solution.theta);
    file.add_matrix(prefix + ".B", solution.B.B);
    file.add_scalar(prefix + ".k", solution.B.k);
    file.add_matrix(prefix + ".W", solution.W);
    file.add_matrix(prefix + ".P", solution.P);
    file.add_scalar(prefix + ".selected_step", solution.selected_step);
    MatrixXd history(static_cast<Index>(solution.history.size()), 3);
    for (Index i = 0; i < history.rows(); ++i) {
        const auto& h = solution.history[static_cast<std::size_t>(i)];
        history.row(i) << h.step, h.probe_accuracy, h.train_loss;
    }
    file.add_matrix(prefix + ".history", history);
}

void store(Kce1File& file, const std::string& prefix, const PreimageNet& net) {
    file.add_matrix(prefix + ".W1", net.W1);
    file.add_vector(prefix + ".b1", net.b1);
    file.add_vector(prefix + ".ln1_gain", net.ln1_gain);
    file.add_vector(prefix + ".ln1_bias", net.ln1_bias);
    file.add_matrix(prefix + ".W2", net.W2);
    file.add_vector(prefix + ".b2", net.b2);
    file.add_vector(prefix + ".ln2_gain", net.ln2_gain);
    file.add_vector(prefix + ".ln2_bias", net.ln2_bias);
    file.add_matrix(prefix + ".W3", net.W3);
    file.add_vector(prefix + ".b3", net.b3);
    file.add_scalar(prefix + ".dropout", net.dropout);
}

NystromMap load_nystrom(const Kce1File& file, const std::string& prefix) {
    NystromMap map;
    map.kernel = parse_kernel(file.text(prefix + ".kernel"));
    map.landmarks = file.matrix(prefix + ".landmarks");
    map.eigvecs = file.matrix(prefix + ".eigvecs");
    map.eigvals = file.vector(prefix + ".eigvals");
    map.drop_tolerance = file.scalar(prefix + ".drop_tolerance");
    if (map.eigvecs.rows() != map.landmarks.rows() || map.eigvecs.cols() != map.eigvals.size())
        throw IoError("KCE1 Nystrom sections have inconsistent shapes");
    map.refresh();
    return map;
}

GameSolution load_game(const Kce1File& file, const std::string& prefix) {
    GameSolution sol;
    sol.theta = file.vector(prefix + ".theta");
    sol.B.B = file.matrix(prefix + ".B");
    sol.B.k = to_int(file.scalar(prefix + ".k"), prefix + ".k");
    sol.W = file.matrix(prefix + ".W");
    sol.P = file.matrix(prefix + ".P");
    sol.selected_step = to_int(file.scalar(prefix + ".selected_step"), prefix + ".selected_step");
    const MatrixXd history = file.matrix(prefix + ".history");
    for (Index i = 0; i < history.rows(); ++i)
        sol.history.push_back({to_int(history(i, 0), prefix + ".history"), history(i, 1), history(i, 2)});
    return sol;
}

PreimageNet load_preimage(const Kce1File& file, const std::string& prefix) {
    PreimageNet net;
    net.W1 = file.matrix(prefix + ".W1");
    net.b1 = file.vector(prefix + ".b1");
    net.ln1_gain = file.vector(prefix + ".ln1_gain");
    net.ln1_bias = file.vector(prefix + ".ln1_bias");
    net.W2 = file.matrix(prefix + ".W2");
    net.b2 = file.vector(prefix + ".b2");
    net.ln2_gain = file.vector(prefix + ".ln2_gain");
    net.ln2_bias = file.vector(prefix + ".ln2_bias");
    net.W3 = file.matrix(prefix + ".W3");
    net.b3 = file.vector(prefix + ".b3");
    net.dropout = file.scalar(prefix + ".dropout");
    try {
        net.check();
    } catch (const InvalidArgument& e) {
        throw IoError(std::string("KCE1 pre-image sections: ") + e.what());
    }
    return net;
}

}  // namespace kce
