#pragma once

#include "kce/fantope_game.hpp"
#include "kce/nystrom.hpp"
#include "kce/preimage.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace kce {

/// KCE1 binary layout (all integers and reals little-endian):
///
///   "KCE1"  u32 version  u32 section_count
///   per section:
///     u32 name_length, name bytes
///     u8  kind (0 = f64 array, 1 = UTF-8 text)
///     u32 rank, u64 dims[rank]
///     u64 payload_bytes, payload (f64 arrays row-major)
///     u64 FNV-1a checksum of the payload bytes
inline constexpr std::uint32_t kKce1Version = 1;

struct Kce1Section {
    enum class Kind : std::uint8_t { f64 = 0, text = 1 };

    std::string name;
    Kind kind = Kind::f64;
    std::vector<std::uint64_t> dims;
    std::vector<double> values;  ///< row-major, f64 sections only
    std::string text;            ///< text sections only
};

class Kce1File {
public:
    std::uint32_t version = kKce1Version;

    void add_matrix(const std::string& name, const Eigen::Ref<const MatrixXd>& m);
    void add_vector(const std::string& name, const Eigen::Ref<const VectorXd>& v);
    void add_scalar(const std::string& name, double value);
    void add_text(const std::string& name, const std::string& text);

    [[nodiscard]] bool contains(const std::string& name) const;
    [[nodiscard]] const Kce1Section& section(const std::string& name) const;
    [[nodiscard]] MatrixXd matrix(const std::string& name) const;
    [[nodiscard]] VectorXd vector(const std::string& name) const;
    [[nodiscard]] double scalar(const std::string& name) const;
    [[nodiscard]] const std::string& text(const std::string& name) const;

    [[nodiscard]] const std::vector<Kce1Section>& sections() const { return sections_; }

private:
    void add(Kce1Section s);
    std::vector<Kce1Section> sections_;
};

std::string encode_kce1(const Kce1File& file);
Kce1File decode_kce1(const std::string& bytes);

void write_kce1(const std::filesystem::path& path, const Kce1File& file);
Kce1File read_kce1(const std::filesystem::path& path);

// Sections are named "<prefix>.<field>".
void store(Kce1File& file, const std::string& prefix, const NystromMap& map);
void store(Kce1File& file, const std::string& prefix, const GameSolution& solution);
void store(Kce1File& file, const std::string& prefix, const PreimageNet& net);

NystromMap load_nystrom(const Kce1File& file, const std::string& prefix);
GameSolution load_game(const Kce1File& file, const std::string& prefix);
PreimageNet load_preimage(const Kce1File& file, const std::string& prefix);

}  // namespace kce
