#pragma once

// Profile file format: magic line, JSON header, END_HEADER line, payload.
// Byte layout is described in docs/profile-format.md.

#include "mrlab/profile.hpp"
#include "mrlab/samplers.hpp"

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <variant>

namespace mrlab::profile {

enum class PayloadKind { Binary, Text };

struct ProfileHeader {
    int format_version = 1;
    int d = 2;
    double mu = 0.5;
    EllipticityBounds bounds;
    DecayConstants decay;
    Provenance provenance = Provenance::Imported;
    std::string label;
    bool local_only = false;
    std::optional<Annulus> support;
};

struct ProfileFile {
    ProfileHeader header;
    std::variant<std::shared_ptr<const RadialTable>, std::shared_ptr<const CartesianTable>> grid;
};

inline constexpr const char* kProfileMagic = "MRLAB-PROFILE 1";

void write_profile(std::ostream& os, const ProfileFile& file, PayloadKind kind);
/// Throws FormatError (byte offset for binary, line number for text) or
/// RangeError (metadata outside the admissible region).
[[nodiscard]] ProfileFile read_profile(std::istream& is);

void save_profile(const std::filesystem::path& path, const ProfileFile& file, PayloadKind kind);
[[nodiscard]] ProfileFile load_profile_file(const std::filesystem::path& path);
[[nodiscard]] ProfilePair load_profile(const std::filesystem::path& path);

/// Interpolating pair; header metadata copied verbatim.
[[nodiscard]] ProfilePair to_pair(const ProfileFile& file);

/// Tables behind a table-backed pair. Returns nullopt when w or a are not
/// tabulated on the same grid.
[[nodiscard]] std::optional<ProfileFile> profile_file_of(const ProfilePair& p);

/// Samples an arbitrary pair on a radial grid along the first axis (w and a
/// must then be radial for the result to represent the pair).
[[nodiscard]] ProfileFile sample_radial(const ProfilePair& p, std::span<const double> rho);

/// Samples an arbitrary pair on a Cartesian grid, storing ∇w and ∂a.
[[nodiscard]] ProfileFile sample_cartesian(const ProfilePair& p, std::array<int, kMaxDim> shape,
                                           std::array<double, kMaxDim> lo,
                                           std::array<double, kMaxDim> h);

}  // namespace mrlab::profile
