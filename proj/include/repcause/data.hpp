#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "repcause/errors.hpp"

namespace repcause {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Latent features with aligned treatment, outcome and (optionally) the
// ground-truth confounder label. Immutable once constructed; every
// constructor path validates the invariants.
class RepresentationSet {
 public:
  RepresentationSet(Matrix z, std::optional<Vector> t, std::optional<Vector> y,
                    std::optional<Vector> label = std::nullopt);

  // Convenience for the common case where t and y are both present.
  static RepresentationSet with_outcomes(Matrix z, Vector t, Vector y,
                                         std::optional<Vector> label = std::nullopt);

  Eigen::Index n() const noexcept { return z_.rows(); }
  Eigen::Index d() const noexcept { return z_.cols(); }

  const Matrix& z() const noexcept { return z_; }
  bool has_treatment() const noexcept { return t_.has_value(); }
  bool has_outcome() const noexcept { return y_.has_value(); }
  bool has_label() const noexcept { return label_.has_value(); }

  // Throw ValidationError when the field is absent.
  const Vector& t() const;
  const Vector& y() const;
  const Vector& label() const;

  const std::optional<Vector>& maybe_t() const noexcept { return t_; }
  const std::optional<Vector>& maybe_y() const noexcept { return y_; }
  const std::optional<Vector>& maybe_label() const noexcept { return label_; }

  // Requires t and y, and both arms non-empty.
  void require_estimable() const;

  RepresentationSet with_z(Matrix z) const;
  RepresentationSet with_y(Vector y) const;
  RepresentationSet subset(const std::vector<Eigen::Index>& rows) const;

 private:
  Matrix z_;
  std::optional<Vector> t_;
  std::optional<Vector> y_;
  std::optional<Vector> label_;
};

bool operator==(const RepresentationSet& a, const RepresentationSet& b);

// PTRZ binary format. z travels as f32, y as f64, t and label as bytes.
inline constexpr char kPtrzMagic[4] = {'P', 'T', 'R', 'Z'};
inline constexpr std::uint8_t kPtrzVersion = 0x01;
inline constexpr std::uint8_t kFlagTreatment = 0x01;
inline constexpr std::uint8_t kFlagOutcome = 0x02;
inline constexpr std::uint8_t kFlagLabel = 0x04;

std::vector<std::uint8_t> encode_ptrz(const RepresentationSet& set);
RepresentationSet decode_ptrz(const std::vector<std::uint8_t>& bytes);

// Parses `z0,...,z{d-1},t,y[,label]`. t and y columns are required in CSV.
RepresentationSet parse_csv(const std::string& text);
std::string format_csv(const RepresentationSet& set);

// Dispatches on content: PTRZ magic, otherwise CSV.
RepresentationSet load_representations(const std::filesystem::path& path);
// Writes PTRZ unless the extension is .csv.
void save_representations(const RepresentationSet& set, const std::filesystem::path& path);

struct FoldAssignment {
  int k = 0;
  std::vector<int> assignment;

  std::vector<Eigen::Index> in_fold(int fold) const;
  std::vector<Eigen::Index> out_of_fold(int fold) const;
  std::vector<std::size_t> sizes() const;
};

FoldAssignment make_folds(Eigen::Index n, int k, std::uint64_t seed);

inline constexpr int kDefaultFolds = 2;

}  // namespace repcause
