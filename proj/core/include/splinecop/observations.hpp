#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace splinecop {

// Affine map x -> (x - offset) / scale taking a raw covariate onto [0,1].
struct AffineMap {
  double offset = 0.0;
  double scale = 1.0;

  double apply(double x) const { return (x - offset) / scale; }
  double invert(double y) const { return y * scale + offset; }
};

// n pseudo-observations (u, v) with optional covariates rescaled to [0,1].
struct ObservationSet {
  std::vector<double> u;
  std::vector<double> v;
  Eigen::MatrixXd x;  // n x p, empty when unconditional
  std::vector<std::string> covariate_names;
  std::vector<AffineMap> covariate_maps;

  std::size_t size() const { return u.size(); }
  int covariates() const { return static_cast<int>(x.cols()); }
  bool conditional() const { return x.cols() > 0; }

  // Throws malformed_data naming the offending row.
  void validate() const;
};

// Delimited text with a header row `u,v[,x1,...]`. Lines starting with '#'
// are metadata and skipped. Covariates already inside [0,1] are kept as is;
// otherwise they are mapped onto [0,1] by min/max and the map is recorded.
ObservationSet ingest_observations(const std::filesystem::path& path,
                                   const std::vector<std::string>& covariate_columns = {});
ObservationSet parse_observations(const std::string& text,
                                  const std::vector<std::string>& covariate_columns = {});

// Shortest round-trip representation for every value.
std::string format_observations(const ObservationSet& data,
                                const std::vector<std::string>& header_comments = {});
void write_observations(const std::filesystem::path& path, const ObservationSet& data,
                        const std::vector<std::string>& header_comments = {});

std::string format_double(double value);

}  // namespace splinecop
